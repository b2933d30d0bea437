#pragma once

#include <iosfwd>
#include <string>

#include "stagecraft/ceg.hpp"
#include "stagecraft/counts.hpp"
#include "stagecraft/dag.hpp"
#include "stagecraft/staging.hpp"

namespace stagecraft {

struct CsvOptions {
  bool discretize = false;  // bin numeric columns by equal frequency
  int bins = 4;
};

struct CsvResult {
  Dataset data;
  std::int64_t dropped_rows = 0;  // rows removed for missing cells
};

// Comma-separated, UTF-8, header row required. String columns are factorized
// in first-appearance order; fully numeric columns are binned into
// equal-frequency levels q1..qk when discretization is on. Rows with empty
// cells are dropped and counted.
CsvResult read_csv(const std::string& path, const CsvOptions& options = {});
CsvResult read_csv(std::istream& in, const CsvOptions& options = {});

std::string write_csv(const Dataset& data);
void write_csv_file(const Dataset& data, const std::string& path);

// Model document: format "stagedtree/1". `meta` is free-form JSON text
// (an object); staging blocks reference vertices by (depth, rank).
std::string serialize_model(const StagedTree& model, const std::string& meta_json = "{}");
StagedTree parse_model(const std::string& text, std::string* meta_json = nullptr);
void write_model_file(const StagedTree& model, const std::string& path,
                      const std::string& meta_json = "{}");
StagedTree read_model_file(const std::string& path, std::string* meta_json = nullptr);

// DAG document: format "dag/1"; edges as [from, to] vertex indices.
std::string serialize_dag(const Dag& g);
Dag parse_dag(const std::string& text);
void write_dag_file(const Dag& g, const std::string& path);
Dag read_dag_file(const std::string& path);

// Graphviz text. Stage fills cycle a fixed 12-color palette; singleton stages
// stay white. Deterministic for a given model.
std::string to_dot(const StagedTree& model);
std::string to_dot(const Ceg& ceg, const StagedTree& source);

}  // namespace stagecraft
