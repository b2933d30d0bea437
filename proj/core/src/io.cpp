#include "stagecraft/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stagecraft/error.hpp"

namespace stagecraft {

using nlohmann::json;

namespace {

constexpr const char* kModelFormat = "stagedtree/1";
constexpr const char* kDagFormat = "dag/1";

// Paired-12 palette; cycled by stage id.
constexpr const char* kPalette[12] = {
    "#a6cee3", "#1f78b4", "#b2df8a", "#33a02c", "#fb9a99", "#e31a1c",
    "#fdbf6f", "#ff7f00", "#cab2d6", "#6a3d9a", "#ffff99", "#b15928",
};

bool parse_number(const std::string& text, double* out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return false;
  *out = value;
  return true;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

CsvResult read_csv(std::istream& in, const CsvOptions& options) {
  if (options.discretize && options.bins < 2) throw Error("discretization needs at least 2 bins");
  std::string line;
  if (!std::getline(in, line)) throw Error("CSV file is empty");
  const std::vector<std::string> header = split_csv_line(line);
  const size_t p = header.size();
  for (const auto& name : header)
    if (name.empty()) throw Error("CSV header has an empty column name");

  std::vector<std::vector<std::string>> columns(p);
  std::int64_t dropped = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != p) throw Error("CSV row has the wrong number of cells");
    const bool missing = std::any_of(cells.begin(), cells.end(),
                                     [](const std::string& c) { return c.empty(); });
    if (missing) {
      ++dropped;
      continue;
    }
    for (size_t j = 0; j < p; ++j) columns[j].push_back(std::move(cells[j]));
  }
  const std::int64_t n = columns.empty() ? 0 : static_cast<std::int64_t>(columns[0].size());
  if (n == 0) throw Error("CSV file has no usable rows");

  CsvResult result;
  result.dropped_rows = dropped;
  result.data.variables.resize(p);
  std::vector<std::vector<std::int32_t>> encoded(p);

  for (size_t j = 0; j < p; ++j) {
    VariableSpec& var = result.data.variables[j];
    var.name = header[j];
    auto& codes = encoded[j];
    codes.resize(n);

    std::vector<double> numeric(n);
    bool all_numeric = options.discretize;
    if (options.discretize)
      for (std::int64_t i = 0; i < n && all_numeric; ++i)
        all_numeric = parse_number(columns[j][i], &numeric[i]);

    if (all_numeric) {
      std::vector<double> sorted = numeric;
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front() == sorted.back())
        throw Error("column '" + var.name + "' has a single distinct value");
      const int k = options.bins;
      // Quantile thresholds, boundary values assigned to the lower bin.
      std::vector<double> thresholds(k - 1);
      for (int b = 1; b < k; ++b) {
        const auto pos = static_cast<std::int64_t>(static_cast<std::uint64_t>(b) *
                                                   static_cast<std::uint64_t>(n) / k);
        thresholds[b - 1] = pos >= 1 ? sorted[pos - 1] : -HUGE_VAL;
      }
      for (int b = 1; b <= k; ++b) var.levels.push_back("q" + std::to_string(b));
      for (std::int64_t i = 0; i < n; ++i) {
        int bin = k - 1;
        for (int b = 0; b < k - 1; ++b) {
          if (numeric[i] <= thresholds[b]) {
            bin = b;
            break;
          }
        }
        codes[i] = bin;
      }
    } else {
      // Factorize in first-appearance order.
      for (std::int64_t i = 0; i < n; ++i) {
        const std::string& cell = columns[j][i];
        auto it = std::find(var.levels.begin(), var.levels.end(), cell);
        if (it == var.levels.end()) {
          var.levels.push_back(cell);
          it = var.levels.end() - 1;
        }
        codes[i] = static_cast<std::int32_t>(it - var.levels.begin());
      }
      if (var.levels.size() < 2)
        throw Error("column '" + var.name + "' has a single distinct value");
    }
  }

  result.data.cells.resize(static_cast<size_t>(n) * p);
  for (std::int64_t i = 0; i < n; ++i)
    for (size_t j = 0; j < p; ++j)
      result.data.cells[static_cast<size_t>(i) * p + j] = encoded[j][i];
  return result;
}

CsvResult read_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_csv(in, options);
}

std::string write_csv(const Dataset& data) {
  std::string out;
  for (size_t j = 0; j < data.variables.size(); ++j) {
    if (j) out += ',';
    out += data.variables[j].name;
  }
  out += '\n';
  for (std::int64_t i = 0; i < data.rows(); ++i) {
    for (int j = 0; j < data.cols(); ++j) {
      if (j) out += ',';
      out += data.variables[j].levels[data.at(i, j)];
    }
    out += '\n';
  }
  return out;
}

void write_csv_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << write_csv(data);
}

namespace {

void require_keys(const json& obj, std::initializer_list<const char*> keys,
                  const char* what) {
  for (const char* key : keys)
    if (!obj.contains(key)) throw Error(std::string(what) + " is missing '" + key + "'");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : keys) known = known || it.key() == key;
    if (!known) throw Error(std::string(what) + " has unknown field '" + it.key() + "'");
  }
}

json parse_json(const std::string& text, const char* what) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw Error(std::string(what) + " is not valid JSON");
  return doc;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

}  // namespace

std::string serialize_model(const StagedTree& model, const std::string& meta_json) {
  json doc;
  doc["format"] = kModelFormat;
  doc["variables"] = json::array();
  for (const auto& v : model.tree.variables())
    doc["variables"].push_back(json{{"name", v.name}, {"levels", v.levels}});
  doc["order"] = json::array();
  for (const auto& v : model.tree.variables()) doc["order"].push_back(v.name);
  doc["staging"] = json::array();
  for (int d = 0; d < model.tree.num_variables(); ++d)
    doc["staging"].push_back(model.staging.blocks_at(d));
  if (model.params) {
    json params = json::object();
    for (std::int32_t s = 0; s < model.staging.num_stages(); ++s)
      params[std::to_string(s)] = model.params->by_stage[s];
    doc["params"] = std::move(params);
  } else {
    doc["params"] = nullptr;
  }
  doc["meta"] = parse_json(meta_json, "model meta");
  return doc.dump(2) + "\n";
}

StagedTree parse_model(const std::string& text, std::string* meta_json) {
  const json doc = parse_json(text, "model document");
  if (!doc.is_object()) throw Error("model document must be a JSON object");
  require_keys(doc, {"format", "variables", "order", "staging", "params", "meta"},
               "model document");
  if (!doc["format"].is_string() || doc["format"] != kModelFormat)
    throw Error("unsupported model format version");

  if (!doc["variables"].is_array() || doc["variables"].empty())
    throw Error("model document needs a nonempty variable list");
  std::vector<VariableSpec> declared;
  for (const auto& item : doc["variables"]) {
    if (!item.is_object()) throw Error("variable entries must be objects");
    require_keys(item, {"name", "levels"}, "variable entry");
    VariableSpec v;
    v.name = item["name"].get<std::string>();
    for (const auto& level : item["levels"]) v.levels.push_back(level.get<std::string>());
    declared.push_back(std::move(v));
  }

  if (!doc["order"].is_array() || doc["order"].size() != declared.size())
    throw Error("order must list every variable exactly once");
  std::vector<VariableSpec> ordered;
  std::vector<bool> used(declared.size(), false);
  for (const auto& item : doc["order"]) {
    const std::string name = item.get<std::string>();
    bool found = false;
    for (size_t i = 0; i < declared.size(); ++i) {
      if (declared[i].name == name) {
        if (used[i]) throw Error("order repeats variable '" + name + "'");
        used[i] = true;
        ordered.push_back(declared[i]);
        found = true;
        break;
      }
    }
    if (!found) throw Error("order references unknown variable '" + name + "'");
  }
  EventTree tree(std::move(ordered));

  if (!doc["staging"].is_array() ||
      static_cast<int>(doc["staging"].size()) != tree.num_variables())
    throw Error("staging must cover every internal depth");
  std::vector<std::vector<std::vector<std::uint64_t>>> blocks(tree.num_variables());
  for (int d = 0; d < tree.num_variables(); ++d) {
    if (!doc["staging"][d].is_array()) throw Error("staging depths must be arrays of blocks");
    for (const auto& block : doc["staging"][d]) {
      std::vector<std::uint64_t> ranks;
      for (const auto& r : block) {
        if (!r.is_number_unsigned() && !r.is_number_integer())
          throw Error("stage blocks must list vertex ranks");
        const auto v = r.get<std::int64_t>();
        if (v < 0) throw Error("stage blocks must list vertex ranks");
        ranks.push_back(static_cast<std::uint64_t>(v));
      }
      blocks[d].push_back(std::move(ranks));
    }
  }
  StagedTree model{tree, Staging::from_blocks(tree, blocks), std::nullopt};

  if (!doc["params"].is_null()) {
    if (!doc["params"].is_object()) throw Error("params must be an object or null");
    StageParameters params;
    params.by_stage.assign(model.staging.num_stages(), {});
    for (auto it = doc["params"].begin(); it != doc["params"].end(); ++it) {
      std::int32_t stage = -1;
      const std::string& key = it.key();
      const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), stage);
      if (ec != std::errc{} || ptr != key.data() + key.size() || stage < 0 ||
          stage >= model.staging.num_stages())
        throw Error("params references unknown stage '" + key + "'");
      if (!params.by_stage[stage].empty()) throw Error("params repeats stage '" + key + "'");
      params.by_stage[stage] = it.value().get<std::vector<double>>();
      if (params.by_stage[stage].empty())
        throw Error("parameter vectors must be nonempty");
    }
    for (std::int32_t s = 0; s < model.staging.num_stages(); ++s)
      if (params.by_stage[s].empty())
        throw Error("params is missing stage " + std::to_string(s));
    model.params = std::move(params);
    validate_parameters(model, *model.params, SimplexMode::Closed);
  }

  if (!doc["meta"].is_object()) throw Error("meta must be an object");
  if (meta_json) *meta_json = doc["meta"].dump();
  return model;
}

void write_model_file(const StagedTree& model, const std::string& path,
                      const std::string& meta_json) {
  write_text_file(path, serialize_model(model, meta_json));
}

StagedTree read_model_file(const std::string& path, std::string* meta_json) {
  return parse_model(read_text_file(path), meta_json);
}

std::string serialize_dag(const Dag& g) {
  json doc;
  doc["format"] = kDagFormat;
  doc["vertices"] = g.names();
  doc["edges"] = json::array();
  for (const auto& [from, to] : g.edges()) doc["edges"].push_back(json::array({from, to}));
  return doc.dump(2) + "\n";
}

Dag parse_dag(const std::string& text) {
  const json doc = parse_json(text, "DAG document");
  if (!doc.is_object()) throw Error("DAG document must be a JSON object");
  require_keys(doc, {"format", "vertices", "edges"}, "DAG document");
  if (!doc["format"].is_string() || doc["format"] != kDagFormat)
    throw Error("unsupported DAG format version");
  if (!doc["vertices"].is_array() || doc["vertices"].empty())
    throw Error("DAG document needs a nonempty vertex list");
  Dag g(doc["vertices"].get<std::vector<std::string>>());
  if (!doc["edges"].is_array()) throw Error("edges must be an array");
  for (const auto& edge : doc["edges"]) {
    if (!edge.is_array() || edge.size() != 2)
      throw Error("edges must be [from, to] index pairs");
    g.add_edge(edge[0].get<int>(), edge[1].get<int>());
  }
  return g;
}

void write_dag_file(const Dag& g, const std::string& path) {
  write_text_file(path, serialize_dag(g));
}

Dag read_dag_file(const std::string& path) { return parse_dag(read_text_file(path)); }

namespace {

std::string edge_label(const EventTree& tree, int depth, int level) {
  return tree.variable(depth).name + "=" + tree.variable(depth).levels[level];
}

std::string fill_attr(std::int32_t stage, const std::vector<std::uint64_t>& block_sizes) {
  if (block_sizes[stage] < 2) return "";
  return std::string(" [fillcolor=\"") + kPalette[stage % 12] + "\"]";
}

}  // namespace

std::string to_dot(const StagedTree& model) {
  const EventTree& tree = model.tree;
  const auto block_sizes = model.staging.block_sizes();
  std::string out = "digraph staged_tree {\n";
  out += "  rankdir=LR;\n";
  out += "  node [shape=circle, style=filled, fillcolor=white, fontsize=10];\n";
  const int p = tree.num_variables();
  for (int d = 0; d < p; ++d)
    for (std::uint64_t r = 0; r < tree.depth_size(d); ++r)
      out += "  v" + std::to_string(tree.vertex_id(d, r)) +
             fill_attr(model.staging.stage_of(d, r), block_sizes) + ";\n";
  for (std::uint64_t r = 0; r < tree.num_leaves(); ++r)
    out += "  l" + std::to_string(r) + " [shape=point];\n";
  for (int d = 0; d < p; ++d) {
    for (std::uint64_t r = 0; r < tree.depth_size(d); ++r) {
      for (int x = 0; x < tree.arity(d); ++x) {
        const std::uint64_t c = tree.child(d, r, x);
        const std::string dst =
            (d + 1 < p) ? "v" + std::to_string(tree.vertex_id(d + 1, c)) : "l" + std::to_string(c);
        out += "  v" + std::to_string(tree.vertex_id(d, r)) + " -> " + dst + " [label=\"" +
               edge_label(tree, d, x) + "\"];\n";
      }
    }
  }
  out += "}\n";
  return out;
}

std::string to_dot(const Ceg& ceg, const StagedTree& source) {
  const auto block_sizes = source.staging.block_sizes();
  std::string out = "digraph ceg {\n";
  out += "  rankdir=LR;\n";
  out += "  node [shape=circle, style=filled, fillcolor=white, fontsize=10];\n";
  for (std::int32_t w = 0; w < ceg.num_internal(); ++w)
    out += "  w" + std::to_string(w) + fill_attr(ceg.stage_of_position[w], block_sizes) + ";\n";
  out += "  w_inf [shape=doublecircle];\n";
  for (const auto& edge : ceg.edges) {
    const std::string dst =
        edge.dst == ceg.sink() ? "w_inf" : "w" + std::to_string(edge.dst);
    out += "  w" + std::to_string(edge.src) + " -> " + dst + " [label=\"" +
           edge_label(source.tree, edge.depth, edge.level) + "\"];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace stagecraft
