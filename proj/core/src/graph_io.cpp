#include "hgconv/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "hgconv/param_io.hpp"
#include "json.hpp"

namespace hgconv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("missing file: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

[[noreturn]] void line_error(const fs::path& path, std::size_t line, const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Calls fn(line_number, fields) for each line; a trailing newline is allowed.
template <class Fn>
void for_each_tsv_line(const fs::path& path, Fn&& fn) {
  const std::string text = read_file(path);
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    ++line_no;
    std::string_view line(text.data() + start, nl - start);
    if (line.empty()) line_error(path, line_no, "empty line");
    fn(line_no, split_tabs(line));
    start = nl + 1;
  }
}

Tensor load_attrs(const fs::path& path, const NodeType& t) {
  std::vector<double> values;
  values.reserve(t.count * t.attr_dim);
  std::size_t rows = 0;
  for_each_tsv_line(path, [&](std::size_t line, const std::vector<std::string_view>& fields) {
    if (fields.size() != t.attr_dim) {
      line_error(path, line, "malformed line: expected " + std::to_string(t.attr_dim) +
                                 " fields, got " + std::to_string(fields.size()));
    }
    for (auto f : fields) {
      double x;
      if (!parse_number(f, x)) line_error(path, line, "malformed line: bad float '" + std::string(f) + "'");
      values.push_back(x);
    }
    ++rows;
  });
  if (rows != t.count) {
    throw std::runtime_error(path.string() + ": attribute row count " + std::to_string(rows) +
                             " != declared count " + std::to_string(t.count));
  }
  return Tensor(rows, t.attr_dim, std::move(values));
}

std::vector<std::pair<std::size_t, std::size_t>> load_edges(const fs::path& path, std::size_t ns,
                                                            std::size_t nd) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  if (!fs::exists(path)) throw std::runtime_error("missing file: " + path.string());
  if (fs::file_size(path) == 0) return edges;
  for_each_tsv_line(path, [&](std::size_t line, const std::vector<std::string_view>& fields) {
    std::size_t u, v;
    if (fields.size() != 2 || !parse_number(fields[0], u) || !parse_number(fields[1], v)) {
      line_error(path, line, "malformed line: expected src_id<TAB>dst_id");
    }
    if (u >= ns || v >= nd) line_error(path, line, "index out of range");
    edges.emplace_back(u, v);
  });
  return edges;
}

std::vector<std::size_t> id_list(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw std::runtime_error(std::string("splits.json: missing array '") + key + "'");
  }
  return j.at(key).get<std::vector<std::size_t>>();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace

GraphMeta load_meta(const fs::path& dir) {
  const json meta = read_json(dir / "meta.json");
  GraphMeta out;
  out.label_type = meta.value("label_type", std::string());
  out.num_classes = meta.value("num_classes", std::size_t{0});
  return out;
}

HeteroGraph load_graph(const fs::path& dir) {
  const json meta = read_json(dir / "meta.json");
  std::vector<NodeType> types;
  for (const auto& jt : meta.at("node_types")) {
    NodeType t;
    t.id = types.size();
    t.name = jt.at("name").get<std::string>();
    t.count = jt.at("count").get<std::size_t>();
    t.attr_dim = jt.at("attr_dim").get<std::size_t>();
    types.push_back(t);
  }
  auto type_id = [&](const std::string& name) -> NodeTypeId {
    for (const NodeType& t : types)
      if (t.name == name) return t.id;
    throw std::runtime_error("meta.json: relation references unknown node type '" + name + "'");
  };

  std::vector<Tensor> attrs;
  for (const NodeType& t : types) {
    if (t.count < 1 || t.attr_dim < 1) {
      throw std::runtime_error("meta.json: node type " + t.name + " needs count >= 1 and attr_dim >= 1");
    }
    attrs.push_back(load_attrs(dir / (t.name + ".attrs.tsv"), t));
  }

  std::vector<RelationEdges> rels;
  for (const auto& jr : meta.at("relations")) {
    RelationEdges re;
    const auto src = jr.at("src").get<std::string>();
    const auto dst = jr.at("dst").get<std::string>();
    re.edge_name = jr.at("edge").get<std::string>();
    re.src_type = type_id(src);
    re.dst_type = type_id(dst);
    re.edges = load_edges(dir / (src + "__" + re.edge_name + "__" + dst + ".edges.tsv"),
                          types[re.src_type].count, types[re.dst_type].count);
    rels.push_back(std::move(re));
  }
  return add_inverse_relations(HeteroGraph::build(std::move(types), std::move(attrs), rels));
}

LabelSet load_labels(const fs::path& dir, const HeteroGraph& g) {
  const GraphMeta meta = load_meta(dir);
  LabelSet ls;
  ls.node_type = g.find_node_type(meta.label_type);
  ls.num_classes = meta.num_classes;
  const fs::path path = dir / "labels.tsv";
  const std::size_t count = g.node_type(ls.node_type).count;
  for_each_tsv_line(path, [&](std::size_t line, const std::vector<std::string_view>& fields) {
    std::size_t node, cls;
    if (fields.size() != 2 || !parse_number(fields[0], node) || !parse_number(fields[1], cls)) {
      line_error(path, line, "malformed line: expected node_id<TAB>class_id");
    }
    if (node >= count) line_error(path, line, "index out of range");
    if (cls >= ls.num_classes) line_error(path, line, "class id out of range");
    if (!ls.labels.emplace(node, cls).second) line_error(path, line, "duplicate label");
  });
  ls.validate(g);
  return ls;
}

SplitSpec load_splits(const fs::path& dir) {
  const json j = read_json(dir / "splits.json");
  SplitSpec s;
  s.train = id_list(j, "train");
  s.val = id_list(j, "val");
  s.test = id_list(j, "test");
  return s;
}

Dataset load_dataset(const fs::path& dir) {
  Dataset d;
  d.graph = load_graph(dir);
  d.meta = load_meta(dir);
  d.labels = load_labels(dir, d.graph);
  d.split = load_splits(dir);
  d.split.validate(d.labels);
  return d;
}

void save_dataset(const fs::path& dir, const HeteroGraph& g, const GraphMeta& meta,
                  const LabelSet& labels, const SplitSpec& split) {
  fs::create_directories(dir);
  json jm;
  jm["node_types"] = json::array();
  for (const NodeType& t : g.node_types()) {
    jm["node_types"].push_back({{"name", t.name}, {"count", t.count}, {"attr_dim", t.attr_dim}});
  }
  jm["relations"] = json::array();
  for (const Relation& r : g.relations()) {
    if (r.is_inverse) continue;
    jm["relations"].push_back({{"src", g.node_type(r.src_type).name},
                               {"edge", r.edge_name},
                               {"dst", g.node_type(r.dst_type).name}});
  }
  jm["label_type"] = meta.label_type;
  jm["num_classes"] = meta.num_classes;
  write_text(dir / "meta.json", jm.dump(2) + "\n");

  for (const NodeType& t : g.node_types()) {
    std::string text;
    const Tensor& x = g.attrs(t.id);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) {
        if (j) text += '\t';
        text += format_double(x(i, j));
      }
      text += '\n';
    }
    write_text(dir / (t.name + ".attrs.tsv"), text);
  }

  for (const Relation& r : g.relations()) {
    if (r.is_inverse) continue;
    std::string text;
    const Csr& csr = g.adjacency(r.id);
    for (std::size_t v = 0; v + 1 < csr.offsets.size(); ++v)
      for (std::size_t e = csr.offsets[v]; e < csr.offsets[v + 1]; ++e)
        text += std::to_string(csr.sources[e]) + "\t" + std::to_string(v) + "\n";
    write_text(dir / (g.relation_name(r.id) + ".edges.tsv"), text);
  }

  std::string text;
  for (const auto& [node, cls] : labels.labels) {
    text += std::to_string(node) + "\t" + std::to_string(cls) + "\n";
  }
  write_text(dir / "labels.tsv", text);

  json js = {{"train", split.train}, {"val", split.val}, {"test", split.test}};
  write_text(dir / "splits.json", js.dump() + "\n");
}

}  // namespace hgconv
