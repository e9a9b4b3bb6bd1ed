#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lase/atomic_file.hpp"
#include "lase/graph.hpp"

namespace lase {

// Text formats (UTF-8, '#' starts a comment line):
//   nodes:  id<TAB>label<TAB>f1,f2,...   label is '-' when absent
//   links:  src<TAB>dst<TAB>f1,f2,...
// An optional JSON manifest {d_node, d_link, n_labels, undirected} overrides
// whatever would be inferred from the data.

struct GraphManifest {
  std::optional<std::size_t> d_node;
  std::optional<std::size_t> d_link;
  std::optional<std::size_t> n_labels;
  std::optional<bool> undirected;
};

namespace detail {

inline std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string where(const std::filesystem::path& p, std::size_t line) {
  return p.string() + ":" + std::to_string(line);
}

template <class T>
T parse_uint(std::string_view s, const std::string& ctx) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw GraphError(GraphError::Kind::parse, ctx + ": expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<double> parse_features(std::string_view s, const std::string& ctx) {
  std::vector<double> out;
  for (auto tok : split_on(s, ',')) {
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\r')) tok.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) {
      throw GraphError(GraphError::Kind::parse, ctx + ": bad feature value '" + std::string(tok) + "'");
    }
    if (!std::isfinite(v)) throw GraphError(GraphError::Kind::non_finite_value, ctx + ": non-finite feature value");
    out.push_back(v);
  }
  return out;
}

template <class Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw GraphError(GraphError::Kind::io, "cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_on(line, '\t');
    if (fields.size() != 3) {
      throw GraphError(GraphError::Kind::parse, where(path, lineno) + ": expected 3 tab-separated fields, got " +
                                                    std::to_string(fields.size()));
    }
    fn(fields, where(path, lineno));
  }
}

inline void append_features(std::string& out, std::span<const double> f) {
  char buf[64];
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) out.push_back(',');
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, f[i]);
    out.append(buf, ptr);
  }
}

}  // namespace detail

inline GraphManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphError(GraphError::Kind::io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw GraphError(GraphError::Kind::parse, path.string() + ": " + e.what());
  }
  GraphManifest m;
  if (j.contains("d_node")) m.d_node = j["d_node"].get<std::size_t>();
  if (j.contains("d_link")) m.d_link = j["d_link"].get<std::size_t>();
  if (j.contains("n_labels")) m.n_labels = j["n_labels"].get<std::size_t>();
  if (j.contains("undirected")) m.undirected = j["undirected"].get<bool>();
  return m;
}

inline AttributedGraph load_graph(const std::filesystem::path& nodes_path, const std::filesystem::path& links_path,
                                  bool undirected = true, const std::optional<GraphManifest>& manifest = std::nullopt) {
  using K = GraphError::Kind;
  std::vector<std::optional<NodeRecord>> slots;
  detail::for_each_record(nodes_path, [&](const std::vector<std::string_view>& f, const std::string& ctx) {
    NodeRecord n;
    n.id = detail::parse_uint<NodeId>(f[0], ctx);
    if (f[1] != "-") n.label = detail::parse_uint<std::size_t>(f[1], ctx);
    n.features = detail::parse_features(f[2], ctx);
    if (n.id >= slots.size()) slots.resize(n.id + 1);
    if (slots[n.id]) throw GraphError(K::duplicate_node, ctx + ": node id " + std::to_string(n.id) + " repeated");
    slots[n.id] = std::move(n);
  });
  std::vector<NodeRecord> nodes;
  nodes.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) throw GraphError(K::parse, nodes_path.string() + ": node ids are not dense, missing " + std::to_string(i));
    nodes.push_back(std::move(*slots[i]));
  }
  std::vector<LinkRecord> links;
  detail::for_each_record(links_path, [&](const std::vector<std::string_view>& f, const std::string& ctx) {
    LinkRecord l;
    l.src = detail::parse_uint<NodeId>(f[0], ctx);
    l.dst = detail::parse_uint<NodeId>(f[1], ctx);
    l.features = detail::parse_features(f[2], ctx);
    links.push_back(std::move(l));
  });
  AttributedGraph::Options opts;
  opts.undirected = undirected;
  if (manifest) {
    opts.d_node = manifest->d_node;
    opts.d_link = manifest->d_link;
    opts.n_labels = manifest->n_labels;
    if (manifest->undirected) opts.undirected = *manifest->undirected;
  }
  return AttributedGraph::build(std::move(nodes), std::move(links), opts);
}

/// Writes the node file, link file and (if given) manifest. Values are
/// written in shortest round-trip form, so a reload is bit-exact.
inline void save_graph(const AttributedGraph& g, const std::filesystem::path& nodes_path,
                       const std::filesystem::path& links_path,
                       const std::optional<std::filesystem::path>& manifest_path = std::nullopt) {
  std::string out = "# id\tlabel\tfeatures\n";
  for (const auto& n : g.nodes()) {
    out += std::to_string(n.id);
    out += '\t';
    out += n.label ? std::to_string(*n.label) : std::string("-");
    out += '\t';
    detail::append_features(out, n.features);
    out += '\n';
  }
  write_file_atomic(nodes_path, out);
  out = "# src\tdst\tfeatures\n";
  for (const auto& l : g.links()) {
    out += std::to_string(l.src);
    out += '\t';
    out += std::to_string(l.dst);
    out += '\t';
    detail::append_features(out, l.features);
    out += '\n';
  }
  write_file_atomic(links_path, out);
  if (manifest_path) {
    nlohmann::json j{{"d_node", g.d_node()}, {"d_link", g.d_link()}, {"n_labels", g.n_labels()}, {"undirected", g.undirected()}};
    write_file_atomic(*manifest_path, j.dump(2) + "\n");
  }
}

inline nlohmann::json split_to_json(const Split& s) {
  return {{"train", s.train}, {"val", s.val}, {"test", s.test}};
}

inline Split split_from_json(const nlohmann::json& j) {
  Split s;
  s.train = j.at("train").get<std::vector<NodeId>>();
  s.val = j.at("val").get<std::vector<NodeId>>();
  s.test = j.at("test").get<std::vector<NodeId>>();
  return s;
}

}  // namespace lase
