// cdnet/io.hpp -- on-disk forms: PDN/CDN node and edge lists, DOT exports,
// and atomic file writes. All emitters produce sorted rows so rebuilding a
// snapshot from the same inputs is byte-identical.
#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdnet/resolver.hpp"
#include "cdnet/unify.hpp"

namespace cdnet {

// Package-network node list: `name,version` rows.
inline std::string pdn_nodes_csv(const PackageNetwork& net) {
  std::string out;
  for (const auto& n : net.nodes)
    out += n.package + "," + n.version.text() + "\n";
  return out;
}

// Package-network edge list: `from-name,from-version,to-name,to-version`.
inline std::string pdn_edges_csv(const PackageNetwork& net) {
  std::string out;
  for (const auto& [from, to] : net.edges)
    out += from.package + "," + from.version.text() + "," + to.package + "," +
           to.version.text() + "\n";
  return out;
}

namespace detail {

inline std::string dot_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (const char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

inline std::string pdn_dot(const PackageNetwork& net) {
  std::string out = "digraph pdn {\n";
  for (const auto& n : net.nodes) {
    out += "  \"" + detail::dot_escape(n.text()) + "\"";
    if (net.self_cycle_nodes.count(n)) out += " [peripheries=2]";
    out += ";\n";
  }
  for (const auto& [from, to] : net.edges)
    out += "  \"" + detail::dot_escape(from.text()) + "\" -> \"" +
           detail::dot_escape(to.text()) + "\";\n";
  out += "}\n";
  return out;
}

// CDN node list, tab-separated: canonical id, package, version, visibility.
inline std::string cdn_nodes_tsv(const CDN& cdn) {
  std::string out = "#id\tpackage\tversion\tvisibility\n";
  for (const auto& [id, idx] : cdn.by_id) {  // by_id is ordered by id
    const FunctionNode& n = cdn.nodes[idx];
    out += id + "\t" + n.package + "\t" + n.version->text() + "\t" +
           std::string(to_string(n.visibility)) + "\n";
  }
  return out;
}

// CDN edge list, tab-separated: caller id, callee id, dispatch kind.
inline std::string cdn_edges_tsv(const CDN& cdn) {
  std::vector<std::string> rows;
  rows.reserve(cdn.edges.size());
  for (const auto& [caller, callee, dispatch] : cdn.edges)
    rows.push_back(cdn.nodes[caller].canonical() + "\t" +
                   cdn.nodes[callee].canonical() + "\t" +
                   std::string(to_string(dispatch)));
  std::sort(rows.begin(), rows.end());
  std::string out = "#caller\tcallee\tdispatch\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

// DOT with one cluster per (package, version); dynamic edges dashed, macro
// edges dotted.
inline std::string cdn_dot(const CDN& cdn) {
  std::string out = "digraph cdn {\n";
  std::size_t cluster = 0;
  for (const auto& [pv, fns] : cdn.package_index) {
    out += "  subgraph cluster_" + std::to_string(cluster++) + " {\n";
    out += "    label=\"" + detail::dot_escape(pv.text()) + "\";\n";
    std::vector<std::string> ids;
    for (const auto idx : fns) ids.push_back(cdn.nodes[idx].canonical());
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids)
      out += "    \"" + detail::dot_escape(id) + "\";\n";
    out += "  }\n";
  }
  std::vector<std::string> rows;
  for (const auto& [caller, callee, dispatch] : cdn.edges) {
    std::string row = "  \"" + detail::dot_escape(cdn.nodes[caller].canonical()) +
                      "\" -> \"" +
                      detail::dot_escape(cdn.nodes[callee].canonical()) + "\"";
    if (dispatch == Dispatch::Dynamic) row += " [style=dashed]";
    if (dispatch == Dispatch::Macro) row += " [style=dotted]";
    rows.push_back(row + ";\n");
  }
  std::sort(rows.begin(), rows.end());
  for (const auto& r : rows) out += r;
  out += "}\n";
  return out;
}

inline std::string skipped_tsv(std::span<const SkippedRoot> skipped) {
  std::string out = "#package\tversion\treason\n";
  std::vector<std::string> rows;
  for (const auto& s : skipped) {
    std::string reason = s.reason;
    for (auto& c : reason)
      if (c == '\t' || c == '\n') c = ' ';
    rows.push_back(s.package + "\t" + s.version.text() + "\t" + reason);
  }
  std::sort(rows.begin(), rows.end());
  for (const auto& r : rows) out += r + "\n";
  return out;
}

// Write-temp-then-rename so concurrent readers never observe partial files.
inline void write_atomic(const std::filesystem::path& path,
                         std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() +
                  ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

}  // namespace cdnet
