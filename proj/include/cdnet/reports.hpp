// cdnet/reports.hpp -- tab-separated metric reports. The CLI writes exactly
// these strings, so report files can be byte-compared against direct
// library invocation.
#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdnet/metrics.hpp"
#include "cdnet/timeutil.hpp"
#include "cdnet/unify.hpp"

namespace cdnet::reports {

namespace detail {

inline std::string fixed6(double v) {
  if (v == 0.0) v = 0.0;  // normalize -0
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace detail

inline std::string validation_tsv(const ValidationReport& report) {
  std::string out = "#package\tversion\tdependency\tconstraint\tkind\treason\n";
  std::vector<std::string> rows;
  for (const auto& i : report.issues)
    rows.push_back(i.package + "\t" + i.version.text() + "\t" + i.dep + "\t" +
                   i.constraint + "\t" + std::string(to_string(i.kind)) + "\t" +
                   (i.reason == ValidationIssue::Reason::UnknownPackage
                        ? "unknown-package"
                        : "unsolvable"));
  std::sort(rows.begin(), rows.end());
  for (const auto& r : rows) out += r + "\n";
  return out;
}

inline std::string call_summary_tsv(const CallSummary& s) {
  std::string out = "#metric\tvalue\n";
  const auto row = [&](const char* k, std::size_t v) {
    out += std::string(k) + "\t" + std::to_string(v) + "\n";
  };
  row("functions_total", s.total_functions());
  row("functions_public", s.public_functions);
  row("functions_private", s.private_functions);
  row("edges_total", s.total_edges());
  row("intra_total", s.intra.total());
  row("intra_macro", s.intra.macro_calls);
  row("intra_static", s.intra.static_calls);
  row("intra_dynamic", s.intra.dynamic_calls);
  row("inter_total", s.inter.total());
  row("inter_macro", s.inter.macro_calls);
  row("inter_static", s.inter.static_calls);
  row("inter_dynamic", s.inter.dynamic_calls);
  return out;
}

namespace detail {

inline const char* direction_name(Direction d) {
  return d == Direction::Out ? "out" : "in";
}
inline const char* scope_name(Scope s) {
  return s == Scope::All ? "all" : "inter";
}
inline std::string dispatch_name(const std::optional<Dispatch>& d) {
  return d ? std::string(to_string(*d)) : std::string("all");
}

}  // namespace detail

// Stacked histograms for every direction x scope x dispatch combination;
// rows suitable for external plotting.
inline std::string degrees_tsv(const CDN& cdn) {
  std::string out = "#direction\tscope\tdispatch\tdegree\tcount\n";
  for (const Direction dir : {Direction::Out, Direction::In}) {
    for (const Scope scope : {Scope::All, Scope::InterPackage}) {
      const std::optional<Dispatch> kinds[] = {
          std::nullopt, Dispatch::Static, Dispatch::Dynamic, Dispatch::Macro};
      for (const auto& kind : kinds) {
        const auto h = degree_distribution(cdn, dir, kind, scope);
        for (const auto& [degree, count] : h.counts)
          out += std::string(detail::direction_name(dir)) + "\t" +
                 detail::scope_name(scope) + "\t" + detail::dispatch_name(kind) +
                 "\t" + std::to_string(degree) + "\t" + std::to_string(count) +
                 "\n";
      }
    }
  }
  return out;
}

inline std::string degree_stats_tsv(const CDN& cdn) {
  std::string out = "#direction\tscope\tdispatch\tfunctions\tmedian\tmean\tp99\n";
  for (const Direction dir : {Direction::Out, Direction::In}) {
    for (const Scope scope : {Scope::All, Scope::InterPackage}) {
      const std::optional<Dispatch> kinds[] = {
          std::nullopt, Dispatch::Static, Dispatch::Dynamic, Dispatch::Macro};
      for (const auto& kind : kinds) {
        const auto h = degree_distribution(cdn, dir, kind, scope);
        out += std::string(detail::direction_name(dir)) + "\t" +
               detail::scope_name(scope) + "\t" + detail::dispatch_name(kind) +
               "\t" + std::to_string(h.functions) + "\t" +
               detail::fixed6(h.stats.median) + "\t" +
               detail::fixed6(h.stats.mean) + "\t" + std::to_string(h.stats.p99) +
               "\n";
      }
    }
  }
  return out;
}

inline std::string deps_tsv(const MetadataAnalysis& meta, const CallAnalysis& call) {
  std::string out =
      "#package\tmetadata_direct\tmetadata_transitive\tcall_direct\tcall_transitive\n";
  for (const auto& pkg : meta.analyzed_packages()) {
    const auto md = meta.dependency_counts(pkg);
    DepCounts cd;
    try {
      cd = call.dependency_counts(pkg);
    } catch (const MetricsError&) {
      continue;  // root present in the PDN but skipped in the CDN
    }
    out += pkg + "\t" + std::to_string(md.direct) + "\t" +
           std::to_string(md.transitive) + "\t" + std::to_string(cd.direct) +
           "\t" + std::to_string(cd.transitive) + "\n";
  }
  return out;
}

inline std::string dependents_tsv(const MetadataAnalysis& meta,
                                  const CallAnalysis& call) {
  std::string out =
      "#package\tmetadata_direct\tmetadata_total\tcall_direct\tcall_total\n";
  for (const auto& pkg : meta.analyzed_packages()) {
    const auto md = meta.dependent_counts(pkg);
    DependentCounts cd;
    try {
      cd = call.dependent_counts(pkg);
    } catch (const MetricsError&) {
      continue;
    }
    out += pkg + "\t" + std::to_string(md.direct) + "\t" +
           std::to_string(md.total) + "\t" + std::to_string(cd.direct) + "\t" +
           std::to_string(cd.total) + "\n";
  }
  return out;
}

inline std::string api_calls_tsv(const CallAnalysis& call) {
  std::string out = "#package\tdirect_calls\ttransitive_calls\n";
  for (const auto& pkg : call.analyzed_packages()) {
    const auto c = call.api_call_counts(pkg);
    out += pkg + "\t" + std::to_string(c.direct_calls) + "\t" +
           std::to_string(c.transitive_calls) + "\n";
  }
  return out;
}

// Re-unifies each root to measure co-existing dependency functions.
inline std::string bloat_tsv(const CDN& cdn, const CallGraphStore& store) {
  std::string out =
      "#package\tversion\tpercent\tcoexisting\ttotal\tself_cycle\n";
  for (const auto& [root, tree] : cdn.trees) {
    const auto b = coexistence_bloat(unify_release(tree, store));
    out += root + "\t" + tree.root.version.text() + "\t" +
           detail::fixed6(b.percent) + "\t" + std::to_string(b.coexisting) +
           "\t" + std::to_string(b.total) + "\t" +
           (b.self_cycle ? "true" : "false") + "\n";
  }
  return out;
}

inline std::string reach_tsv(const MetadataAnalysis& meta,
                             const CallAnalysis& call) {
  std::string out = "#package\tmetadata_reach\tcall_reach\n";
  for (const auto& pkg : meta.analyzed_packages()) {
    double cr = 0.0;
    try {
      cr = call.reach(pkg);
    } catch (const MetricsError&) {
      continue;
    }
    out += pkg + "\t" + detail::fixed6(meta.reach(pkg)) + "\t" +
           detail::fixed6(cr) + "\n";
  }
  return out;
}

// Exact reach for the top functions by inter-package in-degree (documented
// cap keeps snapshot analysis linear at registry scale).
inline std::string function_reach_tsv(const CDN& cdn, const CallAnalysis& call,
                                      std::size_t top = 100) {
  std::map<std::uint32_t, std::set<std::uint32_t>> callers;
  for (const auto& [caller, callee, _] : cdn.edges)
    if (cdn.nodes[caller].package != cdn.nodes[callee].package)
      callers[callee].insert(caller);

  std::vector<std::pair<std::size_t, std::string>> ranked;  // (indegree, id)
  for (const auto& [callee, ins] : callers)
    ranked.push_back({ins.size(), cdn.nodes[callee].canonical()});
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (ranked.size() > top) ranked.resize(top);

  std::string out = "#function\tinter_in_degree\treach\n";
  for (const auto& [indeg, id] : ranked)
    out += id + "\t" + std::to_string(indeg) + "\t" +
           detail::fixed6(call.function_reach(id)) + "\n";
  return out;
}

inline const char* statistic_name(PairStatistic s) {
  switch (s) {
    case PairStatistic::DirectDependencies: return "direct_dependencies";
    case PairStatistic::TransitiveDependencies: return "transitive_dependencies";
    case PairStatistic::DirectDependents: return "direct_dependents";
    case PairStatistic::TotalDependents: return "total_dependents";
  }
  return "?";
}

inline std::string compare_tsv(const MetadataAnalysis& meta,
                               const CallAnalysis& call) {
  std::string out = "#statistic\tpairs\trho\tdegenerate\n";
  for (const PairStatistic s :
       {PairStatistic::DirectDependencies, PairStatistic::TransitiveDependencies,
        PairStatistic::DirectDependents, PairStatistic::TotalDependents}) {
    NetworkComparison c;
    try {
      c = compare_networks(meta, call, s);
    } catch (const MetricsError&) {
      out += std::string(statistic_name(s)) + "\t0\tnan\ttrue\n";
      continue;
    }
    out += std::string(statistic_name(s)) + "\t" + std::to_string(c.rows.size()) +
           "\t" + (c.rho ? detail::fixed6(*c.rho) : std::string("nan")) + "\t" +
           (c.degenerate ? "true" : "false") + "\n";
  }
  return out;
}

inline std::string compare_pairs_tsv(const MetadataAnalysis& meta,
                                     const CallAnalysis& call) {
  std::string out = "#statistic\tpackage\tmetadata\tcall\n";
  for (const PairStatistic s :
       {PairStatistic::DirectDependencies, PairStatistic::TransitiveDependencies,
        PairStatistic::DirectDependents, PairStatistic::TotalDependents}) {
    NetworkComparison c;
    try {
      c = compare_networks(meta, call, s);
    } catch (const MetricsError&) {
      continue;
    }
    for (const auto& row : c.rows)
      out += std::string(statistic_name(s)) + "\t" + row.package + "\t" +
             detail::fixed6(row.a) + "\t" + detail::fixed6(row.b) + "\n";
  }
  return out;
}

struct DiffRow {
  std::string package;
  SemVer version;
  bool changed = false;
  std::string detail;  // "dep: 1.1.0->1.2.0; other: +2.0.0"
};

inline std::string diff_detail(const TreeDiff& diff) {
  std::string out;
  for (const auto& e : diff.entries) {
    if (!out.empty()) out += "; ";
    out += e.package + ": ";
    const auto join = [](const std::vector<SemVer>& vs) {
      std::string s;
      for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) s += "|";
        s += vs[i].text();
      }
      return s;
    };
    if (e.before.empty())
      out += "+" + join(e.after);
    else if (e.after.empty())
      out += "-" + join(e.before);
    else
      out += join(e.before) + "->" + join(e.after);
  }
  return out;
}

inline std::string diff_tsv(const std::vector<DiffRow>& rows) {
  std::size_t changed = 0;
  for (const auto& r : rows) changed += r.changed ? 1 : 0;
  std::string out = "#package\tversion\tchanged\tdetail\n";
  for (const auto& r : rows)
    out += r.package + "\t" + r.version.text() + "\t" +
           (r.changed ? "true" : "false") + "\t" + r.detail + "\n";
  out += "#changed\t" + std::to_string(changed) + "\tof\t" +
         std::to_string(rows.size()) + "\n";
  return out;
}

inline nlohmann::json summary_json(std::int64_t snapshot, const CallSummary& s,
                                   const MetadataAnalysis& meta,
                                   const CallAnalysis& call) {
  nlohmann::json j;
  j["snapshot"] = format_iso8601(snapshot);
  j["packages"] = meta.package_universe();
  j["cdn_packages"] = call.package_universe();
  j["functions"] = {{"total", s.total_functions()},
                    {"public", s.public_functions},
                    {"private", s.private_functions}};
  j["edges"] = {{"total", s.total_edges()},
                {"intra",
                 {{"macro", s.intra.macro_calls},
                  {"static", s.intra.static_calls},
                  {"dynamic", s.intra.dynamic_calls}}},
                {"inter",
                 {{"macro", s.inter.macro_calls},
                  {"static", s.inter.static_calls},
                  {"dynamic", s.inter.dynamic_calls}}}};
  nlohmann::json rho = nlohmann::json::object();
  for (const PairStatistic st :
       {PairStatistic::DirectDependencies, PairStatistic::TransitiveDependencies,
        PairStatistic::DirectDependents, PairStatistic::TotalDependents}) {
    try {
      const auto c = compare_networks(meta, call, st);
      rho[statistic_name(st)] = {{"pairs", c.rows.size()},
                                 {"degenerate", c.degenerate}};
      if (c.rho) rho[statistic_name(st)]["rho"] = *c.rho;
    } catch (const MetricsError&) {
      rho[statistic_name(st)] = {{"pairs", 0}, {"degenerate", true}};
    }
  }
  j["spearman"] = rho;
  return j;
}

}  // namespace cdnet::reports
