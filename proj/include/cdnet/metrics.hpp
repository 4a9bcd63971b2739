// cdnet/metrics.hpp -- network analyses over package networks and CDNs:
// call accounting, degree distributions, dependency/dependent counts under
// metadata and call-based views, API-call counts, co-existence bloat,
// reaching centrality, and Spearman comparison.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cdnet/callgraph.hpp"
#include "cdnet/errors.hpp"
#include "cdnet/resolver.hpp"
#include "cdnet/unify.hpp"

namespace cdnet {

// ---------------------------------------------------------------------------
// Generic digraph reachability (shared by package- and function-level ops)

class AdjacencyGraph {
public:
  explicit AdjacencyGraph(std::size_t n) : out_(n), in_(n) {}

  void add_edge(std::size_t from, std::size_t to) {
    out_[from].push_back(to);
    in_[to].push_back(from);
  }

  std::size_t size() const { return out_.size(); }
  const std::vector<std::size_t>& out(std::size_t n) const { return out_[n]; }
  const std::vector<std::size_t>& in(std::size_t n) const { return in_[n]; }

  // Nodes reachable from `start` by paths of length >= 1; `start` itself is
  // excluded even when it lies on a cycle.
  std::set<std::size_t> reachable_from(std::size_t start) const {
    return closure(out_, start);
  }

  // Nodes that reach `start`; same self-exclusion convention.
  std::set<std::size_t> reaching_to(std::size_t start) const {
    return closure(in_, start);
  }

private:
  static std::set<std::size_t> closure(
      const std::vector<std::vector<std::size_t>>& adj, std::size_t start) {
    std::vector<bool> seen(adj.size(), false);
    std::deque<std::size_t> queue{start};
    seen[start] = true;
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      for (const std::size_t next : adj[cur]) {
        if (!seen[next]) {
          seen[next] = true;
          queue.push_back(next);
        }
      }
    }
    std::set<std::size_t> out;
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (seen[i] && i != start) out.insert(i);
    return out;
  }

  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

struct NodeCounts {
  std::size_t direct = 0;
  std::size_t transitive = 0;
};

inline NodeCounts node_dependency_counts(const AdjacencyGraph& g, std::size_t n) {
  std::set<std::size_t> direct(g.out(n).begin(), g.out(n).end());
  direct.erase(n);
  const auto reach = g.reachable_from(n);
  return {direct.size(), reach.size() - direct.size()};
}

inline NodeCounts node_dependent_counts(const AdjacencyGraph& g, std::size_t n) {
  std::set<std::size_t> direct(g.in(n).begin(), g.in(n).end());
  direct.erase(n);
  const auto reach = g.reaching_to(n);
  return {direct.size(), reach.size() - direct.size()};
}

// Local reaching centrality on the reversed graph: the fraction of other
// nodes from which `n` is reachable.
inline double reaching_fraction(const AdjacencyGraph& g, std::size_t n) {
  if (g.size() < 2) return 0.0;
  return static_cast<double>(g.reaching_to(n).size()) /
         static_cast<double>(g.size() - 1);
}

// ---------------------------------------------------------------------------
// Call accounting

struct DispatchSplit {
  std::size_t macro_calls = 0;
  std::size_t static_calls = 0;
  std::size_t dynamic_calls = 0;

  std::size_t total() const { return macro_calls + static_calls + dynamic_calls; }

  void bump(Dispatch d) {
    switch (d) {
      case Dispatch::Macro: ++macro_calls; break;
      case Dispatch::Static: ++static_calls; break;
      case Dispatch::Dynamic: ++dynamic_calls; break;
    }
  }
};

struct CallSummary {
  std::size_t public_functions = 0;
  std::size_t private_functions = 0;
  DispatchSplit intra;  // caller and callee in the same package
  DispatchSplit inter;

  std::size_t total_functions() const {
    return public_functions + private_functions;
  }
  std::size_t total_edges() const { return intra.total() + inter.total(); }
};

inline CallSummary call_summary(const CDN& cdn) {
  CallSummary s;
  for (const auto& n : cdn.nodes)
    (n.visibility == Visibility::Public ? s.public_functions
                                        : s.private_functions)++;
  for (const auto& [caller, callee, dispatch] : cdn.edges) {
    const bool intra = cdn.nodes[caller].package == cdn.nodes[callee].package;
    (intra ? s.intra : s.inter).bump(dispatch);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Degree distributions

enum class Direction { In, Out };
enum class Scope { All, InterPackage };

struct DegreeStats {
  double median = 0.0;
  double mean = 0.0;
  std::size_t p99 = 0;  // nearest-rank 99th percentile
};

struct DegreeHistogram {
  Direction direction = Direction::Out;
  Scope scope = Scope::All;
  std::optional<Dispatch> dispatch;  // nullopt: all kinds
  std::map<std::size_t, std::size_t> counts;  // degree -> #functions
  std::size_t functions = 0;  // functions with >= 1 qualifying edge
  DegreeStats stats;
};

// Degree of a function = number of distinct counterpart functions over the
// qualifying edges. Functions with no qualifying edge are not counted.
inline DegreeHistogram degree_distribution(const CDN& cdn, Direction direction,
                                           std::optional<Dispatch> dispatch,
                                           Scope scope) {
  DegreeHistogram h;
  h.direction = direction;
  h.scope = scope;
  h.dispatch = dispatch;

  std::map<std::uint32_t, std::set<std::uint32_t>> counterparts;
  for (const auto& [caller, callee, kind] : cdn.edges) {
    if (dispatch && kind != *dispatch) continue;
    if (scope == Scope::InterPackage &&
        cdn.nodes[caller].package == cdn.nodes[callee].package)
      continue;
    if (direction == Direction::Out)
      counterparts[caller].insert(callee);
    else
      counterparts[callee].insert(caller);
  }

  std::vector<std::size_t> degrees;
  degrees.reserve(counterparts.size());
  for (const auto& [_, set] : counterparts) degrees.push_back(set.size());
  std::sort(degrees.begin(), degrees.end());

  for (const std::size_t d : degrees) ++h.counts[d];
  h.functions = degrees.size();
  if (!degrees.empty()) {
    const std::size_t n = degrees.size();
    h.stats.median = n % 2 ? static_cast<double>(degrees[n / 2])
                           : (static_cast<double>(degrees[n / 2 - 1]) +
                              static_cast<double>(degrees[n / 2])) /
                                 2.0;
    double sum = 0;
    for (const std::size_t d : degrees) sum += static_cast<double>(d);
    h.stats.mean = sum / static_cast<double>(n);
    const std::size_t rank =
        static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
    h.stats.p99 = degrees[std::max<std::size_t>(rank, 1) - 1];
  }
  return h;
}

// ---------------------------------------------------------------------------
// Dependency / dependent counts per view

struct DepCounts {
  std::size_t direct = 0;
  std::size_t transitive = 0;
};

struct DependentCounts {
  std::size_t direct = 0;
  std::size_t total = 0;  // direct + transitive dependents
};

namespace detail {

inline std::set<std::string> direct_dep_packages(const ResolvedTree& tree) {
  std::set<std::string> out;
  if (const auto it = tree.children.find(tree.root); it != tree.children.end())
    for (const auto& e : it->second)
      if (e.child.package != tree.root.package) out.insert(e.child.package);
  return out;
}

inline std::set<std::string> all_dep_packages(const ResolvedTree& tree) {
  std::set<std::string> out;
  for (const auto& n : tree.nodes)
    if (n.package != tree.root.package) out.insert(n.package);
  return out;
}

}  // namespace detail

// Batch analysis over the metadata (package-level) view: counts come from
// resolved-tree membership.
class MetadataAnalysis {
public:
  explicit MetadataAnalysis(const PackageNetwork& net) {
    for (const auto& [root, tree] : net.trees) {
      direct_[root] = detail::direct_dep_packages(tree);
      all_[root] = detail::all_dep_packages(tree);
      known_.insert(root);
      for (const auto& n : tree.nodes) known_.insert(n.package);
    }
  }

  std::size_t package_universe() const { return direct_.size(); }

  std::set<std::string> analyzed_packages() const {
    std::set<std::string> out;
    for (const auto& [root, _] : direct_) out.insert(root);
    return out;
  }

  DepCounts dependency_counts(const std::string& root_package) const {
    const auto it = direct_.find(root_package);
    if (it == direct_.end())
      throw MetricsError("unknown root package: " + root_package);
    const auto& all = all_.at(root_package);
    return {it->second.size(), all.size() - it->second.size()};
  }

  DependentCounts dependent_counts(const std::string& package) const {
    if (!known_.count(package))
      throw MetricsError("unknown package: " + package);
    DependentCounts out;
    for (const auto& [root, direct] : direct_) {
      if (root == package) continue;
      if (direct.count(package)) ++out.direct;
      if (all_.at(root).count(package)) ++out.total;
    }
    return out;
  }

  // Fraction of other snapshot packages that (transitively) depend on
  // `package`.
  double reach(const std::string& package) const {
    if (package_universe() < 2) return 0.0;
    return static_cast<double>(dependent_counts(package).total) /
           static_cast<double>(package_universe() - 1);
  }

private:
  std::map<std::string, std::set<std::string>> direct_;
  std::map<std::string, std::set<std::string>> all_;
  std::set<std::string> known_;
};

// Batch analysis over the call-based view: a direct dependency counts when
// at least one edge from the root's own functions lands in it; a transitive
// dependency counts when its functions are reachable from the root's
// functions via call edges.
class CallAnalysis {
public:
  explicit CallAnalysis(const CDN& cdn) : cdn_(&cdn), graph_(cdn.nodes.size()) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& [caller, callee, _] : cdn.edges)
      if (seen.insert({caller, callee}).second) graph_.add_edge(caller, callee);

    for (const auto& [root, tree] : cdn.trees) {
      known_.insert(root);
      for (const auto& n : tree.nodes) known_.insert(n.package);

      RootFacts facts;
      facts.direct_pkgs = detail::direct_dep_packages(tree);
      facts.trans_pkgs = detail::all_dep_packages(tree);
      for (const auto& p : facts.direct_pkgs) facts.trans_pkgs.erase(p);

      const auto fns = cdn.package_index.find(tree.root);
      facts.reachable.assign(cdn.nodes.size(), false);
      std::deque<std::uint32_t> queue;
      if (fns != cdn.package_index.end()) {
        facts.root_fns = fns->second;
        for (const auto f : fns->second) {
          facts.reachable[f] = true;
          queue.push_back(f);
        }
      }
      while (!queue.empty()) {
        const auto cur = queue.front();
        queue.pop_front();
        for (const auto next : graph_.out(cur)) {
          if (!facts.reachable[next]) {
            facts.reachable[next] = true;
            queue.push_back(static_cast<std::uint32_t>(next));
          }
        }
      }
      for (std::size_t i = 0; i < facts.reachable.size(); ++i)
        if (facts.reachable[i]) facts.reached_pkgs.insert(cdn.nodes[i].package);
      facts.reached_pkgs.erase(root);

      for (const auto f : facts.root_fns)
        for (const auto next : graph_.out(f))
          facts.direct_called.insert(cdn_->nodes[next].package);
      facts.direct_called.erase(root);

      roots_.emplace(root, std::move(facts));
    }
  }

  std::size_t package_universe() const { return roots_.size(); }

  std::set<std::string> analyzed_packages() const {
    std::set<std::string> out;
    for (const auto& [root, _] : roots_) out.insert(root);
    return out;
  }

  DepCounts dependency_counts(const std::string& root_package) const {
    const auto& f = facts(root_package);
    DepCounts out;
    for (const auto& p : f.direct_pkgs)
      if (f.direct_called.count(p)) ++out.direct;
    for (const auto& p : f.trans_pkgs)
      if (f.reached_pkgs.count(p)) ++out.transitive;
    return out;
  }

  DependentCounts dependent_counts(const std::string& package) const {
    if (!known_.count(package))
      throw MetricsError("unknown package: " + package);
    DependentCounts out;
    for (const auto& [root, f] : roots_) {
      if (root == package) continue;
      if (f.direct_pkgs.count(package) && f.direct_called.count(package))
        ++out.direct;
      // Reachability is clipped to the root's resolved tree: merged-CDN
      // paths may pass through releases other roots pulled in, but only
      // resolved dependencies can be dependents' targets.
      if ((f.direct_pkgs.count(package) || f.trans_pkgs.count(package)) &&
          f.reached_pkgs.count(package))
        ++out.total;
    }
    return out;
  }

  double reach(const std::string& package) const {
    if (package_universe() < 2) return 0.0;
    return static_cast<double>(dependent_counts(package).total) /
           static_cast<double>(package_universe() - 1);
  }

  struct ApiCallCounts {
    std::size_t direct_calls = 0;
    std::size_t transitive_calls = 0;
  };

  // direct: edges from the root's own functions into its direct dependency
  // packages. transitive: inter-package edges reachable from the root's
  // functions whose callee lies in a transitive (non-direct) dependency.
  // Each qualifying edge counts once.
  ApiCallCounts api_call_counts(const std::string& root_package) const {
    const auto& f = facts(root_package);
    ApiCallCounts out;
    for (const auto& [caller, callee, _] : cdn_->edges) {
      const auto& callee_pkg = cdn_->nodes[callee].package;
      if (cdn_->nodes[caller].package == root_package &&
          std::find(f.root_fns.begin(), f.root_fns.end(), caller) !=
              f.root_fns.end() &&
          f.direct_pkgs.count(callee_pkg))
        ++out.direct_calls;
      if (f.reachable[caller] && f.trans_pkgs.count(callee_pkg) &&
          cdn_->nodes[caller].package != callee_pkg)
        ++out.transitive_calls;
    }
    return out;
  }

  // Fraction of other snapshot packages containing a function that reaches
  // the named function (canonical id) on the reversed call graph.
  double function_reach(const std::string& canonical) const {
    const auto it = cdn_->by_id.find(canonical);
    if (it == cdn_->by_id.end())
      throw MetricsError("unknown function: " + canonical);
    if (package_universe() < 2) return 0.0;
    const auto reaching = graph_.reaching_to(it->second);
    std::set<std::string> pkgs;
    for (const auto n : reaching) pkgs.insert(cdn_->nodes[n].package);
    pkgs.erase(cdn_->nodes[it->second].package);
    return static_cast<double>(pkgs.size()) /
           static_cast<double>(package_universe() - 1);
  }

private:
  struct RootFacts {
    std::vector<std::uint32_t> root_fns;
    std::set<std::string> direct_pkgs;   // from the resolved tree
    std::set<std::string> trans_pkgs;    // tree packages minus direct
    std::set<std::string> direct_called;
    std::set<std::string> reached_pkgs;
    std::vector<bool> reachable;  // function-level, root functions included
  };

  const RootFacts& facts(const std::string& root_package) const {
    const auto it = roots_.find(root_package);
    if (it == roots_.end())
      throw MetricsError("unknown root package: " + root_package);
    return it->second;
  }

  const CDN* cdn_;
  AdjacencyGraph graph_;
  std::map<std::string, RootFacts> roots_;
  std::set<std::string> known_;
};

// One-off forms of the per-view counting operations.
inline DepCounts dependency_counts(const PackageNetwork& net,
                                   const std::string& root_package) {
  return MetadataAnalysis(net).dependency_counts(root_package);
}

inline DepCounts dependency_counts(const CDN& cdn,
                                   const std::string& root_package) {
  return CallAnalysis(cdn).dependency_counts(root_package);
}

inline DependentCounts dependent_counts(const PackageNetwork& net,
                                        const std::string& package) {
  return MetadataAnalysis(net).dependent_counts(package);
}

inline DependentCounts dependent_counts(const CDN& cdn,
                                        const std::string& package) {
  return CallAnalysis(cdn).dependent_counts(package);
}

// ---------------------------------------------------------------------------
// Co-existing functions ("bloat")

struct BloatResult {
  double percent = 0.0;
  std::size_t coexisting = 0;  // public dependency functions under >= 2 versions
  std::size_t total = 0;       // all public dependency functions
  bool self_cycle = false;     // tree had a self-cycle: flagged invalid
};

// Percentage of public dependency function identifiers (package + path +
// signature, version stripped) present under two or more versions of the
// same package within one unified graph. The root's own functions are not
// dependency functions, which keeps self-cycles out of the denominator.
inline BloatResult coexistence_bloat(const UnifiedGraph& unified) {
  BloatResult out;
  out.self_cycle = unified.self_cycle;

  std::map<std::string, std::set<std::string>> versions_by_key;
  std::vector<const FunctionNode*> considered;
  for (const auto& n : unified.nodes) {
    if (n.package == unified.root.package) continue;
    if (n.package == kExternPackage) continue;
    if (n.visibility != Visibility::Public) continue;
    considered.push_back(&n);
    versions_by_key[n.package + "\t" + n.path + "\t" + n.signature.text()]
        .insert(n.version->text());
  }
  out.total = considered.size();
  for (const auto* n : considered) {
    const auto& versions =
        versions_by_key[n->package + "\t" + n->path + "\t" + n->signature.text()];
    if (versions.size() >= 2) ++out.coexisting;
  }
  if (out.total > 0)
    out.percent = 100.0 * static_cast<double>(out.coexisting) /
                  static_cast<double>(out.total);
  return out;
}

// ---------------------------------------------------------------------------
// Spearman correlation

// Average ranks for ties, then Pearson on the ranks. Length mismatch, fewer
// than two observations, and constant series are errors.
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw MetricsError("spearman: series lengths differ");
  if (xs.size() < 2)
    throw MetricsError("spearman: need at least two observations");

  const auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
      i = j + 1;
    }
    return rank;
  };

  const auto rx = ranks(xs);
  const auto ry = ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0.0 || vy == 0.0)
    throw MetricsError("spearman: constant series, correlation undefined");
  return cov / std::sqrt(vx * vy);
}

// ---------------------------------------------------------------------------
// Network comparison

enum class PairStatistic {
  DirectDependencies,
  TransitiveDependencies,
  DirectDependents,
  TotalDependents,
};

struct ComparisonRow {
  std::string package;
  double a = 0.0;
  double b = 0.0;
};

struct NetworkComparison {
  std::vector<ComparisonRow> rows;
  std::optional<double> rho;
  bool degenerate = false;  // < 3 pairs, or a constant series
};

namespace detail {

template <typename View>
double view_statistic(const View& view, PairStatistic s, const std::string& pkg) {
  switch (s) {
    case PairStatistic::DirectDependencies:
      return static_cast<double>(view.dependency_counts(pkg).direct);
    case PairStatistic::TransitiveDependencies:
      return static_cast<double>(view.dependency_counts(pkg).transitive);
    case PairStatistic::DirectDependents:
      return static_cast<double>(view.dependent_counts(pkg).direct);
    case PairStatistic::TotalDependents:
      return static_cast<double>(view.dependent_counts(pkg).total);
  }
  return 0.0;
}

}  // namespace detail

// Inner-join of packages analyzed by both views, paired statistic values,
// and the Spearman rho over the pairs. Packages with no dependencies at all
// in either view carry no dependency signal and are excluded from the
// pairing. An empty package intersection is an error; too few or constant
// pairs yield a degenerate (flagged) result.
template <typename ViewA, typename ViewB>
NetworkComparison compare_networks(const ViewA& a, const ViewB& b,
                                   PairStatistic statistic) {
  const auto pa = a.analyzed_packages();
  const auto pb = b.analyzed_packages();
  std::vector<std::string> shared;
  std::set_intersection(pa.begin(), pa.end(), pb.begin(), pb.end(),
                        std::back_inserter(shared));
  if (shared.empty())
    throw MetricsError("compare_networks: the views share no packages");

  NetworkComparison out;
  for (const auto& pkg : shared) {
    const auto da = a.dependency_counts(pkg);
    const auto db = b.dependency_counts(pkg);
    if (da.direct == 0 && da.transitive == 0 && db.direct == 0 &&
        db.transitive == 0)
      continue;  // leaf in both views
    out.rows.push_back({pkg, detail::view_statistic(a, statistic, pkg),
                        detail::view_statistic(b, statistic, pkg)});
  }

  if (out.rows.size() < 3) out.degenerate = true;
  if (out.rows.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& r : out.rows) {
      xs.push_back(r.a);
      ys.push_back(r.b);
    }
    try {
      out.rho = spearman(xs, ys);
    } catch (const MetricsError&) {
      out.degenerate = true;
    }
  } else {
    out.degenerate = true;
  }
  return out;
}

}  // namespace cdnet
