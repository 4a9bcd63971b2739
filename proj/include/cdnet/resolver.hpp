// cdnet/resolver.hpp -- retroactive dependency resolution: per-release
// resolved trees and the package-level network at a timestamp.
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cdnet/errors.hpp"
#include "cdnet/index.hpp"
#include "cdnet/semver.hpp"

namespace cdnet {

struct TreeEdge {
  PackageVersion child;
  DependencySpec spec;  // the specification that produced this edge
};

// Breadth-first expansion of runtime dependencies. Within one compatibility
// class all constraints are merged and a single version is chosen; versions
// from incompatible classes coexist as distinct nodes. Cycles are closed by
// the visited set; a node depending on its own (package, version) is flagged.
struct ResolvedTree {
  PackageVersion root;
  std::set<PackageVersion> nodes;
  std::map<PackageVersion, std::vector<TreeEdge>> children;
  std::set<PackageVersion> self_cycles;

  // package -> sorted versions present in the tree (coexistence keeps both).
  std::map<std::string, std::vector<SemVer>> version_multiset() const {
    std::map<std::string, std::vector<SemVer>> out;
    for (const auto& n : nodes) out[n.package].push_back(n.version);
    return out;  // nodes are ordered, so the vectors come out sorted
  }
};

namespace detail {

using ClassKey = std::pair<std::string, CompatClass>;
using ClassConstraints = std::map<ClassKey, std::map<std::string, DependencyConstraint>>;

inline bool same_constraints(const ClassConstraints& a, const ClassConstraints& b) {
  if (a.size() != b.size()) return false;
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.size() != ib->second.size())
      return false;
    auto ja = ia->second.begin();
    auto jb = ib->second.begin();
    for (; ja != ia->second.end(); ++ja, ++jb)
      if (ja->first != jb->first) return false;
  }
  return true;
}

inline std::vector<std::string> path_to(
    const std::map<PackageVersion, PackageVersion>& parent,
    const PackageVersion& root, PackageVersion node) {
  std::vector<std::string> path;
  while (true) {
    path.push_back(node.text());
    if (node == root) break;
    const auto it = parent.find(node);
    if (it == parent.end()) break;
    node = it->second;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

// Highest-precedence candidate satisfying the spec and every accumulated
// constraint of the candidate's own compatibility class. Pure in
// (spec, cons), which makes one expansion round order-independent.
inline std::optional<SemVer> select_version(const Index& mirror,
                                            const DependencySpec& spec,
                                            std::int64_t t,
                                            const ClassConstraints& cons,
                                            std::string* why_none) {
  const auto* releases = mirror.find(spec.target);
  if (!releases) {
    if (why_none) *why_none = "unknown package";
    return std::nullopt;
  }
  bool any_candidate = false;
  for (auto it = releases->rbegin(); it != releases->rend(); ++it) {
    if (it->yanked || it->created_at > t) continue;
    any_candidate = true;
    if (!spec.constraint.matches(it->version)) continue;
    const auto ck = cons.find({spec.target, compat_class(it->version)});
    if (ck != cons.end()) {
      bool ok = true;
      for (const auto& [_, c] : ck->second)
        if (!c.matches(it->version)) {
          ok = false;
          break;
        }
      if (!ok) continue;
    }
    return it->version;
  }
  if (why_none)
    *why_none = any_candidate
                    ? "no available version satisfies the merged constraints"
                    : "no versions available at snapshot time";
  return std::nullopt;
}

}  // namespace detail

// Resolves the dependency tree of `root` against `mirror` at time t. The
// root is expanded with `enabled_features`; every other node is expanded
// with its own declared default feature set.
//
// Constraint merging runs as a bounded fixpoint: each round expands the full
// tree with the previous round's per-(package, class) constraint sets frozen
// as selection filters, then compares the sets the round actually used
// against the sets it encountered. A spec whose class conjunction admits no
// version raises ResolveError naming package, constraint, and path.
inline ResolvedTree resolve_tree(const Index& mirror, const Release& root,
                                 std::int64_t t,
                                 const std::set<std::string>& enabled_features) {
  constexpr int kMaxRounds = 100;
  const PackageVersion root_pv{root.name, root.version};

  detail::ClassConstraints cons;
  for (int round = 0; round < kMaxRounds; ++round) {
    detail::ClassConstraints seen;
    ResolvedTree tree;
    tree.root = root_pv;
    tree.nodes.insert(root_pv);

    std::map<PackageVersion, PackageVersion> parent;
    std::set<PackageVersion> expanded;
    std::deque<PackageVersion> queue{root_pv};

    while (!queue.empty()) {
      const PackageVersion cur = queue.front();
      queue.pop_front();
      if (!expanded.insert(cur).second) continue;

      const Release* rel = cur == root_pv
                               ? &root
                               : mirror.find(cur.package, cur.version);
      if (!rel)
        throw ResolveError(cur.package, "", detail::path_to(parent, root_pv, cur),
                           "release missing from mirror");
      const auto specs = runtime_deps(
          *rel, cur == root_pv ? enabled_features : default_features());

      for (const auto& spec : specs) {
        std::string why;
        const auto chosen = detail::select_version(mirror, spec, t, cons, &why);
        if (!chosen) {
          auto path = detail::path_to(parent, root_pv, cur);
          throw ResolveError(spec.target, spec.constraint.text(),
                             std::move(path), why);
        }
        seen[{spec.target, compat_class(*chosen)}]
            .emplace(spec.constraint.text(), spec.constraint);

        const PackageVersion child{spec.target, *chosen};
        tree.children[cur].push_back({child, spec});
        if (child == cur) tree.self_cycles.insert(cur);
        if (tree.nodes.insert(child).second) {
          parent.emplace(child, cur);
          queue.push_back(child);
        }
      }
    }

    if (detail::same_constraints(cons, seen)) return tree;
    cons = std::move(seen);
  }
  throw ResolveError(root.name, "", {root_pv.text()},
                     "resolution did not converge");
}

// ---------------------------------------------------------------------------
// Snapshot network

struct SkippedRoot {
  std::string package;
  SemVer version;
  std::string reason;
};

struct PackageNetwork {
  std::int64_t snapshot_time = 0;
  std::set<PackageVersion> nodes;
  std::set<std::pair<PackageVersion, PackageVersion>> edges;
  std::set<PackageVersion> self_cycle_nodes;  // flagged, not dropped
  std::map<std::string, ResolvedTree> trees;  // root package -> its tree
  std::vector<SkippedRoot> skipped;
};

enum class VersionPolicy { LatestPerPackage };

// The single most recent non-yanked release per package; timestamp ties go
// to the higher version precedence.
inline std::vector<const Release*> snapshot_roots(const Index& mirror) {
  std::vector<const Release*> roots;
  for (const auto& [name, releases] : mirror.packages()) {
    const Release* best = nullptr;
    for (const auto& r : releases) {
      if (r.yanked) continue;
      if (!best || r.created_at > best->created_at ||
          (r.created_at == best->created_at && r.version > best->version))
        best = &r;
    }
    if (best) roots.push_back(best);
  }
  return roots;  // ordered by package name via the index map
}

// Releases flagged by validate() are removed from snapshot membership before
// mirroring, both as roots and as resolution candidates.
inline Index snapshot_index(const Index& index) {
  const auto flagged = validate(index).flagged_releases();
  if (flagged.empty()) return index;
  return index.filtered([&](const Release& r) {
    return flagged.count({r.name, r.version}) == 0;
  });
}

inline PackageNetwork package_network(const Index& index, std::int64_t t,
                                      VersionPolicy policy = VersionPolicy::LatestPerPackage,
                                      const std::set<std::string>& root_features =
                                          default_features()) {
  (void)policy;  // latest-per-package is the only policy
  PackageNetwork net;
  net.snapshot_time = t;

  const Index mirror = mirror_at(snapshot_index(index), t);
  for (const Release* root : snapshot_roots(mirror)) {
    ResolvedTree tree;
    try {
      tree = resolve_tree(mirror, *root, t, root_features);
    } catch (const ResolveError& e) {
      net.skipped.push_back({root->name, root->version, e.what()});
      continue;
    }
    net.nodes.insert(tree.nodes.begin(), tree.nodes.end());
    for (const auto& [from, edges] : tree.children)
      for (const auto& e : edges) net.edges.insert({from, e.child});
    net.self_cycle_nodes.insert(tree.self_cycles.begin(), tree.self_cycles.end());
    net.trees.emplace(root->name, std::move(tree));
  }
  return net;
}

// ---------------------------------------------------------------------------
// Tree drift

struct TreeDiffEntry {
  std::string package;
  std::vector<SemVer> before;
  std::vector<SemVer> after;
};

struct TreeDiff {
  bool changed = false;
  std::vector<TreeDiffEntry> entries;
};

// True iff the package -> version multisets differ; the diff lists every
// package whose version multiset changed (including added/removed packages).
inline TreeDiff tree_changed(const ResolvedTree& a, const ResolvedTree& b) {
  if (a.root.package != b.root.package)
    throw std::invalid_argument("tree_changed: trees have different root packages");
  TreeDiff diff;
  const auto ma = a.version_multiset();
  const auto mb = b.version_multiset();
  auto ia = ma.begin();
  auto ib = mb.begin();
  while (ia != ma.end() || ib != mb.end()) {
    if (ib == mb.end() || (ia != ma.end() && ia->first < ib->first)) {
      diff.entries.push_back({ia->first, ia->second, {}});
      ++ia;
    } else if (ia == ma.end() || ib->first < ia->first) {
      diff.entries.push_back({ib->first, {}, ib->second});
      ++ib;
    } else {
      if (ia->second != ib->second)
        diff.entries.push_back({ia->first, ia->second, ib->second});
      ++ia;
      ++ib;
    }
  }
  diff.changed = !diff.entries.empty();
  return diff;
}

struct WindowChange {
  std::int64_t window = 0;  // seconds
  std::size_t changed = 0;
  std::size_t total = 0;
  double fraction = 0.0;
};

// For each window, the fraction of baseline roots (snapshot roots with at
// least one runtime dependency) whose tree re-resolved at baseline+window
// differs from the baseline tree. Roots unresolvable at the baseline are
// excluded; a root that becomes unresolvable later counts as changed.
inline std::vector<WindowChange> changed_fraction(
    const Index& index, std::int64_t baseline_t,
    std::span<const std::int64_t> windows) {
  const Index valid = snapshot_index(index);
  const Index base_mirror = mirror_at(valid, baseline_t);

  std::vector<std::pair<const Release*, ResolvedTree>> baselines;
  for (const Release* root : snapshot_roots(base_mirror)) {
    if (runtime_deps(*root, default_features()).empty()) continue;
    try {
      baselines.emplace_back(root,
                             resolve_tree(base_mirror, *root, baseline_t,
                                          default_features()));
    } catch (const ResolveError&) {
      // not part of the baseline population
    }
  }

  std::vector<WindowChange> out;
  for (const std::int64_t window : windows) {
    const std::int64_t t = baseline_t + window;
    const Index mirror = mirror_at(valid, t);
    WindowChange wc;
    wc.window = window;
    wc.total = baselines.size();
    for (const auto& [root, baseline_tree] : baselines) {
      bool changed;
      try {
        changed = tree_changed(baseline_tree,
                               resolve_tree(mirror, *root, t, default_features()))
                      .changed;
      } catch (const ResolveError&) {
        changed = true;
      }
      if (changed) ++wc.changed;
    }
    wc.fraction = wc.total == 0 ? 0.0
                                : static_cast<double>(wc.changed) /
                                      static_cast<double>(wc.total);
    out.push_back(wc);
  }
  return out;
}

}  // namespace cdnet
