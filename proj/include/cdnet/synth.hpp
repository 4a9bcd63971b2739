// cdnet/synth.hpp -- deterministic synthetic fixtures and brute-force
// oracles for property tests and desk-scale verification.
#pragma once

#include <cstdint>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdnet/callgraph.hpp"
#include "cdnet/errors.hpp"
#include "cdnet/index.hpp"
#include "cdnet/resolver.hpp"
#include "cdnet/timeutil.hpp"
#include "cdnet/unify.hpp"

namespace cdnet::synth {

struct SynthSpec {
  std::size_t packages = 20;
  std::size_t min_versions = 1;
  std::size_t max_versions = 3;
  std::size_t min_fanout = 0;
  std::size_t max_fanout = 3;
  double dynamic_constraint_prob = 0.8;
  std::size_t min_functions = 3;
  std::size_t max_functions = 8;
  double edge_density = 1.5;  // call edges per function
  double dynamic_dispatch_share = 0.2;
  double macro_dispatch_share = 0.1;
  double interface_density = 0.2;
  double optional_dep_prob = 0.1;
  double dev_dep_prob = 0.1;
  double build_dep_prob = 0.05;
  double yank_prob = 0.0;
  std::uint64_t seed = 1;
  std::string registry = std::string(kDefaultRegistry);
};

struct SynthFixture {
  Index index;
  MemoryStore store;  // annotated call graphs, one per release
  std::string index_file;
  std::string timestamps_file;
  std::map<std::string, std::string> graph_files;  // store file name -> JSON
  std::int64_t first_release_at = 0;
  std::int64_t last_release_at = 0;
};

namespace detail {

// Thin wrapper so fixture bytes do not depend on the platform's
// distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  std::size_t below(std::size_t n) {
    return n == 0 ? 0 : static_cast<std::size_t>(next() % n);
  }

  std::size_t between(std::size_t lo, std::size_t hi) {
    return lo >= hi ? lo : lo + below(hi - lo + 1);
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return unit() < p; }

private:
  std::mt19937_64 eng_;
};

inline std::string padded(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  while (s.size() < width) s.insert(s.begin(), '0');
  return s;
}

inline void check_probability(double p, const char* name) {
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument(std::string("synth: ") + name +
                                " must lie in [0, 1]");
}

}  // namespace detail

// Deterministic fixture: well-formed manifests, strictly increasing
// timestamps per package, and annotation-ready call graphs with at least one
// edge of each dispatch kind when density > 0. A fixed seed reproduces the
// fixture bit for bit.
inline SynthFixture generate(const SynthSpec& spec) {
  detail::check_probability(spec.dynamic_constraint_prob, "dynamic_constraint_prob");
  detail::check_probability(spec.dynamic_dispatch_share, "dynamic_dispatch_share");
  detail::check_probability(spec.macro_dispatch_share, "macro_dispatch_share");
  detail::check_probability(spec.interface_density, "interface_density");
  detail::check_probability(spec.optional_dep_prob, "optional_dep_prob");
  detail::check_probability(spec.dev_dep_prob, "dev_dep_prob");
  detail::check_probability(spec.build_dep_prob, "build_dep_prob");
  detail::check_probability(spec.yank_prob, "yank_prob");
  if (spec.min_versions < 1)
    throw std::invalid_argument("synth: min_versions must be at least 1");
  if (spec.min_versions > spec.max_versions ||
      spec.min_fanout > spec.max_fanout ||
      spec.min_functions > spec.max_functions)
    throw std::invalid_argument("synth: min exceeds max in a range");
  if (spec.packages > 0 && spec.min_fanout >= spec.packages)
    throw std::invalid_argument(
        "synth: dependency fan-out cannot reach the package count");

  detail::Rng rng(spec.seed);
  SynthFixture fx;
  if (spec.packages == 0) return fx;

  const std::size_t width = std::max<std::size_t>(
      3, std::to_string(spec.packages - 1).size());
  std::vector<std::string> names;
  for (std::size_t i = 0; i < spec.packages; ++i)
    names.push_back("pkg" + detail::padded(i, width));

  // Which packages declare an interface (stable across their versions).
  std::vector<bool> declares_iface(spec.packages);
  for (std::size_t i = 0; i < spec.packages; ++i)
    declares_iface[i] = rng.chance(spec.interface_density);

  std::vector<std::size_t> function_count(spec.packages);
  for (std::size_t i = 0; i < spec.packages; ++i)
    function_count[i] = rng.between(spec.min_functions, spec.max_functions);

  std::vector<std::size_t> version_count(spec.packages);
  for (std::size_t i = 0; i < spec.packages; ++i)
    version_count[i] = rng.between(spec.min_versions, spec.max_versions);

  // Interleaved publication timeline, one hour apart. Every package ships
  // its k-th version in round k, so dependencies on earlier packages always
  // have a candidate at the dependent's creation time.
  const std::int64_t t0 = parse_iso8601("2020-01-01T00:00:00Z");
  struct Planned {
    std::size_t pkg;
    SemVer version;
    std::int64_t at;
    bool yanked;
  };
  std::vector<Planned> plan;
  std::vector<SemVer> current(spec.packages);
  std::int64_t slot = 0;
  for (std::size_t round = 0;; ++round) {
    bool any = false;
    for (std::size_t i = 0; i < spec.packages; ++i) {
      if (round >= version_count[i]) continue;
      any = true;
      SemVer v;
      if (round == 0) {
        v = rng.chance(0.5) ? parse_version("0.1.0") : parse_version("1.0.0");
      } else {
        v = current[i];
        const double roll = rng.unit();
        if (roll < 0.5) {
          v.patch += 1;
        } else if (roll < 0.85) {
          v.minor += 1;
          v.patch = 0;
        } else {
          v.major += 1;
          v.minor = 0;
          v.patch = 0;
        }
      }
      current[i] = v;
      const bool yanked = round > 0 && rng.chance(spec.yank_prob);
      plan.push_back({i, v, t0 + slot * 3600, yanked});
      ++slot;
    }
    if (!any) break;
  }
  fx.first_release_at = t0;
  fx.last_release_at = t0 + (slot - 1) * 3600;

  // Per-package version history in publication order, for constraints.
  std::vector<std::vector<std::pair<SemVer, std::int64_t>>> history(spec.packages);

  std::vector<Release> releases;
  for (const auto& p : plan) {
    Release r;
    r.name = names[p.pkg];
    r.version = p.version;
    r.created_at = p.at;
    r.yanked = p.yanked;

    const std::size_t pool = p.pkg;  // only earlier-created packages
    std::size_t fanout = rng.between(spec.min_fanout, spec.max_fanout);
    fanout = std::min(fanout, pool);
    std::set<std::size_t> targets;
    while (targets.size() < fanout) targets.insert(rng.below(pool));

    for (const std::size_t target : targets) {
      const auto& h = history[target];
      if (h.empty()) continue;
      // Anchor the requirement at a version that existed before this release.
      std::vector<const SemVer*> available;
      for (const auto& [v, at] : h)
        if (at < p.at) available.push_back(&v);
      if (available.empty()) continue;
      const SemVer anchor = *available[rng.below(available.size())];

      DependencySpec d;
      d.target = names[target];
      if (rng.chance(spec.dynamic_constraint_prob)) {
        const double style = rng.unit();
        if (style < 0.40) {
          d.constraint = parse_constraint(anchor.text());  // bare caret
        } else if (style < 0.55) {
          d.constraint = parse_constraint("^" + anchor.text());
        } else if (style < 0.70) {
          d.constraint = parse_constraint("~" + std::to_string(anchor.major) +
                                          "." + std::to_string(anchor.minor));
        } else if (style < 0.90) {
          d.constraint = parse_constraint(std::to_string(anchor.major) + ".*");
        } else {
          d.constraint = parse_constraint(
              ">=" + anchor.text() + ", <" +
              std::to_string(anchor.major + 1) + ".0.0");
        }
      } else {
        d.constraint = parse_constraint("=" + anchor.text());
      }
      if (rng.chance(spec.dev_dep_prob)) {
        d.kind = DepKind::Dev;
      } else if (rng.chance(spec.build_dep_prob)) {
        d.kind = DepKind::Build;
      } else {
        d.kind = DepKind::Normal;
        if (rng.chance(spec.optional_dep_prob)) {
          d.optional = true;
          d.enabled_by.push_back(rng.chance(0.5) ? "default" : "extra");
        }
      }
      r.deps.push_back(std::move(d));
    }
    history[p.pkg].emplace_back(p.version, p.at);
    releases.push_back(std::move(r));
  }

  // Index and its documented on-disk form.
  std::string index_lines =
      "# synthetic registry index: one release per line\n";
  std::string ts_lines = "# name,version,created-at\n";
  for (const auto& r : releases) {
    nlohmann::json deps = nlohmann::json::array();
    for (const auto& d : r.deps) {
      nlohmann::json jd;
      jd["name"] = d.target;
      jd["req"] = d.constraint.source;
      jd["kind"] = std::string(to_string(d.kind));
      jd["optional"] = d.optional;
      jd["features"] = d.enabled_by;
      if (d.platform)
        jd["target"] = *d.platform;
      else
        jd["target"] = nullptr;
      deps.push_back(jd);
    }
    nlohmann::json line;
    line["name"] = r.name;
    line["vers"] = r.version.text();
    line["deps"] = deps;
    line["yanked"] = r.yanked;
    index_lines += line.dump() + "\n";
    ts_lines += r.name + "," + r.version.text() + "," +
                format_iso8601(r.created_at) + "\n";
    fx.index.add(r);
  }
  fx.index_file = std::move(index_lines);
  fx.timestamps_file = std::move(ts_lines);

  // Call graphs. Function sets are stable across versions of a package so
  // cross-package references resolve under any version choice.
  const std::map<std::string, std::size_t> pkg_id = [&] {
    std::map<std::string, std::size_t> m;
    for (std::size_t i = 0; i < spec.packages; ++i) m[names[i]] = i;
    return m;
  }();

  const auto fn_path = [&](std::size_t pkg, std::size_t fn) {
    if (declares_iface[pkg] && fn == function_count[pkg])
      return "Iface" + detail::padded(pkg, width) + "::run";
    return "api::f" + detail::padded(fn, 3);
  };
  const auto fn_public = [&](std::size_t pkg, std::size_t fn) {
    // Function 0 and interface declarations are always public.
    if (fn == 0 || fn == function_count[pkg]) return true;
    std::mt19937_64 h(0x9e3779b97f4a7c15ull ^ (pkg * 1315423911u + fn));
    return (h() & 1023) < 614;  // ~60%, stable per (pkg, fn)
  };

  for (const auto& r : releases) {
    const std::size_t pkg = pkg_id.at(r.name);
    const std::size_t nf = function_count[pkg];

    nlohmann::json functions = nlohmann::json::array();
    nlohmann::json edges = nlohmann::json::array();
    nlohmann::json interfaces = nlohmann::json::array();
    nlohmann::json impls = nlohmann::json::array();

    std::int64_t next_id = 0;
    std::map<std::pair<std::string, std::size_t>, std::int64_t> external_ids;

    const auto add_local = [&](std::size_t fn) {
      nlohmann::json f;
      f["id"] = next_id;
      f["package"] = r.name;
      f["version"] = nullptr;
      f["path"] = fn_path(pkg, fn);
      f["visibility"] = fn_public(pkg, fn) ? "public" : "private";
      functions.push_back(f);
      return next_id++;
    };
    const auto add_external = [&](const std::string& target, std::size_t fn) {
      const auto key = std::make_pair(target, fn);
      if (const auto it = external_ids.find(key); it != external_ids.end())
        return it->second;
      const std::size_t tid = pkg_id.at(target);
      nlohmann::json f;
      f["id"] = next_id;
      f["package"] = target;
      f["version"] = nullptr;
      f["path"] = fn_path(tid, fn);
      f["visibility"] = fn_public(tid, fn) ? "public" : "private";
      functions.push_back(f);
      external_ids[key] = next_id;
      return next_id++;
    };

    std::vector<std::int64_t> local_ids;
    for (std::size_t fn = 0; fn < nf; ++fn) local_ids.push_back(add_local(fn));
    std::int64_t decl_id = -1;
    if (declares_iface[pkg]) {
      decl_id = add_local(nf);  // the interface method declaration
      nlohmann::json iface;
      iface["package"] = r.name;
      iface["version"] = nullptr;
      iface["name"] = "Iface" + detail::padded(pkg, width);
      iface["methods"] = nlohmann::json::array(
          {{{"name", "run"}, {"function", decl_id}}});
      interfaces.push_back(iface);
    }

    // Dependencies usable from code: non-optional or default-enabled.
    std::vector<std::string> usable;
    for (const auto& d : r.deps) {
      if (d.kind != DepKind::Normal) continue;
      if (d.optional &&
          std::find(d.enabled_by.begin(), d.enabled_by.end(), "default") ==
              d.enabled_by.end())
        continue;
      usable.push_back(d.target);
    }

    const auto public_fn_of = [&](const std::string& target) {
      const std::size_t tid = pkg_id.at(target);
      std::vector<std::size_t> pub;
      for (std::size_t fn = 0; fn < function_count[tid]; ++fn)
        if (fn_public(tid, fn)) pub.push_back(fn);
      return pub.empty() ? std::size_t{0} : pub[rng.below(pub.size())];
    };

    const std::size_t edge_target_count = static_cast<std::size_t>(
        spec.edge_density * static_cast<double>(nf) + 0.5);
    for (std::size_t e = 0; e < edge_target_count; ++e) {
      const std::int64_t caller = local_ids[rng.below(local_ids.size())];
      std::int64_t callee;
      if (!usable.empty() && rng.chance(0.4)) {
        const auto& target = usable[rng.below(usable.size())];
        callee = add_external(target, public_fn_of(target));
      } else {
        callee = local_ids[rng.below(local_ids.size())];
      }
      std::string dispatch;
      if (e == 0) {
        dispatch = "static";
      } else if (e == 1) {
        dispatch = "dynamic";
      } else if (e == 2) {
        dispatch = "macro";
      } else {
        const double roll = rng.unit();
        dispatch = roll < spec.dynamic_dispatch_share ? "dynamic"
                   : roll < spec.dynamic_dispatch_share + spec.macro_dispatch_share
                       ? "macro"
                       : "static";
      }
      edges.push_back({{"caller", caller}, {"callee", callee}, {"dispatch", dispatch}});
    }

    // Implement interfaces of usable dependencies and call them dynamically.
    for (const auto& target : usable) {
      const std::size_t tid = pkg_id.at(target);
      if (!declares_iface[tid] || !rng.chance(0.5)) continue;
      const std::string iface_name = "Iface" + detail::padded(tid, width);
      const std::string impl_type =
          "Impl" + detail::padded(tid, width) + "for" + detail::padded(pkg, width);

      nlohmann::json impl_fn;
      impl_fn["id"] = next_id;
      impl_fn["package"] = r.name;
      impl_fn["version"] = nullptr;
      impl_fn["path"] = impl_type + "::run";
      impl_fn["visibility"] = "public";
      functions.push_back(impl_fn);
      const std::int64_t impl_id = next_id++;

      nlohmann::json rec;
      rec["interface"] = {{"package", target}, {"version", nullptr}, {"name", iface_name}};
      rec["type"] = {{"package", r.name}, {"version", nullptr}, {"name", impl_type}};
      rec["methods"] = nlohmann::json::array(
          {{{"name", "run"}, {"function", impl_id}}});
      impls.push_back(rec);

      const std::int64_t remote_decl = add_external(target, function_count[tid]);
      edges.push_back({{"caller", local_ids[rng.below(local_ids.size())]},
                       {"callee", remote_decl},
                       {"dispatch", "dynamic"}});
    }

    nlohmann::json doc;
    doc["package"] = r.name;
    doc["version"] = r.version.text();
    doc["functions"] = functions;
    doc["edges"] = edges;
    doc["hierarchy"] = {{"interfaces", interfaces}, {"impls", impls}};
    const std::string file = doc.dump();

    fx.graph_files[DirectoryStore::file_name({r.name, r.version})] = file;

    std::istringstream in(file);
    const RawCallGraph raw = load_callgraph(in);
    AnnotateOptions opts;
    opts.registry = spec.registry;
    fx.store.put(annotate(raw, r, r.deps, opts));
  }

  return fx;
}

// ---------------------------------------------------------------------------
// Brute-force oracles (structurally different from the production paths)

inline std::size_t oracle_node_limit() {
  if (const char* env = std::getenv("CDNET_ORACLE_NODE_LIMIT")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 10000;
}

namespace detail {

inline void closure_dfs(const std::vector<std::vector<std::size_t>>& adj,
                        std::size_t node, std::vector<bool>& seen) {
  for (const std::size_t next : adj[node]) {
    if (!seen[next]) {
      seen[next] = true;
      closure_dfs(adj, next, seen);
    }
  }
}

}  // namespace detail

// Exhaustive recursive closure over an adjacency list. The start node is
// excluded from its own closure, self-loops included. Graphs above the
// documented bound (CDNET_ORACLE_NODE_LIMIT, default 10000) are refused.
inline std::set<std::size_t> oracle_closure(
    const std::vector<std::vector<std::size_t>>& adj, std::size_t start) {
  if (adj.size() > oracle_node_limit())
    throw MetricsError("oracle_closure: graph exceeds the oracle size bound");
  std::vector<bool> seen(adj.size(), false);
  detail::closure_dfs(adj, start, seen);
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < adj.size(); ++i)
    if (seen[i] && i != start) out.insert(i);
  return out;
}

namespace detail {

struct OracleState {
  const Index* mirror;
  std::int64_t t;
  std::map<std::pair<std::string, CompatClass>,
           std::map<std::string, DependencyConstraint>>
      cons;
  std::map<std::pair<std::string, CompatClass>,
           std::map<std::string, DependencyConstraint>>
      seen;
  ResolvedTree tree;
  std::set<PackageVersion> visited;
  std::map<PackageVersion, PackageVersion> parent;
};

inline std::optional<SemVer> oracle_select(OracleState& st,
                                           const DependencySpec& spec) {
  // Ascending enumeration of every candidate; the last survivor is the
  // highest-precedence version satisfying the spec and the accumulated
  // constraints of its own compatibility class.
  std::optional<SemVer> last;
  const auto* releases = st.mirror->find(spec.target);
  if (!releases) return std::nullopt;
  for (const auto& rel : *releases) {
    if (rel.yanked || rel.created_at > st.t) continue;
    if (!spec.constraint.matches(rel.version)) continue;
    bool ok = true;
    const auto it = st.cons.find({spec.target, compat_class(rel.version)});
    if (it != st.cons.end())
      for (const auto& [_, c] : it->second)
        if (!c.matches(rel.version)) {
          ok = false;
          break;
        }
    if (ok) last = rel.version;
  }
  return last;
}

inline void oracle_expand(OracleState& st, const PackageVersion& node,
                          const Release& release,
                          const std::set<std::string>& features) {
  if (!st.visited.insert(node).second) return;
  for (const auto& spec : runtime_deps(release, features)) {
    const auto chosen = oracle_select(st, spec);
    if (!chosen) {
      std::vector<std::string> path;
      PackageVersion hop = node;
      while (true) {
        path.push_back(hop.text());
        const auto it = st.parent.find(hop);
        if (it == st.parent.end()) break;
        hop = it->second;
      }
      std::reverse(path.begin(), path.end());
      throw ResolveError(spec.target, spec.constraint.text(), std::move(path),
                         "oracle: no satisfying version");
    }
    st.seen[{spec.target, compat_class(*chosen)}].emplace(
        spec.constraint.text(), spec.constraint);
    const PackageVersion child{spec.target, *chosen};
    st.tree.children[node].push_back({child, spec});
    if (child == node) st.tree.self_cycles.insert(node);
    if (st.tree.nodes.insert(child).second) st.parent.emplace(child, node);
    if (!st.visited.count(child)) {
      const Release* crel = st.mirror->find(child.package, child.version);
      if (crel) oracle_expand(st, child, *crel, default_features());
    }
  }
}

}  // namespace detail

// Brute-force retroactive resolution: recursive expansion with exhaustive
// ascending candidate scans, re-run from scratch until the constraint sets
// it used match the constraint sets it encountered.
inline ResolvedTree oracle_resolve(const Index& mirror, const Release& root,
                                   std::int64_t t,
                                   const std::set<std::string>& enabled_features =
                                       default_features()) {
  detail::OracleState st;
  st.mirror = &mirror;
  st.t = t;
  const PackageVersion root_pv{root.name, root.version};
  for (int round = 0; round < 100; ++round) {
    st.seen.clear();
    st.tree = ResolvedTree{};
    st.tree.root = root_pv;
    st.tree.nodes.insert(root_pv);
    st.visited.clear();
    st.parent.clear();
    detail::oracle_expand(st, root_pv, root, enabled_features);

    bool same = st.cons.size() == st.seen.size();
    if (same) {
      auto a = st.cons.begin();
      auto b = st.seen.begin();
      for (; a != st.cons.end(); ++a, ++b) {
        if (a->first != b->first || a->second.size() != b->second.size()) {
          same = false;
          break;
        }
        auto ca = a->second.begin();
        auto cb = b->second.begin();
        for (; ca != a->second.end(); ++ca, ++cb)
          if (ca->first != cb->first) {
            same = false;
            break;
          }
        if (!same) break;
      }
    }
    if (same) return st.tree;
    st.cons = st.seen;
  }
  throw ResolveError(root.name, "", {root_pv.text()},
                     "oracle: resolution did not converge");
}

}  // namespace cdnet::synth
