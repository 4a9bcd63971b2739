// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cdnet/io.hpp"
#include "cdnet/metrics.hpp"
#include "cdnet/reports.hpp"
#include "cdnet/synth.hpp"
#include "fixtures.hpp"

using namespace cdnet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

long vm_peak_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmPeak:", 0) == 0) {
      long kb = 0;
      std::sscanf(line.c_str(), "VmPeak: %ld", &kb);
      return kb;
    }
  }
  return -1;
}

// --------------------------------------------------------------------------
// criterion 1: the three-package scenario

void criterion_three_package_chain(Check& c) {
  const auto start = Clock::now();
  const auto fx = fixtures::make_chain_fixture();
  const auto cdn = build_cdn(fx.index, fx.t, fx.store);
  const auto net = package_network(fx.index, fx.t);

  const auto used_it = cdn.by_id.find("io::crates::lib2v0.2.0::used");
  c.require(used_it != cdn.by_id.end(), "used() missing from the CDN");
  if (!c.ok) return;
  std::size_t inter_callers = 0, unused_callers = 0;
  const auto unused_it = cdn.by_id.find("io::crates::lib2v0.2.0::unused");
  c.require(unused_it != cdn.by_id.end(), "unused() missing from the CDN");
  if (!c.ok) return;
  for (const auto& [caller, callee, _] : cdn.edges) {
    if (callee == used_it->second && cdn.nodes[caller].package != "lib2")
      ++inter_callers;
    if (callee == unused_it->second) ++unused_callers;
  }
  c.require(inter_callers == 1, "used() must have exactly one inter-package caller");
  c.require(unused_callers == 0, "unused() must have zero callers");

  const auto md = dependency_counts(net, "app");
  const auto cd = dependency_counts(cdn, "app");
  c.require(md.transitive == 1, "metadata transitive count for app must be 1");
  c.require(cd.transitive == 1, "call-based transitive count for app must be 1");

  const auto cdn_cut = build_cdn(fx.index, fx.t, fx.store_cut);
  const auto cut = dependency_counts(cdn_cut, "app");
  c.require(cut.transitive == 0,
            "removing bar->used must drop call-based transitive to 0");
  c.require(dependency_counts(net, "app").transitive == 1,
            "metadata transitive must stay 1 after the cut");
  c.require(seconds_since(start) < 1.0, "criterion must finish in under 1 s");
}

// --------------------------------------------------------------------------
// criterion 2: retroactive resolution across a release boundary

void criterion_retro_resolution(Check& c) {
  const auto fx = fixtures::make_retro_fixture();
  const Release* a = fx.index.find("a", parse_version("1.0.0"));
  c.require(a != nullptr, "fixture root missing");
  if (!c.ok) return;

  const auto mid = resolve_tree(mirror_at(fx.index, fx.mid), *a, fx.mid,
                                default_features());
  c.require(mid.nodes.count({"b", parse_version("1.1.0")}) == 1,
            "resolution at t1 < t < t2 must select b 1.1.0");
  c.require(mid.nodes.count({"b", parse_version("1.2.0")}) == 0,
            "b 1.2.0 must be invisible before t2");

  const auto late = resolve_tree(mirror_at(fx.index, fx.late), *a, fx.late,
                                 default_features());
  c.require(late.nodes.count({"b", parse_version("1.2.0")}) == 1,
            "resolution at t > t2 must select b 1.2.0");

  const auto diff = tree_changed(mid, late);
  c.require(diff.changed, "tree_changed must report a change across t2");
  c.require(diff.entries.size() == 1 && diff.entries[0].package == "b" &&
                diff.entries[0].before.size() == 1 &&
                diff.entries[0].before[0].text() == "1.1.0" &&
                diff.entries[0].after.size() == 1 &&
                diff.entries[0].after[0].text() == "1.2.0",
            "diff must be exactly {b: 1.1.0 -> 1.2.0}");
}

// --------------------------------------------------------------------------
// criterion 3: duplicate-constraint semantics

void criterion_duplicate_constraints(Check& c) {
  const auto compat = fixtures::make_dup_constraint(true);
  const Release* app = compat.index.find("app", parse_version("1.0.0"));
  const auto tree = resolve_tree(mirror_at(compat.index, compat.t), *app,
                                 compat.t, default_features());
  const auto versions = tree.version_multiset().at("log");
  c.require(versions.size() == 1 && versions[0].text() == "0.4.4",
            "(0.4.*, 0.4.4) must unify to the single node 0.4.4");
  const auto cdn = build_cdn(compat.index, compat.t, compat.store);
  c.require(cdn.by_id.count("io::crates::logv0.4.4::f") == 1,
            "unified fixture must expose logv0.4.4::f");
  c.require(cdn.by_id.count("io::crates::logv0.4.2::f") == 0,
            "no second log version may appear after unification");

  const auto coexist = fixtures::make_dup_constraint(false);
  const Release* app2 = coexist.index.find("app", parse_version("1.0.0"));
  const auto tree2 = resolve_tree(mirror_at(coexist.index, coexist.t), *app2,
                                  coexist.t, default_features());
  const auto versions2 = tree2.version_multiset().at("log");
  c.require(versions2.size() == 2 && versions2[0].text() == "0.4.4" &&
                versions2[1].text() == "0.5.5",
            "(0.4.*, 0.5.*) must coexist as 0.4.4 and 0.5.5");
  const auto cdn2 = build_cdn(coexist.index, coexist.t, coexist.store);
  c.require(cdn2.by_id.count("io::crates::logv0.4.4::f") == 1 &&
                cdn2.by_id.count("io::crates::logv0.5.5::f") == 1,
            "coexisting versions must keep version-distinct function ids");
}

// --------------------------------------------------------------------------
// criterion 4: dynamic-dispatch linking

void criterion_dynamic_linking(Check& c) {
  const auto fx = fixtures::make_dynlink();
  const auto has_impl_edge = [](const CDN& cdn) {
    const auto a = cdn.by_id.find("io::crates::cv1.0.0::bar");
    const auto b = cdn.by_id.find("io::crates::bv1.0.0::Foo::serialize");
    if (a == cdn.by_id.end() || b == cdn.by_id.end()) return false;
    return cdn.edges.count({a->second, b->second, Dispatch::Dynamic}) > 0;
  };
  c.require(has_impl_edge(build_cdn(fx.index, fx.t, fx.store)),
            "bar() must gain an edge to Foo::serialize after unification");
  c.require(!has_impl_edge(build_cdn(fx.index, fx.t, fx.store_noimpl)),
            "no edge may be added when no implementation exists");
}

// --------------------------------------------------------------------------
// criterion 5: resolver oracle equivalence

void criterion_resolver_oracle(Check& c) {
  const auto start = Clock::now();
  std::size_t instances = 0, compared = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    synth::SynthSpec spec;
    spec.packages = 5 + seed % 46;          // <= 50
    spec.min_versions = 1;
    spec.max_versions = 1 + seed % 10;      // <= 10
    spec.max_fanout = 1 + seed % 4;
    spec.dynamic_constraint_prob = 0.5 + 0.05 * (seed % 10);
    spec.yank_prob = seed % 4 == 0 ? 0.15 : 0.0;
    spec.seed = seed;
    const auto fx = synth::generate(spec);
    ++instances;

    const std::int64_t times[2] = {
        fx.first_release_at + (fx.last_release_at - fx.first_release_at) / 2,
        fx.last_release_at};
    for (const std::int64_t t : times) {
      const Index mirror = mirror_at(fx.index, t);
      for (const Release* root : snapshot_roots(mirror)) {
        ResolvedTree got, want;
        bool got_err = false, want_err = false;
        try {
          got = resolve_tree(mirror, *root, t, default_features());
        } catch (const ResolveError&) {
          got_err = true;
        }
        try {
          want = synth::oracle_resolve(mirror, *root, t);
        } catch (const ResolveError&) {
          want_err = true;
        }
        ++compared;
        if (got_err != want_err) {
          c.require(false, "error disagreement at seed " + std::to_string(seed) +
                               " root " + root->name);
          return;
        }
        if (!got_err &&
            (got.nodes != want.nodes ||
             got.version_multiset() != want.version_multiset())) {
          c.require(false, "tree mismatch at seed " + std::to_string(seed) +
                               " root " + root->name);
          return;
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  c.require(instances == 1000, "must run 1000 seeded indices");
  c.require(compared > 0, "no roots compared");
  c.require(elapsed < 60.0, "oracle equivalence must finish in under 60 s (took " +
                                std::to_string(elapsed) + ")");
  c.detail = std::to_string(compared) + " resolutions compared";
  if (!c.ok) c.detail.clear();
}

// --------------------------------------------------------------------------
// criterion 6: reachability oracle equivalence

void criterion_reachability_oracle(Check& c) {
  const auto start = Clock::now();
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 199;  // <= 200 nodes
    std::vector<std::vector<std::size_t>> fwd(n), rev(n);
    AdjacencyGraph g(n);
    const std::size_t edges = rng() % (3 * n);
    for (std::size_t e = 0; e < edges; ++e) {
      const std::size_t u = rng() % n, v = rng() % n;
      fwd[u].push_back(v);
      rev[v].push_back(u);
      g.add_edge(u, v);
    }
    for (std::size_t probe = 0; probe < std::min<std::size_t>(n, 25); ++probe) {
      const std::size_t u = rng() % n;
      const auto fwd_oracle = synth::oracle_closure(fwd, u);
      const auto rev_oracle = synth::oracle_closure(rev, u);
      if (g.reachable_from(u) != fwd_oracle || g.reaching_to(u) != rev_oracle) {
        c.require(false, "closure mismatch at trial " + std::to_string(trial));
        return;
      }
      std::set<std::size_t> direct(fwd[u].begin(), fwd[u].end());
      direct.erase(u);
      std::set<std::size_t> rdirect(rev[u].begin(), rev[u].end());
      rdirect.erase(u);
      const auto dep = node_dependency_counts(g, u);
      const auto deps_ok = dep.direct == direct.size() &&
                           dep.transitive == fwd_oracle.size() - direct.size();
      const auto dent = node_dependent_counts(g, u);
      const auto dents_ok = dent.direct == rdirect.size() &&
                            dent.transitive == rev_oracle.size() - rdirect.size();
      const double want_fraction =
          static_cast<double>(rev_oracle.size()) / static_cast<double>(n - 1);
      if (!deps_ok || !dents_ok || reaching_fraction(g, u) != want_fraction) {
        c.require(false, "count mismatch at trial " + std::to_string(trial));
        return;
      }
    }
  }
  const double elapsed = seconds_since(start);
  c.require(elapsed < 60.0,
            "reachability equivalence must finish in under 60 s (took " +
                std::to_string(elapsed) + ")");
}

// --------------------------------------------------------------------------
// criterion 7: determinism and order-independence

void criterion_determinism(Check& c) {
  std::mt19937_64 shuffles(7);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    synth::SynthSpec spec;
    spec.packages = 6 + seed % 10;
    spec.max_versions = 3;
    spec.seed = 9000 + seed;
    const auto fx = synth::generate(spec);
    const std::int64_t t = fx.last_release_at;

    const auto base = build_cdn(fx.index, t, fx.store);
    const std::string nodes = cdn_nodes_tsv(base);
    const std::string edges = cdn_edges_tsv(base);

    std::vector<std::string> order;
    for (const auto& [name, _] : fx.index.packages()) order.push_back(name);
    std::shuffle(order.begin(), order.end(), shuffles);
    const auto shuffled =
        build_cdn(fx.index, t, fx.store, VersionPolicy::LatestPerPackage, &order);
    if (cdn_nodes_tsv(shuffled) != nodes || cdn_edges_tsv(shuffled) != edges) {
      c.require(false, "serialization differs at seed " + std::to_string(seed));
      return;
    }
  }
}

// --------------------------------------------------------------------------
// criterion 8: invariant suite

void criterion_invariants(Check& c) {
  // call-based <= metadata, per package
  for (const std::uint64_t seed : {11ull, 22ull, 33ull, 44ull}) {
    synth::SynthSpec spec;
    spec.packages = 15;
    spec.seed = seed;
    const auto fx = synth::generate(spec);
    const std::int64_t t = fx.last_release_at;
    const MetadataAnalysis meta(package_network(fx.index, t));
    const auto cdn = build_cdn(fx.index, t, fx.store);
    const CallAnalysis call(cdn);
    for (const auto& pkg : call.analyzed_packages()) {
      const auto md = meta.dependency_counts(pkg);
      const auto cd = call.dependency_counts(pkg);
      const auto mdep = meta.dependent_counts(pkg);
      const auto cdep = call.dependent_counts(pkg);
      if (cd.direct > md.direct || cd.transitive > md.transitive ||
          cdep.direct > mdep.direct || cdep.total > mdep.total) {
        c.require(false, "call-based exceeded metadata for " + pkg);
        return;
      }
    }
  }

  // bloat: 0 on single-version trees
  {
    const auto fx = fixtures::make_chain_fixture();
    const Release* app = fx.index.find("app", parse_version("0.1.0"));
    const auto tree = resolve_tree(mirror_at(fx.index, fx.t), *app, fx.t,
                                   default_features());
    const auto b = coexistence_bloat(unify_release(tree, fx.store));
    c.require(b.percent == 0.0, "single-version tree must have 0% bloat");
  }

  // bloat: 100% on the forced two-version fixture
  {
    Index index;
    index.add(fixtures::make_release("d", "1.0.0", "2020-01-01T00:00:00Z"));
    index.add(fixtures::make_release("d", "2.0.0", "2020-01-02T00:00:00Z"));
    index.add(fixtures::make_release("p1", "1.0.0", "2020-01-03T00:00:00Z",
                                     {{"d", "1.*"}}));
    index.add(fixtures::make_release("p2", "1.0.0", "2020-01-04T00:00:00Z",
                                     {{"d", "2.*"}}));
    index.add(fixtures::make_release("root", "1.0.0", "2020-01-05T00:00:00Z",
                                     {{"p1", "1.*"}, {"p2", "1.*"}}));
    MemoryStore store;
    fixtures::GraphInit d_g{"d", "", {{0, "d", "f"}, {1, "d", "g"}}, {}, {}, {}};
    for (const char* v : {"1.0.0", "2.0.0"}) {
      auto g = d_g;
      g.version = v;
      store.put(fixtures::annotate_graph(g, *index.find("d", parse_version(v))));
    }
    fixtures::GraphInit p1_g{"p1", "1.0.0",
                             {{0, "p1", "f", "private"}, {1, "d", "f"}},
                             {{0, 1, "static"}},
                             {},
                             {}};
    fixtures::GraphInit p2_g{"p2", "1.0.0",
                             {{0, "p2", "f", "private"}, {1, "d", "g"}},
                             {{0, 1, "static"}},
                             {},
                             {}};
    fixtures::GraphInit r_g{"root", "1.0.0",
                            {{0, "root", "m", "private"},
                             {1, "p1", "f", "private"},
                             {2, "p2", "f", "private"}},
                            {{0, 1, "static"}, {0, 2, "static"}},
                            {},
                            {}};
    store.put(fixtures::annotate_graph(p1_g, *index.find("p1", parse_version("1.0.0"))));
    store.put(fixtures::annotate_graph(p2_g, *index.find("p2", parse_version("1.0.0"))));
    store.put(fixtures::annotate_graph(r_g, *index.find("root", parse_version("1.0.0"))));
    const std::int64_t t = fixtures::ts("2020-02-01T00:00:00Z");
    const auto tree = resolve_tree(mirror_at(index, t),
                                   *index.find("root", parse_version("1.0.0")),
                                   t, default_features());
    const auto b = coexistence_bloat(unify_release(tree, store));
    c.require(b.percent == 100.0,
              "forced two-version fixture must report 100% bloat");
  }

  // changed_fraction monotone in window length on yank-free fixtures
  for (const std::uint64_t seed : {51ull, 52ull, 53ull}) {
    synth::SynthSpec spec;
    spec.packages = 30;
    spec.max_versions = 4;
    spec.yank_prob = 0.0;
    spec.seed = seed;
    const auto fx = synth::generate(spec);
    const std::int64_t baseline =
        fx.first_release_at + (fx.last_release_at - fx.first_release_at) / 3;
    const std::int64_t span = fx.last_release_at - baseline;
    const std::vector<std::int64_t> windows = {span / 8 + 1, span / 4 + 1,
                                               span / 2 + 1, span + 86400};
    const auto out = changed_fraction(fx.index, baseline, windows);
    for (std::size_t w = 1; w < out.size(); ++w)
      if (out[w].fraction < out[w - 1].fraction) {
        c.require(false, "changed_fraction not monotone at seed " +
                             std::to_string(seed));
        return;
      }
  }

  // spearman endpoints at 1e-12
  const std::vector<double> xs = {1, 2, 3, 4, 5, 6};
  const std::vector<double> up = {2, 4, 6, 8, 10, 12};
  const std::vector<double> down = {12, 10, 8, 6, 4, 2};
  c.require(std::abs(spearman(xs, up) - 1.0) <= 1e-12,
            "identical rankings must give rho = 1.0 within 1e-12");
  c.require(std::abs(spearman(xs, down) + 1.0) <= 1e-12,
            "reversed rankings must give rho = -1.0 within 1e-12");
}

// --------------------------------------------------------------------------
// criterion 9: scale smoke test

void criterion_scale(Check& c) {
  const auto start = Clock::now();
  synth::SynthSpec spec;
  spec.packages = 500;
  spec.min_versions = 5;
  spec.max_versions = 5;
  spec.min_functions = 180;
  spec.max_functions = 220;
  spec.max_fanout = 4;
  spec.seed = 20200214;
  const auto fx = synth::generate(spec);

  const auto report = validate(fx.index);
  c.require(report.clean(), "synthetic fixture must validate cleanly");

  const std::int64_t span = fx.last_release_at - fx.first_release_at;
  const std::int64_t snapshots[3] = {fx.first_release_at + span / 2,
                                     fx.first_release_at + (3 * span) / 4,
                                     fx.last_release_at};
  std::size_t total_nodes = 0;
  for (const std::int64_t t : snapshots) {
    const auto net = package_network(fx.index, t);
    const auto cdn = build_cdn(fx.index, t, fx.store);
    total_nodes += cdn.nodes.size();
    const MetadataAnalysis meta(net);
    const CallAnalysis call(cdn);

    // the full metric suite
    (void)call_summary(cdn);
    (void)reports::degrees_tsv(cdn);
    (void)reports::degree_stats_tsv(cdn);
    (void)reports::deps_tsv(meta, call);
    (void)reports::dependents_tsv(meta, call);
    (void)reports::api_calls_tsv(call);
    (void)reports::bloat_tsv(cdn, fx.store);
    (void)reports::reach_tsv(meta, call);
    (void)reports::function_reach_tsv(cdn, call);
    (void)reports::compare_tsv(meta, call);
  }
  c.require(total_nodes > 100000, "smoke CDNs unexpectedly small: " +
                                      std::to_string(total_nodes));

  const double elapsed = seconds_since(start);
  c.require(elapsed < 300.0, "pipeline must finish in under 5 minutes (took " +
                                 std::to_string(elapsed) + " s)");
  const long peak = vm_peak_kb();
  if (peak < 0) {
    c.detail = "VmPeak unavailable; memory check skipped";
  } else {
    c.require(peak < 4L * 1024 * 1024,
              "peak memory must stay under 4 GB (VmPeak " +
                  std::to_string(peak) + " kB)");
    if (c.ok)
      c.detail = std::to_string(static_cast<long>(elapsed)) + "s, VmPeak " +
                 std::to_string(peak / 1024) + " MB";
  }
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "three-package scenario: used/unused callers and transitive counts",
       criterion_three_package_chain},
      {2, "retroactive resolution across a release boundary", criterion_retro_resolution},
      {3, "duplicate-constraint unification and coexistence",
       criterion_duplicate_constraints},
      {4, "dynamic-dispatch linking", criterion_dynamic_linking},
      {5, "resolver equals the enumeration oracle on 1000 seeded indices",
       criterion_resolver_oracle},
      {6, "reachability and counts equal closure oracles on 500 networks",
       criterion_reachability_oracle},
      {7, "order-independent, byte-identical CDN serialization (100 fixtures)",
       criterion_determinism},
      {8, "invariant suite: count bounds, bloat endpoints, monotone drift, "
          "spearman endpoints",
       criterion_invariants},
      {9, "scale smoke test: 500x5 registry, full pipeline", criterion_scale},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    Check check;
    const auto start = Clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail = std::string("exception: ") + e.what();
    }
    const double elapsed = seconds_since(start);
    char timing[32];
    std::snprintf(timing, sizeof(timing), "%.2fs", elapsed);
    std::cout << (check.ok ? "[PASS]" : "[FAIL]") << " criterion "
              << criterion.number << ": " << criterion.name << " (" << timing
              << (check.detail.empty() ? "" : "; " + check.detail) << ")\n";
    failures += check.ok ? 0 : 1;
  }
  if (failures)
    std::cout << failures << " criterion(s) failed\n";
  else
    std::cout << "all acceptance criteria passed\n";
  return failures;
}
