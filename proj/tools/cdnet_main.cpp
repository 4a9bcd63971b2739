// cdnet -- ingest a registry index and per-package call graphs, build
// package networks and CDN snapshots, and run the analysis suite.
//
// Exit codes: 0 success; 2 parse/load failure; 3 validation violations
// under --strict; 4 unresolvable or missing inputs; 1 anything else.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdnet/io.hpp"
#include "cdnet/metrics.hpp"
#include "cdnet/reports.hpp"
#include "cdnet/synth.hpp"
#include "cdnet/timeutil.hpp"
#include "cdnet/unify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitUnresolvable = 4;

struct CommonOptions {
  std::string index_path;
  std::string timestamps_path;
  std::string cg_store;
  std::vector<std::string> at;
  std::string at_start;  // alternative to --at: start/step/count series
  std::string at_step;
  std::size_t at_count = 0;
  std::string out;
  std::string features = "default";
  std::string registry = std::string(cdnet::kDefaultRegistry);
  bool strict = false;
};

// "90s", "12h", "7d", "2w"; bare numbers are seconds.
std::int64_t parse_duration(const std::string& text) {
  if (text.empty()) throw cdnet::ParseError("empty duration");
  std::int64_t scale = 1;
  std::string digits = text;
  switch (text.back()) {
    case 's': scale = 1; digits.pop_back(); break;
    case 'h': scale = 3600; digits.pop_back(); break;
    case 'd': scale = 86400; digits.pop_back(); break;
    case 'w': scale = 7 * 86400; digits.pop_back(); break;
    default: break;
  }
  try {
    const std::int64_t value = std::stoll(digits);
    if (value <= 0) throw cdnet::ParseError("duration must be positive: " + text);
    return value * scale;
  } catch (const std::logic_error&) {
    throw cdnet::ParseError("invalid duration: " + text);
  }
}

void add_input_options(CLI::App* cmd, CommonOptions& opt, bool with_store) {
  cmd->add_option("--index", opt.index_path, "registry index file (JSON lines)")
      ->required();
  cmd->add_option("--timestamps", opt.timestamps_path,
                  "timestamp file (name,version,ISO-8601 rows)")
      ->required();
  if (with_store)
    cmd->add_option("--cg-store", opt.cg_store,
                    "directory of <package>-<version>.cg.json call graphs")
        ->required();
}

std::set<std::string> feature_policy(const std::string& text) {
  if (text == "default") return cdnet::default_features();
  if (text == "none") return {};
  std::set<std::string> out;
  std::string cur;
  for (const char c : text + ",") {
    if (c == ',') {
      if (!cur.empty()) out.insert(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

std::vector<std::int64_t> parse_snapshots(const CommonOptions& opt) {
  std::vector<std::int64_t> out;
  for (const auto& a : opt.at) out.push_back(cdnet::parse_iso8601(a));
  if (!opt.at_start.empty()) {
    if (opt.at_step.empty() || opt.at_count == 0)
      throw cdnet::ParseError(
          "--at-start requires --at-step and a positive --at-count");
    const std::int64_t start = cdnet::parse_iso8601(opt.at_start);
    const std::int64_t step = parse_duration(opt.at_step);
    for (std::size_t k = 0; k < opt.at_count; ++k)
      out.push_back(start + static_cast<std::int64_t>(k) * step);
  }
  if (out.empty())
    throw cdnet::ParseError("no snapshots: pass --at or --at-start/--at-step/--at-count");
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1])
      throw cdnet::ParseError("snapshot timestamps must be strictly increasing");
  return out;
}

void log(const std::string& message) { std::cerr << "[cdnet] " << message << "\n"; }

int cmd_validate(const CommonOptions& opt) {
  const cdnet::Index index =
      cdnet::load_index_files(opt.index_path, opt.timestamps_path);
  log("loaded " + std::to_string(index.release_count()) + " releases of " +
      std::to_string(index.package_count()) + " packages");
  const cdnet::ValidationReport report = cdnet::validate(index);

  fs::create_directories(opt.out);
  cdnet::write_atomic(fs::path(opt.out) / "validation.tsv",
                      cdnet::reports::validation_tsv(report));
  log(std::to_string(report.issues.size()) + " validation issue(s)");
  return (!report.clean() && opt.strict) ? kExitValidation : 0;
}

int cmd_build(const CommonOptions& opt) {
  const cdnet::Index index =
      cdnet::load_index_files(opt.index_path, opt.timestamps_path);
  cdnet::AnnotateOptions aopts;
  aopts.registry = opt.registry;
  const cdnet::DirectoryStore store(opt.cg_store, &index, aopts);
  const auto features = feature_policy(opt.features);

  fs::create_directories(opt.out);
  for (const std::int64_t t : parse_snapshots(opt)) {
    const std::string tag = cdnet::format_compact(t);
    log("building snapshot " + cdnet::format_iso8601(t));

    const auto net = cdnet::package_network(
        index, t, cdnet::VersionPolicy::LatestPerPackage, features);
    cdnet::write_atomic(fs::path(opt.out) / ("pdn-nodes-" + tag + ".csv"),
                        cdnet::pdn_nodes_csv(net));
    cdnet::write_atomic(fs::path(opt.out) / ("pdn-edges-" + tag + ".csv"),
                        cdnet::pdn_edges_csv(net));
    cdnet::write_atomic(fs::path(opt.out) / ("pdn-" + tag + ".dot"),
                        cdnet::pdn_dot(net));

    const auto cdn = cdnet::build_cdn(
        index, t, store, cdnet::VersionPolicy::LatestPerPackage, nullptr,
        features);
    cdnet::write_atomic(fs::path(opt.out) / ("cdn-nodes-" + tag + ".tsv"),
                        cdnet::cdn_nodes_tsv(cdn));
    cdnet::write_atomic(fs::path(opt.out) / ("cdn-edges-" + tag + ".tsv"),
                        cdnet::cdn_edges_tsv(cdn));
    cdnet::write_atomic(fs::path(opt.out) / ("cdn-" + tag + ".dot"),
                        cdnet::cdn_dot(cdn));
    cdnet::write_atomic(fs::path(opt.out) / ("skipped-" + tag + ".tsv"),
                        cdnet::skipped_tsv(cdn.skipped));
    log("snapshot " + tag + ": " + std::to_string(cdn.nodes.size()) +
        " functions, " + std::to_string(cdn.edges.size()) + " calls, " +
        std::to_string(cdn.skipped.size()) + " skipped root(s)");
  }
  return 0;
}

int cmd_analyze(const CommonOptions& opt, const std::set<std::string>& metrics) {
  const cdnet::Index index =
      cdnet::load_index_files(opt.index_path, opt.timestamps_path);
  cdnet::AnnotateOptions aopts;
  aopts.registry = opt.registry;
  const cdnet::DirectoryStore store(opt.cg_store, &index, aopts);
  const auto features = feature_policy(opt.features);
  const auto want = [&](const char* name) {
    return metrics.empty() || metrics.count("all") || metrics.count(name);
  };

  fs::create_directories(opt.out);
  for (const std::int64_t t : parse_snapshots(opt)) {
    const std::string tag = cdnet::format_compact(t);
    log("analyzing snapshot " + cdnet::format_iso8601(t));

    const auto net = cdnet::package_network(
        index, t, cdnet::VersionPolicy::LatestPerPackage, features);
    const auto cdn = cdnet::build_cdn(
        index, t, store, cdnet::VersionPolicy::LatestPerPackage, nullptr,
        features);
    const cdnet::MetadataAnalysis meta(net);
    const cdnet::CallAnalysis call(cdn);
    const auto out = fs::path(opt.out);

    if (want("call-summary"))
      cdnet::write_atomic(out / ("call-summary-" + tag + ".tsv"),
                          cdnet::reports::call_summary_tsv(cdnet::call_summary(cdn)));
    if (want("degrees")) {
      cdnet::write_atomic(out / ("degrees-" + tag + ".tsv"),
                          cdnet::reports::degrees_tsv(cdn));
      cdnet::write_atomic(out / ("degree-stats-" + tag + ".tsv"),
                          cdnet::reports::degree_stats_tsv(cdn));
    }
    if (want("deps"))
      cdnet::write_atomic(out / ("deps-" + tag + ".tsv"),
                          cdnet::reports::deps_tsv(meta, call));
    if (want("dependents"))
      cdnet::write_atomic(out / ("dependents-" + tag + ".tsv"),
                          cdnet::reports::dependents_tsv(meta, call));
    if (want("api-calls"))
      cdnet::write_atomic(out / ("api-calls-" + tag + ".tsv"),
                          cdnet::reports::api_calls_tsv(call));
    if (want("bloat"))
      cdnet::write_atomic(out / ("bloat-" + tag + ".tsv"),
                          cdnet::reports::bloat_tsv(cdn, store));
    if (want("reach")) {
      cdnet::write_atomic(out / ("reach-" + tag + ".tsv"),
                          cdnet::reports::reach_tsv(meta, call));
      cdnet::write_atomic(out / ("reach-functions-" + tag + ".tsv"),
                          cdnet::reports::function_reach_tsv(cdn, call));
    }
    if (want("compare")) {
      cdnet::write_atomic(out / ("compare-" + tag + ".tsv"),
                          cdnet::reports::compare_tsv(meta, call));
      cdnet::write_atomic(out / ("compare-pairs-" + tag + ".tsv"),
                          cdnet::reports::compare_pairs_tsv(meta, call));
    }
    cdnet::write_atomic(
        out / ("summary-" + tag + ".json"),
        cdnet::reports::summary_json(t, cdnet::call_summary(cdn), meta, call)
                .dump(2) +
            "\n");
  }
  return 0;
}

int cmd_diff(const CommonOptions& opt, const std::string& t1_text,
             const std::string& t2_text) {
  const cdnet::Index index =
      cdnet::load_index_files(opt.index_path, opt.timestamps_path);
  const std::int64_t t1 = cdnet::parse_iso8601(t1_text);
  const std::int64_t t2 = cdnet::parse_iso8601(t2_text);

  const cdnet::Index valid = cdnet::snapshot_index(index);
  const cdnet::Index mirror1 = cdnet::mirror_at(valid, t1);
  const cdnet::Index mirror2 = cdnet::mirror_at(valid, t2);

  std::vector<cdnet::reports::DiffRow> rows;
  for (const cdnet::Release* root : cdnet::snapshot_roots(mirror1)) {
    if (cdnet::runtime_deps(*root, cdnet::default_features()).empty()) continue;
    cdnet::reports::DiffRow row;
    row.package = root->name;
    row.version = root->version;
    try {
      const auto base =
          cdnet::resolve_tree(mirror1, *root, t1, cdnet::default_features());
      try {
        const auto later =
            cdnet::resolve_tree(mirror2, *root, t2, cdnet::default_features());
        const auto diff = cdnet::tree_changed(base, later);
        row.changed = diff.changed;
        row.detail = cdnet::reports::diff_detail(diff);
      } catch (const cdnet::ResolveError& e) {
        row.changed = true;
        row.detail = std::string("unresolvable at t2: ") + e.what();
      }
    } catch (const cdnet::ResolveError&) {
      continue;  // not part of the baseline population
    }
    rows.push_back(std::move(row));
  }

  fs::create_directories(opt.out);
  cdnet::write_atomic(fs::path(opt.out) /
                          ("diff-" + cdnet::format_compact(t1) + "-" +
                           cdnet::format_compact(t2) + ".tsv"),
                      cdnet::reports::diff_tsv(rows));
  std::size_t changed = 0;
  for (const auto& r : rows) changed += r.changed ? 1 : 0;
  log("diff: " + std::to_string(changed) + " of " + std::to_string(rows.size()) +
      " roots changed");
  return 0;
}

struct SynthOptions {
  cdnet::synth::SynthSpec spec;
  std::string out;
};

int cmd_synth(const SynthOptions& opt) {
  const auto fx = cdnet::synth::generate(opt.spec);
  const fs::path out(opt.out);
  fs::create_directories(out / "cg-store");
  cdnet::write_atomic(out / "index.jsonl", fx.index_file);
  cdnet::write_atomic(out / "timestamps.csv", fx.timestamps_file);
  for (const auto& [name, content] : fx.graph_files)
    cdnet::write_atomic(out / "cg-store" / name, content);
  log("fixture: " + std::to_string(fx.index.release_count()) + " releases, " +
      std::to_string(fx.graph_files.size()) + " call graphs, span " +
      cdnet::format_iso8601(fx.first_release_at) + " .. " +
      cdnet::format_iso8601(fx.last_release_at));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"call-based dependency network builder and analyzer"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::set<std::string> metrics;
  std::string t1, t2;
  SynthOptions synth_opt;

  auto* validate = app.add_subcommand("validate", "check index consistency");
  add_input_options(validate, opt, false);
  validate->add_option("--out", opt.out, "output directory")->required();
  validate->add_flag("--strict", opt.strict,
                     "exit nonzero when violations are found");

  auto* build = app.add_subcommand("build", "emit PDN and CDN snapshot files");
  add_input_options(build, opt, true);
  build->add_option("--at", opt.at, "snapshot timestamp (repeatable, ISO-8601)");
  build->add_option("--at-start", opt.at_start, "first snapshot of a series");
  build->add_option("--at-step", opt.at_step, "series step (e.g. 30d, 1w, 3600s)");
  build->add_option("--at-count", opt.at_count, "number of snapshots in the series");
  build->add_option("--out", opt.out, "output directory")->required();
  build->add_option("--features", opt.features,
                    "root feature policy: default | none | name,name,...");
  build->add_option("--registry", opt.registry, "registry qualifier for ids");

  auto* analyze = app.add_subcommand("analyze", "run metric reports");
  add_input_options(analyze, opt, true);
  analyze->add_option("--at", opt.at, "snapshot timestamp (repeatable)");
  analyze->add_option("--at-start", opt.at_start, "first snapshot of a series");
  analyze->add_option("--at-step", opt.at_step, "series step (e.g. 30d, 1w, 3600s)");
  analyze->add_option("--at-count", opt.at_count, "number of snapshots in the series");
  analyze->add_option("--out", opt.out, "output directory")->required();
  analyze
      ->add_option("--metrics", metrics,
                   "subset of: call-summary degrees deps dependents "
                   "api-calls bloat reach compare (default: all)")
      ->delimiter(',');
  analyze->add_option("--features", opt.features, "root feature policy");
  analyze->add_option("--registry", opt.registry, "registry qualifier for ids");

  auto* diff = app.add_subcommand("diff", "changed-tree report between two times");
  add_input_options(diff, opt, false);
  diff->add_option("--t1", t1, "baseline timestamp (ISO-8601)")->required();
  diff->add_option("--t2", t2, "comparison timestamp (ISO-8601)")->required();
  diff->add_option("--out", opt.out, "output directory")->required();

  auto* synth = app.add_subcommand("synth", "write a synthetic fixture");
  synth->add_option("--out", synth_opt.out, "output directory")->required();
  synth->add_option("--packages", synth_opt.spec.packages, "package count");
  synth->add_option("--min-versions", synth_opt.spec.min_versions, "");
  synth->add_option("--max-versions", synth_opt.spec.max_versions, "");
  synth->add_option("--min-fanout", synth_opt.spec.min_fanout, "");
  synth->add_option("--max-fanout", synth_opt.spec.max_fanout, "");
  synth->add_option("--min-functions", synth_opt.spec.min_functions, "");
  synth->add_option("--max-functions", synth_opt.spec.max_functions, "");
  synth->add_option("--dynamic-prob", synth_opt.spec.dynamic_constraint_prob,
                    "probability of a dynamic requirement");
  synth->add_option("--edge-density", synth_opt.spec.edge_density,
                    "call edges per function");
  synth->add_option("--yank-prob", synth_opt.spec.yank_prob, "");
  synth->add_option("--seed", synth_opt.spec.seed, "fixture seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(opt);
    if (build->parsed()) return cmd_build(opt);
    if (analyze->parsed()) return cmd_analyze(opt, metrics);
    if (diff->parsed()) return cmd_diff(opt, t1, t2);
    if (synth->parsed()) return cmd_synth(synth_opt);
  } catch (const cdnet::ParseError& e) {
    std::cerr << "[cdnet] error: " << e.what() << "\n";
    return kExitParse;
  } catch (const cdnet::ConflictError& e) {
    std::cerr << "[cdnet] error: " << e.what() << "\n";
    return kExitParse;
  } catch (const cdnet::IoError& e) {
    std::cerr << "[cdnet] error: " << e.what() << "\n";
    return kExitParse;
  } catch (const cdnet::ResolveError& e) {
    std::cerr << "[cdnet] error: " << e.what() << "\n";
    return kExitUnresolvable;
  } catch (const cdnet::UnifyError& e) {
    std::cerr << "[cdnet] error: " << e.what() << "\n";
    return kExitUnresolvable;
  } catch (const cdnet::AnnotationError& e) {
    std::cerr << "[cdnet] error: " << e.what() << "\n";
    return kExitUnresolvable;
  } catch (const std::exception& e) {
    std::cerr << "[cdnet] error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
