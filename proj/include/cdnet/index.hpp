// cdnet/index.hpp -- package-registry index: releases, dependency
// specifications, validation, and time slicing.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cdnet/errors.hpp"
#include "cdnet/semver.hpp"
#include "cdnet/timeutil.hpp"

namespace cdnet {

enum class DepKind { Normal, Dev, Build };

inline std::string_view to_string(DepKind k) {
  switch (k) {
    case DepKind::Normal: return "normal";
    case DepKind::Dev: return "dev";
    case DepKind::Build: return "build";
  }
  return "normal";
}

inline DepKind dep_kind_from(std::string_view s) {
  if (s == "normal") return DepKind::Normal;
  if (s == "dev") return DepKind::Dev;
  if (s == "build") return DepKind::Build;
  throw ParseError("unknown dependency kind '" + std::string(s) + "'");
}

struct DependencySpec {
  std::string target;
  DependencyConstraint constraint;
  DepKind kind = DepKind::Normal;
  bool optional = false;
  std::vector<std::string> enabled_by;     // owner features enabling this dep
  std::optional<std::string> platform;     // platform-specific target, if any
};

struct Release {
  std::string name;
  SemVer version;
  std::int64_t created_at = 0;
  std::vector<DependencySpec> deps;
  bool yanked = false;
};

struct PackageVersion {
  std::string package;
  SemVer version;

  std::string text() const { return package + " " + version.text(); }

  friend bool operator==(const PackageVersion& a, const PackageVersion& b) {
    return a.package == b.package && compare(a.version, b.version) == 0;
  }
  friend bool operator!=(const PackageVersion& a, const PackageVersion& b) {
    return !(a == b);
  }
  friend bool operator<(const PackageVersion& a, const PackageVersion& b) {
    if (a.package != b.package) return a.package < b.package;
    return compare(a.version, b.version) < 0;
  }
};

// Immutable after load; safe for unrestricted concurrent reads.
class Index {
public:
  // Throws ConflictError on duplicate (name, version); precedence-equal
  // versions (differing only in build metadata) count as duplicates.
  void add(Release r) {
    auto& releases = packages_[r.name];
    auto pos = std::lower_bound(releases.begin(), releases.end(), r,
                                [](const Release& a, const Release& b) {
                                  return a.version < b.version;
                                });
    if (pos != releases.end() && pos->version == r.version)
      throw ConflictError("duplicate release " + r.name + " " +
                          r.version.text());
    releases.insert(pos, std::move(r));
  }

  const std::vector<Release>* find(const std::string& name) const {
    const auto it = packages_.find(name);
    return it == packages_.end() ? nullptr : &it->second;
  }

  const Release* find(const std::string& name, const SemVer& v) const {
    const auto* releases = find(name);
    if (!releases) return nullptr;
    for (const auto& r : *releases)
      if (r.version == v) return &r;
    return nullptr;
  }

  const std::map<std::string, std::vector<Release>>& packages() const {
    return packages_;
  }

  std::size_t package_count() const { return packages_.size(); }

  std::size_t release_count() const {
    std::size_t n = 0;
    for (const auto& [_, releases] : packages_) n += releases.size();
    return n;
  }

  bool empty() const { return packages_.empty(); }

  Index filtered(const std::function<bool(const Release&)>& keep) const {
    Index out;
    for (const auto& [name, releases] : packages_) {
      std::vector<Release> kept;
      for (const auto& r : releases)
        if (keep(r)) kept.push_back(r);
      if (!kept.empty()) out.packages_[name] = std::move(kept);
    }
    return out;
  }

  // Releases dropped by load_index because no timestamp row was present.
  std::size_t rejected_missing_timestamp = 0;

private:
  std::map<std::string, std::vector<Release>> packages_;
};

// ---------------------------------------------------------------------------
// Loading

namespace detail {

inline DependencySpec dep_from_json(const nlohmann::json& j, std::size_t line_no) {
  const auto fail = [&](const std::string& why) -> ParseError {
    return ParseError("index line " + std::to_string(line_no) + ": " + why);
  };
  if (!j.is_object()) throw fail("dependency entry is not an object");
  DependencySpec d;
  if (!j.contains("name") || !j["name"].is_string())
    throw fail("dependency missing string field 'name'");
  d.target = j["name"].get<std::string>();
  try {
    d.constraint = parse_constraint(j.value("req", std::string()));
  } catch (const ParseError& e) {
    throw fail(e.what());
  }
  d.kind = dep_kind_from(j.value("kind", std::string("normal")));
  d.optional = j.value("optional", false);
  if (j.contains("features")) {
    if (!j["features"].is_array()) throw fail("'features' is not an array");
    for (const auto& f : j["features"]) {
      if (!f.is_string()) throw fail("feature name is not a string");
      d.enabled_by.push_back(f.get<std::string>());
    }
  }
  if (j.contains("target") && !j["target"].is_null()) {
    if (!j["target"].is_string()) throw fail("'target' is not a string");
    d.platform = j["target"].get<std::string>();
  }
  return d;
}

}  // namespace detail

// Line-delimited index: one JSON release record per line, '#' lines ignored.
// Timestamp rows: name,version,ISO-8601. Releases without a timestamp row
// are rejected (omitted from the returned Index).
inline Index load_index(std::istream& index_src, std::istream& ts_src) {
  // Pass 1: timestamps.
  std::map<std::string, std::int64_t> stamps;  // "name vers" -> epoch
  {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ts_src, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      const std::size_t c1 = line.find(',');
      const std::size_t c2 = c1 == std::string::npos ? std::string::npos
                                                     : line.find(',', c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos)
        throw ParseError("timestamps line " + std::to_string(line_no) +
                         ": expected name,version,timestamp");
      const std::string name = line.substr(0, c1);
      const std::string vers = line.substr(c1 + 1, c2 - c1 - 1);
      std::int64_t t;
      try {
        t = parse_iso8601(std::string_view(line).substr(c2 + 1));
      } catch (const ParseError& e) {
        throw ParseError("timestamps line " + std::to_string(line_no) + ": " +
                         e.what());
      }
      stamps[name + " " + vers] = t;
    }
  }

  // Pass 2: releases.
  Index index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(index_src, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("index line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto fail = [&](const std::string& why) -> ParseError {
      return ParseError("index line " + std::to_string(line_no) + ": " + why);
    };
    if (!j.is_object()) throw fail("record is not an object");
    if (!j.contains("name") || !j["name"].is_string())
      throw fail("missing string field 'name'");
    if (!j.contains("vers") || !j["vers"].is_string())
      throw fail("missing string field 'vers'");

    Release r;
    r.name = j["name"].get<std::string>();
    const std::string vers = j["vers"].get<std::string>();
    try {
      r.version = parse_version(vers);
    } catch (const ParseError& e) {
      throw fail(e.what());
    }
    if (j.contains("deps")) {
      if (!j["deps"].is_array()) throw fail("'deps' is not an array");
      for (const auto& d : j["deps"])
        r.deps.push_back(detail::dep_from_json(d, line_no));
    }
    r.yanked = j.value("yanked", false);

    const auto ts = stamps.find(r.name + " " + vers);
    if (ts == stamps.end()) {
      // Also try the canonical version text, in case the index spells the
      // version differently from the timestamp file.
      const auto ts2 = stamps.find(r.name + " " + r.version.text());
      if (ts2 == stamps.end()) {
        ++index.rejected_missing_timestamp;
        continue;
      }
      r.created_at = ts2->second;
    } else {
      r.created_at = ts->second;
    }
    index.add(std::move(r));  // throws ConflictError on duplicates
  }
  return index;
}

inline Index load_index_files(const std::string& index_path,
                              const std::string& ts_path) {
  std::ifstream idx(index_path);
  if (!idx) throw IoError("cannot open index file: " + index_path);
  std::ifstream ts(ts_path);
  if (!ts) throw IoError("cannot open timestamp file: " + ts_path);
  return load_index(idx, ts);
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationIssue {
  enum class Reason { UnknownPackage, Unsolvable };
  std::string package;
  SemVer version;
  std::string dep;
  std::string constraint;
  DepKind kind = DepKind::Normal;
  Reason reason = Reason::UnknownPackage;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool clean() const { return issues.empty(); }

  std::set<PackageVersion> flagged_releases() const {
    std::set<PackageVersion> out;
    for (const auto& i : issues) out.insert({i.package, i.version});
    return out;
  }
};

// Total: every release is checked for dependencies naming unknown packages
// and for constraints no non-yanked version can ever satisfy.
inline ValidationReport validate(const Index& index) {
  ValidationReport report;
  for (const auto& [name, releases] : index.packages()) {
    for (const auto& r : releases) {
      for (const auto& d : r.deps) {
        const auto* targets = index.find(d.target);
        if (!targets) {
          report.issues.push_back({name, r.version, d.target,
                                   d.constraint.text(), d.kind,
                                   ValidationIssue::Reason::UnknownPackage});
          continue;
        }
        const bool solvable =
            std::any_of(targets->begin(), targets->end(), [&](const Release& c) {
              return !c.yanked && d.constraint.matches(c.version);
            });
        if (!solvable)
          report.issues.push_back({name, r.version, d.target,
                                   d.constraint.text(), d.kind,
                                   ValidationIssue::Reason::Unsolvable});
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Time slicing and runtime dependencies

// Exactly the releases created at or before t; packages left empty are
// dropped. Yanked releases are retained (they are filtered at resolution).
inline Index mirror_at(const Index& index, std::int64_t t) {
  Index out = index.filtered(
      [t](const Release& r) { return r.created_at <= t; });
  out.rejected_missing_timestamp = 0;
  return out;
}

inline const std::set<std::string>& default_features() {
  static const std::set<std::string> kDefault = {"default"};
  return kDefault;
}

// Normal-kind dependencies (platform-specific ones included) plus optional
// dependencies whose enabling feature is active. Dev and build kinds are
// never returned. Enabling a feature the release never declares is an error;
// "default" is implicitly declared by every release.
inline std::vector<DependencySpec> runtime_deps(
    const Release& release, const std::set<std::string>& enabled_features) {
  std::set<std::string> declared = {"default"};
  for (const auto& d : release.deps)
    for (const auto& f : d.enabled_by) declared.insert(f);
  for (const auto& f : enabled_features)
    if (!declared.count(f)) throw FeatureError(f);

  std::vector<DependencySpec> out;
  for (const auto& d : release.deps) {
    if (d.kind != DepKind::Normal) continue;
    if (d.optional) {
      const bool enabled = std::any_of(
          d.enabled_by.begin(), d.enabled_by.end(),
          [&](const std::string& f) { return enabled_features.count(f) > 0; });
      if (!enabled) continue;
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace cdnet
