// cdnet/semver.hpp -- semantic versions and requirement matching.
//
// Matching semantics are bit-compatible with the registry resolver's
// requirement grammar: exact (=), caret (^, also the default for bare
// versions), tilde (~), wildcard (*), comparators (>, >=, <, <=), and
// comma-separated conjunctions. Prerelease versions only match when a
// comparator names the same three-part version with a prerelease tag.
#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdnet/errors.hpp"

namespace cdnet {

// ---------------------------------------------------------------------------
// SemVer

struct SemVer {
  std::uint64_t major = 0;
  std::uint64_t minor = 0;
  std::uint64_t patch = 0;
  std::vector<std::string> prerelease;  // dot-separated identifiers
  std::string build;                    // ignored in precedence and equality

  bool is_prerelease() const { return !prerelease.empty(); }

  std::string text() const {
    std::string out = std::to_string(major) + "." + std::to_string(minor) +
                      "." + std::to_string(patch);
    if (!prerelease.empty()) {
      out += "-";
      for (std::size_t i = 0; i < prerelease.size(); ++i) {
        if (i) out += ".";
        out += prerelease[i];
      }
    }
    if (!build.empty()) out += "+" + build;
    return out;
  }
};

namespace detail {

inline bool is_numeric_identifier(std::string_view id) {
  return !id.empty() &&
         std::all_of(id.begin(), id.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

// Numeric identifiers compare numerically and rank below alphanumeric ones;
// alphanumeric identifiers compare byte-lexically.
inline int compare_prerelease_id(std::string_view a, std::string_view b) {
  const bool an = is_numeric_identifier(a);
  const bool bn = is_numeric_identifier(b);
  if (an && bn) {
    std::uint64_t av = 0, bv = 0;
    std::from_chars(a.data(), a.data() + a.size(), av);
    std::from_chars(b.data(), b.data() + b.size(), bv);
    return av < bv ? -1 : (av > bv ? 1 : 0);
  }
  if (an != bn) return an ? -1 : 1;
  return a < b ? -1 : (a > b ? 1 : 0);
}

}  // namespace detail

// A release (empty set) ranks above any prerelease of the same version.
inline int compare_prerelease(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 0;
  if (a.empty()) return 1;
  if (b.empty()) return -1;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = detail::compare_prerelease_id(a[i], b[i]); c != 0) return c;
  }
  if (a.size() == b.size()) return 0;
  return a.size() < b.size() ? -1 : 1;
}

// Precedence: strict total order on versions, build metadata ignored.
inline int compare(const SemVer& a, const SemVer& b) {
  if (a.major != b.major) return a.major < b.major ? -1 : 1;
  if (a.minor != b.minor) return a.minor < b.minor ? -1 : 1;
  if (a.patch != b.patch) return a.patch < b.patch ? -1 : 1;
  return compare_prerelease(a.prerelease, b.prerelease);
}

inline bool operator<(const SemVer& a, const SemVer& b) { return compare(a, b) < 0; }
inline bool operator>(const SemVer& a, const SemVer& b) { return compare(a, b) > 0; }
inline bool operator<=(const SemVer& a, const SemVer& b) { return compare(a, b) <= 0; }
inline bool operator>=(const SemVer& a, const SemVer& b) { return compare(a, b) >= 0; }
inline bool operator==(const SemVer& a, const SemVer& b) { return compare(a, b) == 0; }
inline bool operator!=(const SemVer& a, const SemVer& b) { return compare(a, b) != 0; }

namespace detail {

inline std::uint64_t parse_numeric_part(std::string_view part,
                                        std::string_view whole) {
  if (part.empty())
    throw ParseError("invalid version '" + std::string(whole) +
                     "': empty numeric component");
  if (!is_numeric_identifier(part))
    throw ParseError("invalid version '" + std::string(whole) +
                     "': non-numeric component '" + std::string(part) + "'");
  if (part.size() > 1 && part.front() == '0')
    throw ParseError("invalid version '" + std::string(whole) +
                     "': leading zero in '" + std::string(part) + "'");
  std::uint64_t value = 0;
  const auto res = std::from_chars(part.data(), part.data() + part.size(), value);
  if (res.ec != std::errc() || res.ptr != part.data() + part.size())
    throw ParseError("invalid version '" + std::string(whole) +
                     "': component out of range");
  return value;
}

inline bool valid_identifier_chars(std::string_view id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) != 0 || c == '-';
  });
}

inline std::vector<std::string> parse_prerelease(std::string_view pre,
                                                 std::string_view whole) {
  std::vector<std::string> ids;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = pre.find('.', start);
    std::string_view id = pre.substr(start, dot == std::string_view::npos
                                                ? std::string_view::npos
                                                : dot - start);
    if (!valid_identifier_chars(id))
      throw ParseError("invalid version '" + std::string(whole) +
                       "': bad prerelease identifier");
    if (is_numeric_identifier(id) && id.size() > 1 && id.front() == '0')
      throw ParseError("invalid version '" + std::string(whole) +
                       "': leading zero in prerelease identifier");
    ids.emplace_back(id);
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return ids;
}

}  // namespace detail

// Strict three-part version: MAJOR.MINOR.PATCH[-pre][+build].
inline SemVer parse_version(std::string_view text) {
  const std::string_view whole = text;
  SemVer v;

  std::string_view core = text;
  if (const std::size_t plus = core.find('+'); plus != std::string_view::npos) {
    v.build = std::string(core.substr(plus + 1));
    if (v.build.empty())
      throw ParseError("invalid version '" + std::string(whole) +
                       "': empty build metadata");
    core = core.substr(0, plus);
  }
  if (const std::size_t dash = core.find('-'); dash != std::string_view::npos) {
    v.prerelease = detail::parse_prerelease(core.substr(dash + 1), whole);
    core = core.substr(0, dash);
  }

  const std::size_t d1 = core.find('.');
  if (d1 == std::string_view::npos)
    throw ParseError("invalid version '" + std::string(whole) +
                     "': expected MAJOR.MINOR.PATCH");
  const std::size_t d2 = core.find('.', d1 + 1);
  if (d2 == std::string_view::npos)
    throw ParseError("invalid version '" + std::string(whole) +
                     "': expected MAJOR.MINOR.PATCH");
  if (core.find('.', d2 + 1) != std::string_view::npos)
    throw ParseError("invalid version '" + std::string(whole) +
                     "': too many components");

  v.major = detail::parse_numeric_part(core.substr(0, d1), whole);
  v.minor = detail::parse_numeric_part(core.substr(d1 + 1, d2 - d1 - 1), whole);
  v.patch = detail::parse_numeric_part(core.substr(d2 + 1), whole);
  return v;
}

// ---------------------------------------------------------------------------
// Requirements

enum class CompOp { Exact, Greater, GreaterEq, Less, LessEq, Tilde, Caret, Wildcard };

// One comparator in a requirement. Minor/patch may be unspecified
// (partial operand, e.g. "^1.2" or ">=1"); Wildcard additionally allows an
// unspecified major ("*").
struct Comparator {
  CompOp op = CompOp::Caret;
  std::optional<std::uint64_t> major;
  std::optional<std::uint64_t> minor;
  std::optional<std::uint64_t> patch;
  std::vector<std::string> prerelease;

  bool matches(const SemVer& v) const {
    switch (op) {
      case CompOp::Exact:
      case CompOp::Wildcard:
        return matches_exact(v);
      case CompOp::Greater:
        return matches_greater(v);
      case CompOp::GreaterEq:
        return matches_exact(v) || matches_greater(v);
      case CompOp::Less:
        return matches_less(v);
      case CompOp::LessEq:
        return matches_exact(v) || matches_less(v);
      case CompOp::Tilde:
        return matches_tilde(v);
      case CompOp::Caret:
        return matches_caret(v);
    }
    return false;
  }

  std::string text() const {
    std::string out;
    switch (op) {
      case CompOp::Exact: out = "="; break;
      case CompOp::Greater: out = ">"; break;
      case CompOp::GreaterEq: out = ">="; break;
      case CompOp::Less: out = "<"; break;
      case CompOp::LessEq: out = "<="; break;
      case CompOp::Tilde: out = "~"; break;
      case CompOp::Caret: out = "^"; break;
      case CompOp::Wildcard: out = ""; break;
    }
    const auto part = [](const std::optional<std::uint64_t>& p) {
      return p ? std::to_string(*p) : std::string("*");
    };
    if (op == CompOp::Wildcard) {
      if (!major) return out + "*";
      out += std::to_string(*major) + "." + part(minor);
      if (minor && !patch) out += ".*";
      return out;
    }
    out += std::to_string(major.value_or(0));
    if (minor) {
      out += "." + std::to_string(*minor);
      if (patch) out += "." + std::to_string(*patch);
    }
    if (!prerelease.empty()) {
      out += "-";
      for (std::size_t i = 0; i < prerelease.size(); ++i) {
        if (i) out += ".";
        out += prerelease[i];
      }
    }
    return out;
  }

  friend bool operator==(const Comparator& a, const Comparator& b) {
    return a.op == b.op && a.major == b.major && a.minor == b.minor &&
           a.patch == b.patch && a.prerelease == b.prerelease;
  }

private:
  bool matches_exact(const SemVer& v) const {
    if (major && v.major != *major) return false;
    if (minor && v.minor != *minor) return false;
    if (patch && v.patch != *patch) return false;
    return compare_prerelease(v.prerelease, prerelease) == 0;
  }

  bool matches_greater(const SemVer& v) const {
    if (!major) return false;
    if (v.major != *major) return v.major > *major;
    if (!minor) return false;
    if (v.minor != *minor) return v.minor > *minor;
    if (!patch) return false;
    if (v.patch != *patch) return v.patch > *patch;
    return compare_prerelease(v.prerelease, prerelease) > 0;
  }

  bool matches_less(const SemVer& v) const {
    if (!major) return false;
    if (v.major != *major) return v.major < *major;
    if (!minor) return false;
    if (v.minor != *minor) return v.minor < *minor;
    if (!patch) return false;
    if (v.patch != *patch) return v.patch < *patch;
    return compare_prerelease(v.prerelease, prerelease) < 0;
  }

  bool matches_tilde(const SemVer& v) const {
    if (!major || v.major != *major) return false;
    if (minor && v.minor != *minor) return false;
    if (patch && v.patch != *patch) return v.patch > *patch;
    return compare_prerelease(v.prerelease, prerelease) >= 0;
  }

  bool matches_caret(const SemVer& v) const {
    if (!major || v.major != *major) return false;
    if (!minor) return true;
    if (!patch) {
      // ^I.J -- minor floats when major > 0, is pinned when major == 0.
      if (*major > 0) return v.minor >= *minor;
      return v.minor == *minor;
    }
    if (*major > 0) {
      if (v.minor != *minor) return v.minor > *minor;
      if (v.patch != *patch) return v.patch > *patch;
    } else if (*minor > 0) {
      if (v.minor != *minor) return false;
      if (v.patch != *patch) return v.patch > *patch;
    } else if (v.minor != *minor || v.patch != *patch) {
      // ^0.0.X pins the exact patch.
      return false;
    }
    return compare_prerelease(v.prerelease, prerelease) >= 0;
  }
};

// Conjunction of comparators. An empty comparator list is the bare "*"
// requirement and matches every non-prerelease version.
struct DependencyConstraint {
  std::vector<Comparator> comparators;
  std::string source;  // text as written; canonical form via text()

  bool matches(const SemVer& v) const {
    for (const auto& c : comparators)
      if (!c.matches(v)) return false;
    if (v.prerelease.empty()) return true;
    // Prerelease gate: some comparator must name the same triple with a
    // prerelease tag of its own.
    for (const auto& c : comparators) {
      if (!c.prerelease.empty() && c.major && *c.major == v.major &&
          c.minor && *c.minor == v.minor && c.patch && *c.patch == v.patch)
        return true;
    }
    return false;
  }

  // The single version denoted by a full "=MAJOR.MINOR.PATCH" pin, if this
  // requirement is one. Anything else is a dynamic requirement.
  std::optional<SemVer> pinned() const {
    if (comparators.size() != 1) return std::nullopt;
    const Comparator& c = comparators.front();
    if (c.op != CompOp::Exact || !c.major || !c.minor || !c.patch)
      return std::nullopt;
    SemVer v;
    v.major = *c.major;
    v.minor = *c.minor;
    v.patch = *c.patch;
    v.prerelease = c.prerelease;
    return v;
  }

  std::string text() const {
    if (comparators.empty()) return "*";
    std::string out;
    for (std::size_t i = 0; i < comparators.size(); ++i) {
      if (i) out += ", ";
      out += comparators[i].text();
    }
    return out;
  }

  friend bool operator==(const DependencyConstraint& a,
                         const DependencyConstraint& b) {
    return a.comparators == b.comparators;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool is_wildcard_component(std::string_view p) {
  return p == "*" || p == "x" || p == "X";
}

inline Comparator parse_comparator(std::string_view token, std::string_view whole) {
  Comparator c;
  bool explicit_op = true;
  if (token.starts_with(">=")) { c.op = CompOp::GreaterEq; token.remove_prefix(2); }
  else if (token.starts_with("<=")) { c.op = CompOp::LessEq; token.remove_prefix(2); }
  else if (token.starts_with(">")) { c.op = CompOp::Greater; token.remove_prefix(1); }
  else if (token.starts_with("<")) { c.op = CompOp::Less; token.remove_prefix(1); }
  else if (token.starts_with("=")) { c.op = CompOp::Exact; token.remove_prefix(1); }
  else if (token.starts_with("~")) { c.op = CompOp::Tilde; token.remove_prefix(1); }
  else if (token.starts_with("^")) { c.op = CompOp::Caret; token.remove_prefix(1); }
  else { c.op = CompOp::Caret; explicit_op = false; }  // bare version defaults to caret
  token = trim(token);
  if (token.empty())
    throw ParseError("invalid requirement '" + std::string(whole) +
                     "': missing version after operator");

  std::string_view core = token;
  if (const std::size_t plus = core.find('+'); plus != std::string_view::npos)
    core = core.substr(0, plus);  // build metadata ignored everywhere
  std::string_view pre;
  // A '-' inside the last numeric component starts the prerelease tag; a '-'
  // can also appear inside prerelease identifiers, so split on the first one
  // that follows a digit-or-wildcard component boundary.
  if (const std::size_t dash = core.find('-'); dash != std::string_view::npos) {
    pre = core.substr(dash + 1);
    core = core.substr(0, dash);
  }

  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = core.find('.', start);
    parts.push_back(core.substr(start, dot == std::string_view::npos
                                           ? std::string_view::npos
                                           : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (parts.empty() || parts.size() > 3)
    throw ParseError("invalid requirement '" + std::string(whole) +
                     "': expected 1 to 3 version components");

  bool saw_wildcard = false;
  std::optional<std::uint64_t> values[3];
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (is_wildcard_component(parts[i])) {
      if (i == 0 && parts.size() > 1)
        throw ParseError("invalid requirement '" + std::string(whole) +
                         "': components after a leading wildcard");
      saw_wildcard = true;
      continue;
    }
    if (saw_wildcard)
      throw ParseError("invalid requirement '" + std::string(whole) +
                       "': concrete component after wildcard");
    values[i] = parse_numeric_part(parts[i], whole);
  }

  if (saw_wildcard) {
    if (explicit_op)
      throw ParseError("invalid requirement '" + std::string(whole) +
                       "': wildcard cannot follow an operator");
    if (!pre.empty())
      throw ParseError("invalid requirement '" + std::string(whole) +
                       "': wildcard with prerelease tag");
    c.op = CompOp::Wildcard;
  }

  c.major = values[0];
  c.minor = values[1];
  c.patch = values[2];
  if (!pre.empty()) c.prerelease = parse_prerelease(pre, whole);
  return c;
}

}  // namespace detail

// Requirement text -> constraint. The empty requirement is the documented
// default "^0" (any version below 1.0.0); "*" matches everything.
inline DependencyConstraint parse_constraint(std::string_view text) {
  DependencyConstraint out;
  out.source = std::string(detail::trim(text));
  if (out.source.empty()) {
    Comparator c;
    c.op = CompOp::Caret;
    c.major = 0;
    out.comparators.push_back(c);
    return out;
  }
  if (out.source == "*") return out;  // empty comparator list

  std::string_view rest = out.source;
  while (true) {
    const std::size_t comma = rest.find(',');
    std::string_view token = detail::trim(
        rest.substr(0, comma == std::string_view::npos ? std::string_view::npos
                                                       : comma));
    if (token.empty())
      throw ParseError("invalid requirement '" + out.source +
                       "': empty comparator");
    out.comparators.push_back(detail::parse_comparator(token, out.source));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

inline bool matches(const DependencyConstraint& c, const SemVer& v) {
  return c.matches(v);
}

// ---------------------------------------------------------------------------
// Compatibility classes and time-aware selection

// Versions a caret requirement treats as interchangeable: same major; same
// major.minor when major is 0; the exact patch when major.minor is 0.0.
struct CompatClass {
  std::uint64_t major = 0;
  std::int64_t minor = -1;  // -1: not part of the key
  std::int64_t patch = -1;

  friend bool operator==(const CompatClass&, const CompatClass&) = default;
  friend auto operator<=>(const CompatClass&, const CompatClass&) = default;

  std::string text() const {
    std::string out = std::to_string(major);
    if (minor >= 0) out += "." + std::to_string(minor);
    if (patch >= 0) out += "." + std::to_string(patch);
    return out;
  }
};

inline CompatClass compat_class(const SemVer& v) {
  CompatClass c;
  c.major = v.major;
  if (v.major == 0) {
    c.minor = static_cast<std::int64_t>(v.minor);
    if (v.minor == 0) c.patch = static_cast<std::int64_t>(v.patch);
  }
  return c;
}

struct Candidate {
  SemVer version;
  std::int64_t created_at = 0;  // seconds since epoch, UTC
  bool yanked = false;
};

// Highest-precedence non-yanked version created at or before t that satisfies
// the constraint. Absence is a legal result.
inline std::optional<SemVer> latest_matching(std::span<const Candidate> candidates,
                                             const DependencyConstraint& constraint,
                                             std::int64_t t) {
  std::optional<SemVer> best;
  for (const auto& cand : candidates) {
    if (cand.yanked || cand.created_at > t) continue;
    if (!constraint.matches(cand.version)) continue;
    if (!best || cand.version > *best) best = cand.version;
  }
  return best;
}

}  // namespace cdnet
