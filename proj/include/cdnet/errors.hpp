// cdnet/errors.hpp -- error types shared across the library.
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cdnet {

// Malformed text input (version strings, requirement strings, data files).
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Duplicate (package, version) while building an index.
class ConflictError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A feature name was enabled that the release never declares.
class FeatureError : public std::runtime_error {
public:
  explicit FeatureError(std::string feature)
      : std::runtime_error("unknown feature: " + feature),
        feature_(std::move(feature)) {}

  const std::string& feature() const { return feature_; }

private:
  std::string feature_;
};

// No version satisfies a constraint during dependency resolution.
class ResolveError : public std::runtime_error {
public:
  ResolveError(std::string package, std::string constraint,
               std::vector<std::string> path, const std::string& detail)
      : std::runtime_error(make_message(package, constraint, path, detail)),
        package_(std::move(package)),
        constraint_(std::move(constraint)),
        path_(std::move(path)) {}

  const std::string& package() const { return package_; }
  const std::string& constraint() const { return constraint_; }
  const std::vector<std::string>& path() const { return path_; }

private:
  static std::string make_message(const std::string& package,
                                  const std::string& constraint,
                                  const std::vector<std::string>& path,
                                  const std::string& detail) {
    std::string msg = "unresolvable dependency: " + package;
    if (!constraint.empty()) msg += " (" + constraint + ")";
    if (!detail.empty()) msg += ": " + detail;
    if (!path.empty()) {
      msg += " [path:";
      for (const auto& hop : path) msg += " " + hop;
      msg += "]";
    }
    return msg;
  }

  std::string package_;
  std::string constraint_;
  std::vector<std::string> path_;
};

// A call-graph identifier references a package that is neither the owner
// nor a declared dependency.
class AnnotationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Call-graph unification failed (missing or inconsistent inputs).
class UnifyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A metric was queried with invalid arguments (unknown node, bad series).
class MetricsError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Filesystem-level failure while reading or writing artifacts.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace cdnet
