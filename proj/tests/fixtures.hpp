// Shared scenario fixtures for the unit and acceptance suites.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdnet/index.hpp"
#include "cdnet/unify.hpp"

namespace fixtures {

std::int64_t ts(const std::string& iso);

struct DepInit {
  std::string target;
  std::string req;
  std::string kind = "normal";
  bool optional = false;
  std::vector<std::string> enabled_by;
};

cdnet::Release make_release(const std::string& name, const std::string& version,
                            const std::string& created,
                            const std::vector<DepInit>& deps = {},
                            bool yanked = false);

// Declarative raw call-graph builder rendered through the documented JSON
// form and the production loader.
struct GraphInit {
  struct Fn {
    int id;
    std::string package;
    std::string path;
    std::string visibility = "public";
  };
  struct Edge {
    int caller;
    int callee;
    std::string dispatch = "static";
  };
  struct Iface {
    std::string package;
    std::string name;
    std::string method;
    int function;
  };
  struct Impl {
    std::string iface_package;
    std::string iface_name;
    std::string type_package;
    std::string type_name;
    std::string method;
    int function;
  };

  std::string package;
  std::string version;
  std::vector<Fn> fns;
  std::vector<Edge> edges;
  std::vector<Iface> interfaces;
  std::vector<Impl> impls;

  std::string json() const;
};

cdnet::PackageCallGraph annotate_graph(const GraphInit& g,
                                       const cdnet::Release& owner);

// The three-package application fixture: app -> lib1 -> lib2, where
// lib2::used has one inter-package caller and lib2::unused has none.
struct ChainFixture {
  cdnet::Index index;
  cdnet::MemoryStore store;      // full graphs
  cdnet::MemoryStore store_cut;  // without the bar -> used edge
  std::int64_t t = 0;
};
ChainFixture make_chain_fixture();

// Retroactive resolution fixture: a depends on b "1.*"; b 1.1 exists at t1
// and b 1.2 at t2.
struct RetroFixture {
  cdnet::Index index;
  std::int64_t t1 = 0;
  std::int64_t t2 = 0;
  std::int64_t mid = 0;   // t1 < mid < t2
  std::int64_t late = 0;  // > t2
};
RetroFixture make_retro_fixture();

// Duplicate-constraint fixtures: two packages constrain the same dependency.
// compatible=true uses ("0.4.*", "0.4.4"); otherwise ("0.4.*", "0.5.*").
struct DupConstraint {
  cdnet::Index index;
  cdnet::MemoryStore store;
  std::int64_t t = 0;
};
DupConstraint make_dup_constraint(bool compatible);

// Dynamic-dispatch linking fixture: c calls an interface method of ser
// dynamically; b implements it.
struct DynLink {
  cdnet::Index index;
  cdnet::MemoryStore store;         // with b's implementation record
  cdnet::MemoryStore store_noimpl;  // without it
  std::int64_t t = 0;
};
DynLink make_dynlink();

}  // namespace fixtures
