// cdnet/unify.hpp -- temporal network generation: merge per-package call
// graphs along resolved trees, link dynamic dispatch across packages, and
// fuse everything into one CDN.
#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cdnet/callgraph.hpp"
#include "cdnet/errors.hpp"
#include "cdnet/index.hpp"
#include "cdnet/resolver.hpp"

namespace cdnet {

// Source of annotated call graphs, one per (package, version).
class CallGraphStore {
public:
  virtual ~CallGraphStore() = default;
  // nullptr when no call graph is available for the release.
  virtual const PackageCallGraph* find(const PackageVersion& pv) const = 0;
};

class MemoryStore : public CallGraphStore {
public:
  void put(PackageCallGraph g) {
    const PackageVersion key = g.owner;
    graphs_[key] = std::move(g);
  }

  const PackageCallGraph* find(const PackageVersion& pv) const override {
    const auto it = graphs_.find(pv);
    return it == graphs_.end() ? nullptr : &it->second;
  }

private:
  std::map<PackageVersion, PackageCallGraph> graphs_;
};

// Loads raw graphs from `<dir>/<package>-<version>.cg.json` lazily and
// annotates them against the owning release's dependency list.
class DirectoryStore : public CallGraphStore {
public:
  DirectoryStore(std::string dir, const Index* index, AnnotateOptions options = {})
      : dir_(std::move(dir)), index_(index), options_(std::move(options)) {}

  static std::string file_name(const PackageVersion& pv) {
    return pv.package + "-" + pv.version.text() + ".cg.json";
  }

  const PackageCallGraph* find(const PackageVersion& pv) const override {
    if (const auto it = cache_.find(pv); it != cache_.end())
      return it->second ? &*it->second : nullptr;
    const std::filesystem::path path = std::filesystem::path(dir_) / file_name(pv);
    if (!std::filesystem::exists(path)) {
      cache_[pv] = std::nullopt;
      return nullptr;
    }
    const Release* rel = index_ ? index_->find(pv.package, pv.version) : nullptr;
    if (!rel) {
      cache_[pv] = std::nullopt;
      return nullptr;
    }
    const RawCallGraph raw = load_callgraph_file(path.string());
    PackageCallGraph annotated = annotate(raw, *rel, rel->deps, options_);
    auto& slot = cache_[pv];  // cache only successes; errors rethrow per query
    slot = std::move(annotated);
    return &*slot;
  }

private:
  std::string dir_;
  const Index* index_;
  AnnotateOptions options_;
  mutable std::map<PackageVersion, std::optional<PackageCallGraph>> cache_;
};

// ---------------------------------------------------------------------------
// Unified per-root graphs

struct UnifiedGraph {
  PackageVersion root;
  std::vector<FunctionNode> nodes;  // fully resolved, deduplicated
  std::map<std::string, std::size_t> by_id;  // canonical text -> node index
  std::set<std::tuple<std::size_t, std::size_t, Dispatch>> edges;
  std::map<std::size_t, std::set<PackageVersion>> provenance;
  std::vector<InterfaceDef> interfaces;  // method indices into `nodes`
  std::vector<ImplRecord> impls;
  bool self_cycle = false;  // the resolved tree contained a self-cycle

  std::size_t intern(FunctionNode n, const PackageVersion& origin) {
    const std::string key = n.canonical();
    const auto it = by_id.find(key);
    std::size_t idx;
    if (it != by_id.end()) {
      idx = it->second;
      // Commutative metadata merge keeps the result order-independent.
      if (n.visibility == Visibility::Public)
        nodes[idx].visibility = Visibility::Public;
    } else {
      idx = nodes.size();
      by_id.emplace(key, idx);
      nodes.push_back(std::move(n));
    }
    provenance[idx].insert(origin);
    return idx;
  }
};

namespace detail {

// Per-parent rewrite table: dependency package -> the version the parent's
// own tree edge resolved it to.
inline std::map<std::string, std::vector<SemVer>> rewrite_table(
    const ResolvedTree& tree, const PackageVersion& node) {
  std::map<std::string, std::vector<SemVer>> out;
  const auto it = tree.children.find(node);
  if (it == tree.children.end()) return out;
  for (const auto& edge : it->second) {
    auto& versions = out[edge.child.package];
    if (std::find(versions.begin(), versions.end(), edge.child.version) ==
        versions.end())
      versions.push_back(edge.child.version);
  }
  return out;
}

inline SemVer rewrite_version(
    const std::map<std::string, std::vector<SemVer>>& table,
    const std::string& package, const PackageVersion& owner) {
  const auto it = table.find(package);
  if (it == table.end())
    throw UnifyError("unresolved reference to '" + package + "' in " +
                     owner.text() + " has no resolved tree edge");
  if (it->second.size() > 1)
    throw UnifyError("unresolved reference to '" + package + "' in " +
                     owner.text() +
                     " is ambiguous: the tree holds several versions from "
                     "this parent");
  return it->second.front();
}

inline TypeRef rewrite_typeref(
    TypeRef t, const std::map<std::string, std::vector<SemVer>>& table,
    const PackageVersion& owner) {
  if (!t.builtin && !t.version)
    t.version = rewrite_version(table, t.package, owner);
  return t;
}

}  // namespace detail

// Level-order merge of the call graphs of every tree node. Each graph's
// UNRESOLVED references to a package are rewritten to the version the
// owning node's tree edge chose; the output contains no UNRESOLVED nodes.
inline UnifiedGraph unify_release(const ResolvedTree& tree,
                                  const CallGraphStore& store) {
  UnifiedGraph u;
  u.root = tree.root;
  u.self_cycle = !tree.self_cycles.empty();

  std::map<std::string, std::size_t> interface_slot;        // id text -> index
  std::map<std::pair<std::string, std::string>, std::size_t> impl_slot;

  std::set<PackageVersion> visited;
  std::deque<PackageVersion> queue{tree.root};
  while (!queue.empty()) {
    const PackageVersion node = queue.front();
    queue.pop_front();
    if (!visited.insert(node).second) continue;

    const PackageCallGraph* graph = store.find(node);
    if (!graph)
      throw UnifyError("missing call graph for " + node.text());
    const auto table = detail::rewrite_table(tree, node);

    std::vector<std::size_t> local_to_unified(graph->nodes.size());
    for (std::size_t i = 0; i < graph->nodes.size(); ++i) {
      FunctionNode n = graph->nodes[i];
      if (!n.resolved()) n.version = detail::rewrite_version(table, n.package, node);
      for (auto& p : n.signature.params)
        p = detail::rewrite_typeref(std::move(p), table, node);
      if (n.signature.ret)
        n.signature.ret = detail::rewrite_typeref(std::move(*n.signature.ret),
                                                  table, node);
      local_to_unified[i] = u.intern(std::move(n), node);
    }

    for (const auto& e : graph->edges)
      u.edges.insert({local_to_unified[e.caller], local_to_unified[e.callee],
                      e.dispatch});

    for (const auto& def : graph->interfaces) {
      const TypeRef id = detail::rewrite_typeref(def.id, table, node);
      const std::string key = id.text();
      const auto it = interface_slot.find(key);
      InterfaceDef* slot;
      if (it != interface_slot.end()) {
        slot = &u.interfaces[it->second];
      } else {
        interface_slot.emplace(key, u.interfaces.size());
        u.interfaces.push_back({id, {}});
        slot = &u.interfaces.back();
      }
      for (const auto& m : def.methods) {
        const std::size_t fn = local_to_unified[m.function];
        const bool known = std::any_of(
            slot->methods.begin(), slot->methods.end(),
            [&](const InterfaceMethod& x) { return x.name == m.name && x.function == fn; });
        if (!known) slot->methods.push_back({m.name, fn});
      }
    }

    for (const auto& rec : graph->impls) {
      const TypeRef iface = detail::rewrite_typeref(rec.interface, table, node);
      const TypeRef type = detail::rewrite_typeref(rec.type, table, node);
      const auto key = std::make_pair(iface.text(), type.text());
      const auto it = impl_slot.find(key);
      ImplRecord* slot;
      if (it != impl_slot.end()) {
        slot = &u.impls[it->second];
      } else {
        impl_slot.emplace(key, u.impls.size());
        u.impls.push_back({iface, type, {}});
        slot = &u.impls.back();
      }
      for (const auto& m : rec.methods) {
        const std::size_t fn = local_to_unified[m.function];
        const bool known = std::any_of(
            slot->methods.begin(), slot->methods.end(),
            [&](const InterfaceMethod& x) { return x.name == m.name && x.function == fn; });
        if (!known) slot->methods.push_back({m.name, fn});
      }
    }

    if (const auto kids = tree.children.find(node); kids != tree.children.end())
      for (const auto& edge : kids->second)
        if (!visited.count(edge.child)) queue.push_back(edge.child);
  }
  return u;
}

// For every dynamic call site whose callee is an interface method
// declaration, adds edges to every implementation of that method found in
// the merged graph. Matching requires the same interface identity (version
// included), method name, arity, and parameter/return type references.
// Existing edges are preserved; no match means no new edges.
inline UnifiedGraph link_dynamic(UnifiedGraph u) {
  // declaration node -> (interface id text, method name)
  std::map<std::size_t, std::vector<std::pair<std::string, std::string>>> decl_of;
  for (const auto& def : u.interfaces)
    for (const auto& m : def.methods)
      decl_of[m.function].push_back({def.id.text(), m.name});

  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> impls_of;
  for (const auto& rec : u.impls)
    for (const auto& m : rec.methods)
      impls_of[{rec.interface.text(), m.name}].push_back(m.function);

  const auto signatures_match = [&](std::size_t decl, std::size_t impl) {
    const Signature& a = u.nodes[decl].signature;
    const Signature& b = u.nodes[impl].signature;
    if (a.params.size() != b.params.size()) return false;
    for (std::size_t i = 0; i < a.params.size(); ++i)
      if (!(a.params[i] == b.params[i])) return false;
    if (a.ret.has_value() != b.ret.has_value()) return false;
    return !a.ret || *a.ret == *b.ret;
  };

  const auto snapshot = u.edges;  // link once over the completed merge
  for (const auto& [caller, callee, dispatch] : snapshot) {
    if (dispatch != Dispatch::Dynamic) continue;
    const auto decls = decl_of.find(callee);
    if (decls == decl_of.end()) continue;
    for (const auto& key : decls->second) {
      const auto targets = impls_of.find(key);
      if (targets == impls_of.end()) continue;
      for (const std::size_t impl : targets->second) {
        if (impl == callee) continue;
        if (signatures_match(callee, impl))
          u.edges.insert({caller, impl, Dispatch::Dynamic});
      }
    }
  }
  return u;
}

// ---------------------------------------------------------------------------
// CDN

// The merged, deduplicated function-level graph for one snapshot.
struct CDN {
  std::int64_t snapshot_time = 0;
  std::vector<FunctionNode> nodes;
  std::map<std::string, std::uint32_t> by_id;  // canonical text -> node index
  std::set<std::tuple<std::uint32_t, std::uint32_t, Dispatch>> edges;
  std::map<PackageVersion, std::vector<std::uint32_t>> package_index;
  std::map<std::string, ResolvedTree> trees;  // root package -> tree
  std::vector<SkippedRoot> skipped;

  std::uint32_t intern(const FunctionNode& n) {
    const std::string key = n.canonical();
    const auto it = by_id.find(key);
    if (it != by_id.end()) {
      if (n.visibility == Visibility::Public)
        nodes[it->second].visibility = Visibility::Public;
      return it->second;
    }
    const auto idx = static_cast<std::uint32_t>(nodes.size());
    by_id.emplace(key, idx);
    package_index[{n.package, *n.version}].push_back(idx);
    nodes.push_back(n);
    return idx;
  }
};

// Union of link_dynamic(unify_release(...)) over all snapshot roots with
// set-semantics deduplication. Roots that fail to resolve or unify are
// skipped and reported. The optional `root_order` (package names) only
// changes processing order, never the result's serialized form.
inline CDN build_cdn(const Index& index, std::int64_t t,
                     const CallGraphStore& store,
                     VersionPolicy policy = VersionPolicy::LatestPerPackage,
                     const std::vector<std::string>* root_order = nullptr,
                     const std::set<std::string>& root_features =
                         default_features()) {
  (void)policy;
  CDN cdn;
  cdn.snapshot_time = t;

  const Index mirror = mirror_at(snapshot_index(index), t);
  std::vector<const Release*> roots = snapshot_roots(mirror);
  if (root_order) {
    std::map<std::string, const Release*> by_name;
    for (const Release* r : roots) by_name[r->name] = r;
    std::vector<const Release*> ordered;
    for (const auto& name : *root_order) {
      const auto it = by_name.find(name);
      if (it != by_name.end()) {
        ordered.push_back(it->second);
        by_name.erase(it);
      }
    }
    for (const auto& [_, r] : by_name) ordered.push_back(r);
    roots = std::move(ordered);
  }

  for (const Release* root : roots) {
    UnifiedGraph unified;
    try {
      ResolvedTree tree = resolve_tree(mirror, *root, t, root_features);
      unified = link_dynamic(unify_release(tree, store));
      cdn.trees.emplace(root->name, std::move(tree));
    } catch (const ResolveError& e) {
      cdn.skipped.push_back({root->name, root->version, e.what()});
      continue;
    } catch (const UnifyError& e) {
      cdn.skipped.push_back({root->name, root->version, e.what()});
      continue;
    } catch (const AnnotationError& e) {
      cdn.skipped.push_back({root->name, root->version, e.what()});
      continue;
    }

    std::vector<std::uint32_t> remap(unified.nodes.size());
    for (std::size_t i = 0; i < unified.nodes.size(); ++i)
      remap[i] = cdn.intern(unified.nodes[i]);
    for (const auto& [caller, callee, dispatch] : unified.edges)
      cdn.edges.insert({remap[caller], remap[callee], dispatch});
  }
  return cdn;
}

}  // namespace cdnet
