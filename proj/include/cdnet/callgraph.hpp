// cdnet/callgraph.hpp -- per-package call graphs and the annotation step
// that produces globally unique, version-qualified function identifiers.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cdnet/errors.hpp"
#include "cdnet/index.hpp"
#include "cdnet/semver.hpp"

namespace cdnet {

inline constexpr std::string_view kUnresolvedMarker = "<?>";
inline constexpr std::string_view kDefaultRegistry = "io::crates";
inline constexpr std::string_view kExternPackage = "extern";

enum class Visibility { Public, Private };
enum class Dispatch { Static, Dynamic, Macro };

inline std::string_view to_string(Visibility v) {
  return v == Visibility::Public ? "public" : "private";
}

inline std::string_view to_string(Dispatch d) {
  switch (d) {
    case Dispatch::Static: return "static";
    case Dispatch::Dynamic: return "dynamic";
    case Dispatch::Macro: return "macro";
  }
  return "static";
}

inline Visibility visibility_from(std::string_view s) {
  if (s == "public") return Visibility::Public;
  if (s == "private") return Visibility::Private;
  throw ParseError("unknown visibility '" + std::string(s) + "'");
}

inline Dispatch dispatch_from(std::string_view s) {
  if (s == "static") return Dispatch::Static;
  if (s == "dynamic") return Dispatch::Dynamic;
  if (s == "macro") return Dispatch::Macro;
  throw ParseError("unknown dispatch kind '" + std::string(s) + "'");
}

// A package-qualified type reference. Builtins (standard-library and
// primitive types) render bare and are never version-rewritten.
struct TypeRef {
  std::string registry;
  std::string package;
  std::optional<SemVer> version;  // nullopt = unresolved (dynamic dependency)
  std::string name;
  bool builtin = false;

  std::string text() const {
    if (builtin) return package.empty() ? name : package + "::" + name;
    std::string out = registry.empty() ? "" : registry + "::";
    out += package;
    out += version ? "v" + version->text() : std::string(kUnresolvedMarker);
    out += "::" + name;
    return out;
  }

  friend bool operator==(const TypeRef& a, const TypeRef& b) {
    return a.builtin == b.builtin && a.registry == b.registry &&
           a.package == b.package && a.name == b.name &&
           a.version.has_value() == b.version.has_value() &&
           (!a.version || *a.version == *b.version);
  }
};

struct Signature {
  std::vector<TypeRef> params;
  std::optional<TypeRef> ret;

  bool empty() const { return params.empty() && !ret; }

  std::string text() const {
    if (empty()) return "";
    std::string out = "(";
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (i) out += ",";
      out += params[i].text();
    }
    out += ")";
    if (ret) out += "->" + ret->text();
    return out;
  }
};

// The CDN vertex: a function with registry, package, and (possibly
// unresolved) version. Fully-resolved nodes have a globally unique
// canonical text form.
struct FunctionNode {
  std::string registry;
  std::string package;
  std::optional<SemVer> version;  // nullopt = UNRESOLVED
  std::string path;
  Signature signature;
  Visibility visibility = Visibility::Public;

  bool resolved() const { return version.has_value(); }

  std::string canonical() const {
    std::string out = registry.empty() ? "" : registry + "::";
    out += package;
    out += version ? "v" + version->text() : std::string(kUnresolvedMarker);
    out += "::" + path;
    out += signature.text();
    return out;
  }
};

struct CallEdgeRec {
  std::size_t caller = 0;  // node index
  std::size_t callee = 0;
  Dispatch dispatch = Dispatch::Static;
};

struct InterfaceMethod {
  std::string name;
  std::size_t function = 0;  // node index of the declaration / implementation
};

struct InterfaceDef {
  TypeRef id;
  std::vector<InterfaceMethod> methods;
};

struct ImplRecord {
  TypeRef interface;
  TypeRef type;  // the implementing type
  std::vector<InterfaceMethod> methods;
};

struct PackageCallGraph {
  PackageVersion owner;
  std::vector<FunctionNode> nodes;
  std::vector<CallEdgeRec> edges;
  std::vector<InterfaceDef> interfaces;
  std::vector<ImplRecord> impls;

  std::vector<std::size_t> resolved_section() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].resolved()) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> unresolved_section() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (!nodes[i].resolved()) out.push_back(i);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Raw (pre-annotation) call graphs, as stored on disk

struct RawTypeRef {
  std::string package;                 // "" or a std package marks a builtin
  std::optional<std::string> version;  // null | "<?>" | "X.Y.Z"
  std::string name;
};

struct RawFunction {
  std::int64_t id = 0;
  std::string package;
  std::optional<std::string> version;
  std::string path;
  Visibility visibility = Visibility::Public;
  std::vector<RawTypeRef> params;
  std::optional<RawTypeRef> ret;
};

struct RawEdge {
  std::int64_t caller = 0;
  std::int64_t callee = 0;
  Dispatch dispatch = Dispatch::Static;
};

struct RawInterface {
  RawTypeRef id;
  std::vector<std::pair<std::string, std::int64_t>> methods;  // name -> fn id
};

struct RawImpl {
  RawTypeRef interface;
  RawTypeRef type;
  std::vector<std::pair<std::string, std::int64_t>> methods;
};

struct RawCallGraph {
  std::string package;  // owner, as written in the file
  std::string version;
  std::vector<RawFunction> functions;
  std::vector<RawEdge> edges;
  std::vector<RawInterface> interfaces;
  std::vector<RawImpl> impls;
};

namespace detail {

inline RawTypeRef typeref_from_json(const nlohmann::json& j,
                                    const std::string& locus) {
  if (!j.is_object())
    throw ParseError(locus + ": type reference is not an object");
  RawTypeRef t;
  t.package = j.value("package", std::string());
  if (j.contains("version") && !j["version"].is_null()) {
    if (!j["version"].is_string())
      throw ParseError(locus + ": 'version' is not a string");
    t.version = j["version"].get<std::string>();
  }
  if (!j.contains("name") || !j["name"].is_string())
    throw ParseError(locus + ": type reference missing string field 'name'");
  t.name = j["name"].get<std::string>();
  return t;
}

inline std::vector<std::pair<std::string, std::int64_t>> methods_from_json(
    const nlohmann::json& j, const std::string& locus) {
  if (!j.is_array()) throw ParseError(locus + ": 'methods' is not an array");
  std::vector<std::pair<std::string, std::int64_t>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& m = j[i];
    const std::string mloc = locus + ".methods[" + std::to_string(i) + "]";
    if (!m.is_object() || !m.contains("name") || !m["name"].is_string() ||
        !m.contains("function") || !m["function"].is_number_integer())
      throw ParseError(mloc + ": expected {name, function}");
    out.emplace_back(m["name"].get<std::string>(),
                     m["function"].get<std::int64_t>());
  }
  return out;
}

}  // namespace detail

// Structured call-graph file: {"package", "version", "functions": [...],
// "edges": [...], "hierarchy": {"interfaces": [...], "impls": [...]}}.
// Field names are documented in the README and held stable.
inline RawCallGraph load_callgraph(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("call-graph file: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("call-graph file: not a JSON object");

  RawCallGraph g;
  g.package = doc.value("package", std::string());
  g.version = doc.value("version", std::string());

  std::set<std::int64_t> ids;
  if (doc.contains("functions")) {
    if (!doc["functions"].is_array())
      throw ParseError("call-graph file: 'functions' is not an array");
    for (std::size_t i = 0; i < doc["functions"].size(); ++i) {
      const auto& f = doc["functions"][i];
      const std::string locus = "functions[" + std::to_string(i) + "]";
      if (!f.is_object()) throw ParseError(locus + ": not an object");
      RawFunction fn;
      if (!f.contains("id") || !f["id"].is_number_integer())
        throw ParseError(locus + ": missing integer field 'id'");
      fn.id = f["id"].get<std::int64_t>();
      if (!ids.insert(fn.id).second)
        throw ParseError(locus + ": duplicate function id " +
                         std::to_string(fn.id));
      if (!f.contains("package") || !f["package"].is_string())
        throw ParseError(locus + ": missing string field 'package'");
      fn.package = f["package"].get<std::string>();
      if (f.contains("version") && !f["version"].is_null()) {
        if (!f["version"].is_string())
          throw ParseError(locus + ": 'version' is not a string");
        fn.version = f["version"].get<std::string>();
      }
      if (!f.contains("path") || !f["path"].is_string())
        throw ParseError(locus + ": missing string field 'path'");
      fn.path = f["path"].get<std::string>();
      try {
        fn.visibility = visibility_from(f.value("visibility", std::string("public")));
      } catch (const ParseError& e) {
        throw ParseError(locus + ": " + e.what());
      }
      if (f.contains("signature") && !f["signature"].is_null()) {
        const auto& sig = f["signature"];
        if (!sig.is_object()) throw ParseError(locus + ": 'signature' is not an object");
        if (sig.contains("params")) {
          if (!sig["params"].is_array())
            throw ParseError(locus + ": 'params' is not an array");
          for (std::size_t p = 0; p < sig["params"].size(); ++p)
            fn.params.push_back(detail::typeref_from_json(
                sig["params"][p],
                locus + ".params[" + std::to_string(p) + "]"));
        }
        if (sig.contains("return") && !sig["return"].is_null())
          fn.ret = detail::typeref_from_json(sig["return"], locus + ".return");
      }
      g.functions.push_back(std::move(fn));
    }
  }

  if (doc.contains("edges")) {
    if (!doc["edges"].is_array())
      throw ParseError("call-graph file: 'edges' is not an array");
    for (std::size_t i = 0; i < doc["edges"].size(); ++i) {
      const auto& e = doc["edges"][i];
      const std::string locus = "edges[" + std::to_string(i) + "]";
      if (!e.is_object() || !e.contains("caller") ||
          !e["caller"].is_number_integer() || !e.contains("callee") ||
          !e["callee"].is_number_integer())
        throw ParseError(locus + ": expected {caller, callee, dispatch}");
      RawEdge edge;
      edge.caller = e["caller"].get<std::int64_t>();
      edge.callee = e["callee"].get<std::int64_t>();
      try {
        edge.dispatch = dispatch_from(e.value("dispatch", std::string("static")));
      } catch (const ParseError& err) {
        throw ParseError(locus + ": " + err.what());
      }
      if (!ids.count(edge.caller))
        throw ParseError(locus + ": unknown caller id " +
                         std::to_string(edge.caller));
      if (!ids.count(edge.callee))
        throw ParseError(locus + ": unknown callee id " +
                         std::to_string(edge.callee));
      g.edges.push_back(edge);
    }
  }

  if (doc.contains("hierarchy")) {
    const auto& h = doc["hierarchy"];
    if (!h.is_object())
      throw ParseError("call-graph file: 'hierarchy' is not an object");
    if (h.contains("interfaces")) {
      if (!h["interfaces"].is_array())
        throw ParseError("call-graph file: 'interfaces' is not an array");
      for (std::size_t i = 0; i < h["interfaces"].size(); ++i) {
        const std::string locus = "interfaces[" + std::to_string(i) + "]";
        const auto& def = h["interfaces"][i];
        RawInterface iface;
        iface.id = detail::typeref_from_json(def, locus);
        if (def.contains("methods"))
          iface.methods = detail::methods_from_json(def["methods"], locus);
        for (const auto& [name, fn] : iface.methods)
          if (!ids.count(fn))
            throw ParseError(locus + ": unknown function id " +
                             std::to_string(fn) + " for method '" + name + "'");
        g.interfaces.push_back(std::move(iface));
      }
    }
    if (h.contains("impls")) {
      if (!h["impls"].is_array())
        throw ParseError("call-graph file: 'impls' is not an array");
      for (std::size_t i = 0; i < h["impls"].size(); ++i) {
        const std::string locus = "impls[" + std::to_string(i) + "]";
        const auto& rec = h["impls"][i];
        if (!rec.is_object() || !rec.contains("interface") || !rec.contains("type"))
          throw ParseError(locus + ": expected {interface, type, methods}");
        RawImpl impl;
        impl.interface = detail::typeref_from_json(rec["interface"],
                                                   locus + ".interface");
        impl.type = detail::typeref_from_json(rec["type"], locus + ".type");
        if (rec.contains("methods"))
          impl.methods = detail::methods_from_json(rec["methods"], locus);
        for (const auto& [name, fn] : impl.methods)
          if (!ids.count(fn))
            throw ParseError(locus + ": unknown function id " +
                             std::to_string(fn) + " for method '" + name + "'");
        g.impls.push_back(std::move(impl));
      }
    }
  }
  return g;
}

inline RawCallGraph load_callgraph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open call-graph file: " + path);
  try {
    return load_callgraph(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Annotation

struct AnnotateOptions {
  std::string registry = std::string(kDefaultRegistry);
  std::set<std::string> std_packages = {"std", "core", "alloc"};
};

namespace detail {

// How identifiers of one referenced package annotate: a concrete version
// (local or static-pinned dependency) or the unresolved marker.
struct PackageBinding {
  std::optional<SemVer> version;
  bool unresolved = false;
};

inline std::map<std::string, PackageBinding> package_bindings(
    const Release& owner, const std::vector<DependencySpec>& deps) {
  std::map<std::string, PackageBinding> out;
  out[owner.name] = {owner.version, false};
  for (const auto& d : deps) {
    const auto pin = d.constraint.pinned();
    auto [it, inserted] = out.emplace(
        d.target, PackageBinding{pin, !pin.has_value()});
    if (!inserted && d.target != owner.name) {
      // Several specifications for one target: static only if they all pin
      // the same version.
      if (it->second.unresolved || !pin || !it->second.version ||
          *it->second.version != *pin) {
        it->second.version.reset();
        it->second.unresolved = true;
      }
    }
  }
  return out;
}

}  // namespace detail

// Maps every identifier in `raw` by the owner's dependency list: local names
// take the owner's version, statically pinned dependencies take the pinned
// version, dynamically constrained dependencies become UNRESOLVED.
// Standard-library functions are dropped; `extern` is kept as a resolved
// pseudo-package. References to anything else raise AnnotationError.
inline PackageCallGraph annotate(const RawCallGraph& raw, const Release& owner,
                                 const std::vector<DependencySpec>& deps,
                                 const AnnotateOptions& options = {}) {
  const auto bindings = detail::package_bindings(owner, deps);

  const auto bind_typeref = [&](const RawTypeRef& rt) -> TypeRef {
    TypeRef t;
    t.name = rt.name;
    if (rt.package.empty() || options.std_packages.count(rt.package)) {
      t.package = rt.package;
      t.builtin = true;
      t.version = SemVer{};
      return t;
    }
    t.registry = options.registry;
    t.package = rt.package;
    if (rt.package == kExternPackage) {
      t.version = SemVer{};
      return t;
    }
    const auto it = bindings.find(rt.package);
    if (it == bindings.end())
      throw AnnotationError("dangling reference: type '" + rt.name +
                            "' names package '" + rt.package +
                            "', which is neither " + owner.name +
                            " nor a declared dependency");
    t.version = it->second.version;
    return t;
  };

  PackageCallGraph g;
  g.owner = {owner.name, owner.version};

  std::map<std::int64_t, std::size_t> id_to_index;
  std::set<std::int64_t> dropped;
  for (const auto& rf : raw.functions) {
    if (options.std_packages.count(rf.package)) {
      dropped.insert(rf.id);  // standard-library callee: removed up front
      continue;
    }
    FunctionNode n;
    n.registry = options.registry;
    n.package = rf.package;
    n.path = rf.path;
    n.visibility = rf.visibility;
    if (rf.package == owner.name) {
      n.version = owner.version;
    } else if (rf.package == kExternPackage) {
      n.version = SemVer{};
    } else {
      const auto it = bindings.find(rf.package);
      if (it == bindings.end())
        throw AnnotationError("dangling reference: function '" + rf.path +
                              "' names package '" + rf.package +
                              "', which is neither " + owner.name +
                              " nor a declared dependency");
      n.version = it->second.version;
    }
    for (const auto& p : rf.params) n.signature.params.push_back(bind_typeref(p));
    if (rf.ret) n.signature.ret = bind_typeref(*rf.ret);

    id_to_index[rf.id] = g.nodes.size();
    g.nodes.push_back(std::move(n));
  }

  for (const auto& e : raw.edges) {
    if (dropped.count(e.caller) || dropped.count(e.callee)) continue;
    g.edges.push_back({id_to_index.at(e.caller), id_to_index.at(e.callee),
                       e.dispatch});
  }

  for (const auto& ri : raw.interfaces) {
    if (options.std_packages.count(ri.id.package)) continue;
    InterfaceDef def;
    def.id = bind_typeref(ri.id);
    for (const auto& [name, fn] : ri.methods) {
      if (dropped.count(fn)) continue;
      def.methods.push_back({name, id_to_index.at(fn)});
    }
    g.interfaces.push_back(std::move(def));
  }

  for (const auto& rp : raw.impls) {
    if (options.std_packages.count(rp.interface.package) ||
        options.std_packages.count(rp.type.package))
      continue;
    ImplRecord rec;
    rec.interface = bind_typeref(rp.interface);
    rec.type = bind_typeref(rp.type);
    for (const auto& [name, fn] : rp.methods) {
      if (dropped.count(fn)) continue;
      rec.methods.push_back({name, id_to_index.at(fn)});
    }
    if (!rec.methods.empty()) g.impls.push_back(std::move(rec));
  }

  return g;
}

}  // namespace cdnet
