#include "fixtures.hpp"

#include <sstream>

#include <json.hpp>

#include "cdnet/callgraph.hpp"
#include "cdnet/timeutil.hpp"

namespace fixtures {

using namespace cdnet;

std::int64_t ts(const std::string& iso) { return parse_iso8601(iso); }

Release make_release(const std::string& name, const std::string& version,
                     const std::string& created,
                     const std::vector<DepInit>& deps, bool yanked) {
  Release r;
  r.name = name;
  r.version = parse_version(version);
  r.created_at = ts(created);
  r.yanked = yanked;
  for (const auto& d : deps) {
    DependencySpec spec;
    spec.target = d.target;
    spec.constraint = parse_constraint(d.req);
    spec.kind = dep_kind_from(d.kind);
    spec.optional = d.optional;
    spec.enabled_by = d.enabled_by;
    r.deps.push_back(std::move(spec));
  }
  return r;
}

std::string GraphInit::json() const {
  nlohmann::json functions = nlohmann::json::array();
  for (const auto& f : fns)
    functions.push_back({{"id", f.id},
                         {"package", f.package},
                         {"version", nullptr},
                         {"path", f.path},
                         {"visibility", f.visibility}});
  nlohmann::json jedges = nlohmann::json::array();
  for (const auto& e : edges)
    jedges.push_back(
        {{"caller", e.caller}, {"callee", e.callee}, {"dispatch", e.dispatch}});
  nlohmann::json jifaces = nlohmann::json::array();
  for (const auto& i : interfaces)
    jifaces.push_back(
        {{"package", i.package},
         {"version", nullptr},
         {"name", i.name},
         {"methods",
          nlohmann::json::array(
              {{{"name", i.method}, {"function", i.function}}})}});
  nlohmann::json jimpls = nlohmann::json::array();
  for (const auto& i : impls)
    jimpls.push_back(
        {{"interface",
          {{"package", i.iface_package}, {"version", nullptr}, {"name", i.iface_name}}},
         {"type",
          {{"package", i.type_package}, {"version", nullptr}, {"name", i.type_name}}},
         {"methods",
          nlohmann::json::array(
              {{{"name", i.method}, {"function", i.function}}})}});

  nlohmann::json doc;
  doc["package"] = package;
  doc["version"] = version;
  doc["functions"] = functions;
  doc["edges"] = jedges;
  doc["hierarchy"] = {{"interfaces", jifaces}, {"impls", jimpls}};
  return doc.dump();
}

PackageCallGraph annotate_graph(const GraphInit& g, const Release& owner) {
  std::istringstream in(g.json());
  return annotate(load_callgraph(in), owner, owner.deps);
}

ChainFixture make_chain_fixture() {
  ChainFixture fx;
  const Release lib2 = make_release("lib2", "0.2.0", "2020-01-01T00:00:00Z");
  const Release lib1 =
      make_release("lib1", "3.2.0", "2020-01-02T00:00:00Z", {{"lib2", "0.*"}});
  const Release app =
      make_release("app", "0.1.0", "2020-01-03T00:00:00Z", {{"lib1", "3.*"}});
  fx.index.add(lib2);
  fx.index.add(lib1);
  fx.index.add(app);
  fx.t = ts("2020-02-01T00:00:00Z");

  GraphInit app_g{"app", "0.1.0",
                  {{0, "app", "main"}, {1, "app", "foo"}, {2, "lib1", "bar"}},
                  {{0, 1, "static"}, {1, 2, "static"}},
                  {},
                  {}};
  GraphInit lib1_g{"lib1",
                   "3.2.0",
                   {{0, "lib1", "bar"},
                    {1, "lib1", "intern", "private"},
                    {2, "lib2", "used"}},
                   {{0, 1, "static"}, {0, 2, "static"}},
                   {},
                   {}};
  GraphInit lib1_cut = lib1_g;
  lib1_cut.edges.pop_back();  // drop bar -> used
  GraphInit lib2_g{"lib2",
                   "0.2.0",
                   {{0, "lib2", "used"},
                    {1, "lib2", "unused"},
                    {2, "lib2", "intern", "private"}},
                   {{0, 2, "static"}},
                   {},
                   {}};

  fx.store.put(annotate_graph(app_g, app));
  fx.store.put(annotate_graph(lib1_g, lib1));
  fx.store.put(annotate_graph(lib2_g, lib2));
  fx.store_cut.put(annotate_graph(app_g, app));
  fx.store_cut.put(annotate_graph(lib1_cut, lib1));
  fx.store_cut.put(annotate_graph(lib2_g, lib2));
  return fx;
}

RetroFixture make_retro_fixture() {
  RetroFixture fx;
  fx.t1 = ts("2020-02-01T00:00:00Z");
  fx.t2 = ts("2020-03-01T00:00:00Z");
  fx.mid = ts("2020-02-15T00:00:00Z");
  fx.late = ts("2020-03-15T00:00:00Z");
  fx.index.add(make_release("a", "1.0.0", "2020-01-01T00:00:00Z", {{"b", "1.*"}}));
  fx.index.add(make_release("b", "1.1.0", "2020-02-01T00:00:00Z"));
  fx.index.add(make_release("b", "1.2.0", "2020-03-01T00:00:00Z"));
  return fx;
}

DupConstraint make_dup_constraint(bool compatible) {
  DupConstraint fx;
  fx.t = ts("2020-02-01T00:00:00Z");
  const Release log042 = make_release("log", "0.4.2", "2020-01-01T00:00:00Z");
  const Release log044 = make_release("log", "0.4.4", "2020-01-02T00:00:00Z");
  const Release log055 = make_release("log", "0.5.5", "2020-01-03T00:00:00Z");
  const Release x = make_release("x", "1.0.0", "2020-01-04T00:00:00Z",
                                 {{"log", "0.4.*"}});
  const Release y = make_release(
      "y", "1.0.0", "2020-01-05T00:00:00Z",
      {{"log", compatible ? "0.4.4" : "0.5.*"}});
  const Release app = make_release("app", "1.0.0", "2020-01-06T00:00:00Z",
                                   {{"x", "1.*"}, {"y", "1.*"}});
  for (const auto& r : {log042, log044, log055, x, y, app}) fx.index.add(r);

  GraphInit log_g{"log", "", {{0, "log", "f"}}, {}, {}, {}};
  for (const auto* log : {&log042, &log044, &log055}) {
    GraphInit g = log_g;
    g.version = log->version.text();
    fx.store.put(annotate_graph(g, *log));
  }
  GraphInit x_g{"x", "1.0.0",
                {{0, "x", "fx"}, {1, "log", "f"}},
                {{0, 1, "static"}},
                {},
                {}};
  GraphInit y_g{"y", "1.0.0",
                {{0, "y", "fy"}, {1, "log", "f"}},
                {{0, 1, "static"}},
                {},
                {}};
  GraphInit app_g{"app", "1.0.0",
                  {{0, "app", "fnA"}, {1, "x", "fx"}, {2, "y", "fy"}},
                  {{0, 1, "static"}, {0, 2, "static"}},
                  {},
                  {}};
  fx.store.put(annotate_graph(x_g, x));
  fx.store.put(annotate_graph(y_g, y));
  fx.store.put(annotate_graph(app_g, app));
  return fx;
}

DynLink make_dynlink() {
  DynLink fx;
  fx.t = ts("2020-02-01T00:00:00Z");
  const Release ser = make_release("ser", "1.0.0", "2020-01-01T00:00:00Z");
  const Release b =
      make_release("b", "1.0.0", "2020-01-02T00:00:00Z", {{"ser", "1.*"}});
  const Release c =
      make_release("c", "1.0.0", "2020-01-03T00:00:00Z", {{"ser", "1.*"}});
  const Release a = make_release("a", "1.0.0", "2020-01-04T00:00:00Z",
                                 {{"b", "1.*"}, {"c", "1.*"}});
  for (const auto& r : {ser, b, c, a}) fx.index.add(r);

  GraphInit ser_g{"ser", "1.0.0",
                  {{0, "ser", "Serialize::serialize"}},
                  {},
                  {{"ser", "Serialize", "serialize", 0}},
                  {}};
  GraphInit b_g{"b",
                "1.0.0",
                {{0, "b", "Foo::serialize"}, {1, "b", "mk_foo"}},
                {},
                {},
                {{"ser", "Serialize", "b", "Foo", "serialize", 0}}};
  GraphInit b_noimpl = b_g;
  b_noimpl.impls.clear();
  GraphInit c_g{"c", "1.0.0",
                {{0, "c", "bar"}, {1, "ser", "Serialize::serialize"}},
                {{0, 1, "dynamic"}},
                {},
                {}};
  GraphInit a_g{"a", "1.0.0",
                {{0, "a", "main"}, {1, "b", "mk_foo"}, {2, "c", "bar"}},
                {{0, 1, "static"}, {0, 2, "static"}},
                {},
                {}};

  fx.store.put(annotate_graph(ser_g, ser));
  fx.store.put(annotate_graph(b_g, b));
  fx.store.put(annotate_graph(c_g, c));
  fx.store.put(annotate_graph(a_g, a));
  fx.store_noimpl.put(annotate_graph(ser_g, ser));
  fx.store_noimpl.put(annotate_graph(b_noimpl, b));
  fx.store_noimpl.put(annotate_graph(c_g, c));
  fx.store_noimpl.put(annotate_graph(a_g, a));
  return fx;
}

}  // namespace fixtures
