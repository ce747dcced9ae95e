#include "homs/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace homs {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& errors) {
  std::string s = "invalid config:";
  for (const auto& e : errors) s += "\n  " + e;
  return s;
}

const char* kFaceNames[4] = {"left", "right", "bottom", "top"};

json phase_json(const PhaseProperties& p) {
  return {{"E", p.E}, {"nu", p.nu}, {"k", p.k}, {"g", p.g}, {"alpha", p.alpha}, {"beta", p.beta}};
}

json model_json(const MaterialModel& m, const std::string& weight_tag) {
  json factors = json::object();
  for (int f = 0; f < kFamilies; ++f)
    factors[family_name(static_cast<Family>(f))] = {{"offset", m.factors[f].offset}, {"scale", m.factors[f].scale}};
  return {{"mode", m.mode == CouplingMode::Sum ? "sum" : "product"},
          {"matrix", phase_json(m.matrix)},
          {"inclusion", phase_json(m.inclusion)},
          {"weight", weight_tag},
          {"factors", factors}};
}

json defaults() {
  json d;
  d["name"] = "run";
  d["material"] = model_json(example1_model(), "example1");
  d["geometry"] = {{"inclusion", {{"center", {0.5, 0.5}}, {"radius", 0.25}}}};
  d["meshes"] = {{"domain", {{"lo", {0.0, 0.0}}, {"hi", {1.0, 1.0}}}},
                 {"cell_divisions", 20},
                 {"macro_divisions", {50, 50}},
                 {"fine_per_cell", 20},
                 {"epsilon", 0.1}};
  d["representative_grid"] = {{"n", {21, 21}}};
  d["sources"] = {{"h", "500"}, {"m", "500"}, {"f", {"1000", "1000"}}};
  json faces = json::object();
  for (const char* f : kFaceNames) faces[f] = {"T", "c", "u"};
  d["bcs"] = {{"faces", faces}, {"T", "273.15"}, {"q", "0"},           {"c", "0"},
              {"d", "0"},       {"u", {"0", "0"}}, {"sigma", {"0", "0"}}};
  d["stages"] = {"cell", "homogenize", "macro", "reconstruct", "reference", "compare"};
  d["reconstruct"] = {{"path", "general"}};
  d["convergence"] = {{"eps", {"1/4", "1/8", "1/16"}}, {"fine_spacing", 0.0}};
  d["outputs"] = {{"dir", "out"}, {"vtk", true}, {"cache_dir", ""}, {"threads", 1}};
  return d;
}

double number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_fraction(j.get<std::string>());
  throw std::invalid_argument("expected a number");
}

std::string expr_text(const json& j) {
  if (j.is_number()) {
    std::ostringstream s;
    s.precision(17);
    s << j.get<double>();
    return s.str();
  }
  if (j.is_string()) return j.get<std::string>();
  throw std::invalid_argument("expected an expression string or number");
}

// Collects errors instead of throwing; `where` names the offending entry.
struct Checker {
  std::vector<std::string>& errors;

  template <class F>
  void guard(const std::string& where, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      errors.push_back(where + ": " + e.what());
    }
  }
};

PhaseProperties parse_phase(const json& j) {
  PhaseProperties p;
  for (int f = 0; f < kFamilies; ++f) {
    const char* name = family_name(static_cast<Family>(f));
    if (!j.contains(name)) throw std::invalid_argument(std::string("missing ") + name);
    p.set(static_cast<Family>(f), number(j.at(name)));
  }
  return p;
}

void check_phase(const PhaseProperties& p) {
  if (!(p.E > 0) || !(p.k > 0) || !(p.g > 0)) throw std::invalid_argument("E, k and g must be positive");
  if (!(p.nu > -1.0 && p.nu < 0.5)) throw std::invalid_argument("nu must lie in (-1, 0.5)");
  if (p.alpha < 0 || p.beta < 0) throw std::invalid_argument("alpha and beta must be non-negative");
}

std::array<int, 2> int_pair(const json& j) {
  if (j.is_number_integer()) return {j.get<int>(), j.get<int>()};
  if (j.is_array() && j.size() == 2) return {j[0].get<int>(), j[1].get<int>()};
  throw std::invalid_argument("expected an integer or a pair of integers");
}

Eigen::Vector2d vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected [x, y]");
  return {number(j[0]), number(j[1])};
}

struct FieldTags {
  const char* field;
  unsigned dirichlet;
  unsigned neumann;
};
const FieldTags kFields[3] = {{"temperature T", kGammaT, kGammaQ},
                              {"moisture c", kGammaC, kGammaD},
                              {"displacement u", kGammaU, kGammaSigma}};

}  // namespace

ConfigError::ConfigError(const std::vector<std::string>& errors)
    : std::invalid_argument(join(errors)), errors_(errors) {}

double parse_fraction(const std::string& s) {
  const auto slash = s.find('/');
  std::size_t used = 0;
  if (slash == std::string::npos) {
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
  }
  const std::string a = s.substr(0, slash), b = s.substr(slash + 1);
  std::size_t ua = 0, ub = 0;
  const double num = std::stod(a, &ua), den = std::stod(b, &ub);
  if (ua != a.size() || ub != b.size() || den == 0.0) throw std::invalid_argument("bad fraction '" + s + "'");
  return num / den;
}

const std::vector<std::string>& known_stages() {
  static const std::vector<std::string> s = {"cell",      "homogenize", "macro",      "reconstruct",
                                             "reference", "compare",    "convergence"};
  return s;
}

ValidationResult validate_config(const json& raw) {
  ValidationResult r;
  auto& errors = r.errors;
  if (!raw.is_object()) {
    errors.push_back("config must be a JSON object");
    return r;
  }
  json n = defaults();
  for (const auto& [key, _] : raw.items())
    if (!n.contains(key)) errors.push_back("unknown section '" + key + "'");
  const bool inclusion_null =
      raw.contains("geometry") && raw["geometry"].is_object() && raw["geometry"].contains("inclusion") &&
      raw["geometry"]["inclusion"].is_null();
  n.merge_patch(raw);
  if (inclusion_null || !n["geometry"].contains("inclusion")) n["geometry"]["inclusion"] = nullptr;
  Checker ck{errors};

  ck.guard("material", [&] {
    const auto& m = n.at("material");
    const std::string mode = m.at("mode").get<std::string>();
    if (mode != "product" && mode != "sum") throw std::invalid_argument("mode must be 'product' or 'sum'");
    ck.guard("material.matrix", [&] { check_phase(parse_phase(m.at("matrix"))); });
    ck.guard("material.inclusion", [&] { check_phase(parse_phase(m.at("inclusion"))); });
    ck.guard("material.weight", [&] { weight_from_catalog(m.at("weight").get<std::string>()); });
    for (const auto& [fam, v] : m.at("factors").items()) {
      bool known = false;
      for (int f = 0; f < kFamilies; ++f) known |= fam == family_name(static_cast<Family>(f));
      if (!known) errors.push_back("material.factors: unknown family '" + fam + "'");
      ck.guard("material.factors." + fam, [&] {
        number(v.at("offset"));
        number(v.at("scale"));
      });
    }
  });

  ck.guard("geometry.inclusion", [&] {
    const auto& inc = n["geometry"]["inclusion"];
    if (inc.is_null()) return;
    const Eigen::Vector2d c = vec2(inc.at("center"));
    const double rad = number(inc.at("radius"));
    if (!(rad > 0) || c.x() - rad < 0 || c.x() + rad > 1 || c.y() - rad < 0 || c.y() + rad > 1)
      throw std::invalid_argument("inclusion must be a circle of positive radius inside the unit cell");
  });

  ck.guard("meshes", [&] {
    const auto& m = n.at("meshes");
    Box box;
    box.lo = vec2(m.at("domain").at("lo"));
    box.hi = vec2(m.at("domain").at("hi"));
    if (!(box.hi.x() > box.lo.x() && box.hi.y() > box.lo.y())) throw std::invalid_argument("empty domain");
    if (m.at("cell_divisions").get<int>() < 2) errors.push_back("meshes.cell_divisions: must be >= 2");
    const auto md = int_pair(m.at("macro_divisions"));
    if (md[0] < 1 || md[1] < 1) errors.push_back("meshes.macro_divisions: must be >= 1");
    if (m.at("fine_per_cell").get<int>() < 4) errors.push_back("meshes.fine_per_cell: must be >= 4");
    ck.guard("meshes.epsilon", [&] {
      const double eps = number(m.at("epsilon"));
      if (!(eps > 0)) throw std::invalid_argument("must be positive");
      cells_per_axis(box, eps);
      n["meshes"]["epsilon"] = eps;
    });
  });

  ck.guard("representative_grid.n", [&] {
    const auto rep = int_pair(n.at("representative_grid").at("n"));
    if (rep[0] < 1 || rep[1] < 1) throw std::invalid_argument("must be >= 1");
  });

  ck.guard("sources", [&] {
    const auto& s = n.at("sources");
    ck.guard("sources.h", [&] { Expression::parse(expr_text(s.at("h"))); });
    ck.guard("sources.m", [&] { Expression::parse(expr_text(s.at("m"))); });
    ck.guard("sources.f", [&] {
      if (!s.at("f").is_array() || s.at("f").size() != 2) throw std::invalid_argument("expected two components");
      for (const auto& c : s.at("f")) Expression::parse(expr_text(c));
    });
  });

  ck.guard("bcs", [&] {
    const auto& b = n.at("bcs");
    std::array<unsigned, 4> masks{};
    for (int f = 0; f < 4; ++f) {
      ck.guard(std::string("bcs.faces.") + kFaceNames[f], [&] {
        for (const auto& t : b.at("faces").at(kFaceNames[f])) masks[f] |= tag_from_name(t.get<std::string>());
        for (const auto& ft : kFields) {
          const bool d = masks[f] & ft.dirichlet, q = masks[f] & ft.neumann;
          if (d == q) throw std::invalid_argument(std::string("needs exactly one condition for ") + ft.field);
        }
      });
    }
    for (const auto& ft : kFields) {
      bool any = false;
      for (unsigned m : masks) any |= (m & ft.dirichlet) != 0;
      if (!any)
        errors.push_back(std::string("bcs: ") + ft.field + " has no Dirichlet face (" + tag_name(ft.dirichlet) +
                         ")");
    }
    for (const char* key : {"T", "q", "c", "d"})
      ck.guard(std::string("bcs.") + key, [&] { Expression::parse(expr_text(b.at(key))); });
    for (const char* key : {"u", "sigma"})
      ck.guard(std::string("bcs.") + key, [&] {
        if (!b.at(key).is_array() || b.at(key).size() != 2) throw std::invalid_argument("expected two components");
        for (const auto& c : b.at(key)) Expression::parse(expr_text(c));
      });
  });

  ck.guard("stages", [&] {
    for (const auto& s : n.at("stages")) {
      const auto name = s.get<std::string>();
      if (std::find(known_stages().begin(), known_stages().end(), name) == known_stages().end())
        errors.push_back("stages: unknown stage '" + name + "'");
    }
  });

  ck.guard("reconstruct.path", [&] {
    const auto p = n.at("reconstruct").at("path").get<std::string>();
    if (p != "general" && p != "separated" && p != "both")
      throw std::invalid_argument("must be general, separated or both");
  });

  ck.guard("convergence.eps", [&] {
    json norm = json::array();
    for (const auto& e : n.at("convergence").at("eps")) {
      const double v = number(e);
      if (!(v > 0)) throw std::invalid_argument("values must be positive");
      norm.push_back(v);
    }
    n["convergence"]["eps"] = norm;
    const double h = number(n.at("convergence").at("fine_spacing"));
    if (h < 0) throw std::invalid_argument("fine_spacing must be >= 0");
    n["convergence"]["fine_spacing"] = h;
  });

  ck.guard("outputs", [&] {
    const auto& o = n.at("outputs");
    o.at("dir").get<std::string>();
    o.at("vtk").get<bool>();
    o.at("cache_dir").get<std::string>();
    if (o.at("threads").get<int>() < 1) throw std::invalid_argument("threads must be >= 1");
  });

  r.normalized = std::move(n);
  return r;
}

RunConfig parse_config(const json& raw) {
  ValidationResult v = validate_config(raw);
  if (!v.errors.empty()) throw ConfigError(v.errors);
  const json& n = v.normalized;
  RunConfig c;
  c.normalized = n;
  c.name = n["name"].get<std::string>();

  const auto& m = n["material"];
  MaterialModel& model = c.model;
  model.mode = m["mode"] == "sum" ? CouplingMode::Sum : CouplingMode::Product;
  model.matrix = parse_phase(m["matrix"]);
  model.inclusion = parse_phase(m["inclusion"]);
  model.weight = weight_from_catalog(m["weight"].get<std::string>());
  for (const auto& [fam, f] : m["factors"].items())
    for (int i = 0; i < kFamilies; ++i)
      if (fam == family_name(static_cast<Family>(i))) model.factors[i] = {number(f["offset"]), number(f["scale"])};
  if (!n["geometry"]["inclusion"].is_null()) {
    Circle circle;
    circle.center = vec2(n["geometry"]["inclusion"]["center"]);
    circle.radius = number(n["geometry"]["inclusion"]["radius"]);
    model.geometry.inclusion = circle;
  }

  const auto& me = n["meshes"];
  c.domain.lo = vec2(me["domain"]["lo"]);
  c.domain.hi = vec2(me["domain"]["hi"]);
  c.cell_divisions = me["cell_divisions"].get<int>();
  c.macro_divisions = int_pair(me["macro_divisions"]);
  c.fine_per_cell = me["fine_per_cell"].get<int>();
  c.epsilon = number(me["epsilon"]);
  c.n_rep = int_pair(n["representative_grid"]["n"]);

  const auto& s = n["sources"];
  c.sources.h = Expression::parse(expr_text(s["h"]));
  c.sources.m = Expression::parse(expr_text(s["m"]));
  for (int i = 0; i < 2; ++i) c.sources.f[i] = Expression::parse(expr_text(s["f"][i]));

  const auto& b = n["bcs"];
  for (int f = 0; f < 4; ++f) {
    unsigned mask = 0;
    for (const auto& t : b["faces"][kFaceNames[f]]) mask |= tag_from_name(t.get<std::string>());
    c.tagging.face[f] = mask;
  }
  c.bcs.T = Expression::parse(expr_text(b["T"]));
  c.bcs.q = Expression::parse(expr_text(b["q"]));
  c.bcs.c = Expression::parse(expr_text(b["c"]));
  c.bcs.d = Expression::parse(expr_text(b["d"]));
  for (int i = 0; i < 2; ++i) {
    c.bcs.u[i] = Expression::parse(expr_text(b["u"][i]));
    c.bcs.sigma[i] = Expression::parse(expr_text(b["sigma"][i]));
  }

  for (const auto& st : n["stages"]) c.stages.push_back(st.get<std::string>());
  c.path = n["reconstruct"]["path"].get<std::string>();
  for (const auto& e : n["convergence"]["eps"]) c.convergence_eps.push_back(e.get<double>());
  c.convergence_fine_spacing = n["convergence"]["fine_spacing"].get<double>();
  c.out_dir = n["outputs"]["dir"].get<std::string>();
  c.cache_dir = n["outputs"]["cache_dir"].get<std::string>();
  c.vtk = n["outputs"]["vtk"].get<bool>();
  c.threads = n["outputs"]["threads"].get<int>();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open " + path});
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
  return parse_config(raw);
}

}  // namespace homs
