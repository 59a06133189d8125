#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace qcl {

namespace {

void require_object(const ojson& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
}

void reject_unknown(const ojson& j, const std::string& where, std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

double get_number(const ojson& j, const std::string& key, const std::string& where) {
  const ojson& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + "." + key + " must be finite");
  return d;
}

int get_int(const ojson& j, const std::string& key, const std::string& where) {
  const ojson& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return v.get<int>();
}

void read_number(const ojson& j, const char* key, const std::string& where, double& out) {
  if (j.contains(key)) out = get_number(j, key, where);
}

void read_positive(const ojson& j, const char* key, const std::string& where, double& out) {
  read_number(j, key, where, out);
  if (!(out > 0)) throw ConfigError(where + "." + key + " must be positive");
}

void read_int(const ojson& j, const char* key, const std::string& where, int& out) {
  if (j.contains(key)) out = get_int(j, key, where);
}

std::vector<double> get_list(const ojson& j, const std::string& key, const std::string& where) {
  const ojson& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(where + "." + key + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Point get_point(const ojson& v, int n, const std::string& where) {
  if (!v.is_array() || int(v.size()) != n) throw ConfigError(where + " must be an array of " + std::to_string(n) + " numbers");
  Point p;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(where + " must contain numbers");
    p.push_back(e.get<double>());
  }
  return p;
}

ojson point_json(const Point& p) {
  ojson a = ojson::array();
  for (double v : p) a.push_back(v);
  return a;
}

ojson list_json(const std::vector<double>& v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(x);
  return a;
}

WeylTensor build_weyl(int n, const ojson& w) {
  if (w.is_string()) {
    const auto s = w.get<std::string>();
    if (s == "default") return default_weyl(n);
    if (s == "zero") return WeylTensor(n);
    throw ConfigError("weyl must be \"default\", \"zero\" or an array of component records");
  }
  if (!w.is_array() || w.empty()) throw ConfigError("weyl must be \"default\", \"zero\" or an array of component records");
  std::vector<WeylTensor::Entry> seed;
  for (const auto& e : w) {
    require_object(e, "weyl component");
    reject_unknown(e, "weyl component", {"i", "j", "k", "l", "value"});
    for (const char* key : {"i", "j", "k", "l", "value"})
      if (!e.contains(key)) throw ConfigError(std::string("weyl component is missing '") + key + "'");
    int idx[4];
    const char* names[4] = {"i", "j", "k", "l"};
    for (int a = 0; a < 4; ++a) {
      idx[a] = get_int(e, names[a], "weyl component");
      if (idx[a] < 1 || idx[a] > n) throw ConfigError("weyl component index out of range 1.." + std::to_string(n));
    }
    seed.push_back({idx[0] - 1, idx[1] - 1, idx[2] - 1, idx[3] - 1, get_number(e, "value", "weyl component")});
  }
  WeylTensor W = weyl_from_seed(n, seed);
  const WeylReport rep = weyl_validate(W);
  if (!rep.ok()) throw ConfigError("weyl components do not define an admissible Weyl-type tensor");
  return W;
}

}  // namespace

PerturbationSpec RunConfig::spec() const {
  PerturbationSpec s;
  s.n = n;
  s.W = W;
  s.tau = tau.value_or(0.0);
  s.sites = sites;
  s.R = R;
  s.alpha = alpha;
  return s;
}

double RunConfig::require_tau(const std::string& what) const {
  if (!tau) throw ConfigError("tau is required for " + what + " (it is not fixed numerically; pass --tau or set \"tau\")");
  return *tau;
}

RunConfig parse_config(const ojson& j) {
  require_object(j, "configuration");
  reject_unknown(j, "configuration",
                 {"n", "weyl", "tau", "sites", "R", "alpha", "quadrature", "grid", "seed", "samples", "bubble", "probe",
                  "scan", "curvature"});
  RunConfig c;
  read_int(j, "n", "configuration", c.n);
  if (c.n < 5) throw ConfigError("dimension n = " + std::to_string(c.n) + " rejected: n >= 5 required");
  if (c.n > 60) throw ConfigError("dimension n = " + std::to_string(c.n) + " rejected: n <= 60 supported");

  c.weyl = j.contains("weyl") ? j.at("weyl") : ojson("default");
  c.W = build_weyl(c.n, c.weyl);

  if (j.contains("tau") && !j.at("tau").is_null()) c.tau = get_number(j, "tau", "configuration");
  read_positive(j, "R", "configuration", c.R);
  read_positive(j, "alpha", "configuration", c.alpha);

  if (j.contains("sites")) {
    const ojson& s = j.at("sites");
    if (!s.is_array()) throw ConfigError("sites must be an array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string where = "sites[" + std::to_string(i) + "]";
      require_object(s[i], where);
      reject_unknown(s[i], where, {"y", "mu", "lambda", "rho"});
      Site st;
      st.mu = 0.5;
      st.lambda = 0.1;
      st.rho = 0.25;
      st.y = s[i].contains("y") ? get_point(s[i].at("y"), c.n, where + ".y") : Point(c.n, 0.0);
      read_positive(s[i], "mu", where, st.mu);
      read_positive(s[i], "lambda", where, st.lambda);
      read_positive(s[i], "rho", where, st.rho);
      c.sites.push_back(st);
    }
  } else {
    Site st;
    st.mu = 0.5;
    st.lambda = 0.1;
    st.rho = 0.25;
    st.y = Point(c.n, 0.0);
    c.sites.push_back(st);
  }
  if (auto v = spec_violation(c.spec())) throw ConfigError("perturbation parameters violate " + *v);

  if (j.contains("quadrature")) {
    const ojson& q = j.at("quadrature");
    require_object(q, "quadrature");
    reject_unknown(q, "quadrature", {"tolerance", "max_subdivisions"});
    read_positive(q, "tolerance", "quadrature", c.quad.tol);
    read_int(q, "max_subdivisions", "quadrature", c.quad.max_subdiv);
    if (c.quad.max_subdiv < 1) throw ConfigError("quadrature.max_subdivisions must be positive");
  }
  if (j.contains("grid")) {
    const ojson& g = j.at("grid");
    require_object(g, "grid");
    reject_unknown(g, "grid", {"nodes", "map_scale", "r_max"});
    read_int(g, "nodes", "grid", c.grid.nodes);
    if (c.grid.nodes < 5) throw ConfigError("grid.nodes must be at least 5");
    read_number(g, "map_scale", "grid", c.grid.map_scale);
    read_number(g, "r_max", "grid", c.grid.r_max);
    if (c.grid.map_scale < 0 || c.grid.r_max < 0) throw ConfigError("grid scales must be non-negative");
  }
  if (j.contains("seed")) {
    const ojson& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("seed must be a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  read_int(j, "samples", "configuration", c.samples);
  if (c.samples < 1) throw ConfigError("samples must be positive");

  c.xi = Point(c.n, 0.0);
  if (j.contains("bubble")) {
    const ojson& b = j.at("bubble");
    require_object(b, "bubble");
    reject_unknown(b, "bubble", {"xi", "lambda"});
    if (b.contains("xi")) c.xi = get_point(b.at("xi"), c.n, "bubble.xi");
    read_positive(b, "lambda", "bubble", c.lambda);
  }

  c.probe.energy.grid.nodes = 400;
  c.probe.energy.z_error_estimate = false;
  if (j.contains("probe")) {
    const ojson& p = j.at("probe");
    require_object(p, "probe");
    reject_unknown(p, "probe", {"step_xi", "step_lambda", "gradient_tol", "eigen_tol", "nodes"});
    read_positive(p, "step_xi", "probe", c.probe.step_xi);
    read_positive(p, "step_lambda", "probe", c.probe.step_lambda);
    read_number(p, "gradient_tol", "probe", c.probe.gradient_tol);
    read_number(p, "eigen_tol", "probe", c.probe.eigen_tol);
    read_int(p, "nodes", "probe", c.probe.energy.grid.nodes);
    if (c.probe.energy.grid.nodes < 5) throw ConfigError("probe.nodes must be at least 5");
  }

  if (j.contains("scan")) {
    const ojson& s = j.at("scan");
    require_object(s, "scan");
    reject_unknown(s, "scan", {"alpha-residual", "mu-residual", "F-landscape"});
    if (s.contains("alpha-residual")) {
      const ojson& a = s.at("alpha-residual");
      require_object(a, "scan.alpha-residual");
      reject_unknown(a, "scan.alpha-residual", {"n", "eps", "r", "width", "alphas"});
      auto& t = c.alpha_scan;
      read_int(a, "n", "scan.alpha-residual", t.n);
      if (t.n < 5) throw ConfigError("scan.alpha-residual.n rejected: n >= 5 required");
      read_positive(a, "eps", "scan.alpha-residual", t.eps);
      read_positive(a, "r", "scan.alpha-residual", t.r);
      read_positive(a, "width", "scan.alpha-residual", t.width);
      if (a.contains("alphas")) t.alphas = get_list(a, "alphas", "scan.alpha-residual");
    }
    if (s.contains("mu-residual")) {
      const ojson& m = s.at("mu-residual");
      require_object(m, "scan.mu-residual");
      reject_unknown(m, "scan.mu-residual", {"n", "mus", "offset", "angular_order"});
      auto& t = c.mu_scan;
      read_int(m, "n", "scan.mu-residual", t.n);
      if (t.n < 5) throw ConfigError("scan.mu-residual.n rejected: n >= 5 required");
      if (m.contains("mus")) t.mus = get_list(m, "mus", "scan.mu-residual");
      read_number(m, "offset", "scan.mu-residual", t.offset);
      read_int(m, "angular_order", "scan.mu-residual", t.angular_order);
      if (t.angular_order < 1) throw ConfigError("scan.mu-residual.angular_order must be positive");
    }
    if (s.contains("F-landscape")) {
      const ojson& f = s.at("F-landscape");
      require_object(f, "scan.F-landscape");
      reject_unknown(f, "scan.F-landscape", {"xi1", "lambda"});
      if (f.contains("xi1")) c.landscape.xi1 = get_list(f, "xi1", "scan.F-landscape");
      if (f.contains("lambda")) c.landscape.lambda = get_list(f, "lambda", "scan.F-landscape");
    }
  }

  if (j.contains("curvature")) {
    const ojson& q = j.at("curvature");
    require_object(q, "curvature");
    reject_unknown(q, "curvature", {"metric", "points"});
    if (q.contains("metric")) {
      if (!q.at("metric").is_string()) throw ConfigError("curvature.metric must be a string");
      c.curvature.metric = q.at("metric").get<std::string>();
      if (c.curvature.metric != "sphere" && c.curvature.metric != "perturbed")
        throw ConfigError("curvature.metric must be \"sphere\" or \"perturbed\"");
    }
    if (q.contains("points")) {
      const ojson& p = q.at("points");
      if (!p.is_array()) throw ConfigError("curvature.points must be an array of points");
      for (std::size_t i = 0; i < p.size(); ++i)
        c.curvature.points.push_back(get_point(p[i], c.n, "curvature.points[" + std::to_string(i) + "]"));
    }
  }
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

ojson config_echo(const RunConfig& c) {
  ojson j;
  j["n"] = c.n;
  j["weyl"] = c.weyl;
  j["tau"] = c.tau ? ojson(*c.tau) : ojson(nullptr);
  ojson sites = ojson::array();
  for (const auto& s : c.sites) {
    ojson o;
    o["y"] = point_json(s.y);
    o["mu"] = s.mu;
    o["lambda"] = s.lambda;
    o["rho"] = s.rho;
    sites.push_back(o);
  }
  j["sites"] = sites;
  j["R"] = c.R;
  j["alpha"] = c.alpha;
  j["quadrature"] = {{"tolerance", c.quad.tol}, {"max_subdivisions", c.quad.max_subdiv}};
  j["grid"] = {{"nodes", c.grid.nodes}, {"map_scale", c.grid.map_scale}, {"r_max", c.grid.r_max}};
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["bubble"] = {{"xi", point_json(c.xi)}, {"lambda", c.lambda}};
  j["probe"] = {{"step_xi", c.probe.step_xi},
                {"step_lambda", c.probe.step_lambda},
                {"gradient_tol", c.probe.gradient_tol},
                {"eigen_tol", c.probe.eigen_tol},
                {"nodes", c.probe.energy.grid.nodes}};
  ojson scan;
  scan["alpha-residual"] = {{"n", c.alpha_scan.n},
                            {"eps", c.alpha_scan.eps},
                            {"r", c.alpha_scan.r},
                            {"width", c.alpha_scan.width},
                            {"alphas", list_json(c.alpha_scan.alphas)}};
  scan["mu-residual"] = {{"n", c.mu_scan.n},
                         {"mus", list_json(c.mu_scan.mus)},
                         {"offset", c.mu_scan.offset},
                         {"angular_order", c.mu_scan.angular_order}};
  scan["F-landscape"] = {{"xi1", list_json(c.landscape.xi1)}, {"lambda", list_json(c.landscape.lambda)}};
  j["scan"] = scan;
  ojson pts = ojson::array();
  for (const auto& p : c.curvature.points) pts.push_back(point_json(p));
  j["curvature"] = {{"metric", c.curvature.metric}, {"points", pts}};
  return j;
}

}  // namespace qcl
