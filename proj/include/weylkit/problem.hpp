#pragma once

// Problem-definition JSON: expression, endpoint, boundary pair, lambda grid,
// solver configuration.  Complex entries are [re, im] pairs throughout; no
// string forms, so files round-trip bit-exactly and locale never matters.

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "weylkit/resolvent.hpp"

namespace weylkit {

using json = nlohmann::json;

namespace detail {

inline cx parse_complex(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SchemaError(path, "complex values are [re, im] number pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline MatC parse_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a matrix (array of rows)");
  const size_t rows = j.size();
  const size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw SchemaError(path, "expected nonempty rows");
  MatC m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw SchemaError(path, "ragged matrix rows");
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Index>(r), static_cast<Index>(c)) =
          parse_complex(j[r][c], path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

inline json dump_complex(cx v) { return json::array({v.real(), v.imag()}); }

inline json dump_matrix(const MatC& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(dump_complex(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline std::function<double(double)> poly_eval(std::vector<double> coeffs) {
  return [coeffs = std::move(coeffs)](double t) {
    double acc = 0.0;
    for (size_t i = coeffs.size(); i-- > 0;) acc = acc * t + coeffs[i];
    return acc;
  };
}

}  // namespace detail

struct ProblemFile {
  Index n = 1, d = 1;
  json coeffs_spec;  // retained for canonical re-serialization
  DiffExpr expr;
  TripletKind triplet_kind = TripletKind::Regular;
  NevanlinnaPair tau = NevanlinnaPair::tau0(2);
  std::vector<cx> lambdas;
  IntegratorConfig ode;
  QuadratureConfig quad;
  std::vector<double> schedule;
  double m_tol = 1e-8;

  // command-specific extras
  std::function<VecC(double)> rhs;
  json rhs_spec;
  std::vector<double> probe_x;
  std::vector<std::pair<double, double>> green_points;
  double spectrum_lo = 0.0, spectrum_hi = 0.0;
  size_t spectrum_grid = 0;
  size_t green_grid = 50;

  json canonical;  // normalized form of the input, hashed for provenance

  Setting setting() const {
    Setting s;
    s.e = expr;
    s.triplet = triplet_kind == TripletKind::Regular
                    ? TripletConfig::regular()
                    : TripletConfig::minimal_singular(schedule, m_tol);
    s.ode = ode;
    s.quad = quad;
    return s;
  }
};

inline DiffExpr build_expr(Index n, Index d, const json& coeffs, Endpoint ep,
                           const std::string& path) {
  if (coeffs.is_string()) {
    const std::string name = coeffs.get<std::string>();
    if (name == "free") return free_expr(n, d, ep);
    throw SchemaError(path, "unknown builtin '" + name + "'");
  }
  if (!coeffs.is_object() || !coeffs.contains("builtin"))
    throw SchemaError(path, "expected builtin name or {builtin: ...} object");
  const std::string name = coeffs["builtin"].get<std::string>();
  if (name == "sl_poly") {
    if (n != 1) throw SchemaError(path, "sl_poly requires n=1");
    auto q = detail::poly_eval(coeffs.value("q_poly", std::vector<double>{}));
    Index dd = d;
    return sl_expr([q, dd](double t) { return q(t) * MatC::Identity(dd, dd); }, d, ep);
  }
  if (name == "sl_rational") {
    if (n != 1) throw SchemaError(path, "sl_rational requires n=1");
    auto num = detail::poly_eval(coeffs.value("num_poly", std::vector<double>{1.0}));
    auto den = detail::poly_eval(coeffs.value("den_poly", std::vector<double>{1.0}));
    Index dd = d;
    return sl_expr(
        [num, den, dd](double t) { return (num(t) / den(t)) * MatC::Identity(dd, dd); }, d,
        ep);
  }
  if (name == "const_matrix") {
    if (n != 1) throw SchemaError(path, "const_matrix requires n=1");
    if (!coeffs.contains("pn")) throw SchemaError(path + ".pn", "missing constant matrix");
    MatC pn = detail::parse_matrix(coeffs["pn"], path + ".pn");
    if (pn.rows() != d || pn.cols() != d)
      throw DimensionMismatch("const_matrix: pn must be d x d");
    return sl_expr([pn](double) { return pn; }, d, ep);
  }
  throw SchemaError(path, "unknown builtin '" + name + "'");
}

inline NevanlinnaPair build_tau(const json& j, Index h, const std::string& path) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "tau0") return NevanlinnaPair::tau0(h);
    if (name == "dirichlet") return NevanlinnaPair::dirichlet(h);
    throw SchemaError(path, "unknown named pair '" + name + "'");
  }
  if (!j.is_object() || !j.contains("C0") || !j.contains("C1"))
    throw SchemaError(path, "expected named pair or {C0, C1}");
  MatC c0 = detail::parse_matrix(j["C0"], path + ".C0");
  MatC c1 = detail::parse_matrix(j["C1"], path + ".C1");
  if (c0.rows() != h || c0.cols() != h || c1.rows() != h || c1.cols() != h)
    throw DimensionMismatch("tau: C0, C1 must be " + std::to_string(h) + " x " +
                            std::to_string(h));
  return NevanlinnaPair::constant(std::move(c0), std::move(c1), "custom");
}

inline ProblemFile parse_problem_json(const json& root) {
  ProblemFile p;
  if (!root.is_object()) throw SchemaError("$", "problem file must be a JSON object");
  p.n = root.value("n", 1);
  p.d = root.value("d", 1);
  if (p.n < 1 || p.d < 1) throw SchemaError("$.n", "n and d must be positive");

  Endpoint ep;
  if (!root.contains("endpoint")) throw SchemaError("$.endpoint", "missing");
  const json& je = root["endpoint"];
  if (je.contains("regular")) {
    ep = Endpoint::regular(je["regular"].get<double>());
    p.triplet_kind = TripletKind::Regular;
  } else if (je.contains("singular_minimal")) {
    ep = Endpoint::singular_minimal(je["singular_minimal"].get<double>());
    p.triplet_kind = TripletKind::MinimalSingular;
  } else {
    throw SchemaError("$.endpoint", "expected {regular: b} or {singular_minimal: hint}");
  }
  if (ep.value <= 0) throw SchemaError("$.endpoint", "endpoint value must be positive");

  p.coeffs_spec = root.value("coeffs", json("free"));
  p.expr = build_expr(p.n, p.d, p.coeffs_spec, ep, "$.coeffs");

  const Index h = p.triplet_kind == TripletKind::Regular ? 2 * p.n * p.d : p.n * p.d;
  p.tau = build_tau(root.value("tau", json("tau0")), h, "$.tau");

  // default probe point when no grid is given
  const json jl = root.contains("lambda") ? root["lambda"]
                                          : json{{"list", {{0.0, 1.0}}}};
  if (jl.contains("list")) {
    for (size_t i = 0; i < jl["list"].size(); ++i)
      p.lambdas.push_back(
          detail::parse_complex(jl["list"][i], "$.lambda.list[" + std::to_string(i) + "]"));
  } else if (jl.contains("rect")) {
    const json& jr = jl["rect"];
    auto axis = [&](const char* key) {
      const json& a = jr.at(key);
      if (!a.is_array() || a.size() != 3)
        throw SchemaError(std::string("$.lambda.rect.") + key, "expected [lo, hi, count]");
      return std::tuple<double, double, size_t>{a[0].get<double>(), a[1].get<double>(),
                                                a[2].get<size_t>()};
    };
    auto [rlo, rhi, rn] = axis("re");
    auto [ilo, ihi, in] = axis("im");
    for (size_t i = 0; i < rn; ++i)
      for (size_t k = 0; k < in; ++k) {
        const double re = rn == 1 ? rlo : rlo + (rhi - rlo) * double(i) / double(rn - 1);
        const double im = in == 1 ? ilo : ilo + (ihi - ilo) * double(k) / double(in - 1);
        p.lambdas.emplace_back(re, im);
      }
  } else {
    throw SchemaError("$.lambda", "expected {list: [...]} or {rect: {...}}");
  }
  if (p.lambdas.empty()) throw SchemaError("$.lambda", "empty lambda grid");
  std::sort(p.lambdas.begin(), p.lambdas.end(), [](cx a, cx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });

  if (root.contains("integrator")) {
    const json& ji = root["integrator"];
    p.ode.rel_tol = ji.value("rel_tol", p.ode.rel_tol);
    p.ode.abs_tol = ji.value("abs_tol", p.ode.abs_tol);
    p.ode.max_step = ji.value("max_step", p.ode.max_step);
    p.ode.renorm_every = ji.value("renorm_every", p.ode.renorm_every);
    if (p.ode.rel_tol <= 0 || p.ode.abs_tol <= 0)
      throw SchemaError("$.integrator", "tolerances must be positive");
  }
  if (root.contains("quadrature")) {
    const json& jq = root["quadrature"];
    p.quad.points_per_unit = jq.value("points_per_unit", p.quad.points_per_unit);
    p.quad.min_points = jq.value("min_points", p.quad.min_points);
    p.quad.tail_tol = jq.value("tail_tol", p.quad.tail_tol);
  }
  p.schedule = root.value("schedule", std::vector<double>{});
  if (p.schedule.empty() && p.triplet_kind == TripletKind::MinimalSingular)
    p.schedule = default_schedule(ep.value);
  p.m_tol = root.value("m_tol", 1e-8);

  if (root.contains("rhs")) {
    p.rhs_spec = root["rhs"];
    Index dd = p.d;
    if (p.rhs_spec.contains("const")) {
      const double v = p.rhs_spec["const"].get<double>();
      p.rhs = [v, dd](double) { return (v * VecC::Ones(dd)).eval(); };
    } else if (p.rhs_spec.contains("poly")) {
      auto f = detail::poly_eval(p.rhs_spec["poly"].get<std::vector<double>>());
      p.rhs = [f, dd](double t) { return (f(t) * VecC::Ones(dd)).eval(); };
    } else if (p.rhs_spec.contains("gaussian")) {
      const json& g = p.rhs_spec["gaussian"];
      const double c = g.value("center", 1.0), w = g.value("width", 0.5);
      p.rhs = [c, w, dd](double t) {
        return (std::exp(-(t - c) * (t - c) / (2 * w * w)) * VecC::Ones(dd)).eval();
      };
    } else {
      throw SchemaError("$.rhs", "expected {const}, {poly} or {gaussian}");
    }
  }
  p.probe_x = root.value("probe_x", std::vector<double>{});
  if (root.contains("green_points")) {
    for (const auto& gp : root["green_points"]) {
      if (!gp.is_array() || gp.size() != 2)
        throw SchemaError("$.green_points", "expected [x, t] pairs");
      p.green_points.emplace_back(gp[0].get<double>(), gp[1].get<double>());
    }
  }
  p.green_grid = root.value("green_grid", size_t{50});
  if (root.contains("spectrum_range")) {
    const json& sr = root["spectrum_range"];
    if (!sr.is_array() || sr.size() != 2)
      throw SchemaError("$.spectrum_range", "expected [lo, hi]");
    p.spectrum_lo = sr[0].get<double>();
    p.spectrum_hi = sr[1].get<double>();
  }
  p.spectrum_grid = root.value("spectrum_grid", size_t{0});

  p.canonical = root;
  return p;
}

inline ProblemFile parse_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open problem file: " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& ex) {
    throw SchemaError(path, std::string("invalid JSON: ") + ex.what());
  }
  return parse_problem_json(root);
}

// FNV-1a over the canonicalized problem text; stable provenance tag.
inline std::string config_hash(const json& canonical) {
  const std::string s = canonical.dump();
  uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : s) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << hash;
  return os.str();
}

}  // namespace weylkit
