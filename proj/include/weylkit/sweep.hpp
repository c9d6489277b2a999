#pragma once

// Lambda-grid sweeps over the module operations, with per-record error capture
// (one BoundaryResonance must not abort a sweep) and deterministic CSV/JSON
// emission: records are keyed by the lambda ordering of the problem file, so
// serial and parallel runs produce byte-identical files.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <thread>

#include "weylkit/problem.hpp"

namespace weylkit {

enum class Command { Mfun, Charmat, Green, Resolve, Spectrum, Verify };

inline const char* command_name(Command c) {
  switch (c) {
    case Command::Mfun: return "mfun";
    case Command::Charmat: return "charmat";
    case Command::Green: return "green";
    case Command::Resolve: return "resolve";
    case Command::Spectrum: return "spectrum";
    case Command::Verify: return "verify";
  }
  return "?";
}

inline Command parse_command(const std::string& s) {
  if (s == "mfun") return Command::Mfun;
  if (s == "charmat") return Command::Charmat;
  if (s == "green") return Command::Green;
  if (s == "resolve") return Command::Resolve;
  if (s == "spectrum") return Command::Spectrum;
  if (s == "verify") return Command::Verify;
  throw Error("unknown command '" + s + "'");
}

struct SweepRecord {
  cx lambda{};
  bool ok = true;
  std::string error;
  std::vector<std::pair<std::string, cx>> cvalues;
  std::vector<std::pair<std::string, double>> dvalues;
  double timing_ms = 0.0;  // never emitted; stderr summary only

  void put(const std::string& key, cx v) { cvalues.emplace_back(key, v); }
  void put(const std::string& key, double v) { dvalues.emplace_back(key, v); }
  void put_matrix(const std::string& key, const MatC& m) {
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c)
        cvalues.emplace_back(key + "_" + std::to_string(r) + std::to_string(c), m(r, c));
  }
};

struct SweepResult {
  Command command = Command::Mfun;
  std::string config_hash;
  std::vector<SweepRecord> records;
};

namespace detail {

inline SweepRecord run_one(const ProblemFile& p, const Setting& s, Command cmd, cx lambda) {
  SweepRecord rec;
  rec.lambda = lambda;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (cmd) {
      case Command::Mfun: {
        const WeylMatrix w = weyl_matrix(s, lambda);
        rec.put_matrix("m", w.m);
        if (w.kind == TripletKind::Regular) {
          rec.put_matrix("m2", w.m2);
          rec.put_matrix("m3", w.m3);
          rec.put_matrix("m4", w.m4);
        }
        rec.put("cutoff", w.cutoff);
        rec.put("disc_radius", w.disc_radius);
        const MatC im_m = (w.m - w.m.adjoint()) / cx(0, 2);
        Eigen::SelfAdjointEigenSolver<MatC> es(im_m);
        rec.put("im_m_min_eig", es.eigenvalues().minCoeff());
        break;
      }
      case Command::Charmat: {
        const WeylMatrix w = weyl_matrix(s, lambda);
        const CharMatrix ob = omega_tau_blocks(p.tau, w);
        const CharMatrix ok = omega_tau_krein(p.tau, w);
        rec.put_matrix("omega", ob.omega);
        rec.put("route_disagreement", (ob.omega - ok.omega).norm());
        if (lambda.imag() != 0.0) {
          const std::vector<double> grid = s.solver_grid(
              w.kind == TripletKind::Regular ? w.cutoff : std::max(w.cutoff, 1.0));
          const SolutionFrame z0 = z0_frame(s.e, w, grid, s.ode);
          WeylMatrix wa = w;
          align_weyl_with_frame(wa, z0);
          const SolutionFrame u = u_tau_solutions(p.tau, wa, z0);
          const GapResult gap = nevanlinna_gap(p.tau, wa, u, s.quad.tail_tol);
          rec.put("gap_min_eig", gap.min_eigenvalue);
          rec.put("gap_norm", gap.norm);
        }
        break;
      }
      case Command::Green: {
        const GreenKernel k = make_green_kernel(s, p.tau, lambda);
        double hi = k.cutoff;
        if (k.kind == TripletKind::MinimalSingular) hi = std::min(hi, 6.0);
        double dis = 0.0;
        const size_t gn = std::max<size_t>(p.green_grid, 2);
        for (size_t i = 0; i < gn; ++i)
          for (size_t j = 0; j < gn; ++j) {
            const double x = hi * (0.5 + double(i)) / double(gn);
            const double t = hi * (0.5 + double(j)) / double(gn);
            if (x == t) continue;
            dis = std::max(dis, (green_eval_triplet(k, x, t) - green_eval_shtraus(k, x, t))
                                    .cwiseAbs()
                                    .maxCoeff());
          }
        rec.put("route_disagreement", dis);
        rec.put("window", hi);
        for (size_t i = 0; i < p.green_points.size(); ++i) {
          const auto& [x, t] = p.green_points[i];
          rec.put_matrix("g" + std::to_string(i), green_eval_triplet(k, x, t));
        }
        break;
      }
      case Command::Resolve: {
        if (!p.rhs) throw SchemaError("$.rhs", "resolve requires a right-hand side");
        const GreenKernel k = make_green_kernel(s, p.tau, lambda);
        std::vector<VecC> f(k.z0.grid.size());
        for (size_t i = 0; i < f.size(); ++i) f[i] = p.rhs(k.z0.grid[i]);
        const ResolventResult r = apply_resolvent(s, k, p.tau, f);
        for (size_t i = 0; i < p.probe_x.size(); ++i) {
          const auto it = std::lower_bound(r.grid.begin(), r.grid.end(), p.probe_x[i]);
          const size_t idx = std::min<size_t>(std::distance(r.grid.begin(), it),
                                              r.grid.size() - 1);
          for (Index c = 0; c < r.y[idx].size(); ++c)
            rec.put("y" + std::to_string(i) + "_" + std::to_string(c), r.y[idx](c));
        }
        rec.put("ode_residual", r.ode_residual);
        rec.put("bc_residual", r.bc_residual);
        rec.put("jump_residual", r.jump_residual);
        rec.put("quadrature_tail", r.quadrature_tail);
        if (p.tau.self_adjoint_constant()) {
          const GreenKernel k0 = make_green_kernel(s, NevanlinnaPair::tau0(p.tau.h), lambda);
          const ResolventResult rk = krein_resolvent(s, p.tau, k0, f);
          double dmax = 0.0;
          for (size_t i = 0; i < r.y.size(); ++i)
            dmax = std::max(dmax, (r.y[i] - rk.y[i]).norm());
          rec.put("krein_disagreement", dmax);
        }
        break;
      }
      case Command::Spectrum:
      case Command::Verify:
        throw Error("command handled at sweep level");
    }
  } catch (const Error& ex) {
    rec.ok = false;
    rec.error = ex.what();
  }
  rec.timing_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  return rec;
}

}  // namespace detail

inline SweepResult run_sweep(const ProblemFile& p, Command cmd, int threads = 1,
                             bool strict = false) {
  SweepResult out;
  out.command = cmd;
  out.config_hash = config_hash(p.canonical);
  const Setting s = p.setting();

  if (cmd == Command::Spectrum) {
    if (p.spectrum_hi <= p.spectrum_lo)
      throw SchemaError("$.spectrum_range", "spectrum requires a real range [lo, hi]");
    const std::vector<double> eigs =
        eig_scan(s, p.tau, p.spectrum_lo, p.spectrum_hi, p.spectrum_grid);
    for (size_t i = 0; i < eigs.size(); ++i) {
      SweepRecord rec;
      rec.lambda = cx(eigs[i], 0.0);
      rec.put("eigenvalue", eigs[i]);
      out.records.push_back(std::move(rec));
    }
    return out;
  }

  out.records.resize(p.lambdas.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= p.lambdas.size()) break;
      out.records[i] = detail::run_one(p, s, cmd, p.lambdas[i]);
    }
  };
  const int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (strict)
    for (const auto& r : out.records)
      if (!r.ok) throw Error("strict mode: lambda sweep failed: " + r.error);
  return out;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string emit_csv(const SweepResult& r) {
  // column set is the first-seen union across records: commands may attach
  // extra diagnostics only where they are defined (e.g. gaps off the real
  // axis), and error records carry no values at all
  std::vector<std::string> ckeys, dkeys;
  auto seen = [](const std::vector<std::string>& v, const std::string& k) {
    return std::find(v.begin(), v.end(), k) != v.end();
  };
  for (const auto& rec : r.records) {
    for (const auto& [k, v] : rec.cvalues)
      if (!seen(ckeys, k)) ckeys.push_back(k);
    for (const auto& [k, v] : rec.dvalues)
      if (!seen(dkeys, k)) dkeys.push_back(k);
  }

  std::ostringstream os;
  os << "re_lambda,im_lambda,ok";
  for (const auto& k : ckeys) os << ",re_" << k << ",im_" << k;
  for (const auto& k : dkeys) os << "," << k;
  os << ",error,config_hash\n";
  for (const auto& rec : r.records) {
    os << detail::fmt_double(rec.lambda.real()) << ','
       << detail::fmt_double(rec.lambda.imag()) << ',' << (rec.ok ? 1 : 0);
    for (const auto& key : ckeys) {
      bool found = false;
      for (const auto& [k, v] : rec.cvalues)
        if (k == key) {
          os << ',' << detail::fmt_double(v.real()) << ','
             << detail::fmt_double(v.imag());
          found = true;
          break;
        }
      if (!found) os << ",,";
    }
    for (const auto& key : dkeys) {
      bool found = false;
      for (const auto& [k, v] : rec.dvalues)
        if (k == key) {
          os << ',' << detail::fmt_double(v);
          found = true;
          break;
        }
      if (!found) os << ',';
    }
    std::string msg = rec.error;
    for (auto& ch : msg)
      if (ch == ',' || ch == '\n') ch = ';';
    os << ',' << msg << ',' << r.config_hash << '\n';
  }
  return os.str();
}

inline json record_to_json(const SweepRecord& rec, const std::string& hash) {
  json j;
  j["lambda"] = detail::dump_complex(rec.lambda);
  j["ok"] = rec.ok;
  j["config_hash"] = hash;
  if (!rec.ok) j["error"] = rec.error;
  for (const auto& [k, v] : rec.cvalues) j[k] = detail::dump_complex(v);
  for (const auto& [k, v] : rec.dvalues) j[k] = v;
  return j;
}

inline std::string emit_json(const SweepResult& r) {
  json root;
  root["command"] = command_name(r.command);
  root["config_hash"] = r.config_hash;
  json recs = json::array();
  for (const auto& rec : r.records) recs.push_back(record_to_json(rec, r.config_hash));
  root["records"] = recs;
  return root.dump(2) + "\n";
}

inline SweepResult parse_sweep_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& ex) {
    throw SchemaError("sweep json", ex.what());
  }
  SweepResult r;
  r.command = parse_command(root.at("command").get<std::string>());
  r.config_hash = root.at("config_hash").get<std::string>();
  for (const auto& jr : root.at("records")) {
    SweepRecord rec;
    rec.lambda = detail::parse_complex(jr.at("lambda"), "lambda");
    rec.ok = jr.at("ok").get<bool>();
    if (jr.contains("error")) rec.error = jr["error"].get<std::string>();
    for (auto it = jr.begin(); it != jr.end(); ++it) {
      if (it.key() == "lambda" || it.key() == "ok" || it.key() == "error" ||
          it.key() == "config_hash")
        continue;
      if (it->is_array())
        rec.put(it.key(), detail::parse_complex(*it, it.key()));
      else
        rec.put(it.key(), it->get<double>());
    }
    r.records.push_back(std::move(rec));
  }
  return r;
}

inline void emit(const SweepResult& r, const std::string& format, const std::string& path) {
  std::string text;
  if (format == "csv")
    text = emit_csv(r);
  else if (format == "json")
    text = emit_json(r);
  else
    throw Error("unknown output format '" + format + "'");
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file: " + path);
  out << text;
  if (!out) throw IoError("failed writing output file: " + path);
}

}  // namespace weylkit
