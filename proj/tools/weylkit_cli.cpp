// Batch front door: lambda-grid sweeps (m-function, characteristic matrix,
// Green kernel, resolvent application, eigenvalue scan) over a problem file,
// plus the built-in verification suite.
//
// Exit codes: 0 ok, 1 verification failure, 2 input error.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "weylkit/sweep.hpp"
#include "weylkit/verify.hpp"

namespace {

int run_verify_command(int threads, const std::string& out, const std::string& format) {
  using namespace weylkit;
  const VerifyReport rep = run_verify(threads);
  std::string text;
  if (format == "json") {
    json root;
    json checks = json::array();
    for (const auto& c : rep.checks) {
      json jc;
      jc["name"] = c.name;
      jc["value"] = c.value;
      jc["threshold"] = c.threshold;
      jc["pass"] = c.pass;
      checks.push_back(jc);
    }
    root["checks"] = checks;
    root["pass"] = rep.all_pass();
    text = root.dump(2) + "\n";
  } else {
    std::ostringstream os;
    for (const auto& c : rep.checks) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6g", c.value);
      char buf2[64];
      std::snprintf(buf2, sizeof(buf2), "%.6g", c.threshold);
      os << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << "  value=" << buf
         << " threshold=" << buf2 << "\n";
    }
    os << (rep.all_pass() ? "verify: all checks passed\n" : "verify: FAILURES present\n");
    text = os.str();
  }
  if (out.empty() || out == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) {
      std::cerr << "cannot open output file: " << out << "\n";
      return 2;
    }
    f << text;
  }
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace weylkit;

  CLI::App app{"weylkit: Weyl functions, characteristic matrices and Green kernels of "
               "even-order symmetric differential operators"};
  app.require_subcommand(1);

  std::string problem_path, out_path, format = "csv";
  int threads = 1;
  bool strict = false;
  size_t grid_override = 0;
  double tol_override = 0.0, cutoff_override = 0.0;

  auto add_common = [&](CLI::App* sub, bool needs_problem) {
    if (needs_problem)
      sub->add_option("problem", problem_path, "problem JSON file")->required();
    sub->add_option("--out", out_path, "output path (default stdout)");
    sub->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", threads, "worker threads for the lambda sweep");
    sub->add_flag("--strict", strict, "abort on the first per-lambda error");
    sub->add_option("--grid", grid_override, "override lambda/spectrum grid density");
    sub->add_option("--tol", tol_override, "override the m-limit tolerance");
    sub->add_option("--cutoff", cutoff_override, "override the final truncation cutoff");
  };

  CLI::App* mfun = app.add_subcommand("mfun", "Weyl m-function / full Weyl matrix sweep");
  CLI::App* charm = app.add_subcommand("charmat", "characteristic matrix sweep");
  CLI::App* green = app.add_subcommand("green", "Green kernel route check and samples");
  CLI::App* resolve = app.add_subcommand("resolve", "apply the generalized resolvent");
  CLI::App* spectrum = app.add_subcommand("spectrum", "eigenvalue scan on a real interval");
  CLI::App* verify = app.add_subcommand("verify", "run the built-in verification suite");
  for (CLI::App* sub : {mfun, charm, green, resolve, spectrum}) add_common(sub, true);
  add_common(verify, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) return run_verify_command(threads, out_path, format);

    ProblemFile p = parse_problem(problem_path);
    if (tol_override > 0) p.m_tol = tol_override;
    if (cutoff_override > 0) {
      std::vector<double> sched;
      double c = cutoff_override;
      while (sched.size() < 4 && c > 1.0) {
        sched.insert(sched.begin(), c);
        c *= 0.5;
      }
      p.schedule = sched;
    }
    if (grid_override > 0) p.spectrum_grid = grid_override;

    Command cmd = Command::Mfun;
    if (mfun->parsed()) cmd = Command::Mfun;
    if (charm->parsed()) cmd = Command::Charmat;
    if (green->parsed()) cmd = Command::Green;
    if (resolve->parsed()) cmd = Command::Resolve;
    if (spectrum->parsed()) cmd = Command::Spectrum;

    const auto t0 = std::chrono::steady_clock::now();
    const SweepResult r = run_sweep(p, cmd, threads, strict);
    const double total_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    emit(r, format, out_path);

    size_t failed = 0;
    double slowest = 0.0;
    for (const auto& rec : r.records) {
      if (!rec.ok) ++failed;
      slowest = std::max(slowest, rec.timing_ms);
    }
    std::fprintf(stderr, "%s: %zu records, %zu errors, %.1f ms total, %.1f ms slowest\n",
                 command_name(cmd), r.records.size(), failed, total_ms, slowest);
    return failed == 0 ? 0 : 1;
  } catch (const SchemaError& ex) {
    std::cerr << "input error: " << ex.what() << "\n";
    return 2;
  } catch (const IoError& ex) {
    std::cerr << "io error: " << ex.what() << "\n";
    return 2;
  } catch (const DimensionMismatch& ex) {
    std::cerr << "input error: " << ex.what() << "\n";
    return 2;
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
