// gammaplast: command-line front end.
//
//   gammaplast check          [--config F] [--seed S] [--out DIR]
//   gammaplast run-finite     --eps E [--config F] [--out DIR] [--diagnostics]
//   gammaplast run-linearized [--config F] [--out DIR] [--diagnostics]
//   gammaplast sweep          [--config F] [--out DIR] [--seed S]
//   gammaplast defaults
//
// Exit status: 0 success, 1 model or configuration error, 2 solver
// non-convergence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gammaplast/assumption_checks.hpp"
#include "gammaplast/config.hpp"
#include "gammaplast/diagnostics.hpp"
#include "gammaplast/errors.hpp"
#include "gammaplast/finite_solver.hpp"
#include "gammaplast/format.hpp"
#include "gammaplast/gamma_harness.hpp"
#include "gammaplast/io.hpp"
#include "gammaplast/linear_solver.hpp"

namespace fs = std::filesystem;
using namespace gammaplast;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> eps;
  bool diagnostics = false;
  int samples = 1000;
};

RunConfig load_config(const Options& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) {
    ParsedConfig parsed = parse_config(o.config_path);
    for (const auto& note : parsed.notes) std::cerr << "note: " << note << "\n";
    cfg = std::move(parsed.config);
  }
  if (o.out) cfg.output_dir = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw ArgumentError("cannot write " + p.string());
  return f;
}

int cmd_check(const Options& o) {
  const RunConfig cfg = load_config(o);
  const AssumptionReport rep = run_assumption_suite(cfg.material, o.samples, cfg.seed);
  const std::string text = rep.to_text();
  std::cout << text;
  if (o.out) {
    auto f = open_out(out_dir(cfg) / "assumptions.txt");
    f << text;
  }
  return rep.worst_violation <= 0.0 ? 0 : 1;
}

void finish_run(const RunConfig& cfg, const Mesh& mesh, const LoadProgram& load, const MaterialParams& p,
                const Trajectory& traj, double alpha, const std::string& stem, bool with_diag) {
  const fs::path dir = out_dir(cfg);
  {
    auto f = open_out(dir / (stem + ".traj"));
    write_trajectory(f, mesh, traj);
  }
  if (with_diag) {
    const DiagnosticsReport diag = diagnostics(traj, mesh, load, p, alpha);
    auto f = open_out(dir / (stem + ".diagnostics.jsonl"));
    write_diagnostics_jsonl(f, traj, diag);
    std::cout << "worst stability residual " << fmt_double(diag.worst_stability) << "\n";
  }
  std::cout << "wrote " << (dir / (stem + ".traj")).string() << "\n";
}

int cmd_run_finite(const Options& o) {
  if (!o.eps || !(*o.eps > 0.0))
    throw ValidationError("run-finite: --eps must be positive (use run-linearized for eps = 0)");
  const RunConfig cfg = load_config(o);
  const double eps = *o.eps;
  const MaterialParams p = resolve_material(cfg);
  const Mesh mesh = cfg.build();
  const LoadProgram load = cfg.load_program(mesh);
  const TimeGrid grid = cfg.grid(eps);
  FiniteSolver solver(mesh, load, p, eps, cfg.tolerances);
  const Trajectory traj = solver.solve_trajectory(grid);
  finish_run(cfg, mesh, load, p, traj, grid.alpha, "finite_eps" + fmt_double(eps), o.diagnostics);
  return 0;
}

int cmd_run_linearized(const Options& o) {
  const RunConfig cfg = load_config(o);
  const MaterialParams p = resolve_material(cfg);
  const Mesh mesh = cfg.build();
  const LoadProgram load = cfg.load_program(mesh);
  const TimeGrid grid = cfg.grid(0.0);
  const LinearSolver solver(mesh, load, p, cfg.tolerances);
  const Trajectory traj = solver.solve_trajectory0(grid);
  finish_run(cfg, mesh, load, p, traj, 0.0, "linearized", o.diagnostics);
  return 0;
}

int cmd_sweep(const Options& o) {
  const RunConfig cfg = load_config(o);
  const SweepReport rep = run_sweep(cfg, [](const std::string& s) { std::cerr << s << "\n"; });
  const fs::path csv = out_dir(cfg) / "sweep.csv";
  {
    auto f = open_out(csv);
    write_csv(rep, f);
  }
  for (const auto& [name, order] : rep.orders) std::cout << "order " << name << " " << fmt_double(order) << "\n";
  for (const auto& fail : rep.failures)
    std::cerr << "error kind=" << fail.kind << " eps=" << fmt_double(fail.eps) << " message=\"" << fail.message
              << "\"\n";
  std::cout << "wrote " << csv.string() << "\n";
  if (rep.failures.empty()) return 0;
  for (const auto& fail : rep.failures)
    if (fail.kind != "NonConvergence" && fail.kind != "BarrierError") return 1;
  return 2;
}

int exit_code(const Error& e) {
  const std::string k = e.kind();
  return (k == "NonConvergence" || k == "BarrierError") ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-strain and linearized elastoplasticity with an epsilon sweep"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "YAML run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (overrides output_dir)");
    sub->add_option("--seed", o.seed, "sampling seed (overrides seed)");
  };
  auto* check = app.add_subcommand("check", "sample the material hypotheses");
  common(check);
  check->add_option("--samples", o.samples, "samples per check")->check(CLI::Range(100, 10000000));
  auto* finite = app.add_subcommand("run-finite", "finite-strain trajectory for one eps");
  common(finite);
  finite->add_option("--eps", o.eps, "rescaling parameter eps > 0")->required();
  finite->add_flag("--diagnostics", o.diagnostics, "write JSON-lines step diagnostics");
  auto* linear = app.add_subcommand("run-linearized", "linearized trajectory");
  common(linear);
  linear->add_flag("--diagnostics", o.diagnostics, "write JSON-lines step diagnostics");
  auto* sweep = app.add_subcommand("sweep", "epsilon sweep against the linearized reference");
  common(sweep);
  auto* defaults = app.add_subcommand("defaults", "print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*defaults) {
      std::cout << serialize_config(RunConfig{});
      return 0;
    }
    if (*check) return cmd_check(o);
    if (*finite) return cmd_run_finite(o);
    if (*linear) return cmd_run_linearized(o);
    if (*sweep) return cmd_sweep(o);
  } catch (const Error& e) {
    std::cerr << "error kind=" << e.kind() << " message=\"" << e.what() << "\"\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error kind=Internal message=\"" << e.what() << "\"\n";
    return 1;
  }
  return 1;
}
