#include "mcbd/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mcbd/errors.hpp"
#include "mcbd/experiments.hpp"
#include "mcbd/identifiability.hpp"
#include "mcbd/instance_io.hpp"
#include "mcbd/plots.hpp"
#include "mcbd/solver.hpp"

namespace mcbd::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kExitNotConverged = 1;
constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int jobs = 1;
  bool paper_scale = false;
  bool quiet = false;
  solver::SolverConfig solver;
};

void add_solver_flags(CLI::App& app, solver::SolverConfig& c) {
  const char* g = "Solver";
  app.add_option("--tol-misfit", c.tol_misfit, "relative squared-misfit stopping tolerance (noiseless)")
      ->capture_default_str()->group(g);
  app.add_option("--sigma0", c.sigma0, "initial penalty")->capture_default_str()->group(g);
  app.add_option("--penalty-growth", c.penalty_growth, "penalty multiplier on stalled feasibility")
      ->capture_default_str()->group(g);
  app.add_option("--feasibility-factor", c.feasibility_factor,
                 "required residual shrink per outer iteration")
      ->capture_default_str()->group(g);
  app.add_option("--sigma-max", c.sigma_max, "penalty cap")->capture_default_str()->group(g);
  app.add_option("--max-outer-iters", c.max_outer_iters, "outer iterations over all attempts")
      ->capture_default_str()->group(g);
  app.add_option("--lbfgs-memory", c.lbfgs_memory)->capture_default_str()->group(g);
  app.add_option("--lbfgs-grad-tol", c.lbfgs_grad_tol, "inner stop: |grad|_inf <= tol * max(1,|f|)")
      ->capture_default_str()->group(g);
  app.add_option("--lbfgs-max-iters", c.lbfgs_max_iters)->capture_default_str()->group(g);
  app.add_option("--plateau-window", c.plateau_window)->capture_default_str()->group(g);
  app.add_option("--plateau-rel-decrease", c.plateau_rel_decrease)->capture_default_str()->group(g);
  app.add_option("--plateau-misfit-factor", c.plateau_misfit_factor)->capture_default_str()->group(g);
  app.add_option("--max-restarts", c.max_restarts)->capture_default_str()->group(g);
  app.add_option("--stall-tol", c.stall_tol,
                 "noisy runs: converge only once the misfit stops decreasing (0 = off; "
                 "noisy instances default to 1e-3)")
      ->capture_default_str()->group(g);
}

fs::path out_path(const Globals& g, const std::string& name) {
  const fs::path dir(g.out_dir);
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  body(out);
}

experiments::Progress progress_printer(const Globals& g, const char* label) {
  if (g.quiet) return {};
  return [label, next = std::size_t{0}](std::size_t done, std::size_t total) mutable {
    const std::size_t pct = done * 100 / total;
    if (pct >= next || done == total) {
      std::cerr << fmt::format("{}: {}/{} trials\n", label, done, total);
      next = pct + 10;
    }
  };
}

// -- gen ---------------------------------------------------------------------

struct GenArgs {
  int L = 32, K = 8, N = 4;
  std::string output;
  std::string counterexample = "none";
  double beta = 0.5;
  std::optional<double> snr;
};

int cmd_gen(const Globals& g, const GenArgs& a) {
  const ProblemDims dims{a.L, a.K, a.N};
  dims.validate();
  Rng rng(g.seed);
  ProblemInstance inst;
  if (a.counterexample == "none") {
    inst = experiments::sample_instance(dims, rng);
  } else {
    const auto kind = a.counterexample == "no_top_tap" ? identifiability::CounterexampleKind::NoTopTap
                                                       : identifiability::CounterexampleKind::SharedRoot;
    RealSeq s = gaussian_vector(rng, dims.L);
    inst = make_instance(dims, std::move(s),
                         identifiability::make_counterexample(dims, kind, rng, a.beta));
  }
  std::optional<NoiseDirective> noise;
  if (a.snr) noise = NoiseDirective{*a.snr, mix64(g.seed)};
  const fs::path path = a.output.empty() ? out_path(g, "instance.txt") : fs::path(a.output);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_instance(path, inst, noise);
  std::cout << path.string() << '\n';
  return 0;
}

// -- check -------------------------------------------------------------------

struct CheckArgs {
  std::string input;
  identifiability::Tolerances tol;
  bool csv_only = false;
};

int cmd_check(const CheckArgs& a) {
  const ProblemInstance inst = load_instance(a.input);
  const auto report = identifiability::analyze(inst, a.tol);
  if (!a.csv_only) std::cout << report.to_text() << '\n';
  std::cout << identifiability::IdentifiabilityReport::csv_header() << '\n'
            << report.csv_row() << '\n';
  return 0;
}

// -- solve -------------------------------------------------------------------

struct SolveArgs {
  std::string input;
  std::string trace;
  std::string solution;
};

int cmd_solve(const Globals& g, const SolveArgs& a) {
  const ProblemInstance inst = load_instance(a.input);
  solver::SolverConfig cfg = g.solver;
  if (inst.snr_db) cfg = solver::noisy_config(cfg, *inst.snr_db);
  cfg.rng_seed = g.seed;
  const auto res = solver::solve(inst, cfg);
  const double y2 = inst.observations_fourier.squaredNorm();
  const double err = relative_outer_error(GroundTruthLift::from(inst), res.solution);

  std::cout << fmt::format("converged: {}\n", res.converged ? "yes" : "no")
            << fmt::format("attempts: {}\n", res.attempts)
            << fmt::format("outer_iters: {}\n", res.outer_iters_total)
            << fmt::format("relative_misfit: {:.6e}\n", y2 > 0 ? res.final_misfit / y2 : 0.0)
            << fmt::format("rel_error: {:.6e}\n", err)
            << fmt::format("success: {}\n", err < experiments::kSuccessThreshold ? "yes" : "no");

  if (!a.trace.empty()) {
    write_file(a.trace, [&](std::ostream& o) { solver::write_trace_csv(o, res.trace); });
  }
  if (!a.solution.empty()) {
    write_file(a.solution, [&](std::ostream& o) {
      o.precision(17);
      o << "p";
      for (double v : res.solution.p()) o << ' ' << v;
      o << '\n';
      for (int n = 0; n < res.solution.N(); ++n) {
        o << "q" << n;
        for (double v : res.solution.channel(n)) o << ' ' << v;
        o << '\n';
      }
    });
  }
  return res.converged ? 0 : kExitNotConverged;
}

// -- phase / noise -----------------------------------------------------------

struct PhaseArgs {
  int L = 32;
  std::vector<int> N_values;
  std::vector<int> K_values;
  int trials = 0;
  bool plots = false;
};

int cmd_phase(const Globals& g, const PhaseArgs& a) {
  auto spec = g.paper_scale ? experiments::GridSpec::paper() : experiments::GridSpec::desk();
  spec.L = a.L;
  if (!a.N_values.empty()) spec.N_values = a.N_values;
  if (!a.K_values.empty()) spec.K_values = a.K_values;
  if (a.trials > 0) spec.trials_per_cell = a.trials;
  spec.base_seed = g.seed;

  const auto res = experiments::run_phase_grid(spec, g.solver, g.jobs, progress_printer(g, "phase"));
  const auto phase_csv = out_path(g, "phase.csv");
  const auto boundary_csv = out_path(g, "boundary.csv");
  write_file(phase_csv, [&](std::ostream& o) { experiments::write_phase_csv(o, res.cells); });
  write_file(boundary_csv, [&](std::ostream& o) { experiments::write_boundary_csv(o, res.boundary); });
  std::cout << phase_csv.string() << '\n' << boundary_csv.string() << '\n';
  if (a.plots) {
    for (const auto& p : plots::render_plots({phase_csv, boundary_csv}, g.out_dir)) {
      std::cout << p.string() << '\n';
    }
  }
  return 0;
}

struct NoiseArgs {
  int L = 32;
  int K = 8;
  std::vector<int> N_values;
  std::vector<double> snr_values;
  int trials = 0;
  bool plots = false;
};

int cmd_noise(const Globals& g, const NoiseArgs& a) {
  auto spec = experiments::NoiseSpec::desk();
  if (!a.snr_values.empty()) spec.snr_db_list = a.snr_values;
  std::vector<int> ns = a.N_values.empty() ? std::vector<int>{4, 6, 8} : a.N_values;
  spec.configs.clear();
  for (int n : ns) spec.configs.push_back({a.L, a.K, n});
  if (g.paper_scale) spec.trials_per_point = 2800;
  if (a.trials > 0) spec.trials_per_point = a.trials;
  spec.base_seed = g.seed;

  const auto res = experiments::run_noise_sweep(spec, g.solver, g.jobs, progress_printer(g, "noise"));
  const auto csv = out_path(g, "noise.csv");
  write_file(csv, [&](std::ostream& o) { experiments::write_noise_csv(o, res.points); });
  std::cout << csv.string() << '\n';
  if (a.plots) {
    for (const auto& p : plots::render_plots({csv}, g.out_dir)) std::cout << p.string() << '\n';
  }
  return 0;
}

int cmd_plot(const Globals& g, const std::vector<std::string>& inputs) {
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  for (const auto& p : plots::render_plots(paths, g.out_dir)) std::cout << p.string() << '\n';
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Multi-channel blind deconvolution with short filters"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "base seed; every random draw derives from it")->capture_default_str();
  app.add_option("--out", g.out_dir, "output directory")
      ->envname("MCBD_OUT_DIR")
      ->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker threads for phase/noise")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--paper-scale", g.paper_scale, "phase: N=2..10, K=1..32, 100 trials per cell; noise: 2800 trials per point");
  app.add_flag("-q,--quiet", g.quiet, "no progress output");
  add_solver_flags(app, g.solver);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "sample an instance and write it to a file");
  gen_cmd->add_option("--L", gen.L)->capture_default_str();
  gen_cmd->add_option("--K", gen.K)->capture_default_str();
  gen_cmd->add_option("--N", gen.N)->capture_default_str();
  gen_cmd->add_option("-o,--output", gen.output, "instance file (default <out>/instance.txt)");
  gen_cmd->add_option("--counterexample", gen.counterexample)
      ->check(CLI::IsMember({"none", "no_top_tap", "shared_root"}))
      ->capture_default_str();
  gen_cmd->add_option("--beta", gen.beta, "shared root for --counterexample shared_root")
      ->capture_default_str();
  gen_cmd->add_option("--snr", gen.snr, "append a NOISE block at this SNR (dB)");

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "identifiability report for an instance file");
  check_cmd->add_option("input", check.input)->required()->check(CLI::ExistingFile);
  check_cmd->add_option("--null-tol", check.tol.null_rel, "relative singular-value cutoff")
      ->capture_default_str();
  check_cmd->add_option("--root-tol", check.tol.root_abs, "common-root distance")
      ->capture_default_str();
  check_cmd->add_flag("--csv", check.csv_only, "print only the CSV row");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "recover signal and filters from an instance file");
  solve_cmd->add_option("input", solve.input)->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--trace", solve.trace, "per-outer-iteration trace CSV");
  solve_cmd->add_option("--solution", solve.solution, "write recovered p and q_n");

  PhaseArgs phase;
  auto* phase_cmd = app.add_subcommand("phase", "success-probability grid over (N, K)");
  phase_cmd->add_option("--L", phase.L)->capture_default_str();
  phase_cmd->add_option("--N", phase.N_values, "channel counts (default 2 4 8)")->delimiter(',');
  phase_cmd->add_option("--K", phase.K_values, "filter lengths (default 2 4 8 12 16 24 28 32)")
      ->delimiter(',');
  phase_cmd->add_option("--trials", phase.trials, "trials per cell (default 20, 100 with --paper-scale)");
  phase_cmd->add_flag("--plots", phase.plots, "also render SVG heatmaps");

  NoiseArgs noise;
  auto* noise_cmd = app.add_subcommand("noise", "relative error against SNR");
  noise_cmd->add_option("--L", noise.L)->capture_default_str();
  noise_cmd->add_option("--K", noise.K)->capture_default_str();
  noise_cmd->add_option("--N", noise.N_values, "channel counts (default 4 6 8)")->delimiter(',');
  noise_cmd->add_option("--snr", noise.snr_values, "SNR list in dB, inf for noiseless (default 0..80 step 10)")
      ->delimiter(',');
  noise_cmd->add_option("--trials", noise.trials, "trials per point (default 20, 2800 with --paper-scale)");
  noise_cmd->add_flag("--plots", noise.plots, "also render the SVG chart");

  std::vector<std::string> plot_inputs;
  auto* plot_cmd = app.add_subcommand("plot", "render SVG figures from phase/noise/boundary CSVs");
  plot_cmd->add_option("csv", plot_inputs)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitInput;
  }

  try {
    g.solver.validate();
    if (*gen_cmd) return cmd_gen(g, gen);
    if (*check_cmd) return cmd_check(check);
    if (*solve_cmd) return cmd_solve(g, solve);
    if (*phase_cmd) return cmd_phase(g, phase);
    if (*noise_cmd) return cmd_noise(g, noise);
    if (*plot_cmd) return cmd_plot(g, plot_inputs);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInput;
}

}  // namespace mcbd::cli
