#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mcbd/model.hpp"
#include "mcbd/random.hpp"
#include "mcbd/solver.hpp"

namespace mcbd::experiments {

inline constexpr double kSuccessThreshold = 0.02;

struct TrialOutcome {
  int L = 0;
  int N = 0;
  int K = 0;
  int trial_index = 0;
  bool success = false;
  bool converged = false;
  double rel_error = 1.0;
  int attempts = 0;
  std::optional<double> snr_db;  // nullopt: noiseless
  std::uint64_t seed = 0;
  double wall_time = 0.0;  // seconds
};

struct GridSpec {
  int L = 32;
  std::vector<int> N_values;
  std::vector<int> K_values;
  int trials_per_cell = 20;
  double success_threshold = kSuccessThreshold;
  std::uint64_t base_seed = 0;

  void validate() const;
  /// N in {2,4,8}, K in {2,4,8,12,16,24,28,32}, 20 trials per cell.
  static GridSpec desk();
  /// N = 2..10, K = 1..32, 100 trials per cell.
  static GridSpec paper();
};

struct NoiseSpec {
  std::vector<double> snr_db_list;  // +inf means noiseless
  std::vector<ProblemDims> configs;
  int trials_per_point = 20;
  double success_threshold = kSuccessThreshold;
  std::uint64_t base_seed = 0;

  void validate() const;
  /// L=32, K=8, N in {4,6,8}, SNR 0..80 dB step 10, 20 trials per point.
  static NoiseSpec desk();
};

/// s and h_n with i.i.d. standard normal entries.
ProblemInstance sample_instance(const ProblemDims& dims, Rng& rng);

/// y_n += sigma * ||y_n|| * nu_n / ||nu_n|| with sigma = 10^(-snr_db/20), nu_n
/// standard Gaussian. snr_db = +inf returns the instance unchanged. Throws
/// DegenerateError on an all-zero observation, std::invalid_argument on NaN/-inf.
ProblemInstance add_noise(const ProblemInstance& inst, double snr_db, Rng& rng);

/// base_seed XOR hash(N, K, snr bits, trial_index).
std::uint64_t trial_seed(std::uint64_t base_seed, int N, int K, std::optional<double> snr_db,
                         int trial_index);

/// Largest K with L*N >= L + K*N - 1, capped at L.
int information_limit(int L, int N);

/// One deconvolution: fresh instance (and noise) from trial_seed, solve, score.
TrialOutcome run_trial(const ProblemDims& dims, std::optional<double> snr_db, int trial_index,
                       std::uint64_t base_seed, const solver::SolverConfig& config,
                       double success_threshold);

/// Per-cell (phase grid) or per-point (noise sweep) reduction.
struct Summary {
  int L = 0;
  int N = 0;
  int K = 0;
  std::optional<double> snr_db;
  int trials = 0;
  int successes = 0;
  double success_prob = 0.0;
  /// Mean attempts over successful trials; nullopt when there were none.
  std::optional<double> mean_attempts_success;
  double mean_rel_err = 0.0;
  double median_rel_err = 0.0;
  /// Standard error of the mean relative error (0 for fewer than 2 trials).
  double stderr_rel_err = 0.0;
};

struct CellKey {
  int L = 0;
  int N = 0;
  int K = 0;
  std::optional<double> snr_db;
};

/// Order-independent reduction. Every key in `cells` gets a row (trials = 0
/// when it has no outcomes); rows are sorted by (N, K, snr).
std::vector<Summary> aggregate(std::vector<TrialOutcome> outcomes,
                               const std::vector<CellKey>& cells = {});

struct BoundaryPoint {
  int N = 0;
  int K_star = 0;
};

struct PhaseGridResult {
  std::vector<TrialOutcome> outcomes;
  std::vector<Summary> cells;
  std::vector<BoundaryPoint> boundary;
};

struct NoiseSweepResult {
  std::vector<TrialOutcome> outcomes;
  std::vector<Summary> points;
};

/// Called after each finished trial with (done, total).
using Progress = std::function<void(std::size_t, std::size_t)>;

PhaseGridResult run_phase_grid(const GridSpec& spec, const solver::SolverConfig& config,
                               int jobs = 1, const Progress& progress = {});

/// Noisy trials use tol_misfit = noisy_tolerance(snr_db).
NoiseSweepResult run_noise_sweep(const NoiseSpec& spec, const solver::SolverConfig& config,
                                 int jobs = 1, const Progress& progress = {});

/// Least-squares slope of log10(mean_rel_err) against snr_db over the points
/// of one (L, K, N) curve with snr in [min_snr, max_snr]. Throws if < 2 points.
double log_error_slope(const std::vector<Summary>& points, const ProblemDims& curve,
                       double min_snr, double max_snr);

void write_phase_csv(std::ostream& out, const std::vector<Summary>& cells);
void write_noise_csv(std::ostream& out, const std::vector<Summary>& points);
void write_boundary_csv(std::ostream& out, const std::vector<BoundaryPoint>& boundary);

}  // namespace mcbd::experiments
