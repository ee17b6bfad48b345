#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mcbd/model.hpp"
#include "mcbd/random.hpp"

namespace mcbd::solver {

/// Method-of-multipliers parameters. tol_misfit is relative:
/// converged when ||A(pq^T) - y_hat||^2 <= tol_misfit * ||y_hat||^2.
struct SolverConfig {
  double tol_misfit = 1e-10;
  double sigma0 = 1.0;
  double penalty_growth = 10.0;     // sigma <- growth * sigma on stalled feasibility
  double feasibility_factor = 0.25; // required shrink of ||residual|| per outer iteration
  int max_outer_iters = 2000;
  int lbfgs_memory = 10;
  double lbfgs_grad_tol = 1e-8;
  int lbfgs_max_iters = 500;
  int plateau_window = 20;
  double plateau_rel_decrease = 1e-3;
  double plateau_misfit_factor = 1e3;
  int max_restarts = 50;
  /// When > 0, convergence also requires the squared misfit to have stopped
  /// decreasing: relative decrease over the last outer iteration <= stall_tol.
  /// Used for noisy data, where the misfit floor sits below tol_misfit.
  double stall_tol = 0.0;
  /// Penalty growth stops here; keeps sigma finite when the misfit cannot reach zero.
  double sigma_max = 1e12;
  std::uint64_t rng_seed = 0;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// Stopping tolerance for observations with known noise level:
/// 1.1 * sigma_noise^2, sigma_noise = 10^(-snr_db / 20).
double noisy_tolerance(double snr_db);

/// Copy of `base` set up for observations at the given SNR: tol_misfit from
/// noisy_tolerance and stall_tol = 1e-3 unless base already sets one.
SolverConfig noisy_config(SolverConfig base, double snr_db);

struct SolverState {
  RealSeq p;
  RealSeq q;            // concatenated filters, length KN
  ComplexSeq lambda;    // multipliers, Fourier domain, length LN
  double sigma = 1.0;
  std::vector<double> misfit_history;  // squared misfit per outer iteration of this attempt
  int attempts = 0;                    // restarts so far
  int outer_iter = 0;                  // outer iterations over all attempts
  std::optional<double> prev_feasibility;
  double grad_norm = 0.0;              // inf-norm of the AL gradient after the last inner solve
  bool inner_capped = false;           // last inner solve stopped at lbfgs_max_iters

  /// Fresh attempt: Gaussian factors, lambda = 0, sigma = sigma0.
  static SolverState initial(const ProblemDims& dims, double sigma0, Rng& rng);
};

struct TraceRow {
  int attempt = 0;
  int outer_iter = 0;
  double misfit = 0.0;
  double sigma = 0.0;
  double grad_norm = 0.0;
};

struct SolveResult {
  CandidateSolution solution;
  int attempts = 0;  // restarts needed
  bool converged = false;
  double final_misfit = 0.0;  // ||A(pq^T) - y_hat||^2
  int outer_iters_total = 0;
  std::vector<TraceRow> trace;
};

/// 1/2(||p||^2 + ||q||^2) - Re<lambda, A(pq^T) - y_hat> + sigma/2 ||A(pq^T) - y_hat||^2.
double augmented_lagrangian(const RealSeq& p, const RealSeq& q, const ComplexSeq& lambda,
                            double sigma, const ProblemInstance& inst);

struct Gradient {
  RealSeq p;
  RealSeq q;
};
Gradient al_gradient(const RealSeq& p, const RealSeq& q, const ComplexSeq& lambda, double sigma,
                     const ProblemInstance& inst);

/// ||A(pq^T) - y_hat||^2.
double squared_misfit(const RealSeq& p, const RealSeq& q, const ProblemInstance& inst);

/// L-BFGS on the augmented Lagrangian at fixed (lambda, sigma). When
/// accepted_values is non-null it receives the objective after every accepted step.
SolverState inner_minimize(SolverState state, const SolverConfig& config,
                           const ProblemInstance& inst,
                           std::vector<double>* accepted_values = nullptr);

/// lambda <- lambda - sigma * residual; sigma grows when ||residual|| did not
/// shrink below feasibility_factor times its previous value.
SolverState multiplier_update(SolverState state, const SolverConfig& config,
                              const ProblemInstance& inst);

/// Trapped: at least W entries, relative decrease over the last W below
/// plateau_rel_decrease, and last misfit above plateau_misfit_factor * tol * ||y_hat||^2.
bool plateau_detected(const std::vector<double>& misfit_history, const SolverConfig& config,
                      double y_norm_sq);

SolveResult solve(const ProblemInstance& inst, const SolverConfig& config);

/// `attempt,outer_iter,misfit,sigma,grad_norm`
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

}  // namespace mcbd::solver
