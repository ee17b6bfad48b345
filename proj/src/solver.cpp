#include "mcbd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "mcbd/errors.hpp"
#include "mcbd/lbfgs.hpp"

namespace mcbd::solver {

void SolverConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("solver config: ") + what);
  };
  require(tol_misfit > 0.0, "tol_misfit must be > 0");
  require(sigma0 > 0.0, "sigma0 must be > 0");
  require(penalty_growth > 1.0, "penalty_growth must be > 1");
  require(feasibility_factor > 0.0 && feasibility_factor < 1.0, "feasibility_factor must be in (0,1)");
  require(max_outer_iters >= 1, "max_outer_iters must be >= 1");
  require(lbfgs_memory >= 1, "lbfgs_memory must be >= 1");
  require(lbfgs_grad_tol > 0.0, "lbfgs_grad_tol must be > 0");
  require(lbfgs_max_iters >= 1, "lbfgs_max_iters must be >= 1");
  require(plateau_window >= 2, "plateau_window must be >= 2");
  require(plateau_rel_decrease > 0.0, "plateau_rel_decrease must be > 0");
  require(plateau_misfit_factor > 0.0, "plateau_misfit_factor must be > 0");
  require(max_restarts >= 0, "max_restarts must be >= 0");
  require(stall_tol >= 0.0, "stall_tol must be >= 0");
  require(sigma_max >= sigma0, "sigma_max must be >= sigma0");
}

double noisy_tolerance(double snr_db) { return 1.1 * std::pow(10.0, -snr_db / 10.0); }

SolverConfig noisy_config(SolverConfig base, double snr_db) {
  base.tol_misfit = noisy_tolerance(snr_db);
  if (base.stall_tol == 0.0) base.stall_tol = 1e-3;
  return base;
}

SolverState SolverState::initial(const ProblemDims& dims, double sigma0, Rng& rng) {
  SolverState s;
  s.p = gaussian_vector(rng, dims.L);
  s.q = gaussian_vector(rng, dims.K * dims.N);
  s.lambda = ComplexSeq::Zero(dims.measurements());
  s.sigma = sigma0;
  return s;
}

namespace {

void check_state(const RealSeq& p, const RealSeq& q, const ComplexSeq& lambda,
                 const ProblemDims& d) {
  if (p.size() != d.L || q.size() != d.K * d.N || lambda.size() != d.measurements()) {
    throw DimensionError("solver state does not match instance dimensions");
  }
}

// Value and gradient of the augmented Lagrangian sharing one set of spectra.
double evaluate(const LiftedOperator& op, const RealSeq& p, const RealSeq& q,
                const ComplexSeq& lambda, double sigma, const ComplexSeq& y_hat, RealSeq* grad_p,
                RealSeq* grad_q) {
  const auto spectra = op.spectra(p, q);
  const ComplexSeq r = op.apply(spectra) - y_hat;
  const double value = 0.5 * (p.squaredNorm() + q.squaredNorm()) - lambda.dot(r).real() +
                       0.5 * sigma * r.squaredNorm();
  if (grad_p || grad_q) {
    const ComplexSeq weight = sigma * r - lambda;
    if (grad_p) *grad_p = p + op.adjoint_p(weight, spectra);
    if (grad_q) *grad_q = q + op.adjoint_q(weight, spectra);
  }
  return value;
}

bool stalled(const std::vector<double>& history, double stall_tol) {
  if (stall_tol <= 0.0) return true;
  if (history.size() < 2) return false;
  const double prev = history[history.size() - 2];
  return prev <= 0.0 || (prev - history.back()) / prev <= stall_tol;
}

}  // namespace

double augmented_lagrangian(const RealSeq& p, const RealSeq& q, const ComplexSeq& lambda,
                            double sigma, const ProblemInstance& inst) {
  check_state(p, q, lambda, inst.dims);
  const LiftedOperator op(inst.dims);
  return evaluate(op, p, q, lambda, sigma, inst.observations_fourier, nullptr, nullptr);
}

Gradient al_gradient(const RealSeq& p, const RealSeq& q, const ComplexSeq& lambda, double sigma,
                     const ProblemInstance& inst) {
  check_state(p, q, lambda, inst.dims);
  const LiftedOperator op(inst.dims);
  Gradient g;
  evaluate(op, p, q, lambda, sigma, inst.observations_fourier, &g.p, &g.q);
  return g;
}

double squared_misfit(const RealSeq& p, const RealSeq& q, const ProblemInstance& inst) {
  return (LiftedOperator(inst.dims).apply(p, q) - inst.observations_fourier).squaredNorm();
}

SolverState inner_minimize(SolverState state, const SolverConfig& config,
                           const ProblemInstance& inst, std::vector<double>* accepted_values) {
  const auto& d = inst.dims;
  check_state(state.p, state.q, state.lambda, d);
  const LiftedOperator op(d);
  const Eigen::Index lp = d.L;
  const Eigen::Index lq = d.K * d.N;

  RealSeq gp(lp), gq(lq);
  const optim::Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const double v = evaluate(op, x.head(lp), x.tail(lq), state.lambda, state.sigma,
                              inst.observations_fourier, &gp, &gq);
    grad.head(lp) = gp;
    grad.tail(lq) = gq;
    return v;
  };

  Eigen::VectorXd x0(lp + lq);
  x0 << state.p, state.q;
  optim::LbfgsOptions opts;
  opts.memory = config.lbfgs_memory;
  opts.grad_tol = config.lbfgs_grad_tol;
  opts.max_iters = config.lbfgs_max_iters;
  auto res = optim::lbfgs_minimize(objective, std::move(x0), opts);

  state.p = res.x.head(lp);
  state.q = res.x.tail(lq);
  state.grad_norm = res.grad.lpNorm<Eigen::Infinity>();
  state.inner_capped = res.status == optim::LbfgsStatus::MaxIterations;
  if (accepted_values) *accepted_values = std::move(res.accepted_values);
  return state;
}

SolverState multiplier_update(SolverState state, const SolverConfig& config,
                              const ProblemInstance& inst) {
  check_state(state.p, state.q, state.lambda, inst.dims);
  const ComplexSeq r =
      LiftedOperator(inst.dims).apply(state.p, state.q) - inst.observations_fourier;
  const double feasibility = r.norm();
  state.lambda -= state.sigma * r;
  if (state.prev_feasibility && feasibility > config.feasibility_factor * *state.prev_feasibility) {
    state.sigma = std::min(state.sigma * config.penalty_growth, config.sigma_max);
  }
  state.prev_feasibility = feasibility;
  return state;
}

bool plateau_detected(const std::vector<double>& history, const SolverConfig& config,
                      double y_norm_sq) {
  const auto w = static_cast<std::size_t>(config.plateau_window);
  if (history.size() < w) return false;
  const double first = history[history.size() - w];
  const double last = history.back();
  const double rel_decrease = first > 0.0 ? (first - last) / first : 0.0;
  return rel_decrease < config.plateau_rel_decrease &&
         last > config.plateau_misfit_factor * config.tol_misfit * y_norm_sq;
}

SolveResult solve(const ProblemInstance& inst, const SolverConfig& config) {
  config.validate();
  const auto& d = inst.dims;
  const double y_norm_sq = inst.observations_fourier.squaredNorm();
  const double threshold = config.tol_misfit * y_norm_sq;

  Rng rng(config.rng_seed);
  SolverState state = SolverState::initial(d, config.sigma0, rng);
  std::vector<TraceRow> trace;
  bool converged = false;
  double misfit = squared_misfit(state.p, state.q, inst);

  while (state.outer_iter < config.max_outer_iters) {
    state = inner_minimize(std::move(state), config, inst);
    misfit = squared_misfit(state.p, state.q, inst);
    ++state.outer_iter;
    state.misfit_history.push_back(misfit);
    trace.push_back({state.attempts, state.outer_iter, misfit, state.sigma, state.grad_norm});
    const bool stuck = stalled(state.misfit_history, config.stall_tol);
    // Restart triggers beyond the plateau rule. Above tolerance: penalty at
    // its cap and the misfit no longer moving. Below tolerance with noisy
    // data: a stalled misfit from an inner solve that ran out of iterations,
    // i.e. factors sliding along a flat valley rather than a stationary point.
    const bool trapped =
        stuck && (misfit > threshold
                      ? state.sigma >= config.sigma_max
                      : config.stall_tol > 0.0 && state.inner_capped &&
                            state.misfit_history.size() >= 2);
    if (misfit <= threshold && stuck && !trapped) {
      converged = true;
      break;
    }
    state = multiplier_update(std::move(state), config, inst);
    if (trapped || plateau_detected(state.misfit_history, config, y_norm_sq)) {
      if (state.attempts >= config.max_restarts) break;
      SolverState fresh = SolverState::initial(d, config.sigma0, rng);
      fresh.attempts = state.attempts + 1;
      fresh.outer_iter = state.outer_iter;
      state = std::move(fresh);
    }
  }

  return SolveResult{CandidateSolution(state.p, state.q, d.K), state.attempts, converged, misfit,
                     state.outer_iter, std::move(trace)};
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "attempt,outer_iter,misfit,sigma,grad_norm\n";
  for (const auto& row : trace) {
    out << fmt::format("{},{},{:.9e},{:.6e},{:.6e}\n", row.attempt, row.outer_iter, row.misfit,
                       row.sigma, row.grad_norm);
  }
}

}  // namespace mcbd::solver
