#include "mcbd/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "mcbd/errors.hpp"

namespace mcbd::experiments {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::optional<double> normalize_snr(std::optional<double> snr) {
  if (snr && std::isinf(*snr) && *snr > 0) return std::nullopt;
  return snr;
}

// Sort key placing the noiseless point after every finite SNR.
double snr_key(const std::optional<double>& snr) { return snr ? *snr : kInf; }

std::string format_snr(const std::optional<double>& snr) {
  return snr ? fmt::format("{:g}", *snr) : std::string("inf");
}

template <class Task>
void run_parallel(std::size_t count, int jobs, const Task& task, const Progress& progress) {
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      task(i);
      const std::size_t d = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(d, count);
      }
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, jobs));
  if (n_threads == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < std::min(n_threads, count); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace

void GridSpec::validate() const {
  if (L < 1) throw std::invalid_argument("grid: L must be >= 1");
  if (trials_per_cell < 1) throw std::invalid_argument("grid: trials_per_cell must be >= 1");
  if (!(success_threshold > 0.0 && success_threshold < 1.0)) {
    throw std::invalid_argument("grid: success_threshold must be in (0,1)");
  }
  if (N_values.empty() || K_values.empty()) throw std::invalid_argument("grid: empty N or K range");
  for (int n : N_values) ProblemDims{L, 1, n}.validate();
  for (int k : K_values) ProblemDims{L, k, 1}.validate();
}

GridSpec GridSpec::desk() {
  GridSpec g;
  g.N_values = {2, 4, 8};
  g.K_values = {2, 4, 8, 12, 16, 24, 28, 32};
  return g;
}

GridSpec GridSpec::paper() {
  GridSpec g;
  for (int n = 2; n <= 10; ++n) g.N_values.push_back(n);
  for (int k = 1; k <= 32; ++k) g.K_values.push_back(k);
  g.trials_per_cell = 100;
  return g;
}

void NoiseSpec::validate() const {
  if (trials_per_point < 1) throw std::invalid_argument("noise: trials_per_point must be >= 1");
  if (snr_db_list.empty() || configs.empty()) throw std::invalid_argument("noise: empty sweep");
  for (double s : snr_db_list) {
    if (std::isnan(s) || (std::isinf(s) && s < 0)) throw std::invalid_argument("noise: bad SNR");
  }
  for (const auto& c : configs) c.validate();
}

NoiseSpec NoiseSpec::desk() {
  NoiseSpec s;
  for (int db = 0; db <= 80; db += 10) s.snr_db_list.push_back(db);
  for (int n : {4, 6, 8}) s.configs.push_back({32, 8, n});
  return s;
}

ProblemInstance sample_instance(const ProblemDims& dims, Rng& rng) {
  dims.validate();
  RealSeq s = gaussian_vector(rng, dims.L);
  std::vector<ShortFilter> h;
  h.reserve(static_cast<std::size_t>(dims.N));
  for (int n = 0; n < dims.N; ++n) h.emplace_back(gaussian_vector(rng, dims.K), dims.L);
  return make_instance(dims, std::move(s), std::move(h));
}

ProblemInstance add_noise(const ProblemInstance& inst, double snr_db, Rng& rng) {
  if (std::isnan(snr_db) || (std::isinf(snr_db) && snr_db < 0)) {
    throw std::invalid_argument("add_noise: SNR must be finite or +inf");
  }
  if (std::isinf(snr_db)) return inst;
  const double level = std::pow(10.0, -snr_db / 20.0);
  std::vector<RealSeq> noisy;
  noisy.reserve(inst.observations.size());
  for (const auto& y : inst.observations) {
    const double y_norm = y.norm();
    if (!(y_norm > 0.0)) throw DegenerateError("add_noise: all-zero observation");
    RealSeq nu = gaussian_vector(rng, y.size());
    noisy.push_back(y + (level * y_norm / nu.norm()) * nu);
  }
  ProblemInstance out = with_observations(inst, std::move(noisy));
  out.snr_db = snr_db;
  return out;
}

std::uint64_t trial_seed(std::uint64_t base_seed, int N, int K, std::optional<double> snr_db,
                         int trial_index) {
  snr_db = normalize_snr(snr_db);
  const std::uint64_t snr_bits =
      snr_db ? std::bit_cast<std::uint64_t>(*snr_db) : 0x7ff0000000000000ULL;
  std::uint64_t h = mix64(static_cast<std::uint64_t>(N));
  h = mix64(h ^ static_cast<std::uint64_t>(K));
  h = mix64(h ^ snr_bits);
  h = mix64(h ^ static_cast<std::uint64_t>(trial_index));
  return base_seed ^ h;
}

int information_limit(int L, int N) {
  // L*N >= L + K*N - 1  <=>  K <= (L*N - L + 1) / N
  return std::min(L, (L * N - L + 1) / N);
}

TrialOutcome run_trial(const ProblemDims& dims, std::optional<double> snr_db, int trial_index,
                       std::uint64_t base_seed, const solver::SolverConfig& config,
                       double success_threshold) {
  snr_db = normalize_snr(snr_db);
  const auto start = std::chrono::steady_clock::now();
  TrialOutcome out;
  out.L = dims.L;
  out.N = dims.N;
  out.K = dims.K;
  out.trial_index = trial_index;
  out.snr_db = snr_db;
  out.seed = trial_seed(base_seed, dims.N, dims.K, snr_db, trial_index);

  Rng rng(out.seed);
  ProblemInstance inst = sample_instance(dims, rng);
  solver::SolverConfig cfg = config;
  if (snr_db) {
    inst = add_noise(inst, *snr_db, rng);
    cfg = solver::noisy_config(cfg, *snr_db);
  }
  cfg.rng_seed = config.rng_seed ^ mix64(out.seed);

  const auto result = solver::solve(inst, cfg);
  out.converged = result.converged;
  if (result.converged) {
    out.rel_error = relative_outer_error(GroundTruthLift::from(inst), result.solution);
    out.attempts = result.attempts;
  } else {
    out.rel_error = 1.0;
    out.attempts = config.max_restarts;
  }
  out.success = out.rel_error < success_threshold;
  out.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<Summary> aggregate(std::vector<TrialOutcome> outcomes,
                               const std::vector<CellKey>& cells) {
  using Key = std::tuple<int, int, double, int>;  // N, K, snr, L
  auto key_of = [](int L, int N, int K, const std::optional<double>& snr) {
    return Key{N, K, snr_key(snr), L};
  };
  std::sort(outcomes.begin(), outcomes.end(), [&](const TrialOutcome& a, const TrialOutcome& b) {
    return std::tuple(key_of(a.L, a.N, a.K, a.snr_db), a.trial_index) <
           std::tuple(key_of(b.L, b.N, b.K, b.snr_db), b.trial_index);
  });

  std::map<Key, std::vector<const TrialOutcome*>> groups;
  for (const auto& c : cells) groups[key_of(c.L, c.N, c.K, normalize_snr(c.snr_db))];
  for (const auto& o : outcomes) groups[key_of(o.L, o.N, o.K, o.snr_db)].push_back(&o);

  std::vector<Summary> rows;
  rows.reserve(groups.size());
  for (const auto& [key, members] : groups) {
    Summary s;
    s.N = std::get<0>(key);
    s.K = std::get<1>(key);
    s.L = std::get<3>(key);
    if (std::isfinite(std::get<2>(key))) s.snr_db = std::get<2>(key);
    s.trials = static_cast<int>(members.size());
    if (s.trials > 0) {
      double err_sum = 0.0;
      double attempts_sum = 0.0;
      std::vector<double> errs;
      errs.reserve(members.size());
      for (const auto* o : members) {
        err_sum += o->rel_error;
        errs.push_back(o->rel_error);
        if (o->success) {
          ++s.successes;
          attempts_sum += o->attempts;
        }
      }
      s.success_prob = static_cast<double>(s.successes) / s.trials;
      if (s.successes > 0) s.mean_attempts_success = attempts_sum / s.successes;
      s.mean_rel_err = err_sum / s.trials;
      std::sort(errs.begin(), errs.end());
      const std::size_t m = errs.size();
      s.median_rel_err = m % 2 ? errs[m / 2] : 0.5 * (errs[m / 2 - 1] + errs[m / 2]);
      if (m >= 2) {
        double ss = 0.0;
        for (double e : errs) ss += (e - s.mean_rel_err) * (e - s.mean_rel_err);
        s.stderr_rel_err = std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
      }
    }
    rows.push_back(s);
  }
  return rows;
}

PhaseGridResult run_phase_grid(const GridSpec& spec, const solver::SolverConfig& config, int jobs,
                               const Progress& progress) {
  spec.validate();
  config.validate();
  struct Job {
    ProblemDims dims;
    int trial;
  };
  std::vector<Job> work;
  std::vector<CellKey> cells;
  for (int n : spec.N_values) {
    for (int k : spec.K_values) {
      cells.push_back({spec.L, n, k, std::nullopt});
      for (int t = 0; t < spec.trials_per_cell; ++t) work.push_back({{spec.L, k, n}, t});
    }
  }

  PhaseGridResult res;
  res.outcomes.resize(work.size());
  run_parallel(
      work.size(), jobs,
      [&](std::size_t i) {
        res.outcomes[i] = run_trial(work[i].dims, std::nullopt, work[i].trial, spec.base_seed,
                                    config, spec.success_threshold);
      },
      progress);

  res.cells = aggregate(res.outcomes, cells);
  std::vector<int> ns = spec.N_values;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  for (int n : ns) res.boundary.push_back({n, information_limit(spec.L, n)});
  return res;
}

NoiseSweepResult run_noise_sweep(const NoiseSpec& spec, const solver::SolverConfig& config,
                                 int jobs, const Progress& progress) {
  spec.validate();
  config.validate();
  struct Job {
    ProblemDims dims;
    std::optional<double> snr;
    int trial;
  };
  std::vector<Job> work;
  std::vector<CellKey> cells;
  for (const auto& c : spec.configs) {
    for (double snr : spec.snr_db_list) {
      const auto s = normalize_snr(snr);
      cells.push_back({c.L, c.N, c.K, s});
      for (int t = 0; t < spec.trials_per_point; ++t) work.push_back({c, s, t});
    }
  }

  NoiseSweepResult res;
  res.outcomes.resize(work.size());
  run_parallel(
      work.size(), jobs,
      [&](std::size_t i) {
        res.outcomes[i] = run_trial(work[i].dims, work[i].snr, work[i].trial, spec.base_seed,
                                    config, spec.success_threshold);
      },
      progress);
  res.points = aggregate(res.outcomes, cells);
  return res;
}

double log_error_slope(const std::vector<Summary>& points, const ProblemDims& curve,
                       double min_snr, double max_snr) {
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : points) {
    if (p.L != curve.L || p.K != curve.K || p.N != curve.N || !p.snr_db || p.trials == 0) continue;
    if (*p.snr_db < min_snr || *p.snr_db > max_snr) continue;
    xy.emplace_back(*p.snr_db, std::log10(p.mean_rel_err));
  }
  if (xy.size() < 2) throw std::invalid_argument("log_error_slope: need at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : xy) mx += x, my += y;
  mx /= static_cast<double>(xy.size());
  my /= static_cast<double>(xy.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : xy) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
  return sxy / sxx;
}

void write_phase_csv(std::ostream& out, const std::vector<Summary>& cells) {
  out << "L,N,K,trials,successes,success_prob,mean_attempts_success,mean_rel_err\n";
  for (const auto& c : cells) {
    out << fmt::format("{},{},{},{},{},{:.6g},{},{:.6e}\n", c.L, c.N, c.K, c.trials, c.successes,
                       c.success_prob,
                       c.mean_attempts_success ? fmt::format("{:.6g}", *c.mean_attempts_success)
                                               : std::string("NA"),
                       c.mean_rel_err);
  }
}

void write_noise_csv(std::ostream& out, const std::vector<Summary>& points) {
  out << "L,N,K,snr_db,trials,mean_rel_err,median_rel_err\n";
  for (const auto& p : points) {
    out << fmt::format("{},{},{},{},{},{:.6e},{:.6e}\n", p.L, p.N, p.K, format_snr(p.snr_db),
                       p.trials, p.mean_rel_err, p.median_rel_err);
  }
}

void write_boundary_csv(std::ostream& out, const std::vector<BoundaryPoint>& boundary) {
  out << "N,K_star\n";
  for (const auto& b : boundary) out << b.N << ',' << b.K_star << '\n';
}

}  // namespace mcbd::experiments
