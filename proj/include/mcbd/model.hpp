#pragma once

#include <optional>
#include <vector>

#include "mcbd/fourier.hpp"

namespace mcbd {

/// Signal length L, filter support K and channel count N.
struct ProblemDims {
  int L = 0;
  int K = 0;
  int N = 0;

  /// Throws DimensionError unless 1 <= K <= L and N >= 1.
  void validate() const;

  /// Number of measurements L*N (rows of the lifted operator).
  int measurements() const noexcept { return L * N; }
  /// Number of unknowns L + K*N.
  int unknowns() const noexcept { return L + K * N; }

  friend bool operator==(const ProblemDims&, const ProblemDims&) = default;
};

/// Ground truth, observations y_n = s * pad(h_n) (+ noise) and their unitary
/// DFTs stacked channel by channel into one length-LN vector.
struct ProblemInstance {
  ProblemDims dims;
  RealSeq signal;
  std::vector<ShortFilter> channels;
  std::vector<RealSeq> observations;
  ComplexSeq observations_fourier;
  /// Set when noise has been injected into the observations.
  std::optional<double> snr_db;

  /// Channels concatenated into one length-KN vector.
  RealSeq channels_concat() const;
};

ProblemInstance make_instance(const ProblemDims& dims, RealSeq signal,
                              std::vector<ShortFilter> channels);

/// Replaces the observations (e.g. with noisy ones) and recomputes their spectra.
ProblemInstance with_observations(ProblemInstance inst, std::vector<RealSeq> observations);

/// Rank-1 factor pair (p, q) standing for the lift X = p q^T. q is stored
/// concatenated; channel(n) views the n-th length-K block.
class CandidateSolution {
 public:
  CandidateSolution(RealSeq p, RealSeq q_concat, int K);
  static CandidateSolution from_filters(RealSeq p, const std::vector<ShortFilter>& q);

  const RealSeq& p() const noexcept { return p_; }
  const RealSeq& q() const noexcept { return q_; }
  int K() const noexcept { return K_; }
  int N() const noexcept { return static_cast<int>(q_.size()) / K_; }

  Eigen::VectorBlock<const RealSeq> channel(int n) const { return q_.segment(n * K_, K_); }
  std::vector<ShortFilter> filters() const;

 private:
  RealSeq p_;
  RealSeq q_;
  int K_;
};

/// Enough of X0 = s h^T to evaluate Frobenius distances without forming it.
struct GroundTruthLift {
  double frobenius_sq = 0.0;
  RealSeq signal;
  RealSeq channels_concat;

  static GroundTruthLift from(const ProblemInstance& inst);
  static GroundTruthLift from(RealSeq signal, RealSeq channels_concat);
};

/// The linear lifted operator A evaluated on rank-1 factors:
/// A(p q^T)_n = sqrt(L) * dft(p) .* dft(pad(q_n)), stacked over n.
/// Adjoints are taken with respect to the real inner product Re<., .>.
class LiftedOperator {
 public:
  explicit LiftedOperator(const ProblemDims& dims);

  const ProblemDims& dims() const noexcept { return dims_; }

  /// Spectra of the factors, reusable across apply/adjoint calls.
  struct Spectra {
    ComplexSeq p_hat;  // length L
    ComplexSeq w_hat;  // length LN, dft(pad(q_n)) stacked
  };
  Spectra spectra(const RealSeq& p, const RealSeq& q_concat) const;

  ComplexSeq apply(const Spectra& s) const;
  ComplexSeq apply(const RealSeq& p, const RealSeq& q_concat) const;

  /// g with Re<A(p q^T), r> = <p, g> for all p.
  RealSeq adjoint_p(const ComplexSeq& r, const Spectra& s) const;
  RealSeq adjoint_p(const ComplexSeq& r, const RealSeq& q_concat) const;

  /// g (length KN) with Re<A(p q^T), r> = <q, g> for all q.
  RealSeq adjoint_q(const ComplexSeq& r, const Spectra& s) const;
  RealSeq adjoint_q(const ComplexSeq& r, const RealSeq& p) const;

 private:
  void check_p(const RealSeq& p) const;
  void check_q(const RealSeq& q) const;
  void check_r(const ComplexSeq& r) const;

  ProblemDims dims_;
  double sqrt_l_;
};

ComplexSeq forward(const RealSeq& p, const std::vector<ShortFilter>& q);
RealSeq adjoint_p(const ComplexSeq& r, const std::vector<ShortFilter>& q);
std::vector<ShortFilter> adjoint_q(const ComplexSeq& r, const RealSeq& p, int K);

/// ||X0 - p q^T||_F / ||X0||_F via the norm/inner-product expansion.
/// Throws DegenerateError when ||X0||_F = 0.
double relative_outer_error(const GroundTruthLift& truth, const CandidateSolution& cand);

}  // namespace mcbd
