#pragma once

#include <array>
#include <string>
#include <vector>

#include "mcbd/model.hpp"
#include "mcbd/random.hpp"

namespace mcbd::identifiability {

/// Dense Jacobian of the bilinear map (p_hat, q) -> sqrt(L) p_hat .* dft(pad(q_n))
/// at the ground truth, shape LN x (L + KN). Block row n is
/// sqrt(L) * [diag(w_hat_n) | 0 ... diag(s_hat) F_K ... 0].
using JacobianMatrix = Eigen::MatrixXcd;

/// Polynomial sum_k c[k] z^k with trailing (highest-degree) taps below
/// 1e-12 in magnitude trimmed before root finding.
class FilterPolynomial {
 public:
  explicit FilterPolynomial(RealSeq coeffs, double trim_tol = 1e-12);

  const RealSeq& coeffs() const noexcept { return coeffs_; }
  int degree() const noexcept { return degree_; }
  /// Companion-matrix eigenvalues; degree() of them.
  const ComplexSeq& roots() const noexcept { return roots_; }

 private:
  RealSeq coeffs_;
  int degree_ = 0;
  ComplexSeq roots_;
};

struct IdentifiabilityReport {
  bool info_count_ok = false;
  bool condition1_ok = false;
  bool condition2_ok = false;
  bool fourier_zero_free = false;
  int nullspace_dim = 0;
  /// Three smallest singular values of J (ascending); missing ones are zero
  /// padding for column-deficient J.
  std::array<double, 3> smallest_singular_values{};
  double ambiguity_vector_residual = 0.0;

  /// `info_count_ok,cond1,cond2,nullspace_dim,sigma_min1,sigma_min2,sigma_min3,fourier_zero_free`
  static const char* csv_header();
  std::string csv_row() const;
  std::string to_text() const;
};

struct Tolerances {
  double null_rel = 1e-8;       // singular values below null_rel * sigma_max count as null
  double top_tap_abs = 1e-12;   // condition 1
  double root_abs = 1e-7;       // condition 2 root clustering distance
  double fourier_zero_rel = 1e-10;
};

/// LN >= L + KN - 1.
bool info_count_ok(const ProblemDims& dims);

JacobianMatrix build_jacobian(const ProblemInstance& inst);

/// Singular values of J in ascending order (min(rows, cols) of them).
Eigen::VectorXd singular_values(const JacobianMatrix& J);

/// (cols - rank) where rank counts singular values >= rel_tol * sigma_max.
int nullspace_dim(const JacobianMatrix& J, double rel_tol = 1e-8);

/// v = [-s_hat; h_0; ...; h_{N-1}], the scalar-ambiguity direction.
ComplexSeq ambiguity_vector(const ProblemInstance& inst);

/// ||J v|| / ||v||.
double ambiguity_residual(const JacobianMatrix& J, const ComplexSeq& v);

/// f(p_hat, q) = 1/2 ||B(p_hat, q) - y_hat||^2 with complex p_hat.
double misfit(const ProblemInstance& inst, const ComplexSeq& p_hat, const ComplexSeq& q_concat);

/// Some channel has a nonzero last tap.
bool condition1(const std::vector<ShortFilter>& channels, double tol_abs = 1e-12);

/// The channel polynomials share no common root. For N = 1 this returns
/// false unless K = 1. Throws DegenerateError on an all-zero channel.
bool condition2(const std::vector<ShortFilter>& channels, double root_tol = 1e-7);

/// min_l |s_hat[l]| > rel_tol * max_l |s_hat[l]|.
bool fourier_zero_free(const RealSeq& signal, double rel_tol = 1e-10);

IdentifiabilityReport analyze(const ProblemInstance& inst, const Tolerances& tol = {});

enum class CounterexampleKind { NoTopTap, SharedRoot };

/// Gaussian channels violating one identifiability condition: last tap forced
/// to zero, or every channel polynomial a random degree-(K-2) polynomial times (z - beta).
/// Throws DimensionError for K < 2.
std::vector<ShortFilter> make_counterexample(const ProblemDims& dims, CounterexampleKind kind,
                                             Rng& rng, double beta = 0.5);

}  // namespace mcbd::identifiability
