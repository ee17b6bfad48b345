#include "mcbd/identifiability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "mcbd/errors.hpp"

namespace mcbd::identifiability {

using fourier::dft;

FilterPolynomial::FilterPolynomial(RealSeq coeffs, double trim_tol) : coeffs_(std::move(coeffs)) {
  int top = static_cast<int>(coeffs_.size()) - 1;
  while (top >= 0 && std::abs(coeffs_[top]) <= trim_tol) --top;
  if (top < 0) throw DegenerateError("filter polynomial has all-zero coefficients");
  degree_ = top;
  roots_.resize(degree_);
  if (degree_ == 0) return;

  // Companion matrix of the monic polynomial: ones on the subdiagonal, last
  // column holds -c[k]/c[degree].
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree_, degree_);
  companion.diagonal(-1).setOnes();
  for (int k = 0; k < degree_; ++k) companion(k, degree_ - 1) = -coeffs_[k] / coeffs_[degree_];
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("companion eigenvalue solve failed");
  roots_ = es.eigenvalues();
}

const char* IdentifiabilityReport::csv_header() {
  return "info_count_ok,cond1,cond2,nullspace_dim,sigma_min1,sigma_min2,sigma_min3,fourier_zero_free";
}

std::string IdentifiabilityReport::csv_row() const {
  return fmt::format("{},{},{},{},{:.6e},{:.6e},{:.6e},{}", int(info_count_ok), int(condition1_ok),
                     int(condition2_ok), nullspace_dim, smallest_singular_values[0],
                     smallest_singular_values[1], smallest_singular_values[2],
                     int(fourier_zero_free));
}

std::string IdentifiabilityReport::to_text() const {
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  std::ostringstream os;
  os << "information count LN >= L+KN-1 : " << yn(info_count_ok) << '\n'
     << "condition 1 (last tap filled)  : " << yn(condition1_ok) << '\n'
     << "condition 2 (no common root)   : " << yn(condition2_ok) << '\n'
     << "signal free of Fourier zeros   : " << yn(fourier_zero_free) << '\n'
     << "Hessian null-space dimension   : " << nullspace_dim << '\n'
     << fmt::format("smallest singular values of J : {:.3e} {:.3e} {:.3e}\n",
                    smallest_singular_values[0], smallest_singular_values[1],
                    smallest_singular_values[2])
     << fmt::format("||J v|| / ||v|| (scalar ambiguity): {:.3e}\n", ambiguity_vector_residual)
     << "identifiable (null space = scalar ambiguity only): " << yn(nullspace_dim == 1) << '\n';
  return os.str();
}

bool info_count_ok(const ProblemDims& dims) {
  return dims.L * dims.N >= dims.L + dims.K * dims.N - 1;
}

JacobianMatrix build_jacobian(const ProblemInstance& inst) {
  const auto& d = inst.dims;
  const double sqrt_l = std::sqrt(static_cast<double>(d.L));
  const ComplexSeq s_hat = dft(inst.signal);

  // F_K: first K columns of the unitary DFT matrix.
  Eigen::MatrixXcd fk(d.L, d.K);
  for (int k = 0; k < d.K; ++k) fk.col(k) = dft(RealSeq(RealSeq::Unit(d.L, k)));

  JacobianMatrix J = JacobianMatrix::Zero(d.measurements(), d.unknowns());
  for (int n = 0; n < d.N; ++n) {
    const ComplexSeq w_hat = dft(fourier::pad(inst.channels[n]));
    J.block(n * d.L, 0, d.L, d.L).diagonal() = sqrt_l * w_hat;
    J.block(n * d.L, d.L + n * d.K, d.L, d.K) = sqrt_l * s_hat.asDiagonal() * fk;
  }
  return J;
}

Eigen::VectorXd singular_values(const JacobianMatrix& J) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(J);
  Eigen::VectorXd sv = svd.singularValues();
  if (!sv.allFinite()) throw NumericalError("SVD of the Jacobian produced non-finite values");
  std::sort(sv.begin(), sv.end());
  return sv;
}

namespace {

int nullspace_from_singular_values(const Eigen::VectorXd& ascending, Eigen::Index cols,
                                   double rel_tol) {
  const double smax = ascending.size() ? ascending[ascending.size() - 1] : 0.0;
  const auto rank = std::count_if(ascending.begin(), ascending.end(),
                                  [&](double s) { return smax > 0.0 && s >= rel_tol * smax; });
  return static_cast<int>(cols - rank);
}

}  // namespace

int nullspace_dim(const JacobianMatrix& J, double rel_tol) {
  return nullspace_from_singular_values(singular_values(J), J.cols(), rel_tol);
}

ComplexSeq ambiguity_vector(const ProblemInstance& inst) {
  const auto& d = inst.dims;
  ComplexSeq v(d.unknowns());
  v.head(d.L) = -dft(inst.signal);
  v.tail(d.K * d.N) = inst.channels_concat().cast<Complex>();
  return v;
}

double ambiguity_residual(const JacobianMatrix& J, const ComplexSeq& v) {
  return (J * v).norm() / v.norm();
}

double misfit(const ProblemInstance& inst, const ComplexSeq& p_hat, const ComplexSeq& q_concat) {
  const auto& d = inst.dims;
  if (p_hat.size() != d.L || q_concat.size() != d.K * d.N) throw DimensionError("misfit: bad shapes");
  const double sqrt_l = std::sqrt(static_cast<double>(d.L));
  double acc = 0.0;
  ComplexSeq w = ComplexSeq::Zero(d.L);
  for (int n = 0; n < d.N; ++n) {
    w.head(d.K) = q_concat.segment(n * d.K, d.K);
    const ComplexSeq b = sqrt_l * p_hat.cwiseProduct(dft(w));
    acc += (b - inst.observations_fourier.segment(n * d.L, d.L)).squaredNorm();
  }
  return 0.5 * acc;
}

bool condition1(const std::vector<ShortFilter>& channels, double tol_abs) {
  return std::any_of(channels.begin(), channels.end(), [&](const ShortFilter& h) {
    return std::abs(h.coeffs()[h.support() - 1]) > tol_abs;
  });
}

bool condition2(const std::vector<ShortFilter>& channels, double root_tol) {
  if (channels.empty()) throw DimensionError("condition2 needs at least one channel");
  std::vector<FilterPolynomial> polys;
  polys.reserve(channels.size());
  for (const auto& h : channels) polys.emplace_back(h.coeffs());
  // A single polynomial is treated as sharing its own roots.
  if (polys.size() == 1) return channels.front().support() == 1;

  const ComplexSeq& base = polys.front().roots();
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    const bool shared_by_all =
        std::all_of(polys.begin() + 1, polys.end(), [&](const FilterPolynomial& p) {
          const ComplexSeq& r = p.roots();
          for (Eigen::Index j = 0; j < r.size(); ++j) {
            if (std::abs(r[j] - base[i]) <= root_tol) return true;
          }
          return false;
        });
    if (shared_by_all) return false;
  }
  return true;
}

bool fourier_zero_free(const RealSeq& signal, double rel_tol) {
  const Eigen::VectorXd mag = dft(signal).cwiseAbs();
  return mag.minCoeff() > rel_tol * mag.maxCoeff();
}

IdentifiabilityReport analyze(const ProblemInstance& inst, const Tolerances& tol) {
  IdentifiabilityReport rep;
  rep.info_count_ok = info_count_ok(inst.dims);
  rep.condition1_ok = condition1(inst.channels, tol.top_tap_abs);
  rep.condition2_ok = condition2(inst.channels, tol.root_abs);
  rep.fourier_zero_free = fourier_zero_free(inst.signal, tol.fourier_zero_rel);

  const JacobianMatrix J = build_jacobian(inst);
  const Eigen::VectorXd sv = singular_values(J);
  rep.nullspace_dim = nullspace_from_singular_values(sv, J.cols(), tol.null_rel);

  // Columns beyond the row count contribute exact zeros.
  const Eigen::Index deficit = std::max<Eigen::Index>(0, J.cols() - J.rows());
  for (std::size_t i = 0; i < rep.smallest_singular_values.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    rep.smallest_singular_values[i] =
        idx < deficit ? 0.0 : (idx - deficit < sv.size() ? sv[idx - deficit] : 0.0);
  }
  rep.ambiguity_vector_residual = ambiguity_residual(J, ambiguity_vector(inst));
  return rep;
}

std::vector<ShortFilter> make_counterexample(const ProblemDims& dims, CounterexampleKind kind,
                                             Rng& rng, double beta) {
  dims.validate();
  if (dims.K < 2) throw DimensionError("counterexamples need K >= 2");
  std::vector<ShortFilter> out;
  out.reserve(static_cast<std::size_t>(dims.N));
  for (int n = 0; n < dims.N; ++n) {
    RealSeq c(dims.K);
    if (kind == CounterexampleKind::NoTopTap) {
      c = gaussian_vector(rng, dims.K);
      c[dims.K - 1] = 0.0;
    } else {
      // (z - beta) * g(z) with deg g = K - 2.
      const RealSeq g = gaussian_vector(rng, dims.K - 1);
      for (int k = 0; k < dims.K; ++k) {
        const double lower = k >= 1 ? g[k - 1] : 0.0;
        const double same = k < dims.K - 1 ? g[k] : 0.0;
        c[k] = lower - beta * same;
      }
    }
    out.emplace_back(std::move(c), dims.L);
  }
  return out;
}

}  // namespace mcbd::identifiability
