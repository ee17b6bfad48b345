#include <doctest.h>

#include <algorithm>

#include "mcbd/errors.hpp"
#include "mcbd/experiments.hpp"
#include "mcbd/identifiability.hpp"
#include "oracles.hpp"

using namespace mcbd;
namespace id = mcbd::identifiability;

namespace {

// B(p_hat, q)_n = sqrt(L) p_hat .* F [q_n; 0], evaluated densely.
ComplexSeq bilinear(int L, int K, int N, const ComplexSeq& p_hat, const ComplexSeq& q) {
  const Eigen::MatrixXcd F = oracle::dft_matrix(L);
  ComplexSeq out(L * N);
  for (int n = 0; n < N; ++n) {
    ComplexSeq w = ComplexSeq::Zero(L);
    w.head(K) = q.segment(n * K, K);
    out.segment(n * L, L) = std::sqrt(static_cast<double>(L)) * p_hat.cwiseProduct(F * w);
  }
  return out;
}

std::vector<ShortFilter> filters(int L, std::initializer_list<std::vector<double>> taps) {
  std::vector<ShortFilter> out;
  for (const auto& t : taps) out.emplace_back(Eigen::Map<const RealSeq>(t.data(), t.size()), L);
  return out;
}

}  // namespace

TEST_CASE("Jacobian is the derivative of the bilinear map") {
  Rng rng(31);
  const ProblemDims d{8, 3, 2};
  const auto inst = experiments::sample_instance(d, rng);
  const auto J = id::build_jacobian(inst);
  REQUIRE(J.rows() == d.measurements());
  REQUIRE(J.cols() == d.unknowns());

  const ComplexSeq p_hat = fourier::dft(inst.signal);
  const ComplexSeq q = inst.channels_concat().cast<Complex>();
  ComplexSeq delta(d.unknowns());
  delta.real() = gaussian_vector(rng, d.unknowns());
  delta.imag() = gaussian_vector(rng, d.unknowns());
  // Bilinear map: the central difference is exact up to rounding.
  const double eps = 1e-3;
  const ComplexSeq fd = (bilinear(d.L, d.K, d.N, p_hat + eps * delta.head(d.L), q + eps * delta.tail(6)) -
                         bilinear(d.L, d.K, d.N, p_hat - eps * delta.head(d.L), q - eps * delta.tail(6))) /
                        (2 * eps);
  CHECK((J * delta - fd).norm() <= 1e-10 * fd.norm());
}

TEST_CASE("misfit vanishes at the truth and grows away from it") {
  Rng rng(32);
  const auto inst = experiments::sample_instance({8, 2, 3}, rng);
  const ComplexSeq p_hat = fourier::dft(inst.signal);
  const ComplexSeq q = inst.channels_concat().cast<Complex>();
  CHECK(id::misfit(inst, p_hat, q) < 1e-24);
  CHECK(id::misfit(inst, 1.1 * p_hat, q) > 1e-4);
  CHECK(id::misfit(inst, 2.0 * p_hat, 0.5 * q) < 1e-24);
}

TEST_CASE("singular values agree with an independent SVD") {
  Rng rng(33);
  const auto inst = experiments::sample_instance({16, 4, 3}, rng);
  const auto J = id::build_jacobian(inst);
  const Eigen::VectorXd got = id::singular_values(J);
  Eigen::VectorXd ref = Eigen::JacobiSVD<Eigen::MatrixXcd>(J).singularValues();
  std::sort(ref.data(), ref.data() + ref.size());
  REQUIRE(got.size() == ref.size());
  CHECK((got - ref).norm() <= 1e-10 * ref.maxCoeff());
  CHECK(std::is_sorted(got.data(), got.data() + got.size()));
}

TEST_CASE("scalar ambiguity lies in the null space") {
  Rng rng(34);
  for (int rep = 0; rep < 5; ++rep) {
    const auto inst = experiments::sample_instance({32, 8, 4}, rng);
    const auto J = id::build_jacobian(inst);
    CHECK(id::ambiguity_residual(J, id::ambiguity_vector(inst)) < 1e-10);
    CHECK(id::nullspace_dim(J) >= 1);
  }
}

TEST_CASE("generic instance has a one-dimensional null space") {
  Rng rng(35);
  const auto inst = experiments::sample_instance({32, 8, 4}, rng);
  const auto r = id::analyze(inst);
  CHECK(r.info_count_ok);
  CHECK(r.condition1_ok);
  CHECK(r.condition2_ok);
  CHECK(r.fourier_zero_free);
  CHECK(r.nullspace_dim == 1);
  CHECK(r.smallest_singular_values[0] < 1e-10);
  CHECK(r.smallest_singular_values[1] > 1e-4);
}

TEST_CASE("counterexamples enlarge the null space") {
  Rng rng(36);
  const ProblemDims d{32, 8, 4};
  for (auto kind : {id::CounterexampleKind::NoTopTap, id::CounterexampleKind::SharedRoot}) {
    const auto h = id::make_counterexample(d, kind, rng);
    const auto inst = make_instance(d, gaussian_vector(rng, d.L), h);
    const auto r = id::analyze(inst);
    CHECK(r.nullspace_dim >= 2);
    if (kind == id::CounterexampleKind::NoTopTap) CHECK_FALSE(r.condition1_ok);
    if (kind == id::CounterexampleKind::SharedRoot) CHECK_FALSE(r.condition2_ok);
  }
  CHECK_THROWS_AS(id::make_counterexample({8, 1, 2}, id::CounterexampleKind::SharedRoot, rng),
                  DimensionError);
}

TEST_CASE("shared-root counterexample polynomials vanish at beta") {
  Rng rng(37);
  const auto h = id::make_counterexample({16, 5, 3}, id::CounterexampleKind::SharedRoot, rng, -0.7);
  for (const auto& f : h) {
    double value = 0.0, power = 1.0;
    for (double c : f.coeffs()) value += c * power, power *= -0.7;
    CHECK(std::abs(value) < 1e-12);
  }
}

TEST_CASE("information count underdetermined systems have large null spaces") {
  Rng rng(38);
  const ProblemDims d{8, 8, 1};  // LN = 8 < L + KN - 1 = 15
  CHECK_FALSE(id::info_count_ok(d));
  const auto r = id::analyze(experiments::sample_instance(d, rng));
  CHECK(r.nullspace_dim >= d.unknowns() - d.measurements());
  CHECK(r.smallest_singular_values[0] == 0.0);
}

TEST_CASE("polynomial roots") {
  RealSeq c(3);
  c << 2.0, -3.0, 1.0;  // (z - 1)(z - 2)
  const id::FilterPolynomial poly(c);
  REQUIRE(poly.degree() == 2);
  std::vector<double> re{poly.roots()[0].real(), poly.roots()[1].real()};
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(1.0));
  CHECK(re[1] == doctest::Approx(2.0));

  RealSeq t(4);
  t << 1.0, 1.0, 0.0, 1e-14;  // trailing taps trimmed
  CHECK(id::FilterPolynomial(t).degree() == 1);
  CHECK(id::FilterPolynomial(RealSeq::Ones(1)).degree() == 0);
}

TEST_CASE("condition 1 and 2 on hand-built channels") {
  CHECK(id::condition2(filters(8, {{1, 1}, {1, -1}})));
  CHECK_FALSE(id::condition2(filters(8, {{2, -3, 1}, {-1, 1, 0}})));
  CHECK(id::condition1(filters(8, {{1, 0}, {1, 2}})));
  CHECK_FALSE(id::condition1(filters(8, {{1, 0}, {3, 0}})));
  // a single channel of length > 1 always shares its own roots
  CHECK_FALSE(id::condition2(filters(8, {{1, 2, 3}})));
  CHECK(id::condition2(filters(8, {{4}})));
  CHECK_THROWS_AS(id::condition2(filters(8, {{0, 0}, {1, 1}})), DegenerateError);
}

TEST_CASE("Fourier zeros of the signal") {
  RealSeq flat = RealSeq::Ones(4);  // spectrum is an impulse
  CHECK_FALSE(id::fourier_zero_free(flat));
  RealSeq impulse = RealSeq::Zero(4);
  impulse[0] = 1.0;
  CHECK(id::fourier_zero_free(impulse));
}

TEST_CASE("report renders text and a CSV row") {
  Rng rng(39);
  const auto r = id::analyze(experiments::sample_instance({16, 4, 2}, rng));
  CHECK(std::string(id::IdentifiabilityReport::csv_header()) ==
        "info_count_ok,cond1,cond2,nullspace_dim,sigma_min1,sigma_min2,sigma_min3,fourier_zero_free");
  const std::string row = r.csv_row();
  CHECK(std::count(row.begin(), row.end(), ',') == 7);
  CHECK(row.rfind("1,1,1,1,", 0) == 0);
  CHECK(r.to_text().find("null-space") != std::string::npos);
}
