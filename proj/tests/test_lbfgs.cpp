#include <doctest.h>

#include <cmath>

#include "mcbd/lbfgs.hpp"

using mcbd::optim::LbfgsOptions;
using mcbd::optim::LbfgsStatus;
using mcbd::optim::lbfgs_minimize;

TEST_CASE("convex quadratic reaches the linear-system solution") {
  Eigen::MatrixXd A(3, 3);
  A << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  const Eigen::Vector3d b(1, -2, 3);
  auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = A * x - b;
    return 0.5 * x.dot(A * x) - b.dot(x);
  };
  const auto res = lbfgs_minimize(f, Eigen::VectorXd::Zero(3));
  CHECK(res.status == LbfgsStatus::GradientConverged);
  CHECK((res.x - A.ldlt().solve(b)).norm() < 1e-7);
}

TEST_CASE("Rosenbrock from the classic start") {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  LbfgsOptions opts;
  opts.grad_tol = 1e-10;
  const auto res = lbfgs_minimize(f, x0, opts);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("accepted values never increase") {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    double v = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      v += std::pow(x[i] - i, 4) + 0.5 * x[i] * x[i];
      g[i] = 4 * std::pow(x[i] - i, 3) + x[i];
    }
    return v;
  };
  const auto res = lbfgs_minimize(f, Eigen::VectorXd::Constant(6, 3.0));
  REQUIRE(res.accepted_values.size() >= 2);
  for (std::size_t i = 1; i < res.accepted_values.size(); ++i) {
    CHECK(res.accepted_values[i] <= res.accepted_values[i - 1]);
  }
}

TEST_CASE("iteration cap is reported") {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  LbfgsOptions opts;
  opts.max_iters = 3;
  const auto res = lbfgs_minimize(f, Eigen::Vector2d(-1.2, 1.0), opts);
  CHECK(res.status == LbfgsStatus::MaxIterations);
  CHECK(res.iterations == 3);
}

TEST_CASE("start at the minimizer returns immediately") {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2 * x;
    return x.squaredNorm();
  };
  const auto res = lbfgs_minimize(f, Eigen::VectorXd::Zero(4));
  CHECK(res.status == LbfgsStatus::GradientConverged);
  CHECK(res.iterations == 0);
}
