#include <doctest.h>

#include <cmath>
#include <sstream>

#include "levylse/asymptotics.hpp"
#include "levylse/errors.hpp"
#include "oracles.hpp"

using namespace levylse;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const double x : v) out[i++] = x;
  return out;
}

// b(x, theta) = theta, so d_theta b = 1 everywhere.
ModelCatalogEntry constant_gradient() {
  DriftModel model(
      "shift", 1, 1, ParameterBox::uniform(1, -5.0, 5.0),
      [](std::span<const double>, std::span<const double> th, std::span<double> out) { out[0] = th[0]; },
      [](std::span<const double>, std::span<const double>, std::span<double> out) { out[0] = 1.0; },
      [](std::span<const double>, std::span<const double>, std::span<double> out) { out[0] = 0.0; });
  return {"shift", std::move(model),
          [](double t, const Eigen::VectorXd& th, const Eigen::VectorXd& x0) {
            return Eigen::VectorXd::Constant(1, x0[0] + th[0] * t);
          },
          false};
}

std::vector<double> column(const RowMatrix& m, Eigen::Index c) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, c);
  return out;
}

std::vector<double> normals(std::size_t count, double sd, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  std::vector<double> out(count);
  for (auto& v : out) v = sd * rng.normal();
  return out;
}

LevySpec stable_only(double sigma, double alpha, double beta) {
  LevySpec l = LevySpec::zero(1);
  l.jumps[0] = StableJumps{alpha, beta, sigma};
  return l;
}

}  // namespace

TEST_CASE("information matrix closed forms") {
  SUBCASE("sqrt_shift") {
    const auto e = catalog::sqrt_shift();
    const auto path = solve_x0(e, vec({1.0}), vec({0.0}));
    const auto info = information_matrix(e.model, path, vec({1.0}));
    CHECK(std::abs(info.matrix(0, 0) - std::tanh(1.0) / 4.0) <= 1e-8);
    CHECK(info.quadrature_m == 10000);
  }
  SUBCASE("ou_affine on a linear path") {
    const auto e = catalog::ou_affine();
    const auto path = solve_x0(e, vec({1.0, 0.0}), vec({0.0}));
    const auto info = information_matrix(e.model, path, vec({1.0, 0.0}));
    Eigen::Matrix2d expected;
    expected << 1.0, 0.5, 0.5, 1.0 / 3.0;
    CHECK((info.matrix - expected).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(info.min_eigenvalue > 0.0);
  }
  SUBCASE("constant gradient") {
    const auto e = constant_gradient();
    const auto path = solve_x0(e, vec({1.0}), vec({0.0}));
    CHECK(information_matrix(e.model, path, vec({1.0})).matrix(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("information matrix is symmetric, positive definite and converged") {
  struct Case {
    ModelCatalogEntry entry;
    Eigen::VectorXd theta;
    Eigen::VectorXd x0;
  };
  const std::vector<Case> cases = {
      {catalog::ou_affine(), vec({1.0, 1.0}), vec({1.0})},
      {catalog::sqrt_shift(), vec({0.5}), vec({0.3})},
      {catalog::affine_2d(), vec({1.0, -0.5, 1.0, 2.0, -1.0, -0.3}), vec({0.5, -0.5})}};
  for (const auto& c : cases) {
    const auto path = solve_x0(c.entry, c.theta, c.x0);
    const auto a = information_matrix(c.entry.model, path, c.theta, 10000);
    const auto b = information_matrix(c.entry.model, path, c.theta, 20000);
    CHECK((a.matrix - a.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(a.min_eigenvalue > 0.0);
    CHECK((a.matrix - b.matrix).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("information matrix errors") {
  const auto e = catalog::ou_affine();
  const auto flat = solve_x0(e, vec({0.0, 0.0}), vec({0.0}));
  CHECK_THROWS_AS(information_matrix(e.model, flat, vec({0.0, 0.0})), NumericalError);
  const auto path = solve_x0(e, vec({1.0, 0.0}), vec({0.0}));
  CHECK_THROWS_AS(information_matrix(e.model, path, vec({1.0, 0.0}), 8), ValidationError);
  CHECK_THROWS_AS(information_matrix(e.model, path, vec({1.0, 0.0}), 101), ValidationError);
}

TEST_CASE("S for degenerate noise") {
  const auto e = constant_gradient();
  const auto path = solve_x0(e, vec({1.0}), vec({0.0}));
  RandomStream rng(1, 0);
  CHECK(sample_limit_S(e.model, path, vec({1.0}), LevySpec::zero(1), 1000, rng)[0] == 0.0);
  LevySpec drift = LevySpec::zero(1);
  drift.drift[0] = 2.0;
  CHECK(sample_limit_S(e.model, path, vec({1.0}), drift, 1000, rng)[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(sample_limit_S(e.model, path, vec({1.0}), drift, 50, rng), ValidationError);
}

TEST_CASE("Brownian S has covariance I") {
  const auto e = catalog::ou_affine();
  const auto theta = vec({1.0, 0.0});
  const auto path = solve_x0(e, theta, vec({0.0}));
  const auto info = information_matrix(e.model, path, theta);
  const std::size_t count = 10000;
  Eigen::MatrixXd draws(count, 2);
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream rng(31, i);
    draws.row(static_cast<Eigen::Index>(i)) =
        sample_limit_S(e.model, path, theta, LevySpec::brownian(1, 1.0), 1000, rng).transpose();
  }
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Eigen::MatrixXd centered = draws.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(count - 1);
  CHECK((cov - info.matrix).norm() <= 0.05 * info.matrix.norm());
}

TEST_CASE("unit-gradient Brownian limit law is standard normal") {
  const auto e = constant_gradient();
  const auto path = solve_x0(e, vec({1.0}), vec({0.0}));
  const auto sample = sample_limit_distribution(e.model, path, vec({1.0}), LevySpec::brownian(1, 1.0), 10000, 200, 5);
  const auto ref = normals(10000, 1.0, 6);
  CHECK(oracle::ks_sorted(column(sample.draws, 0), ref) <= oracle::ks_critical_1pct(10000, 10000));
  const auto zero = sample_limit_distribution(e.model, path, vec({1.0}), LevySpec::zero(1), 100, 200, 5);
  CHECK(zero.draws.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pathwise and closed-form sqrt_shift limit laws agree") {
  const auto e = catalog::sqrt_shift();
  const auto path = solve_x0(e, vec({1.0}), vec({0.0}));
  LevySpec levy = stable_only(1.0, 1.5, 0.0);
  levy.sigma(0, 0) = 1.0;
  const auto pathwise = sample_limit_distribution(e.model, path, vec({1.0}), levy, 10000, 1000, 11);
  const auto closed = sample_limit_closed_form_sqrt_shift(1.0, 0.0, 1.0, 1.0, 1.5, 0.0, 10000, 12);
  CHECK(oracle::ks_sorted(column(pathwise.draws, 0), column(closed.draws, 0)) <=
        oracle::ks_critical_1pct(10000, 10000));
}

TEST_CASE("closed-form limit law special cases") {
  const double info = std::tanh(1.0) / 4.0;
  SUBCASE("no jumps gives a normal law") {
    const auto s = sample_limit_closed_form_sqrt_shift(1.0, 0.0, 2.0, 0.0, 1.5, 0.0, 10000, 3);
    const auto ref = normals(10000, 2.0 / std::sqrt(info), 4);
    CHECK(oracle::ks_sorted(column(s.draws, 0), ref) <= oracle::ks_critical_1pct(10000, 10000));
  }
  SUBCASE("symmetric jumps give a symmetric law") {
    const auto s = sample_limit_closed_form_sqrt_shift(1.0, 0.0, 0.0, 1.0, 1.2, 0.0, 10000, 3);
    std::size_t positive = 0;
    for (Eigen::Index i = 0; i < s.draws.rows(); ++i) positive += s.draws(i, 0) > 0.0;
    CHECK(std::abs(static_cast<double>(positive) - 5000.0) <= 3.0 * std::sqrt(10000.0) / 2.0);
  }
  CHECK_THROWS_AS(sample_limit_closed_form_sqrt_shift(1.0, 0.0, 1.0, 1.0, 2.5, 0.0, 10, 3), ValidationError);
  CHECK_THROWS_AS(sample_limit_closed_form_sqrt_shift(1.0, 0.0, 1.0, 1.0, 1.5, 1.5, 10, 3), ValidationError);
}

TEST_CASE("mixed noise limit is the convolution of its parts") {
  const auto e = catalog::sqrt_shift();
  const auto path = solve_x0(e, vec({1.0}), vec({0.0}));
  LevySpec mixed = stable_only(1.0, 1.3, 0.5);
  mixed.sigma(0, 0) = 1.0;
  const auto both = sample_limit_distribution(e.model, path, vec({1.0}), mixed, 10000, 500, 21);
  const auto gauss = sample_limit_distribution(e.model, path, vec({1.0}), LevySpec::brownian(1, 1.0), 10000, 500, 22);
  const auto jumps = sample_limit_distribution(e.model, path, vec({1.0}), stable_only(1.0, 1.3, 0.5), 10000, 500, 23);
  std::vector<double> sum(10000);
  for (Eigen::Index i = 0; i < 10000; ++i) sum[static_cast<std::size_t>(i)] = gauss.draws(i, 0) + jumps.draws(i, 0);
  CHECK(oracle::ks_sorted(column(both.draws, 0), sum) <= oracle::ks_critical_1pct(10000, 10000));
}

TEST_CASE("limit draws do not depend on the thread count") {
  const auto e = catalog::ou_affine();
  const auto path = solve_x0(e, vec({1.0, 1.0}), vec({1.0}));
  LevySpec levy = stable_only(1.0, 1.5, 0.0);
  const auto one = sample_limit_distribution(e.model, path, vec({1.0, 1.0}), levy, 300, 200, 9, 1);
  const auto three = sample_limit_distribution(e.model, path, vec({1.0, 1.0}), levy, 300, 200, 9, 3);
  CHECK(one.draws == three.draws);
  CHECK(one.draws.allFinite());
  std::ostringstream os;
  one.write_csv(os);
  CHECK(os.str().rfind("theta_1,theta_2\n", 0) == 0);
}
