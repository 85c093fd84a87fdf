#include <doctest.h>

#include <cmath>

#include "levylse/errors.hpp"
#include "levylse/lse.hpp"
#include "levylse/ode.hpp"
#include "oracles.hpp"

using namespace levylse;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const double x : v) out[i++] = x;
  return out;
}

ObservationSet from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (const double x : row) m(r, c++) = x;
    ++r;
  }
  return ObservationSet::from_values(m);
}

// X_k = X_{k-1} + b(X_{k-1}, theta) / n
ObservationSet exact_recursion(const DriftModel& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x0,
                               std::size_t n) {
  const auto d = static_cast<Eigen::Index>(model.dim_x());
  RowMatrix m(static_cast<Eigen::Index>(n + 1), d);
  m.row(0) = x0.transpose();
  Eigen::VectorXd x = x0;
  Eigen::VectorXd b(d);
  for (std::size_t k = 1; k <= n; ++k) {
    model.drift({x.data(), model.dim_x()}, {theta.data(), model.dim_theta()}, {b.data(), model.dim_x()});
    x += b / static_cast<double>(n);
    m.row(static_cast<Eigen::Index>(k)) = x.transpose();
  }
  return ObservationSet::from_values(m);
}

ObservationSet simulated(const DriftModel& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x0,
                         double eps, std::size_t n, std::uint64_t rep, LevySpec levy) {
  SimConfig c;
  c.epsilon = eps;
  c.n = n;
  c.substeps = 10;
  c.theta0 = theta;
  c.x0 = x0;
  c.levy = std::move(levy);
  c.seed = 4242;
  c.replication = rep;
  return simulate(c, model);
}

double radical_inverse(std::size_t i, std::size_t base) {
  double f = 1.0;
  double r = 0.0;
  while (i > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

}  // namespace

TEST_CASE("contrast hand cases") {
  const auto e = catalog::ou_affine();
  const auto obs = from_rows({{0.0}, {1.0}});
  CHECK(contrast(obs, e.model, vec({1.0, 0.0}), 1.0) == 0.0);
  CHECK(contrast(obs, e.model, vec({0.0, 0.0}), 1.0) == 1.0);
  CHECK(contrast(obs, e.model, vec({0.0, 0.0}), 0.5) == 4.0);
  CHECK(residual_sum(obs, e.model, vec({0.0, 0.0})) == 1.0);
  CHECK_THROWS_AS(contrast(obs, e.model, vec({0.0, 0.0}), 0.0), ValidationError);
  CHECK_THROWS_AS(contrast(obs, e.model, vec({0.0, 0.0}), -1.0), ValidationError);
  CHECK_THROWS_AS(contrast(obs, e.model, vec({11.0, 0.0}), 1.0), ValidationError);
  CHECK_THROWS_AS(score(obs, e.model, vec({11.0, 0.0})), ValidationError);
}

TEST_CASE("exact recursion gives zero contrast and zero score") {
  const auto e = catalog::ou_affine();
  const auto theta = vec({1.0, 2.0});
  const auto obs = exact_recursion(e.model, theta, vec({1.0}), 20);
  CHECK(contrast(obs, e.model, theta, 0.1) <= 1e-22);
  CHECK(score(obs, e.model, theta).norm() <= 1e-12);
}

TEST_CASE("single-step score") {
  const auto e = catalog::ou_affine();
  const double r = 0.75;
  const auto obs = from_rows({{2.0}, {2.0 + r}});
  const auto theta = vec({0.3, -0.4});
  const double c = 0.3 - 0.8;
  const auto g = score(obs, e.model, theta);
  CHECK(g[0] == doctest::Approx(r - c).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(2.0 * (r - c)).epsilon(1e-14));
}

TEST_CASE("score is minus one half of the residual gradient") {
  LevySpec levy = LevySpec::brownian(1, 1.0);
  levy.jumps[0] = StableJumps{1.5, 0.0, 1.0};
  struct Case {
    ModelCatalogEntry entry;
    Eigen::VectorXd theta0;
    Eigen::VectorXd theta;
    Eigen::VectorXd x0;
  };
  std::vector<Case> cases;
  cases.push_back({catalog::ou_affine(), vec({1.0, -1.0}), vec({0.7, -0.6}), vec({1.0})});
  cases.push_back({catalog::sqrt_shift(), vec({1.0}), vec({1.7}), vec({0.0})});
  cases.push_back({catalog::affine_2d(), vec({1.0, -0.5, 0.3, 2.0, -0.4, -0.2}),
                   vec({0.8, -0.3, 0.2, 1.7, -0.5, -0.1}), vec({0.5, -0.5})});
  for (auto& c : cases) {
    const std::size_t d = c.entry.model.dim_x();
    LevySpec l = d == 1 ? levy : LevySpec::brownian(2, 1.0);
    const auto obs = simulated(c.entry.model, c.theta0, c.x0, 0.1, 200, 0, l);
    const auto g = score(obs, c.entry.model, c.theta);
    const double base = residual_sum(obs, c.entry.model, c.theta0);
    for (Eigen::Index i = 0; i < c.theta.size(); ++i) {
      const double h = 1e-5;
      Eigen::VectorXd up = c.theta;
      Eigen::VectorXd dn = c.theta;
      up[i] += h;
      dn[i] -= h;
      const double fd = ((residual_sum(obs, c.entry.model, up) - base) - (residual_sum(obs, c.entry.model, dn) - base)) /
                        (2.0 * h);
      CHECK(std::abs(-2.0 * g[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("closed-form ou_affine recovers an exact recursion") {
  const auto e = catalog::ou_affine();
  const auto obs = exact_recursion(e.model, vec({1.0, 2.0}), vec({1.0}), 20);
  const auto res = estimate_closed_form_affine(obs, e.model, 0.1);
  CHECK(res.method == EstimationResult::Method::closed_form);
  CHECK(std::abs(res.theta_hat[0] - 1.0) <= 1e-10);
  CHECK(std::abs(res.theta_hat[1] - 2.0) <= 1e-10);
  CHECK_FALSE(res.boundary_hit);

  // Independent oracle: normal equations solved by Cramer's rule.
  double s1 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
  for (std::size_t k = 1; k <= obs.n(); ++k) {
    const double x = obs.values(static_cast<Eigen::Index>(k - 1), 0);
    const double y = (obs.values(static_cast<Eigen::Index>(k), 0) - x) * 20.0;
    s1 += 1;
    sx += x;
    sxx += x * x;
    sy += y;
    sxy += x * y;
  }
  const auto sol = oracle::solve2(s1, sx, sx, sxx, sy, sxy);
  CHECK(res.theta_hat[0] == doctest::Approx(sol[0]).epsilon(1e-10));
  CHECK(res.theta_hat[1] == doctest::Approx(sol[1]).epsilon(1e-10));
}

TEST_CASE("closed form on constant data is singular") {
  const auto e = catalog::ou_affine();
  const auto obs = from_rows({{0.5}, {0.5}, {0.5}, {0.5}});
  CHECK_THROWS_AS(estimate_closed_form_affine(obs, e.model, 0.1), NumericalError);
}

TEST_CASE("affine_2d with A = 0 is not identifiable from noise-free data") {
  const auto e = catalog::affine_2d();
  const auto obs = exact_recursion(e.model, vec({1.0, 0.0, 0.0, 2.0, 0.0, 0.0}), vec({0.0, 0.0}), 20);
  CHECK_THROWS_AS(estimate_closed_form_affine(obs, e.model, 0.1), NumericalError);
}

TEST_CASE("closed-form affine_2d recovers an exact recursion") {
  const auto e = catalog::affine_2d();
  const auto theta = vec({1.0, -0.5, 1.0, 2.0, -1.0, -0.3});
  const auto obs = exact_recursion(e.model, theta, vec({0.5, -0.5}), 20);
  const auto res = estimate_closed_form_affine(obs, e.model, 0.1);
  CHECK((res.theta_hat - theta).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(res.contrast_value <= 1e-18);
}

TEST_CASE("closed-form estimates outside the box are clamped") {
  const auto e = catalog::ou_affine(ParameterBox::uniform(2, -1.0, 1.0));
  const auto obs = exact_recursion(catalog::ou_affine().model, vec({1.0, 2.0}), vec({1.0}), 20);
  const auto res = estimate_closed_form_affine(obs, e.model, 0.1);
  CHECK(res.boundary_hit);
  CHECK(e.model.box().contains({res.theta_hat.data(), 2}));
}

TEST_CASE("scalar estimating equation") {
  const auto e = catalog::sqrt_shift();
  SUBCASE("single increment solves to two") {
    const auto res = estimate_newton_scalar(from_rows({{0.0}, {std::sqrt(2.0)}}), e.model, 1.0);
    CHECK(res.method == EstimationResult::Method::newton_root);
    CHECK(res.converged);
    CHECK(std::abs(res.theta_hat[0] - 2.0) <= 1e-10);
  }
  SUBCASE("flat data falls back to golden section on the boundary") {
    const auto res = estimate_newton_scalar(from_rows({{0.3}, {0.3}, {0.3}, {0.3}}), e.model, 1.0);
    CHECK(res.method == EstimationResult::Method::golden_section);
    CHECK(res.boundary_hit);
    CHECK(res.theta_hat[0] == doctest::Approx(0.01).epsilon(1e-9));
  }
}

TEST_CASE("sqrt_shift estimates concentrate near the truth") {
  const auto e = catalog::sqrt_shift();
  int close = 0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    SimConfig c;
    c.epsilon = 0.01;
    c.n = 1000;
    c.substeps = 10;
    c.theta0 = vec({1.0});
    c.x0 = vec({0.0});
    c.levy = LevySpec::brownian(1, 1.0);
    c.seed = 777;
    c.replication = r;
    const auto res = estimate_newton_scalar(simulate(c, e.model), e.model, 0.01);
    if (std::abs(res.theta_hat[0] - 1.0) <= 0.05) ++close;
  }
  CHECK(close >= 190);
}

TEST_CASE("general optimiser agrees with the specialised estimators") {
  LevySpec levy = LevySpec::brownian(1, 1.0);
  levy.jumps[0] = StableJumps{1.5, 0.0, 1.0};
  for (std::uint64_t r = 0; r < 5; ++r) {
    {
      const auto e = catalog::ou_affine();
      const auto obs = simulated(e.model, vec({1.0, 1.0}), vec({1.0}), 0.05, 500, r, levy);
      const auto cf = estimate_closed_form_affine(obs, e.model, 0.05);
      const auto gen = estimate_general(obs, e.model, 0.05);
      CHECK((cf.theta_hat - gen.theta_hat).cwiseAbs().maxCoeff() <= 1e-6);
      CHECK(gen.contrast_value <= cf.contrast_value * (1 + 1e-12));
    }
    {
      const auto e = catalog::sqrt_shift();
      const auto obs = simulated(e.model, vec({1.0}), vec({0.0}), 0.05, 500, r, levy);
      const auto nw = estimate_newton_scalar(obs, e.model, 0.05);
      const auto gen = estimate_general(obs, e.model, 0.05);
      CHECK(std::abs(nw.theta_hat[0] - gen.theta_hat[0]) <= 1e-6);
    }
    {
      const auto e = catalog::affine_2d();
      const auto obs = simulated(e.model, vec({1.0, -0.5, 0.3, 2.0, -0.4, -0.2}), vec({0.5, -0.5}), 0.05, 500, r,
                                 LevySpec::brownian(2, 1.0));
      const auto cf = estimate_closed_form_affine(obs, e.model, 0.05);
      const auto gen = estimate_general(obs, e.model, 0.05);
      CHECK((cf.theta_hat - gen.theta_hat).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("general optimiser recovers a zero-residual minimum") {
  const auto e = catalog::affine_2d();
  const auto theta = vec({1.0, -0.5, 1.0, 2.0, -1.0, -0.3});
  const auto obs = exact_recursion(e.model, theta, vec({0.5, -0.5}), 20);
  const auto res = estimate_general(obs, e.model, 0.1);
  CHECK((res.theta_hat - theta).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(res.method == EstimationResult::Method::simplex_multistart);
}

TEST_CASE("psi and phi objectives give the same minimiser") {
  LevySpec levy = LevySpec::brownian(1, 1.0);
  levy.jumps[0] = StableJumps{1.2, 0.0, 1.0};
  struct Case {
    ModelCatalogEntry entry;
    Eigen::VectorXd theta0;
    Eigen::VectorXd x0;
  };
  const std::vector<Case> cases = {{catalog::ou_affine(), vec({1.0, -1.0}), vec({1.0})},
                                   {catalog::sqrt_shift(), vec({1.0}), vec({0.0})}};
  for (const auto& c : cases) {
    const auto obs = simulated(c.entry.model, c.theta0, c.x0, 0.05, 300, 3, levy);
    GeneralOptions psi;
    GeneralOptions phi;
    phi.objective = GeneralOptions::Objective::phi;
    phi.theta_ref = c.theta0;
    const auto a = estimate_general(obs, c.entry.model, 0.05, psi);
    const auto b = estimate_general(obs, c.entry.model, 0.05, phi);
    CHECK((a.theta_hat - b.theta_hat).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("reported contrast never exceeds the contrast at a start point") {
  const auto e = catalog::affine_2d();
  const auto obs = simulated(e.model, vec({1.0, -0.5, 0.3, 2.0, -0.4, -0.2}), vec({0.5, -0.5}), 0.2, 200, 1,
                             LevySpec::brownian(2, 1.0));
  const std::size_t primes[] = {2, 3, 5, 7, 11, 13};
  GeneralOptions opt;
  opt.starts = 5;
  opt.polish = false;
  const auto res = estimate_general(obs, e.model, 0.2, opt);
  const auto& box = e.model.box();
  for (std::size_t s = 0; s < opt.starts; ++s) {
    Eigen::VectorXd start(6);
    for (std::size_t i = 0; i < 6; ++i) {
      start[static_cast<Eigen::Index>(i)] = box.lo[i] + radical_inverse(s + 1, primes[i]) * box.width(i);
    }
    CHECK(res.contrast_value <= contrast(obs, e.model, start, 0.2));
  }
}

TEST_CASE("interior solutions have a vanishing score and lie in the box") {
  LevySpec levy = LevySpec::brownian(1, 1.0);
  levy.jumps[0] = StableJumps{1.5, 0.0, 1.0};
  const auto e = catalog::ou_affine();
  for (std::uint64_t r = 0; r < 10; ++r) {
    const auto obs = simulated(e.model, vec({1.0, 1.0}), vec({1.0}), 0.1, 200, r, levy);
    for (const auto choice : {EstimatorChoice::closed_form, EstimatorChoice::simplex}) {
      const auto res = estimate(obs, e.model, 0.1, choice);
      CHECK(e.model.box().contains({res.theta_hat.data(), 2}));
      if (!res.boundary_hit) {
        CHECK(res.score_norm_at_solution <= 1e-6 * (1.0 + residual_sum(obs, e.model, res.theta_hat)));
      }
    }
  }
}

TEST_CASE("estimator dispatch") {
  CHECK(parse_estimator("auto") == EstimatorChoice::automatic);
  CHECK(parse_estimator("closed_form") == EstimatorChoice::closed_form);
  CHECK(parse_estimator("newton") == EstimatorChoice::newton);
  CHECK(parse_estimator("simplex") == EstimatorChoice::simplex);
  CHECK_THROWS_AS(parse_estimator("bfgs"), ValidationError);
  const auto ou = catalog::ou_affine();
  const auto sq = catalog::sqrt_shift();
  const auto obs = exact_recursion(ou.model, vec({1.0, 2.0}), vec({1.0}), 20);
  CHECK(estimate(obs, ou.model, 0.1).method == EstimationResult::Method::closed_form);
  CHECK(estimate(from_rows({{0.0}, {std::sqrt(2.0)}}), sq.model, 1.0).method ==
        EstimationResult::Method::newton_root);
  CHECK_THROWS_AS(estimate(obs, sq.model, 0.1, EstimatorChoice::closed_form), ValidationError);
  GeneralOptions none;
  none.starts = 0;
  CHECK_THROWS_AS(estimate_general(obs, ou.model, 0.1, none), ValidationError);
}
