#include <doctest.h>

#include <cmath>

#include "levylse/drift_models.hpp"
#include "levylse/errors.hpp"

using namespace levylse;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const double x : v) out[i++] = x;
  return out;
}

Eigen::VectorXd random_in_box(const ParameterBox& box, RandomStream& rng) {
  Eigen::VectorXd th(static_cast<Eigen::Index>(box.dim()));
  for (std::size_t i = 0; i < box.dim(); ++i) {
    th[static_cast<Eigen::Index>(i)] = rng.uniform(box.lo[i], box.hi[i]);
  }
  return th;
}

}  // namespace

TEST_CASE("drift values of the catalog models") {
  CHECK(catalog::ou_affine().model.eval_b(vec({0.0}), vec({1.0, 1.0}))[0] == 1.0);
  CHECK(catalog::sqrt_shift().model.eval_b(vec({0.0}), vec({4.0}))[0] == 2.0);
  const Eigen::VectorXd b = catalog::affine_2d().model.eval_b(vec({1.0, 0.0}), vec({0, 1, 0, 0, 0, 1}));
  CHECK(b[0] == 1.0);
  CHECK(b[1] == 0.0);
}

TEST_CASE("theta-gradients of the catalog models") {
  const auto ou = catalog::ou_affine().model;
  for (const double x : {-3.0, 0.0, 2.5}) {
    const Eigen::MatrixXd g = ou.eval_grad_theta(vec({x}), vec({0.3, -2.0}));
    CHECK(g(0, 0) == 1.0);
    CHECK(g(0, 1) == x);
  }
  CHECK(catalog::sqrt_shift().model.eval_grad_theta(vec({0.0}), vec({1.0}))(0, 0) == 0.5);
}

TEST_CASE("analytic gradients match central differences") {
  RandomStream rng(5, 0);
  for (const auto& id : catalog::ids()) {
    const auto entry = catalog::make(id);
    const auto& m = entry.model;
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::VectorXd theta = random_in_box(m.box(), rng);
      Eigen::VectorXd x(static_cast<Eigen::Index>(m.dim_x()));
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-3.0, 3.0);
      // keep the central difference inside the box
      const Eigen::VectorXd inner = m.box().clamp(theta);
      Eigen::VectorXd safe = inner;
      for (std::size_t i = 0; i < m.box().dim(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        safe[k] = std::clamp(safe[k], m.box().lo[i] + 1e-3, m.box().hi[i] - 1e-3);
      }
      REQUIRE(gradient_fd_discrepancy(m, x, safe) <= 1e-6);
    }
  }
}

TEST_CASE("analytic second derivatives match differences of the gradient") {
  RandomStream rng(6, 0);
  for (const auto& id : catalog::ids()) {
    const auto m = catalog::make(id).model;
    REQUIRE(m.has_hessian());
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd theta = random_in_box(m.box(), rng);
      for (std::size_t i = 0; i < m.box().dim(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        theta[k] = std::clamp(theta[k], m.box().lo[i] + 1e-3, m.box().hi[i] - 1e-3);
      }
      Eigen::VectorXd x(static_cast<Eigen::Index>(m.dim_x()));
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-3.0, 3.0);
      const auto hess = m.eval_hess_theta(x, theta);
      const double h = 1e-6;
      for (Eigen::Index j = 0; j < theta.size(); ++j) {
        Eigen::VectorXd up = theta, down = theta;
        up[j] += h;
        down[j] -= h;
        const Eigen::MatrixXd fd = (m.eval_grad_theta(x, up) - m.eval_grad_theta(x, down)) / (2 * h);
        for (std::size_t c = 0; c < m.dim_x(); ++c) {
          for (Eigen::Index i = 0; i < theta.size(); ++i) {
            REQUIRE(std::abs(hess[c](i, j) - fd(static_cast<Eigen::Index>(c), i)) <=
                    1e-6 * (1.0 + std::abs(hess[c](i, j))));
          }
        }
      }
    }
  }
}

TEST_CASE("box and finiteness checks") {
  const auto ou = catalog::ou_affine().model;
  CHECK_THROWS_AS(ou.eval_b(vec({0.0}), vec({11.0, 0.0})), ValidationError);
  CHECK_THROWS_AS(ou.eval_b(vec({0.0}), vec({1.0})), ValidationError);
  CHECK_THROWS_AS(ou.eval_b(vec({1e308}), vec({0.0, 10.0})), NumericalError);
  CHECK_THROWS_AS(catalog::sqrt_shift(ParameterBox({-1.0}, {2.0})), ValidationError);
  CHECK_THROWS_AS(ParameterBox({1.0}, {1.0}), ValidationError);
  CHECK_THROWS_AS(catalog::make("nope"), ValidationError);
  const ParameterBox box = ParameterBox::uniform(2, -1.0, 1.0);
  CHECK(box.on_boundary(std::vector<double>{1.0, 0.0}));
  CHECK_FALSE(box.on_boundary(std::vector<double>{0.5, 0.0}));
  CHECK(box.clamp(vec({3.0, -0.5})) == vec({1.0, -0.5}));
}

TEST_CASE("closed-form deterministic paths solve the ODE") {
  RandomStream rng(7, 0);
  struct Case {
    std::string id;
    Eigen::VectorXd theta;
    Eigen::VectorXd x0;
  };
  const std::vector<Case> cases = {
      {catalog::kOuAffine, vec({1.0, 1.0}), vec({1.0})},
      {catalog::kOuAffine, vec({1.0, 0.0}), vec({0.0})},
      {catalog::kOuAffine, vec({-2.0, -3.0}), vec({0.5})},
      {catalog::kSqrtShift, vec({1.0}), vec({0.0})},
      {catalog::kSqrtShift, vec({3.0}), vec({-1.0})},
      {catalog::kAffine2d, vec({1.0, 0.5, -0.2, 2.0, 0.3, 0.8}), vec({0.5, -1.0})},
  };
  for (const auto& c : cases) {
    const auto entry = catalog::make(c.id);
    REQUIRE(entry.closed_form_x0);
    CHECK((entry.closed_form_x0(0.0, c.theta, c.x0) - c.x0).norm() <= 1e-15 * (1.0 + c.x0.norm()));
    for (int k = 0; k < 20; ++k) {
      const double t = rng.uniform(0.01, 0.99);
      const double h = 1e-5;
      const Eigen::VectorXd d = (entry.closed_form_x0(t + h, c.theta, c.x0) -
                                 entry.closed_form_x0(t - h, c.theta, c.x0)) / (2 * h);
      const Eigen::VectorXd b = entry.model.eval_b(entry.closed_form_x0(t, c.theta, c.x0), c.theta);
      REQUIRE((d - b).norm() <= 1e-8 * (1.0 + b.norm()));
    }
  }
}

TEST_CASE("identifiability witness") {
  const auto ou = catalog::ou_affine();
  const auto grid = std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0};
  {
    const Eigen::VectorXd th0 = vec({1.0, 1.0});
    auto path = [&](double t) { return ou.closed_form_x0(t, th0, vec({1.0})); };
    const auto rep = check_identifiability_grid(ou.model, th0, path, grid, {vec({1.0, 1.0})});
    CHECK(rep.entries[0].max_diff == 0.0);
    CHECK(rep.entries[0].is_truth);
    CHECK_FALSE(rep.entries[0].non_identifiable);
    CHECK_FALSE(rep.any_failure());
  }
  {
    const Eigen::VectorXd th0 = vec({0.0, 0.0});
    auto path = [&](double t) { return ou.closed_form_x0(t, th0, vec({0.0})); };
    const auto rep = check_identifiability_grid(ou.model, th0, path, grid, {vec({0.0, 5.0})});
    CHECK(rep.entries[0].max_diff == 0.0);
    CHECK(rep.entries[0].non_identifiable);
    CHECK(rep.any_failure());
  }
  {
    const auto sq = catalog::sqrt_shift();
    const Eigen::VectorXd th0 = vec({1.0});
    auto path = [&](double t) { return sq.closed_form_x0(t, th0, vec({0.0})); };
    const auto rep = check_identifiability_grid(sq.model, th0, path, grid, {vec({1.5})});
    CHECK(rep.entries[0].max_diff > 0.0);
    CHECK_FALSE(rep.any_failure());
  }
}

TEST_CASE("sampled Lipschitz witness stays below the declared constant") {
  RandomStream rng(8, 0);
  for (const auto& id : catalog::ids()) {
    const auto m = catalog::make(id).model;
    REQUIRE(m.lipschitz());
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd theta = random_in_box(m.box(), rng);
      CHECK(lipschitz_witness(m, theta, -5.0, 5.0, 10000, rng) <= *m.lipschitz() * (1.0 + 1e-12));
    }
  }
  // For the affine drift the witness is |theta_2| itself.
  const auto ou = catalog::ou_affine().model;
  CHECK(lipschitz_witness(ou, vec({0.0, -3.0}), -1.0, 1.0, 1000, rng) == doctest::Approx(3.0).epsilon(1e-9));
}
