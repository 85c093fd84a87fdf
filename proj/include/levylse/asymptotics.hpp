#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>

#include <Eigen/Core>

#include "levylse/drift_models.hpp"
#include "levylse/levy_noise.hpp"
#include "levylse/ode.hpp"

namespace levylse {

/// I(theta0) = int_0^1 (d_theta b)^T (d_theta b) (X0_s, theta0) ds.
struct InformationMatrix {
  Eigen::MatrixXd matrix;
  std::size_t quadrature_m = 0;
  double min_eigenvalue = 0.0;
};

/// Composite Simpson on s_j = j / m with X0 interpolated from `x0_path`.
/// m must be even and >= 10. Throws NumericalError (witness = smallest
/// eigenvalue) unless the result is positive definite.
InformationMatrix information_matrix(const DriftModel& model, const DeterministicPath& x0_path,
                                     const Eigen::VectorXd& theta0, std::size_t m = 10000);

/// One draw of S(theta0) = int_0^1 (d_theta b)^T (X0_s, theta0) dL_s by the
/// left-point sum over fine_m equal steps.
Eigen::VectorXd sample_limit_S(const DriftModel& model, const DeterministicPath& x0_path,
                               const Eigen::VectorXd& theta0, const LevySpec& levy,
                               std::size_t fine_m, RandomStream& rng);

struct LimitLawSample {
  RowMatrix draws;  // count x p
  std::uint64_t seed = 0;
  std::size_t fine_m = 0;

  void write_csv(std::ostream& out) const;
};

/// `count` draws of I^{-1} S. Draw i uses RandomStream(seed, i), so the
/// result does not depend on `threads`.
LimitLawSample sample_limit_distribution(const DriftModel& model, const DeterministicPath& x0_path,
                                         const Eigen::VectorXd& theta0, const LevySpec& levy,
                                         std::size_t count, std::size_t fine_m, std::uint64_t seed,
                                         std::size_t threads = 1, std::size_t quadrature_m = 10000);

/// Limit law of the sqrt_shift model driven by L = a B + sigma Z, Z standard
/// alpha-stable with skewness beta:
///   a I^{-1/2} N + sigma I^{-1} [int_0^1 (2 sqrt(theta0 + X0_s^2))^{-alpha} ds]^{1/alpha} U.
/// Draw i uses RandomStream(seed, i).
LimitLawSample sample_limit_closed_form_sqrt_shift(double theta0, double x0, double a, double sigma,
                                                   double alpha, double beta, std::size_t count,
                                                   std::uint64_t seed, std::size_t quadrature_m = 10000);

/// Composite Simpson rule for f on [0, 1] with m (even) panels.
template <typename F>
double simpson_unit(F&& f, std::size_t m) {
  const double h = 1.0 / static_cast<double>(m);
  double sum = f(0.0) + f(1.0);
  for (std::size_t j = 1; j < m; ++j) {
    sum += (j % 2 == 1 ? 4.0 : 2.0) * f(static_cast<double>(j) * h);
  }
  return sum * h / 3.0;
}

}  // namespace levylse
