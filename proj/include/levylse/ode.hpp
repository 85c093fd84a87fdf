#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "levylse/drift_models.hpp"
#include "levylse/levy_noise.hpp"

namespace levylse {

/// Noise-free limit path dX0 = b(X0, theta0) dt on the uniform grid j / m.
struct DeterministicPath {
  enum class Source { closed_form, rk4 };

  std::vector<double> grid;  // m + 1 points, 0 .. 1
  RowMatrix values;          // (m + 1) x d
  Eigen::VectorXd theta0;
  Eigen::VectorXd x0;
  Source source = Source::rk4;

  std::size_t steps() const { return grid.empty() ? 0 : grid.size() - 1; }
  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
  std::span<const double> at(std::size_t j) const {
    return {values.row(static_cast<Eigen::Index>(j)).data(), dim()};
  }
};

inline constexpr std::size_t kDefaultOdeSteps = 10000;

/// Uses the entry's closed form when it has one, otherwise RK4.
DeterministicPath solve_x0(const ModelCatalogEntry& entry, const Eigen::VectorXd& theta0,
                           const Eigen::VectorXd& x0, std::size_t m = kDefaultOdeSteps);

/// Fixed-step classical RK4 with step 1 / m. Throws NumericalError if the
/// solution leaves |x| <= 1e12.
DeterministicPath solve_x0_rk4(const DriftModel& model, const Eigen::VectorXd& theta0,
                               const Eigen::VectorXd& x0, std::size_t m = kDefaultOdeSteps);

/// Piecewise-linear interpolation; exact at grid points. t must lie in [0, 1].
Eigen::VectorXd interp_x0(const DeterministicPath& path, double t);
void interp_x0(const DeterministicPath& path, double t, std::span<double> out);

}  // namespace levylse
