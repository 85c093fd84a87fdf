#include "levylse/ode.hpp"

#include <algorithm>
#include <cmath>

#include "levylse/errors.hpp"

namespace levylse {
namespace {

constexpr double kBlowUp = 1e12;

void check_inputs(const DriftModel& model, const Eigen::VectorXd& theta0,
                  const Eigen::VectorXd& x0, std::size_t m) {
  model.require_in_box(theta0);
  if (static_cast<std::size_t>(x0.size()) != model.dim_x()) {
    throw ValidationError("solve_x0: x0 must have " + std::to_string(model.dim_x()) + " components");
  }
  if (!x0.allFinite()) throw ValidationError("solve_x0: x0 must be finite");
  if (m < 10) throw ValidationError("solve_x0: need m >= 10 steps");
}

void check_row(const RowMatrix& values, Eigen::Index j) {
  const double size = values.row(j).cwiseAbs().maxCoeff();
  if (!(size <= kBlowUp)) {
    throw NumericalError("deterministic path blew up at t = " +
                             std::to_string(static_cast<double>(j) /
                                            static_cast<double>(values.rows() - 1)),
                         size);
  }
}

DeterministicPath empty_path(const Eigen::VectorXd& theta0, const Eigen::VectorXd& x0,
                             std::size_t m) {
  DeterministicPath path;
  path.grid = uniform_grid(m);
  path.values.resize(static_cast<Eigen::Index>(m + 1), x0.size());
  path.values.row(0) = x0.transpose();
  path.theta0 = theta0;
  path.x0 = x0;
  return path;
}

}  // namespace

DeterministicPath solve_x0(const ModelCatalogEntry& entry, const Eigen::VectorXd& theta0,
                           const Eigen::VectorXd& x0, std::size_t m) {
  if (!entry.closed_form_x0) return solve_x0_rk4(entry.model, theta0, x0, m);
  check_inputs(entry.model, theta0, x0, m);

  DeterministicPath path = empty_path(theta0, x0, m);
  path.source = DeterministicPath::Source::closed_form;
  for (std::size_t j = 1; j <= m; ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    path.values.row(row) = entry.closed_form_x0(path.grid[j], theta0, x0).transpose();
    check_row(path.values, row);
  }
  return path;
}

DeterministicPath solve_x0_rk4(const DriftModel& model, const Eigen::VectorXd& theta0,
                               const Eigen::VectorXd& x0, std::size_t m) {
  check_inputs(model, theta0, x0, m);

  DeterministicPath path = empty_path(theta0, x0, m);
  path.source = DeterministicPath::Source::rk4;

  const std::size_t d = model.dim_x();
  const double h = 1.0 / static_cast<double>(m);
  const std::span<const double> th(theta0.data(), static_cast<std::size_t>(theta0.size()));
  std::vector<double> k1(d), k2(d), k3(d), k4(d), stage(d);

  for (std::size_t j = 0; j < m; ++j) {
    const double* x = path.values.row(static_cast<Eigen::Index>(j)).data();
    const std::span<const double> xs(x, d);
    model.drift(xs, th, k1);
    for (std::size_t i = 0; i < d; ++i) stage[i] = x[i] + 0.5 * h * k1[i];
    model.drift(stage, th, k2);
    for (std::size_t i = 0; i < d; ++i) stage[i] = x[i] + 0.5 * h * k2[i];
    model.drift(stage, th, k3);
    for (std::size_t i = 0; i < d; ++i) stage[i] = x[i] + h * k3[i];
    model.drift(stage, th, k4);

    double* next = path.values.row(static_cast<Eigen::Index>(j + 1)).data();
    for (std::size_t i = 0; i < d; ++i) {
      next[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    check_row(path.values, static_cast<Eigen::Index>(j + 1));
  }
  return path;
}

void interp_x0(const DeterministicPath& path, double t, std::span<double> out) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ValidationError("interp_x0: t must lie in [0, 1], got " + std::to_string(t));
  }
  const std::size_t m = path.steps();
  const double pos = t * static_cast<double>(m);
  auto j = static_cast<std::size_t>(std::floor(pos));
  if (j >= m) j = m - 1;
  // Exact hits return the stored value unchanged.
  if (path.grid[j] == t) {
    const auto row = path.at(j);
    std::copy(row.begin(), row.end(), out.begin());
    return;
  }
  if (path.grid[j + 1] == t) {
    const auto row = path.at(j + 1);
    std::copy(row.begin(), row.end(), out.begin());
    return;
  }
  const double w = (t - path.grid[j]) / (path.grid[j + 1] - path.grid[j]);
  const auto lo = path.at(j);
  const auto hi = path.at(j + 1);
  for (std::size_t i = 0; i < path.dim(); ++i) out[i] = lo[i] + w * (hi[i] - lo[i]);
}

Eigen::VectorXd interp_x0(const DeterministicPath& path, double t) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(path.dim()));
  interp_x0(path, t, {out.data(), path.dim()});
  return out;
}

}  // namespace levylse
