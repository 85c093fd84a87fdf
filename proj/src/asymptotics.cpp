#include "levylse/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <vector>

#include <Eigen/Dense>

#include "levylse/errors.hpp"
#include "levylse/parallel.hpp"

namespace levylse {
namespace {

// X0 between grid nodes by cubic Hermite interpolation. The node slopes come
// from the ODE itself, X0' = b(X0, theta0), so the error is O(h^4) rather
// than the O(h^2) of linear interpolation.
class HermitePath {
 public:
  HermitePath(const DriftModel& model, const DeterministicPath& path, const Eigen::VectorXd& theta0)
      : path_(path), slopes_(path.values.rows(), path.values.cols()) {
    const std::size_t d = model.dim_x();
    const std::span<const double> th(theta0.data(), model.dim_theta());
    std::vector<double> x(d), b(d);
    for (Eigen::Index j = 0; j < path.values.rows(); ++j) {
      for (std::size_t i = 0; i < d; ++i) x[i] = path.values(j, static_cast<Eigen::Index>(i));
      model.drift(x, th, b);
      for (std::size_t i = 0; i < d; ++i) slopes_(j, static_cast<Eigen::Index>(i)) = b[i];
    }
  }

  void at(double t, std::span<double> out) const {
    const auto& grid = path_.grid;
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    std::size_t j = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
    if (j + 1 >= grid.size()) j = grid.size() - 2;
    const double h = grid[j + 1] - grid[j];
    const double u = (t - grid[j]) / h;
    if (u == 0.0 || u == 1.0) {
      const auto row = static_cast<Eigen::Index>(u == 0.0 ? j : j + 1);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = path_.values(row, static_cast<Eigen::Index>(i));
      return;
    }
    const double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    const double h10 = u * (1.0 - u) * (1.0 - u);
    const double h01 = u * u * (3.0 - 2.0 * u);
    const double h11 = u * u * (u - 1.0);
    const auto a = static_cast<Eigen::Index>(j);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      out[i] = h00 * path_.values(a, c) + h10 * h * slopes_(a, c) + h01 * path_.values(a + 1, c) +
               h11 * h * slopes_(a + 1, c);
    }
  }

 private:
  const DeterministicPath& path_;
  RowMatrix slopes_;
};

// Gradient of b at X0_{s_j}, s_j = j / m, as d x p matrices.
std::vector<Eigen::MatrixXd> gradients_on_grid(const DriftModel& model, const DeterministicPath& path,
                                               const Eigen::VectorXd& theta0, std::size_t m) {
  const std::size_t d = model.dim_x();
  const std::size_t p = model.dim_theta();
  const std::span<const double> th(theta0.data(), p);
  const HermitePath x0(model, path, theta0);
  std::vector<double> x(d), g(d * p);
  std::vector<Eigen::MatrixXd> out(m + 1);
  for (std::size_t j = 0; j <= m; ++j) {
    x0.at(static_cast<double>(j) / static_cast<double>(m), x);
    model.grad(x, th, g);
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    out[j] = Eigen::Map<const RowMajor>(g.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(p));
    if (!out[j].allFinite()) {
      throw NumericalError("drift gradient is not finite along the deterministic path");
    }
  }
  return out;
}

void check_common(const DriftModel& model, const DeterministicPath& path, const Eigen::VectorXd& theta0) {
  model.require_in_box(theta0);
  if (path.dim() != model.dim_x()) {
    throw ValidationError("deterministic path dimension does not match the model");
  }
}

Eigen::VectorXd riemann_sum(const std::vector<Eigen::MatrixXd>& grads, const LevyStepper& stepper,
                            std::size_t d, RandomStream& rng) {
  const auto p = grads.front().cols();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd dl(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j + 1 < grads.size(); ++j) {
    stepper.sample(rng, {dl.data(), d});
    s.noalias() += grads[j].transpose() * dl;
  }
  return s;
}

}  // namespace

InformationMatrix information_matrix(const DriftModel& model, const DeterministicPath& x0_path,
                                     const Eigen::VectorXd& theta0, std::size_t m) {
  check_common(model, x0_path, theta0);
  if (m < 10 || m % 2 != 0) throw ValidationError("information_matrix: m must be even and >= 10");

  const auto grads = gradients_on_grid(model, x0_path, theta0, m);
  const auto p = static_cast<Eigen::Index>(model.dim_theta());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t j = 0; j <= m; ++j) {
    const double w = (j == 0 || j == m) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    sum.noalias() += w * grads[j].transpose() * grads[j];
  }
  sum /= 3.0 * static_cast<double>(m);

  InformationMatrix info;
  info.matrix = 0.5 * (sum + sum.transpose());
  info.quadrature_m = m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info.matrix, Eigen::EigenvaluesOnly);
  info.min_eigenvalue = eig.eigenvalues().minCoeff();
  const double max_eigenvalue = eig.eigenvalues().maxCoeff();
  if (!(info.min_eigenvalue > 1e-12 * std::max(max_eigenvalue, 0.0))) {
    throw NumericalError("information matrix is not positive definite (smallest eigenvalue " +
                             std::to_string(info.min_eigenvalue) + "); the parameter is not identifiable "
                             "along the deterministic path",
                         info.min_eigenvalue);
  }
  return info;
}

Eigen::VectorXd sample_limit_S(const DriftModel& model, const DeterministicPath& x0_path,
                               const Eigen::VectorXd& theta0, const LevySpec& levy,
                               std::size_t fine_m, RandomStream& rng) {
  check_common(model, x0_path, theta0);
  if (fine_m < 100) throw ValidationError("sample_limit_S: fine_m must be >= 100");
  levy.validate();
  if (levy.dim() != model.dim_x()) throw ValidationError("sample_limit_S: levy dimension mismatch");
  const auto grads = gradients_on_grid(model, x0_path, theta0, fine_m);
  const LevyStepper stepper(levy, 1.0 / static_cast<double>(fine_m));
  return riemann_sum(grads, stepper, model.dim_x(), rng);
}

LimitLawSample sample_limit_distribution(const DriftModel& model, const DeterministicPath& x0_path,
                                         const Eigen::VectorXd& theta0, const LevySpec& levy,
                                         std::size_t count, std::size_t fine_m, std::uint64_t seed,
                                         std::size_t threads, std::size_t quadrature_m) {
  check_common(model, x0_path, theta0);
  if (count < 1) throw ValidationError("sample_limit_distribution: count must be >= 1");
  if (fine_m < 100) throw ValidationError("sample_limit_distribution: fine_m must be >= 100");
  levy.validate();
  if (levy.dim() != model.dim_x()) throw ValidationError("sample_limit_distribution: levy dimension mismatch");

  const InformationMatrix info = information_matrix(model, x0_path, theta0, quadrature_m);
  const Eigen::LLT<Eigen::MatrixXd> chol(info.matrix);
  if (chol.info() != Eigen::Success) {
    throw NumericalError("Cholesky factorisation of the information matrix failed", info.min_eigenvalue);
  }
  const auto grads = gradients_on_grid(model, x0_path, theta0, fine_m);
  const LevyStepper stepper(levy, 1.0 / static_cast<double>(fine_m));

  LimitLawSample sample;
  sample.seed = seed;
  sample.fine_m = fine_m;
  sample.draws.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(model.dim_theta()));
  parallel_for(count, threads, [&](std::size_t i) {
    RandomStream rng(seed, i);
    const Eigen::VectorXd s = riemann_sum(grads, stepper, model.dim_x(), rng);
    sample.draws.row(static_cast<Eigen::Index>(i)) = chol.solve(s).transpose();
  });
  if (!sample.draws.allFinite()) throw NumericalError("limit-law draws are not finite");
  return sample;
}

LimitLawSample sample_limit_closed_form_sqrt_shift(double theta0, double x0, double a, double sigma,
                                                   double alpha, double beta, std::size_t count,
                                                   std::uint64_t seed, std::size_t quadrature_m) {
  if (!(theta0 > 0.0)) throw ValidationError("closed-form limit: theta0 must be > 0");
  if (!std::isfinite(x0)) throw ValidationError("closed-form limit: x0 must be finite");
  if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("closed-form limit: a must be >= 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("closed-form limit: sigma must be >= 0");
  if (!(alpha > 0.0 && alpha < 2.0)) throw ValidationError("closed-form limit: alpha must lie in (0, 2)");
  if (!(beta >= -1.0 && beta <= 1.0)) throw ValidationError("closed-form limit: beta must lie in [-1, 1]");
  if (count < 1) throw ValidationError("closed-form limit: count must be >= 1");
  if (quadrature_m < 10 || quadrature_m % 2 != 0) {
    throw ValidationError("closed-form limit: quadrature_m must be even and >= 10");
  }

  const double big_a = x0 + std::sqrt(theta0 + x0 * x0);
  auto x0_at = [&](double t) {
    const double e = std::exp(t);
    return (big_a * big_a * e * e - theta0) / (2.0 * big_a * e);
  };
  const double info = simpson_unit(
      [&](double t) {
        const double v = x0_at(t);
        return 1.0 / (4.0 * (theta0 + v * v));
      },
      quadrature_m);
  const double stable_integral = simpson_unit(
      [&](double t) {
        const double v = x0_at(t);
        return std::pow(2.0 * std::sqrt(theta0 + v * v), -alpha);
      },
      quadrature_m);

  const double normal_scale = a / std::sqrt(info);
  const double stable_scale = sigma / info * std::pow(stable_integral, 1.0 / alpha);
  const StableSampler stable(alpha, beta);

  LimitLawSample sample;
  sample.seed = seed;
  sample.fine_m = quadrature_m;
  sample.draws.resize(static_cast<Eigen::Index>(count), 1);
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream rng(seed, i);
    const double n = rng.normal();
    const double u = stable(rng);
    sample.draws(static_cast<Eigen::Index>(i), 0) = normal_scale * n + stable_scale * u;
  }
  return sample;
}

void LimitLawSample::write_csv(std::ostream& out) const {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  for (Eigen::Index j = 0; j < draws.cols(); ++j) out << (j ? "," : "") << "theta_" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    for (Eigen::Index j = 0; j < draws.cols(); ++j) out << (j ? "," : "") << draws(i, j);
    out << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace levylse
