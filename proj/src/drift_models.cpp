#include "levylse/drift_models.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <unsupported/Eigen/MatrixFunctions>

#include "levylse/errors.hpp"

namespace levylse {
namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

double max_abs_bound(const ParameterBox& box, std::size_t i) {
  return std::max(std::abs(box.lo[i]), std::abs(box.hi[i]));
}

}  // namespace

// ---------------------------------------------------------------------------
// ParameterBox

ParameterBox::ParameterBox(std::vector<double> lower, std::vector<double> upper)
    : lo(std::move(lower)), hi(std::move(upper)) {
  if (lo.empty() || lo.size() != hi.size()) {
    throw ValidationError("parameter box: lower and upper bounds need equal, nonzero length");
  }
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(lo[i] < hi[i])) {
      throw ValidationError("parameter box: need finite lo < hi in coordinate " +
                            std::to_string(i + 1));
    }
  }
}

ParameterBox ParameterBox::uniform(std::size_t p, double lower, double upper) {
  return {std::vector<double>(p, lower), std::vector<double>(p, upper)};
}

bool ParameterBox::contains(std::span<const double> theta) const {
  if (theta.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!(theta[i] >= lo[i] && theta[i] <= hi[i])) return false;
  }
  return true;
}

Eigen::VectorXd ParameterBox::center() const {
  Eigen::VectorXd c(static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < dim(); ++i) c[static_cast<Eigen::Index>(i)] = 0.5 * (lo[i] + hi[i]);
  return c;
}

Eigen::VectorXd ParameterBox::clamp(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd out = theta;
  for (std::size_t i = 0; i < dim(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out[k] = std::clamp(out[k], lo[i], hi[i]);
  }
  return out;
}

bool ParameterBox::on_boundary(std::span<const double> theta, double rel_tol) const {
  for (std::size_t i = 0; i < dim(); ++i) {
    const double tol = rel_tol * width(i);
    if (theta[i] - lo[i] <= tol || hi[i] - theta[i] <= tol) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// DriftModel

DriftModel::DriftModel(std::string name, std::size_t dim_x, std::size_t dim_theta,
                       ParameterBox box, DriftFn b, DriftGradFn grad, DriftHessFn hess,
                       std::optional<double> lipschitz)
    : name_(std::move(name)),
      dim_x_(dim_x),
      dim_theta_(dim_theta),
      box_(std::move(box)),
      b_(std::move(b)),
      grad_(std::move(grad)),
      hess_(std::move(hess)),
      lipschitz_(lipschitz) {
  if (dim_x_ < 1 || dim_theta_ < 1) throw ValidationError("drift model: need d >= 1 and p >= 1");
  if (box_.dim() != dim_theta_) throw ValidationError("drift model: box dimension must equal p");
  if (!b_ || !grad_) throw ValidationError("drift model: b and grad_theta_b are required");
  if (lipschitz_ && !(*lipschitz_ > 0.0)) throw ValidationError("drift model: K must be > 0");
}

void DriftModel::require_in_box(std::span<const double> theta) const {
  if (theta.size() != dim_theta_) {
    throw ValidationError(name_ + ": theta must have " + std::to_string(dim_theta_) +
                          " components, got " + std::to_string(theta.size()));
  }
  if (!box_.contains(theta)) {
    std::string msg = name_ + ": theta outside parameter box (";
    for (std::size_t i = 0; i < theta.size(); ++i) {
      msg += (i ? ", " : "") + std::to_string(theta[i]);
    }
    throw ValidationError(msg + ")");
  }
}

void DriftModel::require_in_box(const Eigen::VectorXd& theta) const {
  require_in_box(as_span(theta));
}

void DriftModel::check_x(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_x_) {
    throw ValidationError(name_ + ": x must have " + std::to_string(dim_x_) + " components");
  }
}

Eigen::VectorXd DriftModel::eval_b(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
  check_x(x);
  require_in_box(theta);
  Eigen::VectorXd out(static_cast<Eigen::Index>(dim_x_));
  b_(as_span(x), as_span(theta), {out.data(), dim_x_});
  if (!out.allFinite()) throw NumericalError(name_ + ": drift evaluated to a non-finite value");
  return out;
}

Eigen::MatrixXd DriftModel::eval_grad_theta(const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& theta) const {
  check_x(x);
  require_in_box(theta);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(
      static_cast<Eigen::Index>(dim_x_), static_cast<Eigen::Index>(dim_theta_));
  grad_(as_span(x), as_span(theta), {out.data(), dim_x_ * dim_theta_});
  if (!out.allFinite()) throw NumericalError(name_ + ": theta-gradient is not finite");
  return out;
}

std::vector<Eigen::MatrixXd> DriftModel::eval_hess_theta(const Eigen::VectorXd& x,
                                                         const Eigen::VectorXd& theta) const {
  check_x(x);
  require_in_box(theta);
  if (!hess_) throw ValidationError(name_ + ": no theta-Hessian supplied");
  const auto p = dim_theta_;
  std::vector<double> raw(dim_x_ * p * p);
  hess_(as_span(x), as_span(theta), raw);
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t k = 0; k < dim_x_; ++k) {
    Eigen::MatrixXd h(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = raw[(k * p + i) * p + j];
      }
    }
    if (!h.allFinite()) throw NumericalError(name_ + ": theta-Hessian is not finite");
    out.push_back(std::move(h));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Catalog

namespace catalog {

ModelCatalogEntry ou_affine(std::optional<ParameterBox> box) {
  ParameterBox b = box ? std::move(*box) : ParameterBox::uniform(2, -10.0, 10.0);
  double k = 1.0;
  for (std::size_t i = 0; i < 2; ++i) k = std::max(k, max_abs_bound(b, i));

  DriftModel model(
      kOuAffine, 1, 2, std::move(b),
      [](std::span<const double> x, std::span<const double> th, std::span<double> out) {
        out[0] = th[0] + th[1] * x[0];
      },
      [](std::span<const double> x, std::span<const double>, std::span<double> out) {
        out[0] = 1.0;
        out[1] = x[0];
      },
      [](std::span<const double>, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
      },
      k);

  ClosedFormPath path = [](double t, const Eigen::VectorXd& th, const Eigen::VectorXd& x0) {
    Eigen::VectorXd v(1);
    if (th[1] == 0.0) {
      v[0] = x0[0] + th[0] * t;
    } else {
      const double growth = std::exp(th[1] * t);
      v[0] = growth * x0[0] + th[0] * std::expm1(th[1] * t) / th[1];
    }
    return v;
  };
  return {kOuAffine, std::move(model), std::move(path), true};
}

ModelCatalogEntry sqrt_shift(std::optional<ParameterBox> box) {
  ParameterBox b = box ? std::move(*box) : ParameterBox::uniform(1, 0.01, 10.0);
  if (b.dim() != 1 || !(b.lo[0] > 0.0)) {
    throw ValidationError("sqrt_shift: box must be [c1, c2] with 0 < c1 < c2");
  }
  const double k = std::max(1.0, std::sqrt(b.hi[0]));

  DriftModel model(
      kSqrtShift, 1, 1, std::move(b),
      [](std::span<const double> x, std::span<const double> th, std::span<double> out) {
        out[0] = std::sqrt(th[0] + x[0] * x[0]);
      },
      [](std::span<const double> x, std::span<const double> th, std::span<double> out) {
        out[0] = 0.5 / std::sqrt(th[0] + x[0] * x[0]);
      },
      [](std::span<const double> x, std::span<const double> th, std::span<double> out) {
        const double s = th[0] + x[0] * x[0];
        out[0] = -0.25 / (s * std::sqrt(s));
      },
      k);

  ClosedFormPath path = [](double t, const Eigen::VectorXd& th, const Eigen::VectorXd& x0) {
    const double anchor = x0[0] + std::sqrt(th[0] + x0[0] * x0[0]);
    Eigen::VectorXd v(1);
    v[0] = (anchor * anchor * std::exp(2.0 * t) - th[0]) / (2.0 * anchor * std::exp(t));
    return v;
  };
  return {kSqrtShift, std::move(model), std::move(path), false};
}

ModelCatalogEntry affine_2d(std::optional<ParameterBox> box) {
  ParameterBox b = box ? std::move(*box) : ParameterBox::uniform(6, -10.0, 10.0);
  // theta = (c1, A11, A12, c2, A21, A22)
  const double c_norm = std::hypot(max_abs_bound(b, 0), max_abs_bound(b, 3));
  double a_frob = 0.0;
  for (std::size_t i : {1u, 2u, 4u, 5u}) a_frob += std::pow(max_abs_bound(b, i), 2);
  const double k = std::max({1.0, c_norm, std::sqrt(a_frob)});

  DriftModel model(
      kAffine2d, 2, 6, std::move(b),
      [](std::span<const double> x, std::span<const double> th, std::span<double> out) {
        out[0] = th[0] + th[1] * x[0] + th[2] * x[1];
        out[1] = th[3] + th[4] * x[0] + th[5] * x[1];
      },
      [](std::span<const double> x, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = 1.0;
        out[1] = x[0];
        out[2] = x[1];
        out[6 + 3] = 1.0;
        out[6 + 4] = x[0];
        out[6 + 5] = x[1];
      },
      [](std::span<const double>, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
      },
      k);

  ClosedFormPath path = [](double t, const Eigen::VectorXd& th, const Eigen::VectorXd& x0) {
    // exp(t [[A, C], [0, 0]]) = [[e^{At}, int_0^t e^{Au} du C], [0, 1]]
    Eigen::Matrix3d aug = Eigen::Matrix3d::Zero();
    aug(0, 0) = th[1];
    aug(0, 1) = th[2];
    aug(1, 0) = th[4];
    aug(1, 1) = th[5];
    aug(0, 2) = th[0];
    aug(1, 2) = th[3];
    const Eigen::Matrix3d flow = (aug * t).exp();
    const Eigen::Vector3d start(x0[0], x0[1], 1.0);
    return Eigen::VectorXd((flow * start).head<2>());
  };
  return {kAffine2d, std::move(model), std::move(path), true};
}

ModelCatalogEntry make(const std::string& id, std::optional<ParameterBox> box) {
  if (id == kOuAffine) return ou_affine(std::move(box));
  if (id == kSqrtShift) return sqrt_shift(std::move(box));
  if (id == kAffine2d) return affine_2d(std::move(box));
  throw ValidationError("unknown model id '" + id + "' (known: ou_affine, sqrt_shift, affine_2d)");
}

std::vector<std::string> ids() { return {kOuAffine, kSqrtShift, kAffine2d}; }

bool contains(const std::string& id) {
  const auto all = ids();
  return std::find(all.begin(), all.end(), id) != all.end();
}

}  // namespace catalog

// ---------------------------------------------------------------------------
// Assumption checks

bool IdentifiabilityReport::any_failure() const {
  return std::any_of(entries.begin(), entries.end(),
                     [](const IdentifiabilityEntry& e) { return e.non_identifiable; });
}

IdentifiabilityReport check_identifiability_grid(
    const DriftModel& model, const Eigen::VectorXd& theta0,
    const std::function<Eigen::VectorXd(double)>& x0_path, std::span<const double> grid,
    const std::vector<Eigen::VectorXd>& candidates) {
  model.require_in_box(theta0);
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> truth;
  states.reserve(grid.size());
  for (double t : grid) {
    states.push_back(x0_path(t));
    truth.push_back(model.eval_b(states.back(), theta0));
  }

  IdentifiabilityReport report;
  for (const auto& theta : candidates) {
    IdentifiabilityEntry entry;
    entry.theta = theta;
    for (std::size_t j = 0; j < states.size(); ++j) {
      entry.max_diff = std::max(entry.max_diff, (model.eval_b(states[j], theta) - truth[j]).norm());
    }
    entry.is_truth = theta == theta0;
    entry.non_identifiable = !entry.is_truth && entry.max_diff < report.threshold;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

double gradient_fd_discrepancy(const DriftModel& model, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& theta, double step) {
  const Eigen::MatrixXd analytic = model.eval_grad_theta(x, theta);
  Eigen::MatrixXd numeric(analytic.rows(), analytic.cols());
  Eigen::VectorXd plus(analytic.rows());
  Eigen::VectorXd minus(analytic.rows());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(theta[i]));
    Eigen::VectorXd tp = theta;
    Eigen::VectorXd tm = theta;
    tp[i] += h;
    tm[i] -= h;
    model.drift(as_span(x), as_span(tp), {plus.data(), model.dim_x()});
    model.drift(as_span(x), as_span(tm), {minus.data(), model.dim_x()});
    numeric.col(i) = (plus - minus) / (2.0 * h);
  }
  return (analytic - numeric).norm() / std::max(analytic.norm(), 1e-12);
}

double lipschitz_witness(const DriftModel& model, const Eigen::VectorXd& theta, double x_lo,
                         double x_hi, std::size_t samples, RandomStream& rng) {
  model.require_in_box(theta);
  const auto d = static_cast<Eigen::Index>(model.dim_x());
  double worst = 0.0;
  Eigen::VectorXd x(d), y(d);
  for (std::size_t s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < d; ++i) {
      x[i] = rng.uniform(x_lo, x_hi);
      y[i] = rng.uniform(x_lo, x_hi);
    }
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    worst = std::max(worst, (model.eval_b(x, theta) - model.eval_b(y, theta)).norm() / dist);
  }
  return worst;
}

}  // namespace levylse
