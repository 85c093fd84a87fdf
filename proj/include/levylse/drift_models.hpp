#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "levylse/random.hpp"

namespace levylse {

/// Closed axis-aligned parameter box; stands in for the bounded convex
/// parameter region.
struct ParameterBox {
  std::vector<double> lo;
  std::vector<double> hi;

  ParameterBox() = default;
  ParameterBox(std::vector<double> lower, std::vector<double> upper);
  /// Same interval for every coordinate.
  static ParameterBox uniform(std::size_t p, double lower, double upper);

  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> theta) const;
  Eigen::VectorXd center() const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& theta) const;
  /// True if some coordinate lies within `rel_tol * width` of a face.
  bool on_boundary(std::span<const double> theta, double rel_tol = 1e-9) const;
  double width(std::size_t i) const { return hi[i] - lo[i]; }
};

/// b(x, theta) -> out (length d).
using DriftFn = std::function<void(std::span<const double> x, std::span<const double> theta,
                                   std::span<double> out)>;
/// d x p Jacobian in theta, row-major; column i holds d b / d theta_i.
using DriftGradFn = std::function<void(std::span<const double> x, std::span<const double> theta,
                                       std::span<double> out)>;
/// d x p x p array of second theta-derivatives, index (k * p + i) * p + j.
using DriftHessFn = std::function<void(std::span<const double> x, std::span<const double> theta,
                                       std::span<double> out)>;

/// Drift b(x, theta) together with its theta-derivatives and parameter box.
/// Immutable after construction.
class DriftModel {
 public:
  DriftModel(std::string name, std::size_t dim_x, std::size_t dim_theta, ParameterBox box,
             DriftFn b, DriftGradFn grad, DriftHessFn hess = {},
             std::optional<double> lipschitz = std::nullopt);

  const std::string& name() const { return name_; }
  std::size_t dim_x() const { return dim_x_; }
  std::size_t dim_theta() const { return dim_theta_; }
  const ParameterBox& box() const { return box_; }
  bool has_hessian() const { return static_cast<bool>(hess_); }
  std::optional<double> lipschitz() const { return lipschitz_; }

  /// Checked evaluation: theta must lie in the box, output must be finite.
  Eigen::VectorXd eval_b(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd eval_grad_theta(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const;
  /// One p x p matrix per drift component.
  std::vector<Eigen::MatrixXd> eval_hess_theta(const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& theta) const;

  // Unchecked hot-path evaluation; callers validate theta once up front.
  void drift(std::span<const double> x, std::span<const double> theta, std::span<double> out) const {
    b_(x, theta, out);
  }
  void grad(std::span<const double> x, std::span<const double> theta, std::span<double> out) const {
    grad_(x, theta, out);
  }
  void hess(std::span<const double> x, std::span<const double> theta, std::span<double> out) const {
    hess_(x, theta, out);
  }

  /// Throws ValidationError unless theta has length p and lies in the box.
  void require_in_box(std::span<const double> theta) const;
  void require_in_box(const Eigen::VectorXd& theta) const;

 private:
  void check_x(const Eigen::VectorXd& x) const;

  std::string name_;
  std::size_t dim_x_;
  std::size_t dim_theta_;
  ParameterBox box_;
  DriftFn b_;
  DriftGradFn grad_;
  DriftHessFn hess_;
  std::optional<double> lipschitz_;
};

/// Closed-form deterministic path X0(t) for given (theta0, x0).
using ClosedFormPath =
    std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& theta0, const Eigen::VectorXd& x0)>;

struct ModelCatalogEntry {
  std::string id;
  DriftModel model;
  ClosedFormPath closed_form_x0;  // empty if none
  bool closed_form_lse = false;
};

namespace catalog {
inline constexpr const char* kOuAffine = "ou_affine";
inline constexpr const char* kSqrtShift = "sqrt_shift";
inline constexpr const char* kAffine2d = "affine_2d";

/// b(x, theta) = theta_1 + theta_2 x in one dimension. Default box [-10, 10]^2.
ModelCatalogEntry ou_affine(std::optional<ParameterBox> box = std::nullopt);
/// b(x, theta) = sqrt(theta + x^2), box [c1, c2] with c1 > 0. Default [0.01, 10].
ModelCatalogEntry sqrt_shift(std::optional<ParameterBox> box = std::nullopt);
/// b(x, theta) = C + A x in two dimensions,
/// theta = (c1, A11, A12, c2, A21, A22). Default box [-10, 10]^6.
ModelCatalogEntry affine_2d(std::optional<ParameterBox> box = std::nullopt);

ModelCatalogEntry make(const std::string& id, std::optional<ParameterBox> box = std::nullopt);
std::vector<std::string> ids();
bool contains(const std::string& id);
}  // namespace catalog

struct IdentifiabilityEntry {
  Eigen::VectorXd theta;
  double max_diff = 0.0;
  bool is_truth = false;
  bool non_identifiable = false;  // max_diff below threshold while theta != theta0
};

struct IdentifiabilityReport {
  std::vector<IdentifiabilityEntry> entries;
  double threshold = 1e-10;
  bool any_failure() const;
};

/// For each candidate reports max over `grid` of |b(X0_t, theta) - b(X0_t, theta0)|.
IdentifiabilityReport check_identifiability_grid(
    const DriftModel& model, const Eigen::VectorXd& theta0,
    const std::function<Eigen::VectorXd(double)>& x0_path, std::span<const double> grid,
    const std::vector<Eigen::VectorXd>& candidates);

/// ||analytic grad - central difference|| / max(||analytic grad||, 1e-12).
double gradient_fd_discrepancy(const DriftModel& model, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& theta, double step = 1e-6);

/// Largest sampled |b(x, theta) - b(y, theta)| / |x - y| for x, y uniform in
/// [x_lo, x_hi]^d. A witness for a Lipschitz constant, not a proof.
double lipschitz_witness(const DriftModel& model, const Eigen::VectorXd& theta, double x_lo,
                         double x_hi, std::size_t samples, RandomStream& rng);

}  // namespace levylse
