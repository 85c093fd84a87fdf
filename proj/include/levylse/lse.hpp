#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "levylse/drift_models.hpp"
#include "levylse/sde_sim.hpp"

namespace levylse {

struct EstimationResult {
  enum class Method { closed_form, newton_root, golden_section, simplex_multistart };

  Eigen::VectorXd theta_hat;
  double contrast_value = 0.0;
  Method method = Method::simplex_multistart;
  std::size_t iterations = 0;
  bool converged = false;
  bool boundary_hit = false;
  double score_norm_at_solution = 0.0;
};

std::string to_string(EstimationResult::Method method);

/// sum_k |dX_k - b(X_{k-1}, theta) dt|^2 / dt. Equals eps^2 times the contrast.
double residual_sum(const ObservationSet& obs, const DriftModel& model, const Eigen::VectorXd& theta);

/// Contrast Psi(theta) = residual_sum / eps^2. Requires eps > 0.
double contrast(const ObservationSet& obs, const DriftModel& model, const Eigen::VectorXd& theta,
                double epsilon);

/// Score G(theta) = sum_k (d_theta b(X_{k-1}))^T (dX_k - b(X_{k-1}) dt).
/// The gradient of residual_sum is -2 G.
Eigen::VectorXd score(const ObservationSet& obs, const DriftModel& model, const Eigen::VectorXd& theta);

/// Jacobian of the score in theta. Requires second derivatives.
Eigen::MatrixXd score_jacobian(const ObservationSet& obs, const DriftModel& model,
                               const Eigen::VectorXd& theta);

/// Explicit minimiser for the affine models ou_affine and affine_2d. Throws
/// NumericalError (witness = condition estimate) when the normal equations
/// are singular. Estimates outside the box are clamped with boundary_hit set.
EstimationResult estimate_closed_form_affine(const ObservationSet& obs, const DriftModel& model,
                                             double epsilon);

/// Scalar estimating equation for sqrt_shift, solved by safeguarded Newton
/// with bisection. Without a sign change on the box, golden-section search
/// on the contrast is used instead.
EstimationResult estimate_newton_scalar(const ObservationSet& obs, const DriftModel& model,
                                        double epsilon);

struct GeneralOptions {
  enum class Objective { psi, phi };

  std::size_t starts = 8;
  Objective objective = Objective::psi;
  std::optional<Eigen::VectorXd> theta_ref;  // reference point for phi; box centre if empty
  std::size_t max_evaluations = 4000;        // per start
  bool polish = true;
};

/// Bounded multistart Nelder-Mead from Halton points of the box, followed by
/// Newton polishing on the score when second derivatives exist.
EstimationResult estimate_general(const ObservationSet& obs, const DriftModel& model, double epsilon,
                                  const GeneralOptions& options = {});

enum class EstimatorChoice { automatic, closed_form, newton, simplex };

EstimatorChoice parse_estimator(const std::string& name);

/// Dispatches to the estimator; `automatic` picks by model name.
EstimationResult estimate(const ObservationSet& obs, const DriftModel& model, double epsilon,
                          EstimatorChoice choice = EstimatorChoice::automatic,
                          std::size_t starts = 8);

}  // namespace levylse
