#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "levylse/drift_models.hpp"
#include "levylse/levy_noise.hpp"
#include "levylse/ode.hpp"

namespace levylse {

struct SimConfig {
  double epsilon = 0.01;  // in (0, 1]; 0 is accepted for noise-free test runs
  std::size_t n = 1000;
  std::size_t substeps = 100;
  Eigen::VectorXd x0;
  Eigen::VectorXd theta0;
  LevySpec levy;
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;

  void validate(const DriftModel& model) const;
};

/// Full Euler path on the fine grid together with the driving noise.
struct FinePath {
  std::vector<double> grid;  // n * substeps + 1 points
  RowMatrix values;          // (n * substeps + 1) x d
  NoisePath noise;
};

/// Observations X_{t_k}, t_k = k / n, k = 0..n.
struct ObservationSet {
  std::vector<double> times;
  RowMatrix values;                  // (n + 1) x d
  std::optional<SimConfig> config;   // empty for external data
  std::optional<FinePath> fine_path;

  std::size_t n() const { return times.empty() ? 0 : times.size() - 1; }
  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
  bool external() const { return !config.has_value(); }
  std::span<const double> at(std::size_t k) const {
    return {values.row(static_cast<Eigen::Index>(k)).data(), dim()};
  }

  /// Wraps externally supplied observations; times become k / n.
  static ObservationSet from_values(RowMatrix values);
};

/// Euler scheme X_{s+h} = X_s + b(X_s, theta0) h + eps dL on the fine grid
/// h = 1 / (n * substeps); observations are every `substeps`-th fine value.
/// Deterministic in (seed, replication).
ObservationSet simulate(const SimConfig& config, const DriftModel& model,
                        bool keep_fine_path = false);

struct GronwallReport {
  double lhs = 0.0;            // sup_fine |X - X0|
  double rhs = 0.0;            // sqrt(2) eps e^{K^2} sup |L|
  double sup_noise = 0.0;      // sup |L| over the fine grid
  double euler_constant = 0.0; // c in the slack c * h
  double slack = 0.0;          // c * h + interpolation error of X0
  bool pass = false;

  /// Per observation interval:
  ///   sup_s |X_s - X_{t_{k-1}}| <= sqrt(2) (|b(X_{t_{k-1}})| / n + eps sup_s |L_s - L_{t_{k-1}}|) e^{K^2/n^2}
  std::size_t interval_violations = 0;
  double worst_interval_ratio = 0.0;  // max lhs / rhs over intervals
};

/// Checks the pathwise bounds on a simulated path. `lipschitz` must be a
/// Lipschitz constant of b(., theta0) on the visited region.
GronwallReport gronwall_check(const ObservationSet& obs, const DeterministicPath& x0_path,
                              const DriftModel& model, double lipschitz);

}  // namespace levylse
