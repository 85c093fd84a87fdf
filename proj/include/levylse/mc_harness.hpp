#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "levylse/asymptotics.hpp"
#include "levylse/drift_models.hpp"
#include "levylse/levy_noise.hpp"
#include "levylse/lse.hpp"

namespace levylse {

struct LadderPoint {
  double epsilon = 0.0;
  std::size_t n = 0;
};

enum class ExperimentMode { consistency, limit_law };

struct ExperimentPlan {
  std::string model_id;
  std::optional<ParameterBox> box;
  Eigen::VectorXd theta0;
  Eigen::VectorXd x0;
  LevySpec levy;
  std::vector<LadderPoint> ladder;
  std::size_t replications = 1;
  std::size_t substeps = 100;
  std::uint64_t seed = 0;
  EstimatorChoice method = EstimatorChoice::automatic;
  std::size_t starts = 8;
  ExperimentMode mode = ExperimentMode::consistency;
  std::size_t threads = 1;

  /// Throws ValidationError. Limit-law plans need eps > 0 and n * eps
  /// strictly increasing along the ladder.
  void validate() const;
};

struct ReplicationRecord {
  std::size_t replication = 0;
  double epsilon = 0.0;
  std::size_t n = 0;
  bool ok = false;
  Eigen::VectorXd theta_hat;  // NaN entries when the replication failed
  bool converged = false;
  bool boundary_hit = false;
  double contrast = 0.0;
  std::string failure;
};

inline constexpr double kQuantileLevels[] = {0.05, 0.25, 0.5, 0.75, 0.95};
inline constexpr double kMaxFailureFraction = 0.2;
inline constexpr double kRmseSlack = 1.2;

struct LadderStats {
  double epsilon = 0.0;
  std::size_t n = 0;
  std::size_t replications = 0;
  std::size_t failures = 0;
  bool valid = true;  // failures <= 20% of replications
  Eigen::VectorXd bias;
  Eigen::VectorXd rmse;
  double boundary_fraction = 0.0;
  /// Rows follow kQuantileLevels; columns are coordinates of eps^{-1}(theta_hat - theta0).
  /// Empty when eps == 0.
  Eigen::MatrixXd rescaled_quantiles;
};

/// Statistics over one ladder point's records. Values are sorted before
/// summation so the result does not depend on record order.
LadderStats summarize(std::span<const ReplicationRecord> records, const Eigen::VectorXd& theta0,
                      double epsilon, std::size_t n);

struct KsComparison {
  std::string label;
  Eigen::VectorXd direction;  // unit vector of the projection
  double statistic = 0.0;
  bool pass = false;
};

struct ExperimentReport {
  ExperimentPlan plan;
  std::vector<LadderStats> points;
  std::vector<ReplicationRecord> records;  // all ladder points, in ladder then replication order
  std::vector<bool> rmse_decreasing;       // per coordinate, factor kRmseSlack between neighbours
  Eigen::VectorXd rmse_ratio_last_first;
  bool flagged = false;                    // some ladder point is invalid

  std::vector<KsComparison> ks;            // limit-law runs only
  std::size_t limit_count = 0;
  double ks_critical_value = 0.0;

  double runtime_seconds = 0.0;

  nlohmann::json to_json(bool include_runtime = true) const;
  void write_replications_csv(std::ostream& out) const;
};

ExperimentReport run_consistency(const ExperimentPlan& plan);

/// Compares eps^{-1}(theta_hat - theta0) at the last ladder point with the
/// limit draws, per coordinate and on three seeded random projections when p > 1.
ExperimentReport run_limit_law(const ExperimentPlan& plan, const LimitLawSample& limit);

/// sup_t |F_x(t) - F_y(t)| by a merge over the sorted samples.
double ks_two_sample(std::span<const double> x, std::span<const double> y);

/// Asymptotic 1% critical value 1.628 sqrt((n + m) / (n m)).
double ks_critical_value_1pct(std::size_t n, std::size_t m);

/// Three unit directions in R^p derived from `seed`.
std::vector<Eigen::VectorXd> projection_directions(std::size_t p, std::uint64_t seed);

std::string to_string(ExperimentMode mode);
std::string to_string(EstimatorChoice choice);

}  // namespace levylse
