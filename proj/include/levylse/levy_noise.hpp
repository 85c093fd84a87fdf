#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "levylse/random.hpp"

namespace levylse {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Jump-size law used by compound-Poisson jumps.
struct JumpDistribution {
  enum class Kind { constant, normal, uniform, laplace };

  Kind kind = Kind::normal;
  double p1 = 0.0;  // constant: value; normal: mean; uniform: lo; laplace: location
  double p2 = 1.0;  // normal: sd; uniform: hi; laplace: scale

  double sample(RandomStream& rng) const;
  void validate() const;

  static JumpDistribution parse(const std::string& name, double p1, double p2);
  std::string name() const;
};

struct NoJumps {};

/// Finite-activity jumps: Poisson(rate * dt) jumps per cell, sizes from `sizes`.
struct CompoundPoissonJumps {
  double rate = 0.0;
  JumpDistribution sizes;
};

/// Exact alpha-stable Levy motion Z with Z_1 ~ S_alpha(scale, beta, 0).
struct StableJumps {
  double alpha = 1.5;
  double beta = 0.0;
  double scale = 1.0;
};

/// Pure-jump process with the stable-type Levy measure
///   nu(dz) = c_plus z^{-1-alpha} dz (z > 0),  c_minus |z|^{-1-alpha} dz (z < 0).
/// Jumps smaller than `eta` are dropped; the compensator of the kept jumps
/// in eta < |z| <= 1 enters as a deterministic drift.
struct TruncatedStableJumps {
  double alpha = 1.5;
  double c_plus = 1.0;
  double c_minus = 1.0;
  double eta = 1e-3;

  double jump_rate() const;
  double compensator_drift() const;
};

using JumpPart = std::variant<NoJumps, CompoundPoissonJumps, StableJumps, TruncatedStableJumps>;

/// Parameters of the driving Levy process L_t = a t + sigma B_t + jumps.
/// Jump parts act independently on each coordinate.
struct LevySpec {
  Eigen::VectorXd drift;      // a, length d
  Eigen::MatrixXd sigma;      // d x r Brownian loading
  std::vector<JumpPart> jumps;  // length d

  std::size_t dim() const { return static_cast<std::size_t>(drift.size()); }
  std::size_t brownian_dim() const { return static_cast<std::size_t>(sigma.cols()); }
  bool has_jumps() const;

  /// Throws ValidationError describing the first violated constraint.
  void validate() const;

  /// Zero drift, zero loading, no jumps.
  static LevySpec zero(std::size_t d);
  /// a = 0, sigma = brownian_scale * I_d, no jumps.
  static LevySpec brownian(std::size_t d, double brownian_scale);
  /// One-dimensional L = brownian_scale * B + Z with Z stable.
  static LevySpec brownian_plus_stable(double brownian_scale, StableJumps stable);
};

/// Draws one variate from S_alpha(1, beta, 0) by the Chambers-Mallows-Stuck
/// transform.
double sample_stable_standard(double alpha, double beta, RandomStream& rng);

/// CMS sampler with the alpha/beta dependent constants precomputed.
class StableSampler {
 public:
  StableSampler(double alpha, double beta);
  double operator()(RandomStream& rng) const;
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

 private:
  double alpha_;
  double beta_;
  double shift_ = 0.0;  // atan(beta tan(pi alpha / 2)) / alpha
  double scale_ = 1.0;  // (1 + beta^2 tan^2(pi alpha / 2))^{1 / (2 alpha)}
};

/// Samples increments of L over cells of a fixed length dt.
class LevyStepper {
 public:
  LevyStepper(const LevySpec& spec, double dt);

  /// Writes one increment L_{t+dt} - L_t into `out` (length d).
  void sample(RandomStream& rng, std::span<double> out) const;

  std::size_t dim() const { return spec_.dim(); }
  double dt() const { return dt_; }

 private:
  struct CoordinateJump {
    enum class Kind { none, compound_poisson, stable, truncated_stable } kind = Kind::none;
    double poisson_mean = 0.0;
    JumpDistribution sizes;
    double stable_factor = 0.0;  // scale * dt^{1/alpha}, or scale * dt when alpha == 1
    double stable_shift = 0.0;   // nonzero only for alpha == 1, beta != 0
    double drift = 0.0;          // truncated-stable compensator * dt
    double alpha = 1.0;
    double eta = 0.0;
    double prob_positive = 0.5;
    int sampler = -1;            // index into samplers_
  };

  LevySpec spec_;
  double dt_;
  double sqrt_dt_;
  std::vector<CoordinateJump> coord_;
  std::vector<StableSampler> samplers_;
};

/// Running sum of Levy increments. Each emitted increment is the difference of
/// consecutive stored cumulative values, so cumulative[k+1] - cumulative[k]
/// reproduces increments[k] bitwise.
class NoiseAccumulator {
 public:
  explicit NoiseAccumulator(std::size_t d) : cumulative_(d, 0.0) {}

  /// Adds `raw` to the running sum and overwrites it with the stored difference.
  void absorb(std::span<double> raw);
  std::span<const double> cumulative() const { return cumulative_; }

 private:
  std::vector<double> cumulative_;
};

struct NoisePath {
  std::vector<double> grid;   // strictly increasing, grid[0] == 0
  RowMatrix increments;       // steps x d
  RowMatrix cumulative;       // (steps + 1) x d, row 0 == 0

  std::size_t steps() const { return static_cast<std::size_t>(increments.rows()); }
};

/// Samples a path of L on `grid` (strictly increasing, starting at 0).
NoisePath sample_increments(const LevySpec& spec, std::span<const double> grid,
                            RandomStream& rng);

/// Largest Euclidean norm of the cumulative path over the grid points.
double max_abs_on_path(const NoisePath& path);

/// Uniform grid k / steps, k = 0..steps.
std::vector<double> uniform_grid(std::size_t steps, double horizon = 1.0);

}  // namespace levylse
