#include "levylse/levy_noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "levylse/errors.hpp"

namespace levylse {
namespace {

constexpr double kPi = std::numbers::pi;

void check_stable(double alpha, double beta, const std::string& where) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw ValidationError(where + ": alpha must lie in (0, 2), got " + std::to_string(alpha));
  }
  if (!(beta >= -1.0 && beta <= 1.0)) {
    throw ValidationError(where + ": beta must lie in [-1, 1], got " + std::to_string(beta));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// JumpDistribution

double JumpDistribution::sample(RandomStream& rng) const {
  switch (kind) {
    case Kind::constant:
      return p1;
    case Kind::normal:
      return p1 + p2 * rng.normal();
    case Kind::uniform:
      return rng.uniform(p1, p2);
    case Kind::laplace: {
      const double magnitude = p2 * rng.exponential();
      return rng.uniform() < 0.5 ? p1 - magnitude : p1 + magnitude;
    }
  }
  return 0.0;
}

void JumpDistribution::validate() const {
  if (!std::isfinite(p1) || !std::isfinite(p2)) {
    throw ValidationError("jump distribution parameters must be finite");
  }
  switch (kind) {
    case Kind::constant:
      break;
    case Kind::normal:
      if (p2 < 0.0) throw ValidationError("normal jump sd must be >= 0");
      break;
    case Kind::uniform:
      if (!(p1 < p2)) throw ValidationError("uniform jump bounds need lo < hi");
      break;
    case Kind::laplace:
      if (!(p2 > 0.0)) throw ValidationError("laplace jump scale must be > 0");
      break;
  }
}

JumpDistribution JumpDistribution::parse(const std::string& name, double p1, double p2) {
  JumpDistribution dist;
  if (name == "constant") {
    dist.kind = Kind::constant;
  } else if (name == "normal") {
    dist.kind = Kind::normal;
  } else if (name == "uniform") {
    dist.kind = Kind::uniform;
  } else if (name == "laplace") {
    dist.kind = Kind::laplace;
  } else {
    throw ValidationError("unknown jump distribution '" + name + "'");
  }
  dist.p1 = p1;
  dist.p2 = p2;
  dist.validate();
  return dist;
}

std::string JumpDistribution::name() const {
  switch (kind) {
    case Kind::constant: return "constant";
    case Kind::normal: return "normal";
    case Kind::uniform: return "uniform";
    case Kind::laplace: return "laplace";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// TruncatedStableJumps

double TruncatedStableJumps::jump_rate() const {
  return (c_plus + c_minus) * std::pow(eta, -alpha) / alpha;
}

double TruncatedStableJumps::compensator_drift() const {
  // -int_{eta < |z| <= 1} z nu(dz)
  const double first_moment =
      alpha == 1.0 ? -std::log(eta) : (1.0 - std::pow(eta, 1.0 - alpha)) / (1.0 - alpha);
  return -(c_plus - c_minus) * first_moment;
}

// ---------------------------------------------------------------------------
// LevySpec

bool LevySpec::has_jumps() const {
  return std::any_of(jumps.begin(), jumps.end(),
                     [](const JumpPart& j) { return !std::holds_alternative<NoJumps>(j); });
}

void LevySpec::validate() const {
  const auto d = drift.size();
  if (d < 1) throw ValidationError("levy: dimension d must be >= 1");
  if (sigma.rows() != d) throw ValidationError("levy: sigma must have d rows");
  if (sigma.cols() < 1) throw ValidationError("levy: sigma must have r >= 1 columns");
  if (static_cast<Eigen::Index>(jumps.size()) != d) {
    throw ValidationError("levy: one jump part per coordinate required");
  }
  if (!drift.allFinite()) throw ValidationError("levy: drift a must be finite");
  if (!sigma.allFinite()) throw ValidationError("levy: sigma must be finite");

  for (const auto& part : jumps) {
    if (const auto* cp = std::get_if<CompoundPoissonJumps>(&part)) {
      if (!(cp->rate >= 0.0) || !std::isfinite(cp->rate)) {
        throw ValidationError("levy: compound Poisson rate must be finite and >= 0");
      }
      cp->sizes.validate();
    } else if (const auto* st = std::get_if<StableJumps>(&part)) {
      check_stable(st->alpha, st->beta, "levy.stable");
      if (!(st->scale > 0.0) || !std::isfinite(st->scale)) {
        throw ValidationError("levy.stable: scale must be > 0");
      }
    } else if (const auto* ts = std::get_if<TruncatedStableJumps>(&part)) {
      check_stable(ts->alpha, 0.0, "levy.truncated_stable");
      if (!(ts->c_plus >= 0.0 && ts->c_minus >= 0.0) || ts->c_plus + ts->c_minus <= 0.0) {
        throw ValidationError("levy.truncated_stable: c_plus, c_minus must be >= 0, not both 0");
      }
      if (!(ts->eta > 0.0 && ts->eta <= 1.0)) {
        throw ValidationError("levy.truncated_stable: eta must lie in (0, 1]");
      }
    }
  }
}

LevySpec LevySpec::zero(std::size_t d) {
  LevySpec spec;
  spec.drift = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  spec.sigma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  spec.jumps.assign(d, NoJumps{});
  return spec;
}

LevySpec LevySpec::brownian(std::size_t d, double brownian_scale) {
  LevySpec spec = zero(d);
  spec.sigma.diagonal().setConstant(brownian_scale);
  return spec;
}

LevySpec LevySpec::brownian_plus_stable(double brownian_scale, StableJumps stable) {
  LevySpec spec = brownian(1, brownian_scale);
  spec.jumps[0] = stable;
  return spec;
}

// ---------------------------------------------------------------------------
// Stable sampling

StableSampler::StableSampler(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  check_stable(alpha, beta, "stable");
  if (alpha != 1.0) {
    const double zeta = beta * std::tan(kPi * alpha / 2.0);
    shift_ = std::atan(zeta) / alpha;
    scale_ = std::pow(1.0 + zeta * zeta, 1.0 / (2.0 * alpha));
  }
}

double StableSampler::operator()(RandomStream& rng) const {
  const double v = kPi * (rng.uniform_open() - 0.5);
  const double w = rng.exponential();
  if (alpha_ == 1.0) {
    const double half_pi_bv = kPi / 2.0 + beta_ * v;
    return (2.0 / kPi) *
           (half_pi_bv * std::tan(v) - beta_ * std::log((kPi / 2.0) * w * std::cos(v) / half_pi_bv));
  }
  const double arg = alpha_ * (v + shift_);
  return scale_ * std::sin(arg) / std::pow(std::cos(v), 1.0 / alpha_) *
         std::pow(std::cos(v - arg) / w, (1.0 - alpha_) / alpha_);
}

double sample_stable_standard(double alpha, double beta, RandomStream& rng) {
  return StableSampler(alpha, beta)(rng);
}

// ---------------------------------------------------------------------------
// LevyStepper

LevyStepper::LevyStepper(const LevySpec& spec, double dt)
    : spec_(spec), dt_(dt), sqrt_dt_(std::sqrt(dt)) {
  spec_.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("levy: cell length must be > 0");

  coord_.resize(spec_.dim());
  for (std::size_t i = 0; i < spec_.dim(); ++i) {
    auto& c = coord_[i];
    const auto& part = spec_.jumps[i];
    if (const auto* cp = std::get_if<CompoundPoissonJumps>(&part)) {
      c.kind = CoordinateJump::Kind::compound_poisson;
      c.poisson_mean = cp->rate * dt;
      c.sizes = cp->sizes;
    } else if (const auto* st = std::get_if<StableJumps>(&part)) {
      c.kind = CoordinateJump::Kind::stable;
      c.sampler = static_cast<int>(samplers_.size());
      samplers_.emplace_back(st->alpha, st->beta);
      if (st->alpha == 1.0) {
        // Z_dt ~ S_1(scale dt, beta, 0) = c U + (2 / pi) beta c log c with c = scale dt.
        c.stable_factor = st->scale * dt;
        c.stable_shift = (2.0 / kPi) * st->beta * c.stable_factor * std::log(c.stable_factor);
      } else {
        c.stable_factor = st->scale * std::pow(dt, 1.0 / st->alpha);
      }
    } else if (const auto* ts = std::get_if<TruncatedStableJumps>(&part)) {
      c.kind = CoordinateJump::Kind::truncated_stable;
      c.poisson_mean = ts->jump_rate() * dt;
      c.drift = ts->compensator_drift() * dt;
      c.alpha = ts->alpha;
      c.eta = ts->eta;
      c.prob_positive = ts->c_plus / (ts->c_plus + ts->c_minus);
    }
  }
}

void LevyStepper::sample(RandomStream& rng, std::span<double> out) const {
  const auto d = spec_.dim();
  const auto r = spec_.brownian_dim();
  for (std::size_t i = 0; i < d; ++i) out[i] = spec_.drift[static_cast<Eigen::Index>(i)] * dt_;

  for (std::size_t j = 0; j < r; ++j) {
    bool column_active = false;
    for (std::size_t i = 0; i < d; ++i) {
      if (spec_.sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) {
        column_active = true;
        break;
      }
    }
    if (!column_active) continue;
    const double z = sqrt_dt_ * rng.normal();
    for (std::size_t i = 0; i < d; ++i) {
      out[i] += spec_.sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * z;
    }
  }

  for (std::size_t i = 0; i < d; ++i) {
    const auto& c = coord_[i];
    switch (c.kind) {
      case CoordinateJump::Kind::none:
        break;
      case CoordinateJump::Kind::compound_poisson: {
        const auto count = rng.poisson(c.poisson_mean);
        for (std::uint64_t k = 0; k < count; ++k) out[i] += c.sizes.sample(rng);
        break;
      }
      case CoordinateJump::Kind::stable:
        out[i] += c.stable_factor * samplers_[static_cast<std::size_t>(c.sampler)](rng) +
                  c.stable_shift;
        break;
      case CoordinateJump::Kind::truncated_stable: {
        double sum = c.drift;
        const auto count = rng.poisson(c.poisson_mean);
        for (std::uint64_t k = 0; k < count; ++k) {
          const double size = c.eta * std::pow(rng.uniform_open(), -1.0 / c.alpha);
          sum += rng.uniform() < c.prob_positive ? size : -size;
        }
        out[i] += sum;
        break;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Paths

void NoiseAccumulator::absorb(std::span<double> raw) {
  for (std::size_t i = 0; i < cumulative_.size(); ++i) {
    const double next = cumulative_[i] + raw[i];
    raw[i] = next - cumulative_[i];
    cumulative_[i] = next;
  }
}

NoisePath sample_increments(const LevySpec& spec, std::span<const double> grid,
                            RandomStream& rng) {
  spec.validate();
  if (grid.empty() || grid.front() != 0.0) throw ValidationError("levy: grid must start at 0");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw ValidationError("levy: grid must be strictly increasing");
  }

  const auto d = static_cast<Eigen::Index>(spec.dim());
  const auto steps = static_cast<Eigen::Index>(grid.size() - 1);
  NoisePath path;
  path.grid.assign(grid.begin(), grid.end());
  path.increments.resize(steps, d);
  path.cumulative = RowMatrix::Zero(steps + 1, d);

  NoiseAccumulator acc(spec.dim());
  std::optional<LevyStepper> stepper;
  for (Eigen::Index k = 0; k < steps; ++k) {
    const double dt = grid[static_cast<std::size_t>(k) + 1] - grid[static_cast<std::size_t>(k)];
    if (!stepper || stepper->dt() != dt) stepper.emplace(spec, dt);
    std::span<double> row(path.increments.row(k).data(), spec.dim());
    stepper->sample(rng, row);
    acc.absorb(row);
    std::copy(acc.cumulative().begin(), acc.cumulative().end(), path.cumulative.row(k + 1).data());
  }
  return path;
}

double max_abs_on_path(const NoisePath& path) {
  double best = 0.0;
  for (Eigen::Index k = 0; k < path.cumulative.rows(); ++k) {
    best = std::max(best, path.cumulative.row(k).norm());
  }
  return best;
}

std::vector<double> uniform_grid(std::size_t steps, double horizon) {
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    grid[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
  }
  return grid;
}

}  // namespace levylse
