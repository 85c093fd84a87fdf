#include "levylse/sde_sim.hpp"

#include <algorithm>
#include <cmath>

#include "levylse/errors.hpp"

namespace levylse {

void SimConfig::validate(const DriftModel& model) const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw ValidationError("sim.epsilon must lie in (0, 1] (0 allowed for noise-free runs), got " +
                          std::to_string(epsilon));
  }
  if (n < 2) throw ValidationError("sim.n must be >= 2");
  if (substeps < 1) throw ValidationError("sim.substeps must be >= 1");
  if (static_cast<std::size_t>(x0.size()) != model.dim_x()) {
    throw ValidationError("x0 must have " + std::to_string(model.dim_x()) + " components");
  }
  if (!x0.allFinite()) throw ValidationError("x0 must be finite");
  model.require_in_box(theta0);
  levy.validate();
  if (levy.dim() != model.dim_x()) {
    throw ValidationError("levy dimension " + std::to_string(levy.dim()) +
                          " does not match model dimension " + std::to_string(model.dim_x()));
  }
}

ObservationSet ObservationSet::from_values(RowMatrix values) {
  if (values.rows() < 2) throw ValidationError("observations: need at least two rows (n >= 1)");
  if (values.cols() < 1) throw ValidationError("observations: need at least one state column");
  if (!values.allFinite()) throw ValidationError("observations: values must be finite");
  ObservationSet obs;
  obs.times = uniform_grid(static_cast<std::size_t>(values.rows() - 1));
  obs.values = std::move(values);
  return obs;
}

ObservationSet simulate(const SimConfig& config, const DriftModel& model, bool keep_fine_path) {
  config.validate(model);

  const std::size_t d = model.dim_x();
  const std::size_t fine_steps = config.n * config.substeps;
  const double h = 1.0 / static_cast<double>(fine_steps);
  const double eps = config.epsilon;
  const std::span<const double> theta(config.theta0.data(), model.dim_theta());

  LevyStepper stepper(config.levy, h);
  NoiseAccumulator noise(d);
  RandomStream rng(config.seed, config.replication);

  ObservationSet obs;
  obs.times = uniform_grid(config.n);
  obs.values.resize(static_cast<Eigen::Index>(config.n + 1), static_cast<Eigen::Index>(d));
  obs.values.row(0) = config.x0.transpose();
  obs.config = config;

  FinePath fine;
  if (keep_fine_path) {
    fine.grid = uniform_grid(fine_steps);
    fine.values.resize(static_cast<Eigen::Index>(fine_steps + 1), static_cast<Eigen::Index>(d));
    fine.values.row(0) = config.x0.transpose();
    fine.noise.grid = fine.grid;
    fine.noise.increments.resize(static_cast<Eigen::Index>(fine_steps), static_cast<Eigen::Index>(d));
    fine.noise.cumulative = RowMatrix::Zero(static_cast<Eigen::Index>(fine_steps + 1),
                                            static_cast<Eigen::Index>(d));
  }

  std::vector<double> x(config.x0.data(), config.x0.data() + d);
  std::vector<double> drift(d);
  std::vector<double> dl(d);

  std::size_t step = 0;
  for (std::size_t k = 1; k <= config.n; ++k) {
    for (std::size_t s = 0; s < config.substeps; ++s, ++step) {
      model.drift(x, theta, drift);
      stepper.sample(rng, dl);
      noise.absorb(dl);
      for (std::size_t i = 0; i < d; ++i) {
        x[i] += drift[i] * h + eps * dl[i];
        if (!std::isfinite(x[i])) {
          throw NumericalError("simulate: state became non-finite at t = " +
                               std::to_string(static_cast<double>(step + 1) * h));
        }
      }
      if (keep_fine_path) {
        const auto row = static_cast<Eigen::Index>(step + 1);
        std::copy(x.begin(), x.end(), fine.values.row(row).data());
        std::copy(dl.begin(), dl.end(), fine.noise.increments.row(row - 1).data());
        std::copy(noise.cumulative().begin(), noise.cumulative().end(),
                  fine.noise.cumulative.row(row).data());
      }
    }
    std::copy(x.begin(), x.end(), obs.values.row(static_cast<Eigen::Index>(k)).data());
  }

  if (keep_fine_path) obs.fine_path = std::move(fine);
  return obs;
}

GronwallReport gronwall_check(const ObservationSet& obs, const DeterministicPath& x0_path,
                              const DriftModel& model, double lipschitz) {
  if (!obs.fine_path) throw ValidationError("gronwall_check: observation set has no fine path");
  if (obs.external()) throw ValidationError("gronwall_check: needs simulated observations");
  if (!(lipschitz > 0.0)) throw ValidationError("gronwall_check: K must be > 0");

  const auto& cfg = *obs.config;
  const auto& fine = *obs.fine_path;
  const std::size_t d = obs.dim();
  const std::size_t fine_steps = fine.grid.size() - 1;
  const double h = 1.0 / static_cast<double>(fine_steps);
  const double eps = cfg.epsilon;
  const double K = lipschitz;
  const std::span<const double> theta(cfg.theta0.data(), model.dim_theta());

  GronwallReport report;
  report.sup_noise = max_abs_on_path(fine.noise);
  report.rhs = std::sqrt(2.0) * eps * std::exp(K * K) * report.sup_noise;

  std::vector<double> ref(d), drift(d);
  double sup_drift = 0.0;
  for (std::size_t j = 0; j <= x0_path.steps(); ++j) {
    model.drift(x0_path.at(j), theta, drift);
    sup_drift = std::max(sup_drift, Eigen::Map<const Eigen::VectorXd>(drift.data(),
                                                                     static_cast<Eigen::Index>(d))
                                        .norm());
  }
  // Euler global error for the noise-free part: h sup|b| (e^K - 1) / 2, plus
  // the linear-interpolation error K sup|b| / (8 m^2) of the reference path.
  report.euler_constant = 0.5 * sup_drift * std::expm1(K);
  const double m = static_cast<double>(x0_path.steps());
  report.slack = report.euler_constant * h + K * sup_drift / (8.0 * m * m);

  for (std::size_t j = 0; j <= fine_steps; ++j) {
    interp_x0(x0_path, fine.grid[j], ref);
    double dist2 = 0.0;
    const double* xj = fine.values.row(static_cast<Eigen::Index>(j)).data();
    for (std::size_t i = 0; i < d; ++i) dist2 += (xj[i] - ref[i]) * (xj[i] - ref[i]);
    report.lhs = std::max(report.lhs, std::sqrt(dist2));
  }
  report.pass = report.lhs <= report.rhs * (1.0 + 1e-6) + report.slack;

  const std::size_t n = obs.n();
  const std::size_t sub = fine_steps / n;
  const double growth = std::sqrt(2.0) * std::exp(K * K / static_cast<double>(n * n));
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t base = k * sub;
    const auto x_base = fine.values.row(static_cast<Eigen::Index>(base));
    const auto l_base = fine.noise.cumulative.row(static_cast<Eigen::Index>(base));
    model.drift({x_base.data(), d}, theta, drift);
    const double drift_norm =
        Eigen::Map<const Eigen::VectorXd>(drift.data(), static_cast<Eigen::Index>(d)).norm();
    double move = 0.0;
    double noise_move = 0.0;
    for (std::size_t s = 1; s <= sub; ++s) {
      const auto row = static_cast<Eigen::Index>(base + s);
      move = std::max(move, (fine.values.row(row) - x_base).norm());
      noise_move = std::max(noise_move, (fine.noise.cumulative.row(row) - l_base).norm());
    }
    const double bound = growth * (drift_norm / static_cast<double>(n) + eps * noise_move);
    const double tol = 1e-12 * (1.0 + x_base.norm());
    if (move > bound * (1.0 + 1e-9) + tol) ++report.interval_violations;
    if (bound > 0.0) report.worst_interval_ratio = std::max(report.worst_interval_ratio, move / bound);
  }
  return report;
}

}  // namespace levylse
