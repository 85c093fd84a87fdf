#include "levylse/mc_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <type_traits>

#include "levylse/errors.hpp"
#include "levylse/parallel.hpp"
#include "levylse/sde_sim.hpp"

namespace levylse {
namespace {

using nlohmann::json;

constexpr std::uint64_t kProjectionSalt = 0x70726f6a65637431ULL;

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) {
      out.push_back(v[i]);
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

json levy_json(const LevySpec& levy) {
  json out;
  out["drift"] = vector_json(levy.drift);
  json sigma = json::array();
  for (Eigen::Index i = 0; i < levy.sigma.rows(); ++i) sigma.push_back(vector_json(levy.sigma.row(i).transpose()));
  out["sigma"] = sigma;
  json jumps = json::array();
  for (const auto& part : levy.jumps) {
    std::visit(
        [&](const auto& j) {
          using T = std::decay_t<decltype(j)>;
          if constexpr (std::is_same_v<T, NoJumps>) {
            jumps.push_back({{"kind", "none"}});
          } else if constexpr (std::is_same_v<T, CompoundPoissonJumps>) {
            jumps.push_back({{"kind", "compound_poisson"},
                             {"rate", j.rate},
                             {"sizes", j.sizes.name()},
                             {"p1", j.sizes.p1},
                             {"p2", j.sizes.p2}});
          } else if constexpr (std::is_same_v<T, StableJumps>) {
            jumps.push_back({{"kind", "stable"}, {"alpha", j.alpha}, {"beta", j.beta}, {"scale", j.scale}});
          } else {
            jumps.push_back({{"kind", "truncated_stable"},
                             {"alpha", j.alpha},
                             {"c_plus", j.c_plus},
                             {"c_minus", j.c_minus},
                             {"eta", j.eta}});
          }
        },
        part);
  }
  out["jumps"] = jumps;
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double level) {
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

double sorted_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum;
}

ReplicationRecord run_replication(const ExperimentPlan& plan, const ModelCatalogEntry& entry,
                                  std::size_t ladder_index, std::size_t r) {
  const LadderPoint& point = plan.ladder[ladder_index];
  ReplicationRecord rec;
  rec.replication = r;
  rec.epsilon = point.epsilon;
  rec.n = point.n;
  rec.theta_hat = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(entry.model.dim_theta()),
                                            std::numeric_limits<double>::quiet_NaN());
  rec.contrast = std::numeric_limits<double>::quiet_NaN();

  SimConfig cfg;
  cfg.epsilon = point.epsilon;
  cfg.n = point.n;
  cfg.substeps = plan.substeps;
  cfg.x0 = plan.x0;
  cfg.theta0 = plan.theta0;
  cfg.levy = plan.levy;
  cfg.seed = mix_seed(plan.seed, ladder_index);
  cfg.replication = r;
  try {
    const ObservationSet obs = simulate(cfg, entry.model);
    const EstimationResult est = estimate(obs, entry.model, point.epsilon, plan.method, plan.starts);
    rec.ok = true;
    rec.theta_hat = est.theta_hat;
    rec.converged = est.converged;
    rec.boundary_hit = est.boundary_hit;
    rec.contrast = est.contrast_value;
  } catch (const NumericalError& e) {
    rec.failure = e.what();
  } catch (const ValidationError& e) {
    rec.failure = e.what();
  }
  return rec;
}

ExperimentReport run_ladder(const ExperimentPlan& plan) {
  plan.validate();
  const ModelCatalogEntry entry = catalog::make(plan.model_id, plan.box);
  const std::size_t R = plan.replications;

  ExperimentReport report;
  report.plan = plan;
  report.records.resize(plan.ladder.size() * R);
  for (std::size_t l = 0; l < plan.ladder.size(); ++l) {
    parallel_for(R, plan.threads, [&](std::size_t r) {
      report.records[l * R + r] = run_replication(plan, entry, l, r);
    });
    const std::span<const ReplicationRecord> slice(report.records.data() + l * R, R);
    report.points.push_back(summarize(slice, plan.theta0, plan.ladder[l].epsilon, plan.ladder[l].n));
    if (!report.points.back().valid) report.flagged = true;
  }

  const auto p = plan.theta0.size();
  report.rmse_ratio_last_first = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
  report.rmse_decreasing.assign(static_cast<std::size_t>(p), true);
  std::vector<const LadderStats*> valid;
  for (const auto& pt : report.points) {
    if (pt.valid) valid.push_back(&pt);
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    for (std::size_t l = 1; l < valid.size(); ++l) {
      if (!(valid[l]->rmse[i] <= kRmseSlack * valid[l - 1]->rmse[i])) {
        report.rmse_decreasing[static_cast<std::size_t>(i)] = false;
      }
    }
    if (!valid.empty()) report.rmse_ratio_last_first[i] = valid.back()->rmse[i] / valid.front()->rmse[i];
  }
  return report;
}

}  // namespace

void ExperimentPlan::validate() const {
  if (!catalog::contains(model_id)) throw ValidationError("unknown model '" + model_id + "'");
  const ModelCatalogEntry entry = catalog::make(model_id, box);
  entry.model.require_in_box(theta0);
  if (static_cast<std::size_t>(x0.size()) != entry.model.dim_x()) {
    throw ValidationError("x0 must have " + std::to_string(entry.model.dim_x()) + " components");
  }
  levy.validate();
  if (levy.dim() != entry.model.dim_x()) throw ValidationError("levy dimension does not match the model");
  if (replications < 1) throw ValidationError("experiment.replications must be >= 1");
  if (substeps < 1) throw ValidationError("sim.substeps must be >= 1");
  if (starts < 1) throw ValidationError("experiment.starts must be >= 1");
  if (ladder.empty()) throw ValidationError("experiment.ladder must not be empty");
  for (const auto& pt : ladder) {
    if (!(pt.epsilon >= 0.0 && pt.epsilon <= 1.0)) {
      throw ValidationError("experiment.ladder: epsilon must lie in [0, 1]");
    }
    if (pt.n < 2) throw ValidationError("experiment.ladder: n must be >= 2");
  }
  if (mode == ExperimentMode::limit_law) {
    for (std::size_t l = 0; l < ladder.size(); ++l) {
      if (!(ladder[l].epsilon > 0.0)) {
        throw ValidationError("experiment.ladder: limit-law runs need epsilon > 0");
      }
      if (l > 0 && !(static_cast<double>(ladder[l].n) * ladder[l].epsilon >
                     static_cast<double>(ladder[l - 1].n) * ladder[l - 1].epsilon)) {
        throw ValidationError(
            "experiment.ladder: the limit law needs eps -> 0, n -> infinity and n*eps -> infinity, "
            "but n*eps does not increase between ladder points " + std::to_string(l) + " and " +
            std::to_string(l + 1));
      }
    }
  }
}

LadderStats summarize(std::span<const ReplicationRecord> records, const Eigen::VectorXd& theta0,
                      double epsilon, std::size_t n) {
  const auto p = theta0.size();
  LadderStats stats;
  stats.epsilon = epsilon;
  stats.n = n;
  stats.replications = records.size();
  stats.bias = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
  stats.rmse = stats.bias;

  std::size_t boundary = 0;
  std::vector<std::vector<double>> errors(static_cast<std::size_t>(p));
  for (const auto& rec : records) {
    if (!rec.ok) {
      ++stats.failures;
      continue;
    }
    if (rec.boundary_hit) ++boundary;
    for (Eigen::Index i = 0; i < p; ++i) errors[static_cast<std::size_t>(i)].push_back(rec.theta_hat[i] - theta0[i]);
  }
  stats.valid = static_cast<double>(stats.failures) <= kMaxFailureFraction * static_cast<double>(records.size());
  const std::size_t ok = records.size() - stats.failures;
  if (ok == 0) return stats;

  stats.boundary_fraction = static_cast<double>(boundary) / static_cast<double>(ok);
  if (epsilon > 0.0) stats.rescaled_quantiles.resize(std::size(kQuantileLevels), p);
  for (Eigen::Index i = 0; i < p; ++i) {
    auto& e = errors[static_cast<std::size_t>(i)];
    std::sort(e.begin(), e.end());
    std::vector<double> squares(e.size());
    std::transform(e.begin(), e.end(), squares.begin(), [](double v) { return v * v; });
    stats.bias[i] = sorted_sum(e) / static_cast<double>(ok);
    stats.rmse[i] = std::sqrt(sorted_sum(std::move(squares)) / static_cast<double>(ok));
    if (epsilon > 0.0) {
      std::vector<double> scaled(e.size());
      std::transform(e.begin(), e.end(), scaled.begin(), [&](double v) { return v / epsilon; });
      for (std::size_t q = 0; q < std::size(kQuantileLevels); ++q) {
        stats.rescaled_quantiles(static_cast<Eigen::Index>(q), i) = quantile_sorted(scaled, kQuantileLevels[q]);
      }
    }
  }
  return stats;
}

ExperimentReport run_consistency(const ExperimentPlan& plan) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report = run_ladder(plan);
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ExperimentReport run_limit_law(const ExperimentPlan& plan, const LimitLawSample& limit) {
  const auto start = std::chrono::steady_clock::now();
  if (plan.mode != ExperimentMode::limit_law) {
    ExperimentPlan copy = plan;
    copy.mode = ExperimentMode::limit_law;
    copy.validate();
  }
  const auto p = plan.theta0.size();
  if (limit.draws.rows() < 1 || limit.draws.cols() != p) {
    throw ValidationError("limit sample must have " + std::to_string(p) + " columns and at least one row");
  }
  ExperimentReport report = run_ladder(plan);

  const std::size_t last = plan.ladder.size() - 1;
  const double eps = plan.ladder[last].epsilon;
  std::vector<Eigen::VectorXd> rescaled;
  for (std::size_t r = 0; r < plan.replications; ++r) {
    const auto& rec = report.records[last * plan.replications + r];
    if (rec.ok) rescaled.push_back((rec.theta_hat - plan.theta0) / eps);
  }
  if (rescaled.empty()) throw NumericalError("every replication failed at the final ladder point");

  report.limit_count = static_cast<std::size_t>(limit.draws.rows());
  report.ks_critical_value = ks_critical_value_1pct(rescaled.size(), report.limit_count);

  auto compare = [&](const std::string& label, const Eigen::VectorXd& direction) {
    std::vector<double> x(rescaled.size());
    std::vector<double> y(report.limit_count);
    for (std::size_t r = 0; r < rescaled.size(); ++r) x[r] = direction.dot(rescaled[r]);
    for (std::size_t j = 0; j < y.size(); ++j) {
      y[j] = limit.draws.row(static_cast<Eigen::Index>(j)).dot(direction.transpose());
    }
    KsComparison cmp;
    cmp.label = label;
    cmp.direction = direction;
    cmp.statistic = ks_two_sample(x, y);
    cmp.pass = cmp.statistic < report.ks_critical_value;
    report.ks.push_back(std::move(cmp));
  };
  for (Eigen::Index i = 0; i < p; ++i) {
    compare("theta_" + std::to_string(i + 1), Eigen::VectorXd::Unit(p, i));
  }
  if (p > 1) {
    const auto dirs = projection_directions(static_cast<std::size_t>(p), plan.seed);
    for (std::size_t k = 0; k < dirs.size(); ++k) compare("projection_" + std::to_string(k + 1), dirs[k]);
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double ks_two_sample(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ValidationError("ks_two_sample: both samples must be nonempty");
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> b(y.begin(), y.end());
  for (const double v : a) {
    if (std::isnan(v)) throw ValidationError("ks_two_sample: NaN in sample");
  }
  for (const double v : b) {
    if (std::isnan(v)) throw ValidationError("ks_two_sample: NaN in sample");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == t) ++i;
    while (j < b.size() && b[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value_1pct(std::size_t n, std::size_t m) {
  if (n == 0 || m == 0) throw ValidationError("ks_critical_value_1pct: sample sizes must be >= 1");
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  return 1.628 * std::sqrt((dn + dm) / (dn * dm));
}

std::vector<Eigen::VectorXd> projection_directions(std::size_t p, std::uint64_t seed) {
  RandomStream rng(mix_seed(seed, kProjectionSalt), 0);
  std::vector<Eigen::VectorXd> dirs;
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(p));
    do {
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
    } while (v.norm() == 0.0);
    dirs.push_back(v / v.norm());
  }
  return dirs;
}

std::string to_string(ExperimentMode mode) {
  return mode == ExperimentMode::consistency ? "consistency" : "limit_law";
}

std::string to_string(EstimatorChoice choice) {
  switch (choice) {
    case EstimatorChoice::automatic: return "auto";
    case EstimatorChoice::closed_form: return "closed_form";
    case EstimatorChoice::newton: return "newton";
    case EstimatorChoice::simplex: return "simplex";
  }
  return "unknown";
}

json ExperimentReport::to_json(bool include_runtime) const {
  json out;
  json jp;
  jp["model"] = plan.model_id;
  if (plan.box) {
    jp["box"] = {{"lo", plan.box->lo}, {"hi", plan.box->hi}};
  }
  jp["theta0"] = vector_json(plan.theta0);
  jp["x0"] = vector_json(plan.x0);
  jp["levy"] = levy_json(plan.levy);
  json ladder = json::array();
  for (const auto& pt : plan.ladder) ladder.push_back({{"eps", pt.epsilon}, {"n", pt.n}});
  jp["ladder"] = ladder;
  jp["replications"] = plan.replications;
  jp["substeps"] = plan.substeps;
  jp["seed"] = plan.seed;
  jp["method"] = levylse::to_string(plan.method);
  jp["starts"] = plan.starts;
  jp["mode"] = levylse::to_string(plan.mode);
  out["plan"] = jp;

  json pts = json::array();
  for (const auto& pt : points) {
    json j;
    j["eps"] = pt.epsilon;
    j["n"] = pt.n;
    j["replications"] = pt.replications;
    j["failures"] = pt.failures;
    j["valid"] = pt.valid;
    j["bias"] = vector_json(pt.bias);
    j["rmse"] = vector_json(pt.rmse);
    j["boundary_fraction"] = pt.boundary_fraction;
    json q = json::object();
    q["levels"] = std::vector<double>(std::begin(kQuantileLevels), std::end(kQuantileLevels));
    json rows = json::array();
    for (Eigen::Index r = 0; r < pt.rescaled_quantiles.rows(); ++r) {
      rows.push_back(vector_json(pt.rescaled_quantiles.row(r).transpose()));
    }
    q["values"] = rows;
    j["rescaled_error_quantiles"] = q;
    pts.push_back(j);
  }
  out["ladder_points"] = pts;
  out["rmse_decreasing"] = rmse_decreasing;
  out["rmse_slack_factor"] = kRmseSlack;
  out["rmse_ratio_last_first"] = vector_json(rmse_ratio_last_first);
  out["flagged"] = flagged;

  if (!ks.empty()) {
    json jk;
    jk["limit_count"] = limit_count;
    jk["critical_value_1pct"] = ks_critical_value;
    json comps = json::array();
    for (const auto& c : ks) {
      comps.push_back({{"label", c.label},
                       {"direction", vector_json(c.direction)},
                       {"statistic", c.statistic},
                       {"pass", c.pass}});
    }
    jk["comparisons"] = comps;
    out["ks"] = jk;
  }
  if (include_runtime) out["runtime_seconds"] = runtime_seconds;
  return out;
}

void ExperimentReport::write_replications_csv(std::ostream& out) const {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  const auto p = plan.theta0.size();
  out << "replication,eps,n";
  for (Eigen::Index i = 0; i < p; ++i) out << ",theta_hat_" << (i + 1);
  out << ",converged,boundary_hit,contrast\n";
  for (const auto& rec : records) {
    out << rec.replication << ',' << rec.epsilon << ',' << rec.n;
    for (Eigen::Index i = 0; i < p; ++i) {
      out << ',';
      if (std::isfinite(rec.theta_hat[i])) {
        out << rec.theta_hat[i];
      } else {
        out << "nan";
      }
    }
    out << ',' << (rec.converged ? 1 : 0) << ',' << (rec.boundary_hit ? 1 : 0) << ',';
    if (std::isfinite(rec.contrast)) {
      out << rec.contrast;
    } else {
      out << "nan";
    }
    out << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace levylse
