#include "levylse/lse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "levylse/errors.hpp"

namespace levylse {
namespace {

void check_obs(const ObservationSet& obs, const DriftModel& model) {
  if (obs.n() < 1) throw ValidationError("estimator: need at least one observed increment");
  if (obs.dim() != model.dim_x()) {
    throw ValidationError("estimator: observations have " + std::to_string(obs.dim()) +
                          " columns but model '" + model.name() + "' has dimension " +
                          std::to_string(model.dim_x()));
  }
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

double residual_sum_raw(const ObservationSet& obs, const DriftModel& model,
                        std::span<const double> theta) {
  const std::size_t n = obs.n();
  const std::size_t d = obs.dim();
  const double dt = 1.0 / static_cast<double>(n);
  std::vector<double> b(d);
  double sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const auto prev = obs.at(k - 1);
    const auto cur = obs.at(k);
    model.drift(prev, theta, b);
    for (std::size_t i = 0; i < d; ++i) {
      const double r = (cur[i] - prev[i]) - b[i] * dt;
      sum += r * r;
    }
  }
  return sum / dt;
}

Eigen::VectorXd score_raw(const ObservationSet& obs, const DriftModel& model,
                          std::span<const double> theta) {
  const std::size_t n = obs.n();
  const std::size_t d = obs.dim();
  const std::size_t p = model.dim_theta();
  const double dt = 1.0 / static_cast<double>(n);
  std::vector<double> b(d), g(d * p), r(d);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t k = 1; k <= n; ++k) {
    const auto prev = obs.at(k - 1);
    const auto cur = obs.at(k);
    model.drift(prev, theta, b);
    model.grad(prev, theta, g);
    for (std::size_t c = 0; c < d; ++c) r[c] = (cur[c] - prev[c]) - b[c] * dt;
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t i = 0; i < p; ++i) out[static_cast<Eigen::Index>(i)] += g[c * p + i] * r[c];
    }
  }
  return out;
}

Eigen::MatrixXd score_jacobian_raw(const ObservationSet& obs, const DriftModel& model,
                                   std::span<const double> theta) {
  const std::size_t n = obs.n();
  const std::size_t d = obs.dim();
  const std::size_t p = model.dim_theta();
  const double dt = 1.0 / static_cast<double>(n);
  std::vector<double> b(d), g(d * p), h(d * p * p), r(d);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t k = 1; k <= n; ++k) {
    const auto prev = obs.at(k - 1);
    const auto cur = obs.at(k);
    model.drift(prev, theta, b);
    model.grad(prev, theta, g);
    model.hess(prev, theta, h);
    for (std::size_t c = 0; c < d; ++c) r[c] = (cur[c] - prev[c]) - b[c] * dt;
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
          out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
              h[(c * p + i) * p + j] * r[c] - g[c * p + i] * g[c * p + j] * dt;
        }
      }
    }
  }
  return out;
}

double reported_contrast(const ObservationSet& obs, const DriftModel& model,
                         const Eigen::VectorXd& theta, double epsilon) {
  const double raw = residual_sum_raw(obs, model, as_span(theta));
  return epsilon > 0.0 ? raw / (epsilon * epsilon) : raw;
}

void finish(EstimationResult& result, const ObservationSet& obs, const DriftModel& model,
            double epsilon) {
  result.contrast_value = reported_contrast(obs, model, result.theta_hat, epsilon);
  result.score_norm_at_solution = score_raw(obs, model, as_span(result.theta_hat)).norm();
  result.boundary_hit = result.boundary_hit || model.box().on_boundary(as_span(result.theta_hat));
}

void clamp_into_box(EstimationResult& result, const DriftModel& model) {
  const Eigen::VectorXd clamped = model.box().clamp(result.theta_hat);
  if (clamped != result.theta_hat) {
    result.theta_hat = clamped;
    result.boundary_hit = true;
  }
}

double radical_inverse(std::size_t index, std::size_t base) {
  double result = 0.0;
  double f = 1.0 / static_cast<double>(base);
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= static_cast<double>(base);
  }
  return result;
}

std::size_t nth_prime(std::size_t i) {
  static constexpr std::size_t primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                                           37, 41, 43, 47, 53, 59, 61, 67, 71, 73};
  if (i >= std::size(primes)) throw ValidationError("estimate_general: parameter dimension too large");
  return primes[i];
}

struct SimplexRun {
  Eigen::VectorXd theta;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

template <typename Objective>
SimplexRun nelder_mead(const Objective& f, const ParameterBox& box, Eigen::VectorXd start,
                       std::size_t max_evaluations) {
  const auto p = static_cast<Eigen::Index>(box.dim());
  std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(p + 1), box.clamp(start));
  std::vector<double> fv(v.size());
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double step = 0.1 * box.width(ui);
    Eigen::VectorXd& vert = v[ui + 1];
    vert[i] = vert[i] + step <= box.hi[ui] ? vert[i] + step : vert[i] - step;
  }
  std::size_t evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double value = f(x);
    return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
  };
  for (std::size_t i = 0; i < v.size(); ++i) fv[i] = eval(v[i]);

  Eigen::VectorXd width(p);
  for (Eigen::Index i = 0; i < p; ++i) width[i] = box.width(static_cast<std::size_t>(i));

  std::vector<std::size_t> order(v.size());
  SimplexRun run;
  while (true) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double diameter = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      diameter = std::max(diameter, ((v[i] - v[best]).array() / width.array()).abs().maxCoeff());
    }
    if (diameter <= 1e-11) {
      run.converged = true;
      break;
    }
    if (evals >= max_evaluations) break;
    ++run.iterations;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i != worst) centroid += v[i];
    }
    centroid /= static_cast<double>(p);

    const Eigen::VectorXd xr = box.clamp(centroid + (centroid - v[worst]));
    const double fr = eval(xr);
    if (fr < fv[best]) {
      const Eigen::VectorXd xe = box.clamp(centroid + 2.0 * (centroid - v[worst]));
      const double fe = eval(xe);
      if (fe < fr) {
        v[worst] = xe;
        fv[worst] = fe;
      } else {
        v[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      v[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const Eigen::VectorXd xc =
        outside ? box.clamp(centroid + 0.5 * (xr - centroid)) : box.clamp(centroid + 0.5 * (v[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      v[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i == best) continue;
      v[i] = v[best] + 0.5 * (v[i] - v[best]);
      fv[i] = eval(v[i]);
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  run.theta = v[static_cast<std::size_t>(it - fv.begin())];
  run.value = *it;
  return run;
}

}  // namespace

std::string to_string(EstimationResult::Method method) {
  switch (method) {
    case EstimationResult::Method::closed_form: return "closed_form";
    case EstimationResult::Method::newton_root: return "newton_root";
    case EstimationResult::Method::golden_section: return "golden_section";
    case EstimationResult::Method::simplex_multistart: return "simplex_multistart";
  }
  return "unknown";
}

double residual_sum(const ObservationSet& obs, const DriftModel& model, const Eigen::VectorXd& theta) {
  check_obs(obs, model);
  model.require_in_box(theta);
  return residual_sum_raw(obs, model, as_span(theta));
}

double contrast(const ObservationSet& obs, const DriftModel& model, const Eigen::VectorXd& theta,
                double epsilon) {
  if (!(epsilon > 0.0)) throw ValidationError("contrast: epsilon must be > 0");
  return residual_sum(obs, model, theta) / (epsilon * epsilon);
}

Eigen::VectorXd score(const ObservationSet& obs, const DriftModel& model, const Eigen::VectorXd& theta) {
  check_obs(obs, model);
  model.require_in_box(theta);
  return score_raw(obs, model, as_span(theta));
}

Eigen::MatrixXd score_jacobian(const ObservationSet& obs, const DriftModel& model,
                               const Eigen::VectorXd& theta) {
  check_obs(obs, model);
  model.require_in_box(theta);
  if (!model.has_hessian()) {
    throw ValidationError("score_jacobian: model '" + model.name() + "' has no second derivatives");
  }
  return score_jacobian_raw(obs, model, as_span(theta));
}

EstimationResult estimate_closed_form_affine(const ObservationSet& obs, const DriftModel& model,
                                             double epsilon) {
  check_obs(obs, model);
  const std::size_t n = obs.n();
  const double nn = static_cast<double>(n);
  EstimationResult result;
  result.method = EstimationResult::Method::closed_form;
  result.iterations = 0;
  result.converged = true;

  if (model.name() == catalog::kOuAffine) {
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean += obs.values(static_cast<Eigen::Index>(k), 0);
    mean /= nn;
    double mean_sq = 0.0;
    double spread = 0.0;
    double cross = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double x = obs.values(static_cast<Eigen::Index>(k), 0);
      const double dx = obs.values(static_cast<Eigen::Index>(k + 1), 0) - x;
      mean_sq += x * x;
      spread += (x - mean) * (x - mean);
      cross += dx * (x - mean);
    }
    mean_sq /= nn;
    spread /= nn;
    if (spread == 0.0 || spread <= 1e-20 * mean_sq) {
      const double cond = spread > 0.0 ? mean_sq / spread : std::numeric_limits<double>::infinity();
      throw NumericalError("closed-form estimator: normal equations are singular "
                           "(observations have no spread), condition estimate " + std::to_string(cond),
                           cond);
    }
    const double total = obs.values(static_cast<Eigen::Index>(n), 0) - obs.values(0, 0);
    const double theta2 = cross / spread;
    const double theta1 = total - theta2 * mean;
    result.theta_hat = Eigen::Vector2d(theta1, theta2);
  } else if (model.name() == catalog::kAffine2d) {
    Eigen::Matrix3d lambda = Eigen::Matrix3d::Zero();
    Eigen::Matrix<double, 3, 2> rhs = Eigen::Matrix<double, 3, 2>::Zero();
    for (std::size_t k = 0; k < n; ++k) {
      const auto prev = obs.at(k);
      const auto cur = obs.at(k + 1);
      const Eigen::Vector3d z(1.0, prev[0], prev[1]);
      lambda += z * z.transpose();
      rhs.col(0) += z * (cur[0] - prev[0]);
      rhs.col(1) += z * (cur[1] - prev[1]);
    }
    lambda /= nn;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(lambda, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double rcond = sv[0] > 0.0 ? sv[2] / sv[0] : 0.0;
    if (!(rcond > 1e-12)) {
      const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
      throw NumericalError("closed-form estimator: normal-equation matrix is singular, condition "
                           "estimate " + std::to_string(cond),
                           cond);
    }
    const Eigen::Matrix<double, 3, 2> beta = svd.solve(rhs);
    result.theta_hat.resize(6);
    result.theta_hat << beta(0, 0), beta(1, 0), beta(2, 0), beta(0, 1), beta(1, 1), beta(2, 1);
  } else {
    throw ValidationError("closed-form estimator is only available for '" + std::string(catalog::kOuAffine) +
                          "' and '" + catalog::kAffine2d + "', not '" + model.name() + "'");
  }
  if (!result.theta_hat.allFinite()) {
    throw NumericalError("closed-form estimator produced a non-finite estimate");
  }
  clamp_into_box(result, model);
  finish(result, obs, model, epsilon);
  return result;
}

EstimationResult estimate_newton_scalar(const ObservationSet& obs, const DriftModel& model,
                                        double epsilon) {
  check_obs(obs, model);
  if (model.dim_theta() != 1 || !model.has_hessian()) {
    throw ValidationError("newton estimator needs a scalar parameter with second derivatives");
  }
  const double lo = model.box().lo[0];
  const double hi = model.box().hi[0];
  auto at = [](double v) { return Eigen::VectorXd::Constant(1, v); };
  auto g = [&](double v) { return score_raw(obs, model, as_span(at(v)))[0]; };
  auto dg = [&](double v) { return score_jacobian_raw(obs, model, as_span(at(v)))(0, 0); };
  auto f = [&](double v) { return residual_sum_raw(obs, model, as_span(at(v))); };

  EstimationResult result;
  const double g_lo = g(lo);
  const double g_hi = g(hi);
  if (!std::isfinite(g_lo) || !std::isfinite(g_hi)) {
    throw NumericalError("newton estimator: score is not finite on the box boundary");
  }

  std::optional<double> root;
  if (g_lo == 0.0) {
    root = lo;
  } else if (g_hi == 0.0) {
    root = hi;
  } else if ((g_lo < 0.0) != (g_hi < 0.0)) {
    double xl = g_lo < 0.0 ? lo : hi;
    double xh = g_lo < 0.0 ? hi : lo;
    double x = 0.5 * (lo + hi);
    double dx_old = hi - lo;
    double dx = dx_old;
    double gx = g(x);
    double dgx = dg(x);
    for (std::size_t it = 0; it < 200; ++it) {
      ++result.iterations;
      if (((x - xh) * dgx - gx) * ((x - xl) * dgx - gx) > 0.0 ||
          std::abs(2.0 * gx) > std::abs(dx_old * dgx)) {
        dx_old = dx;
        dx = 0.5 * (xh - xl);
        x = xl + dx;
      } else {
        dx_old = dx;
        dx = gx / dgx;
        x -= dx;
      }
      if (std::abs(dx) <= 1e-15 * std::max(1.0, std::abs(x))) {
        result.converged = true;
        break;
      }
      gx = g(x);
      dgx = dg(x);
      if (gx == 0.0) {
        result.converged = true;
        break;
      }
      if (gx < 0.0) {
        xl = x;
      } else {
        xh = x;
      }
    }
    root = x;
  }

  double best;
  if (root) {
    result.method = EstimationResult::Method::newton_root;
    if (!result.iterations) result.converged = true;
    best = *root;
  } else {
    // Golden-section search on the contrast.
    result.method = EstimationResult::Method::golden_section;
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-12 * (hi - lo) && result.iterations < 500) {
      ++result.iterations;
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - ratio * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + ratio * (b - a);
        fd = f(d);
      }
    }
    result.converged = b - a <= 1e-12 * (hi - lo);
    best = 0.5 * (a + b);
  }

  // The stationary point can be a maximum; the boundary then wins.
  double f_best = f(best);
  for (const double edge : {lo, hi}) {
    const double fe = f(edge);
    if (root ? fe < f_best : fe <= f_best) {
      best = edge;
      f_best = fe;
    }
  }
  result.theta_hat = at(best);
  finish(result, obs, model, epsilon);
  return result;
}

EstimationResult estimate_general(const ObservationSet& obs, const DriftModel& model, double epsilon,
                                  const GeneralOptions& options) {
  check_obs(obs, model);
  if (options.starts < 1) throw ValidationError("estimate_general: starts must be >= 1");
  const ParameterBox& box = model.box();
  const std::size_t p = model.dim_theta();

  double offset = 0.0;
  if (options.objective == GeneralOptions::Objective::phi) {
    const Eigen::VectorXd ref = options.theta_ref ? *options.theta_ref : box.center();
    model.require_in_box(ref);
    offset = residual_sum_raw(obs, model, as_span(ref));
  }
  const double scale =
      options.objective == GeneralOptions::Objective::psi && epsilon > 0.0 ? 1.0 / (epsilon * epsilon) : 1.0;
  auto objective = [&](const Eigen::VectorXd& theta) {
    return scale * (residual_sum_raw(obs, model, as_span(theta)) - offset);
  };

  struct Candidate {
    Eigen::VectorXd theta;
    double value;
    std::size_t iterations;
    bool converged;
  };
  std::vector<Candidate> candidates;
  for (std::size_t s = 0; s < options.starts; ++s) {
    Eigen::VectorXd start(static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) {
      start[static_cast<Eigen::Index>(i)] = box.lo[i] + radical_inverse(s + 1, nth_prime(i)) * box.width(i);
    }
    SimplexRun run = nelder_mead(objective, box, start, options.max_evaluations);
    Candidate cand{run.theta, run.value, run.iterations, run.converged};

    if (options.polish && model.has_hessian()) {
      Eigen::VectorXd g = score_raw(obs, model, as_span(cand.theta));
      for (std::size_t it = 0; it < 50; ++it) {
        const Eigen::MatrixXd j = score_jacobian_raw(obs, model, as_span(cand.theta));
        const Eigen::VectorXd step = -j.fullPivLu().solve(g);
        if (!step.allFinite()) break;
        const Eigen::VectorXd next = box.clamp(cand.theta + step);
        const double value = objective(next);
        const Eigen::VectorXd g_next = score_raw(obs, model, as_span(next));
        // Near the minimum the objective changes below rounding; the score decides.
        const double noise = 1e-12 * (std::abs(cand.value) + std::abs(offset * scale));
        const bool better = value < cand.value || (value <= cand.value + noise && g_next.norm() < g.norm());
        if (!better) break;
        g = g_next;
        const double moved = (next - cand.theta).norm();
        cand.theta = next;
        cand.value = value;
        ++cand.iterations;
        if (moved <= 1e-15 * (1.0 + cand.theta.norm())) {
          cand.converged = true;
          break;
        }
      }
    }
    candidates.push_back(std::move(cand));
  }

  const Eigen::VectorXd centre = box.center();
  const double f_min =
      std::min_element(candidates.begin(), candidates.end(),
                       [](const Candidate& a, const Candidate& b) { return a.value < b.value; })
          ->value;
  if (!std::isfinite(f_min)) throw NumericalError("estimate_general: objective is not finite on the box");
  const double tie = 1e-12 * std::max(std::abs(f_min), std::numeric_limits<double>::min());
  const Candidate* chosen = nullptr;
  for (const auto& cand : candidates) {
    if (cand.value > f_min + tie) continue;
    if (!chosen || (cand.theta - centre).norm() < (chosen->theta - centre).norm()) chosen = &cand;
  }

  EstimationResult result;
  result.method = EstimationResult::Method::simplex_multistart;
  result.theta_hat = chosen->theta;
  result.iterations = chosen->iterations;
  result.converged = chosen->converged;
  finish(result, obs, model, epsilon);
  return result;
}

EstimatorChoice parse_estimator(const std::string& name) {
  if (name == "auto") return EstimatorChoice::automatic;
  if (name == "closed_form") return EstimatorChoice::closed_form;
  if (name == "newton") return EstimatorChoice::newton;
  if (name == "simplex") return EstimatorChoice::simplex;
  throw ValidationError("unknown estimator '" + name + "' (expected auto, closed_form, newton, simplex)");
}

EstimationResult estimate(const ObservationSet& obs, const DriftModel& model, double epsilon,
                          EstimatorChoice choice, std::size_t starts) {
  if (choice == EstimatorChoice::automatic) {
    if (model.name() == catalog::kOuAffine || model.name() == catalog::kAffine2d) {
      choice = EstimatorChoice::closed_form;
    } else if (model.name() == catalog::kSqrtShift) {
      choice = EstimatorChoice::newton;
    } else {
      choice = EstimatorChoice::simplex;
    }
  }
  switch (choice) {
    case EstimatorChoice::closed_form: return estimate_closed_form_affine(obs, model, epsilon);
    case EstimatorChoice::newton: return estimate_newton_scalar(obs, model, epsilon);
    default: {
      GeneralOptions options;
      options.starts = starts;
      return estimate_general(obs, model, epsilon, options);
    }
  }
}

}  // namespace levylse
