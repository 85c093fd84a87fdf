#include "levylse/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>

#include "levylse/config.hpp"
#include "levylse/errors.hpp"
#include "levylse/io.hpp"
#include "levylse/lse.hpp"
#include "levylse/mc_harness.hpp"
#include "levylse/parallel.hpp"

namespace levylse {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonFlags {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
};

FlatConfig load_config(const CommonFlags& flags) {
  FlatConfig cfg = FlatConfig::load(flags.config);
  cfg.check_known_keys();
  if (flags.seed) {
    cfg.set("seed", std::to_string(*flags.seed));
    if (cfg.has("limit.seed")) cfg.set("limit.seed", std::to_string(*flags.seed));
  }
  return cfg;
}

int cmd_simulate(const CommonFlags& flags, std::ostream& out) {
  const FlatConfig cfg = load_config(flags);
  const ModelCatalogEntry entry = model_from_config(cfg);
  const SimConfig sim = sim_from_config(cfg, entry);
  const ObservationSet obs = simulate(sim, entry.model);
  const fs::path path = fs::path(flags.out_dir) / "observations.csv";
  write_file_atomic(path, [&](std::ostream& os) { write_observations_csv(os, obs); });
  out << path.string() << '\n';
  return kExitOk;
}

struct EstimateFlags {
  std::string obs;
  std::string model;
  std::string method;
  std::string box;
  std::optional<double> epsilon;
  std::optional<std::size_t> starts;
};

int cmd_estimate(const CommonFlags& flags, const EstimateFlags& est, std::ostream& out) {
  std::optional<FlatConfig> cfg;
  if (!flags.config.empty()) cfg = load_config(flags);

  std::string obs_path = est.obs;
  if (obs_path.empty() && cfg && cfg->has("estimate.obs")) {
    obs_path = cfg->get_string("estimate.obs");
    if (!fs::exists(obs_path)) {
      const fs::path beside = fs::path(flags.config).parent_path() / obs_path;
      if (fs::exists(beside)) obs_path = beside.string();
    }
  }
  if (obs_path.empty()) throw ValidationError("estimate: no observations given (--obs or estimate.obs)");

  std::string model_id = est.model;
  if (model_id.empty() && cfg) model_id = cfg->get_string("model", "");
  if (model_id.empty()) throw ValidationError("estimate: no model given (--model or model)");
  if (!catalog::contains(model_id)) throw ValidationError("estimate: unknown model '" + model_id + "'");

  std::optional<ParameterBox> box;
  const std::size_t p = catalog::make(model_id).model.dim_theta();
  if (!est.box.empty()) {
    box = parse_box(est.box, p);
  } else if (cfg && cfg->has("model.box")) {
    try {
      box = parse_box(cfg->get_string("model.box"), p);
    } catch (const ValidationError& e) {
      cfg->fail("model.box", e.what());
    }
  }
  const ModelCatalogEntry entry = catalog::make(model_id, box);

  std::string method = est.method;
  if (method.empty()) method = cfg ? cfg->get_string("estimate.method", "auto") : "auto";
  const EstimatorChoice choice = parse_estimator(method);
  double epsilon = 1.0;
  if (est.epsilon) {
    epsilon = *est.epsilon;
  } else if (cfg) {
    epsilon = cfg->get_double("estimate.epsilon", cfg->get_double("sim.epsilon", 1.0));
  }
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("estimate: epsilon must lie in (0, 1]");
  std::size_t starts = 8;
  if (est.starts) {
    starts = *est.starts;
  } else if (cfg) {
    starts = cfg->get_uint("estimate.starts", 8);
  }

  const ObservationSet obs = read_observations_csv(fs::path(obs_path));
  if (obs.dim() != entry.model.dim_x()) {
    throw ValidationError("estimate: observations have " + std::to_string(obs.dim()) +
                          " state columns but model '" + model_id + "' needs " +
                          std::to_string(entry.model.dim_x()));
  }
  const EstimationResult res = estimate(obs, entry.model, epsilon, choice, starts);

  json j;
  j["model"] = model_id;
  j["n"] = obs.n();
  j["epsilon"] = epsilon;
  j["theta_hat"] = std::vector<double>(res.theta_hat.data(), res.theta_hat.data() + res.theta_hat.size());
  j["contrast"] = res.contrast_value;
  j["method"] = to_string(res.method);
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["boundary_hit"] = res.boundary_hit;
  j["score_norm"] = res.score_norm_at_solution;
  const std::string text = j.dump(2, ' ', false, json::error_handler_t::replace);
  if (flags.out_dir != ".") {
    write_file_atomic(fs::path(flags.out_dir) / "estimate.json", [&](std::ostream& os) { os << text << '\n'; });
  }
  out << text << '\n';
  return kExitOk;
}

int cmd_experiment(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const FlatConfig cfg = load_config(flags);
  ExperimentPlan plan = plan_from_config(cfg);
  plan.threads = resolve_threads(flags.threads);

  ExperimentReport report;
  if (plan.mode == ExperimentMode::limit_law) {
    const LimitRequest req = limit_from_config(cfg);
    const ModelCatalogEntry entry = catalog::make(plan.model_id, plan.box);
    const LimitLawSample limit = draw_limit(req, entry, plan.theta0, plan.x0, plan.levy, plan.threads);
    report = run_limit_law(plan, limit);
  } else {
    report = run_consistency(plan);
  }

  const fs::path dir(flags.out_dir);
  write_file_atomic(dir / "report.json", [&](std::ostream& os) {
    os << report.to_json().dump(2, ' ', false, json::error_handler_t::replace) << '\n';
  });
  write_file_atomic(dir / "replications.csv", [&](std::ostream& os) { report.write_replications_csv(os); });
  out << (dir / "report.json").string() << '\n' << (dir / "replications.csv").string() << '\n';
  if (report.flagged) {
    err << "error: more than " << static_cast<int>(kMaxFailureFraction * 100)
        << "% of replications failed at some ladder point; the run is flagged\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_limit_dist(const CommonFlags& flags, std::ostream& out) {
  const FlatConfig cfg = load_config(flags);
  const ModelCatalogEntry entry = model_from_config(cfg);
  const DriftModel& model = entry.model;
  const auto theta = cfg.get_doubles("theta0");
  const auto x = cfg.get_doubles("x0");
  if (theta.size() != model.dim_theta()) cfg.fail("theta0", "expected " + std::to_string(model.dim_theta()) + " values");
  if (x.size() != model.dim_x()) cfg.fail("x0", "expected " + std::to_string(model.dim_x()) + " values");
  const Eigen::VectorXd theta0 = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  if (!model.box().contains({theta0.data(), model.dim_theta()})) {
    cfg.fail("theta0", "theta0 lies outside the parameter box");
  }
  const LevySpec levy = levy_from_config(cfg, model.dim_x());
  const LimitRequest req = limit_from_config(cfg);
  const LimitLawSample sample = draw_limit(req, entry, theta0, x0, levy, resolve_threads(flags.threads));
  const fs::path path = fs::path(flags.out_dir) / "limit_draws.csv";
  write_file_atomic(path, [&](std::ostream& os) { sample.write_csv(os); });
  out << path.string() << '\n';
  return kExitOk;
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags.config, "Configuration file (key = value lines)");
  if (config_required) opt->required();
  cmd->add_option("--out", flags.out_dir, "Output directory");
  cmd->add_option("--seed", flags.seed, "Override the seed in the configuration");
  cmd->add_option("--threads", flags.threads, "Worker threads (default: LEVY_LSE_THREADS or 1)")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Least-squares drift estimation for small Levy-noise SDEs", "levy_lse"};
  app.require_subcommand(1);

  CommonFlags flags;
  EstimateFlags est;
  auto* sim = app.add_subcommand("simulate", "Simulate one trajectory and write observations.csv");
  add_common(sim, flags, true);
  auto* estc = app.add_subcommand("estimate", "Estimate theta from an observation CSV");
  add_common(estc, flags, false);
  estc->add_option("--obs", est.obs, "Observation CSV (k,t,x_1..x_d)");
  estc->add_option("--model", est.model, "Model id");
  estc->add_option("--method", est.method, "auto, closed_form, newton or simplex");
  estc->add_option("--box", est.box, "Parameter box, lo:hi or a comma list of lo:hi");
  estc->add_option("--epsilon", est.epsilon, "Noise level used to scale the contrast");
  estc->add_option("--starts", est.starts, "Multistart count for the simplex method");
  auto* exp = app.add_subcommand("experiment", "Run a Monte-Carlo experiment");
  add_common(exp, flags, true);
  auto* lim = app.add_subcommand("limit-dist", "Sample the limit law of the rescaled estimation error");
  add_common(lim, flags, true);

  std::vector<std::string> argv_store;
  argv_store.push_back("levy_lse");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    if (sim->parsed()) return cmd_simulate(flags, out);
    if (estc->parsed()) return cmd_estimate(flags, est, out);
    if (exp->parsed()) return cmd_experiment(flags, out, err);
    if (lim->parsed()) return cmd_limit_dist(flags, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << " [witness " << e.witness() << "]\n";
    return kExitNumerical;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitValidation;
}

}  // namespace levylse
