#include "levylse/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "levylse/errors.hpp"

namespace levylse {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "model",           "model.box",        "theta0",          "x0",
      "seed",            "replication",      "sim.epsilon",     "sim.n",
      "sim.substeps",    "levy.a",           "levy.sigma",      "levy.sigma.cols",
      "levy.jump",       "levy.stable.alpha", "levy.stable.beta", "levy.stable.scale",
      "levy.cp.rate",    "levy.cp.sizes",    "levy.cp.p1",      "levy.cp.p2",
      "levy.ts.alpha",   "levy.ts.c_plus",   "levy.ts.c_minus", "levy.ts.eta",
      "estimate.obs",    "estimate.method",  "estimate.epsilon", "estimate.starts",
      "experiment.mode", "experiment.ladder", "experiment.replications", "experiment.method",
      "experiment.starts", "limit.count",    "limit.fine_m",    "limit.mode",
      "limit.ode_m",     "limit.seed"};
  return keys;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_uint(const std::string& s) {
  if (s.empty() || s.front() == '-' || s.front() == '+') return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() + s.size() && errno != ERANGE) return static_cast<std::uint64_t>(v);
  // Accept integral values in float notation such as 1e4.
  const auto d = to_double(s);
  if (d && *d >= 0.0 && *d <= 9007199254740992.0 && std::floor(*d) == *d) {
    return static_cast<std::uint64_t>(*d);
  }
  return std::nullopt;
}

// Re-raises a domain validation error with the config source attached.
template <typename F>
auto with_source(const FlatConfig& cfg, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.rfind(cfg.source() + ":", 0) == 0) throw;
    throw ValidationError(cfg.source() + ": " + what);
  }
}

Eigen::VectorXd vector_field(const FlatConfig& cfg, const std::string& key, std::size_t len) {
  const auto values = cfg.get_doubles(key);
  if (values.size() != len) {
    cfg.fail(key, "expected " + std::to_string(len) + " values, got " + std::to_string(values.size()));
  }
  for (const double v : values) {
    if (!std::isfinite(v)) cfg.fail(key, "values must be finite");
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(len));
}

}  // namespace

FlatConfig FlatConfig::parse(std::string_view text, std::string source) {
  FlatConfig cfg;
  cfg.source_ = std::move(source);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(cfg.source_ + ":" + std::to_string(line_no) + ": expected 'key = value', got '" +
                            line + "'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ValidationError(cfg.source_ + ":" + std::to_string(line_no) + ": empty key");
    if (cfg.entries_.count(key)) {
      throw ValidationError(cfg.source_ + ":" + std::to_string(line_no) + ": field '" + key +
                            "' repeats line " + std::to_string(cfg.entries_[key].line));
    }
    cfg.entries_[key] = Entry{value, line_no};
  }
  return cfg;
}

FlatConfig FlatConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void FlatConfig::set(const std::string& key, std::string value) {
  auto& e = entries_[key];
  e.value = std::move(value);
}

const FlatConfig::Entry& FlatConfig::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ValidationError(source_ + ": missing required field '" + key + "'");
  return it->second;
}

void FlatConfig::fail(const std::string& key, const std::string& message) const {
  const auto it = entries_.find(key);
  std::string where = source_;
  if (it != entries_.end() && it->second.line > 0) where += ":" + std::to_string(it->second.line);
  throw ValidationError(where + ": field '" + key + "': " + message);
}

void FlatConfig::check_known_keys() const {
  for (const auto& [key, e] : entries_) {
    if (!known_keys().count(key)) fail(key, "unknown field");
  }
}

std::string FlatConfig::get_string(const std::string& key) const {
  const auto& e = entry(key);
  if (e.value.empty()) fail(key, "value is empty");
  return e.value;
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double FlatConfig::get_double(const std::string& key) const {
  const auto v = to_double(entry(key).value);
  if (!v) fail(key, "expected a number, got '" + entry(key).value + "'");
  return *v;
}

double FlatConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::uint64_t FlatConfig::get_uint(const std::string& key) const {
  const auto v = to_uint(entry(key).value);
  if (!v) fail(key, "expected a non-negative integer, got '" + entry(key).value + "'");
  return *v;
}

std::uint64_t FlatConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_uint(key) : fallback;
}

std::vector<double> FlatConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(get_string(key), ',')) {
    const auto v = to_double(item);
    if (!v) fail(key, "expected a comma-separated list of numbers, got item '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

ParameterBox parse_box(const std::string& text, std::size_t p) {
  const auto items = split(text, ',');
  if (items.size() != 1 && items.size() != p) {
    throw ValidationError("box: expected 1 or " + std::to_string(p) + " 'lo:hi' intervals, got " +
                          std::to_string(items.size()));
  }
  std::vector<double> lo, hi;
  for (const auto& item : items) {
    const auto parts = split(item, ':');
    const auto a = parts.size() == 2 ? to_double(parts[0]) : std::nullopt;
    const auto b = parts.size() == 2 ? to_double(parts[1]) : std::nullopt;
    if (!a || !b) throw ValidationError("box: malformed interval '" + item + "', expected lo:hi");
    lo.push_back(*a);
    hi.push_back(*b);
  }
  if (items.size() == 1 && p > 1) {
    lo.assign(p, lo.front());
    hi.assign(p, hi.front());
  }
  return ParameterBox(lo, hi);
}

ModelCatalogEntry model_from_config(const FlatConfig& cfg) {
  const std::string id = cfg.get_string("model");
  if (!catalog::contains(id)) {
    std::string known;
    for (const auto& k : catalog::ids()) known += (known.empty() ? "" : ", ") + k;
    cfg.fail("model", "unknown model '" + id + "' (known: " + known + ")");
  }
  std::optional<ParameterBox> box;
  if (cfg.has("model.box")) {
    const std::size_t p = catalog::make(id).model.dim_theta();
    try {
      box = parse_box(cfg.get_string("model.box"), p);
    } catch (const ValidationError& e) {
      cfg.fail("model.box", e.what());
    }
    try {
      return catalog::make(id, box);
    } catch (const ValidationError& e) {
      cfg.fail("model.box", e.what());
    }
  }
  return catalog::make(id);
}

LevySpec levy_from_config(const FlatConfig& cfg, std::size_t d) {
  LevySpec spec = LevySpec::zero(d);
  if (cfg.has("levy.a")) {
    const auto a = cfg.get_doubles("levy.a");
    if (a.size() == 1) {
      spec.drift.setConstant(a.front());
    } else if (a.size() == d) {
      spec.drift = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(d));
    } else {
      cfg.fail("levy.a", "expected 1 or " + std::to_string(d) + " values");
    }
    if (!spec.drift.allFinite()) cfg.fail("levy.a", "values must be finite");
  }
  if (cfg.has("levy.sigma")) {
    const auto s = cfg.get_doubles("levy.sigma");
    if (cfg.has("levy.sigma.cols")) {
      const auto r = cfg.get_uint("levy.sigma.cols");
      if (r < 1 || s.size() != d * r) {
        cfg.fail("levy.sigma", "expected d * levy.sigma.cols = " + std::to_string(d * r) + " values");
      }
      spec.sigma = Eigen::Map<const RowMatrix>(s.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(r));
    } else if (s.size() == 1) {
      spec.sigma = s.front() * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    } else if (s.size() == d * d) {
      spec.sigma = Eigen::Map<const RowMatrix>(s.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    } else {
      cfg.fail("levy.sigma", "expected 1 value, d * d values, or levy.sigma.cols");
    }
    if (!spec.sigma.allFinite()) cfg.fail("levy.sigma", "values must be finite");
  }

  const std::string jump = cfg.get_string("levy.jump", "none");
  JumpPart part = NoJumps{};
  if (jump == "stable") {
    StableJumps s;
    s.alpha = cfg.get_double("levy.stable.alpha", s.alpha);
    s.beta = cfg.get_double("levy.stable.beta", s.beta);
    s.scale = cfg.get_double("levy.stable.scale", s.scale);
    if (!(s.alpha > 0.0 && s.alpha < 2.0)) {
      cfg.fail("levy.stable.alpha", "alpha must lie in (0, 2), got " + std::to_string(s.alpha));
    }
    if (!(s.beta >= -1.0 && s.beta <= 1.0)) {
      cfg.fail("levy.stable.beta", "beta must lie in [-1, 1], got " + std::to_string(s.beta));
    }
    if (!(s.scale > 0.0) || !std::isfinite(s.scale)) cfg.fail("levy.stable.scale", "scale must be > 0");
    part = s;
  } else if (jump == "compound_poisson") {
    CompoundPoissonJumps cp;
    cp.rate = cfg.get_double("levy.cp.rate");
    if (!(cp.rate >= 0.0) || !std::isfinite(cp.rate)) cfg.fail("levy.cp.rate", "rate must be finite and >= 0");
    try {
      cp.sizes = JumpDistribution::parse(cfg.get_string("levy.cp.sizes", "normal"),
                                         cfg.get_double("levy.cp.p1", 0.0), cfg.get_double("levy.cp.p2", 1.0));
    } catch (const ValidationError& e) {
      cfg.fail("levy.cp.sizes", e.what());
    }
    part = cp;
  } else if (jump == "truncated_stable") {
    TruncatedStableJumps ts;
    ts.alpha = cfg.get_double("levy.ts.alpha", ts.alpha);
    ts.c_plus = cfg.get_double("levy.ts.c_plus", ts.c_plus);
    ts.c_minus = cfg.get_double("levy.ts.c_minus", ts.c_minus);
    ts.eta = cfg.get_double("levy.ts.eta", ts.eta);
    if (!(ts.alpha > 0.0 && ts.alpha < 2.0)) {
      cfg.fail("levy.ts.alpha", "alpha must lie in (0, 2), got " + std::to_string(ts.alpha));
    }
    if (!(ts.c_plus >= 0.0)) cfg.fail("levy.ts.c_plus", "must be >= 0");
    if (!(ts.c_minus >= 0.0)) cfg.fail("levy.ts.c_minus", "must be >= 0");
    if (!(ts.eta > 0.0 && ts.eta <= 1.0)) cfg.fail("levy.ts.eta", "eta must lie in (0, 1]");
    part = ts;
  } else if (jump != "none") {
    cfg.fail("levy.jump", "unknown jump type '" + jump + "' (none, stable, compound_poisson, truncated_stable)");
  }
  spec.jumps.assign(d, part);
  with_source(cfg, [&] { spec.validate(); });
  return spec;
}

SimConfig sim_from_config(const FlatConfig& cfg, const ModelCatalogEntry& entry) {
  const DriftModel& model = entry.model;
  SimConfig sim;
  sim.epsilon = cfg.get_double("sim.epsilon");
  if (!(sim.epsilon >= 0.0 && sim.epsilon <= 1.0)) cfg.fail("sim.epsilon", "epsilon must lie in (0, 1]");
  sim.n = cfg.get_uint("sim.n");
  if (sim.n < 2) cfg.fail("sim.n", "n must be >= 2");
  sim.substeps = cfg.get_uint("sim.substeps", 100);
  if (sim.substeps < 1) cfg.fail("sim.substeps", "substeps must be >= 1");
  sim.theta0 = vector_field(cfg, "theta0", model.dim_theta());
  if (!model.box().contains({sim.theta0.data(), model.dim_theta()})) {
    cfg.fail("theta0", "theta0 lies outside the parameter box");
  }
  sim.x0 = vector_field(cfg, "x0", model.dim_x());
  sim.levy = levy_from_config(cfg, model.dim_x());
  sim.seed = cfg.get_uint("seed", 0);
  sim.replication = cfg.get_uint("replication", 0);
  with_source(cfg, [&] { sim.validate(model); });
  return sim;
}

ExperimentPlan plan_from_config(const FlatConfig& cfg) {
  const ModelCatalogEntry entry = model_from_config(cfg);
  const DriftModel& model = entry.model;
  ExperimentPlan plan;
  plan.model_id = entry.id;
  if (cfg.has("model.box")) plan.box = model.box();
  plan.theta0 = vector_field(cfg, "theta0", model.dim_theta());
  if (!model.box().contains({plan.theta0.data(), model.dim_theta()})) {
    cfg.fail("theta0", "theta0 lies outside the parameter box");
  }
  plan.x0 = vector_field(cfg, "x0", model.dim_x());
  plan.levy = levy_from_config(cfg, model.dim_x());

  for (const auto& item : split(cfg.get_string("experiment.ladder"), ',')) {
    const auto parts = split(item, ':');
    const auto eps = parts.size() == 2 ? to_double(parts[0]) : std::nullopt;
    const auto n = parts.size() == 2 ? to_uint(parts[1]) : std::nullopt;
    if (!eps || !n) cfg.fail("experiment.ladder", "malformed ladder point '" + item + "', expected eps:n");
    plan.ladder.push_back({*eps, static_cast<std::size_t>(*n)});
  }
  plan.replications = cfg.get_uint("experiment.replications", 1);
  plan.substeps = cfg.get_uint("sim.substeps", 100);
  plan.seed = cfg.get_uint("seed", 0);
  try {
    plan.method = parse_estimator(cfg.get_string("experiment.method", "auto"));
  } catch (const ValidationError& e) {
    cfg.fail("experiment.method", e.what());
  }
  plan.starts = cfg.get_uint("experiment.starts", 8);
  const std::string mode = cfg.get_string("experiment.mode", "consistency");
  if (mode == "consistency") {
    plan.mode = ExperimentMode::consistency;
  } else if (mode == "limit_law") {
    plan.mode = ExperimentMode::limit_law;
  } else {
    cfg.fail("experiment.mode", "expected consistency or limit_law, got '" + mode + "'");
  }
  with_source(cfg, [&] { plan.validate(); });
  return plan;
}

LimitRequest limit_from_config(const FlatConfig& cfg) {
  LimitRequest req;
  const std::string mode = cfg.get_string("limit.mode", "pathwise");
  if (mode == "pathwise") {
    req.mode = LimitRequest::Mode::pathwise;
  } else if (mode == "closed_form") {
    req.mode = LimitRequest::Mode::closed_form;
  } else {
    cfg.fail("limit.mode", "expected pathwise or closed_form, got '" + mode + "'");
  }
  req.count = cfg.get_uint("limit.count", req.count);
  if (req.count < 1) cfg.fail("limit.count", "count must be >= 1");
  req.fine_m = cfg.get_uint("limit.fine_m", req.fine_m);
  if (req.fine_m < 100) cfg.fail("limit.fine_m", "fine_m must be >= 100");
  req.ode_m = cfg.get_uint("limit.ode_m", req.ode_m);
  if (req.ode_m < 10 || req.ode_m % 2 != 0) cfg.fail("limit.ode_m", "ode_m must be even and >= 10");
  req.seed = cfg.get_uint("limit.seed", cfg.get_uint("seed", 0));
  return req;
}

LimitLawSample draw_limit(const LimitRequest& request, const ModelCatalogEntry& entry,
                          const Eigen::VectorXd& theta0, const Eigen::VectorXd& x0,
                          const LevySpec& levy, std::size_t threads) {
  if (request.mode == LimitRequest::Mode::pathwise) {
    const DeterministicPath path = solve_x0(entry, theta0, x0, request.ode_m);
    return sample_limit_distribution(entry.model, path, theta0, levy, request.count, request.fine_m,
                                     request.seed, threads, request.ode_m);
  }
  if (entry.id != catalog::kSqrtShift) {
    throw ValidationError("limit.mode = closed_form is only available for model '" +
                          std::string(catalog::kSqrtShift) + "'");
  }
  if (levy.drift.size() != 1 || levy.drift[0] != 0.0) {
    throw ValidationError("limit.mode = closed_form needs levy.a = 0");
  }
  if (levy.sigma.rows() != 1) throw ValidationError("limit.mode = closed_form needs a one-dimensional model");
  const double a = levy.sigma.norm();
  double sigma = 0.0, alpha = 1.5, beta = 0.0;
  if (const auto* s = std::get_if<StableJumps>(&levy.jumps.front())) {
    sigma = s->scale;
    alpha = s->alpha;
    beta = s->beta;
  } else if (!std::holds_alternative<NoJumps>(levy.jumps.front())) {
    throw ValidationError("limit.mode = closed_form needs levy.jump = stable or none");
  }
  return sample_limit_closed_form_sqrt_shift(theta0[0], x0[0], a, sigma, alpha, beta, request.count,
                                             request.seed, request.ode_m);
}

}  // namespace levylse
