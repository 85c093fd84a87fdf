#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "levylse/asymptotics.hpp"
#include "levylse/drift_models.hpp"
#include "levylse/levy_noise.hpp"
#include "levylse/mc_harness.hpp"
#include "levylse/sde_sim.hpp"

namespace levylse {

/// Flat `key = value` text with dotted keys. `#` starts a comment.
/// Errors name the source, line and field.
class FlatConfig {
 public:
  static FlatConfig parse(std::string_view text, std::string source = "<config>");
  static FlatConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, std::string value);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  /// Throws ValidationError "source:line: field 'key': message".
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

  /// Rejects keys outside the documented schema.
  void check_known_keys() const;

  const std::string& source() const { return source_; }

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  const Entry& entry(const std::string& key) const;

  std::string source_;
  std::map<std::string, Entry> entries_;
};

/// "lo:hi" for every coordinate, or a comma list of "lo:hi" pairs.
ParameterBox parse_box(const std::string& text, std::size_t p);

ModelCatalogEntry model_from_config(const FlatConfig& cfg);
LevySpec levy_from_config(const FlatConfig& cfg, std::size_t d);
SimConfig sim_from_config(const FlatConfig& cfg, const ModelCatalogEntry& entry);
ExperimentPlan plan_from_config(const FlatConfig& cfg);

struct LimitRequest {
  enum class Mode { pathwise, closed_form };
  Mode mode = Mode::pathwise;
  std::size_t count = 10000;
  std::size_t fine_m = 10000;
  std::size_t ode_m = kDefaultOdeSteps;
  std::uint64_t seed = 0;
};

LimitRequest limit_from_config(const FlatConfig& cfg);

/// Draws the limit law of the estimator for (model, theta0, x0, levy).
LimitLawSample draw_limit(const LimitRequest& request, const ModelCatalogEntry& entry,
                          const Eigen::VectorXd& theta0, const Eigen::VectorXd& x0,
                          const LevySpec& levy, std::size_t threads);

}  // namespace levylse
