// Run configuration: flat `key=value` text, one entry per line, `#` comments.
// Unknown keys and malformed values are rejected.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gatefx::run {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { kBackbone, kMagic, kMagicNoGate, kMagicH1 };

const char* to_string(Method m);
Method parse_method(const std::string& s);

struct RunConfig {
  // environment
  std::string task = "predator-prey";  // predator-prey | cooperative-navigation | delayed-chain
  int agents = 5;
  int episode_length = 25;
  // delayed-chain only
  int delay = 2;
  double chain_gain = 0.25;
  double chain_goal = 1.0;
  bool chain_two_sided = false;
  double chain_action_cost = 0.0;

  // schedule
  std::int64_t total_env_steps = 4000000;
  std::int64_t eval_every = 10000;
  int eval_episodes = 10;
  std::int64_t warmup = 10000;
  int update_every = 1;
  int updates_per_iteration = 1;
  double noise_start = 0.3;
  double noise_end = 0.05;
  std::int64_t diag_every = 100;  // updates between diagnostics rows

  // backbone
  std::vector<int> actor_hidden{128, 128};
  std::vector<int> critic_hidden{256, 256};
  std::vector<int> value_hidden{256, 256};
  double lr = 1e-3;
  double gamma = 0.95;
  double polyak = 0.01;
  double grad_clip = 5.0;
  int batch_size = 1024;
  std::int64_t buffer_size = 1000000;

  // method
  Method method = Method::kMagic;
  int horizon = 3;
  int K = 64;
  double lambda_int = 0.05;
  double c_max = 5.0;
  double gate_tau = 1.0;
  std::vector<double> weights;  // empty = uniform
  int fm_epochs = 10;
  std::vector<int> fm_hidden{256, 256};
  int fm_batch = 256;
  double fm_lr = 1e-3;

  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{0};

  /// Horizon and weights actually used by the method variant.
  int effective_horizon() const;
  std::vector<double> effective_weights() const;
  bool uses_effect() const { return method != Method::kBackbone; }

  void validate() const;
  void set(const std::string& key, const std::string& value);
  /// Canonical text form, parseable by apply_text.
  std::string to_text() const;
};

/// Presets: "paper" (the defaults) and "desk" (single-core acceptance scale).
RunConfig preset(const std::string& name);

/// Applies `key=value` lines on top of `base`. A `preset` key, if present,
/// must come first and replaces the base.
RunConfig apply_text(RunConfig base, const std::string& text);
RunConfig load_config(const std::filesystem::path& path, RunConfig base);

/// Sweep grid: same syntax, but any value may list alternatives separated by
/// `|`. Returns the Cartesian product in file order (last key fastest).
std::vector<std::map<std::string, std::string>> expand_grid(const std::string& text);

}  // namespace gatefx::run
