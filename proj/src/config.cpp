#include "gatefx/run/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gatefx/model/forward_model.hpp"

namespace gatefx::run {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    try {
      std::size_t used = 0;
      out = static_cast<T>(std::stod(v, &used));
      if (used != v.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ConfigError("config: bad number for '" + key + "': '" + v + "'");
    }
  } else {
    // Integers may be written in scientific form (4e6) if exact.
    double d = 0;
    try {
      std::size_t used = 0;
      d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ConfigError("config: bad integer for '" + key + "': '" + v + "'");
    }
    if (d != std::floor(d)) throw ConfigError("config: '" + key + "' must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (d < 0) throw ConfigError("config: '" + key + "' must be non-negative");
      // Large seeds lose precision through double; parse them directly.
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec == std::errc() && p == v.data() + v.size()) return out;
    }
    out = static_cast<T>(d);
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  if (v.empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(parse_number<T>(key, part));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::kBackbone: return "backbone";
    case Method::kMagic: return "magic";
    case Method::kMagicNoGate: return "magic-no-gate";
    case Method::kMagicH1: return "magic-h1";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (Method m : {Method::kBackbone, Method::kMagic, Method::kMagicNoGate, Method::kMagicH1})
    if (s == to_string(m)) return m;
  throw ConfigError("config: unknown method '" + s + "'");
}

int RunConfig::effective_horizon() const { return method == Method::kMagicH1 ? 1 : horizon; }

std::vector<double> RunConfig::effective_weights() const {
  const int H = effective_horizon();
  if (method == Method::kMagicH1) return {1.0};
  if (weights.empty()) return std::vector<double>(static_cast<std::size_t>(H), 1.0 / H);
  return weights;
}

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

}  // namespace

void RunConfig::validate() const {
  if (task != "predator-prey" && task != "cooperative-navigation" && task != "delayed-chain")
    throw ConfigError("config: unknown task '" + task + "'");
  if (agents < 1) throw ConfigError("config: agents must be >= 1");
  if (episode_length < 1) throw ConfigError("config: episode-length must be >= 1");
  if (delay < 1) throw ConfigError("config: delay must be >= 1");
  if (!(chain_gain > 0) || !(chain_goal > 0)) throw ConfigError("config: chain-gain and chain-goal must be positive");
  if (chain_action_cost < 0) throw ConfigError("config: chain-action-cost must be >= 0");
  if (total_env_steps < 1 || eval_every < 1) throw ConfigError("config: step counts must be positive");
  if (eval_episodes < 1) throw ConfigError("config: eval-episodes must be >= 1");
  if (update_every < 1 || updates_per_iteration < 1) throw ConfigError("config: update cadence must be positive");
  if (warmup < 0) throw ConfigError("config: warmup must be >= 0");
  if (noise_start < 0 || noise_end < 0) throw ConfigError("config: noise scales must be >= 0");
  if (diag_every < 1) throw ConfigError("config: diag-every must be >= 1");
  if (!(gamma > 0 && gamma < 1)) throw ConfigError("config: gamma must lie in (0,1)");
  if (!(polyak > 0 && polyak <= 1)) throw ConfigError("config: polyak must lie in (0,1]");
  if (!(lr > 0) || !(fm_lr > 0)) throw ConfigError("config: learning rates must be positive");
  if (batch_size < 1 || fm_batch < 1) throw ConfigError("config: batch sizes must be >= 1");
  if (buffer_size < batch_size) throw ConfigError("config: buffer-size must be >= batch-size");
  if (horizon < 1) throw ConfigError("config: H must be >= 1");
  if (K < 1) throw ConfigError("config: K must be >= 1");
  if (lambda_int < 0) throw ConfigError("config: lambda-int must be >= 0");
  if (!(c_max > 0)) throw ConfigError("config: c-max must be positive");
  if (!(gate_tau > 0)) throw ConfigError("config: tau must be positive");
  if (fm_epochs < 0) throw ConfigError("config: fm-epochs must be >= 0");
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != horizon) throw ConfigError("config: weights length must equal H");
    double s = 0;
    for (double w : weights) {
      if (w < 0) throw ConfigError("config: weights must be non-negative");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("config: weights must sum to 1");
  }
  for (const auto* v : {&actor_hidden, &critic_hidden, &value_hidden, &fm_hidden})
    for (int w : *v)
      if (w < 1) throw ConfigError("config: hidden widths must be positive");
  if (seeds.empty()) throw ConfigError("config: seeds must not be empty");
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "task") task = v;
  else if (key == "agents") agents = parse_number<int>(key, v);
  else if (key == "episode-length") episode_length = parse_number<int>(key, v);
  else if (key == "delay") delay = parse_number<int>(key, v);
  else if (key == "chain-gain") chain_gain = parse_number<double>(key, v);
  else if (key == "chain-goal") chain_goal = parse_number<double>(key, v);
  else if (key == "chain-action-cost") chain_action_cost = parse_number<double>(key, v);
  else if (key == "chain-two-sided") chain_two_sided = parse_bool(key, v);
  else if (key == "total-env-steps") total_env_steps = parse_number<std::int64_t>(key, v);
  else if (key == "eval-every") eval_every = parse_number<std::int64_t>(key, v);
  else if (key == "eval-episodes") eval_episodes = parse_number<int>(key, v);
  else if (key == "warmup") warmup = parse_number<std::int64_t>(key, v);
  else if (key == "update-every") update_every = parse_number<int>(key, v);
  else if (key == "updates-per-iteration") updates_per_iteration = parse_number<int>(key, v);
  else if (key == "noise-start") noise_start = parse_number<double>(key, v);
  else if (key == "noise-end") noise_end = parse_number<double>(key, v);
  else if (key == "diag-every") diag_every = parse_number<std::int64_t>(key, v);
  else if (key == "actor-hidden") actor_hidden = parse_list<int>(key, v);
  else if (key == "critic-hidden") critic_hidden = parse_list<int>(key, v);
  else if (key == "value-hidden") value_hidden = parse_list<int>(key, v);
  else if (key == "lr") lr = parse_number<double>(key, v);
  else if (key == "gamma") gamma = parse_number<double>(key, v);
  else if (key == "polyak") polyak = parse_number<double>(key, v);
  else if (key == "grad-clip") grad_clip = parse_number<double>(key, v);
  else if (key == "batch-size") batch_size = parse_number<int>(key, v);
  else if (key == "buffer-size") buffer_size = parse_number<std::int64_t>(key, v);
  else if (key == "method") method = parse_method(v);
  else if (key == "H") horizon = parse_number<int>(key, v);
  else if (key == "K") K = parse_number<int>(key, v);
  else if (key == "lambda-int") lambda_int = parse_number<double>(key, v);
  else if (key == "c-max") c_max = parse_number<double>(key, v);
  else if (key == "tau") gate_tau = parse_number<double>(key, v);
  else if (key == "weights") weights = v == "uniform" ? std::vector<double>{} : parse_list<double>(key, v);
  else if (key == "fm-epochs") fm_epochs = parse_number<int>(key, v);
  else if (key == "fm-ratio") {
    try {
      fm_epochs = model::epochs_for_ratio(parse_number<double>(key, v));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  else if (key == "fm-hidden") fm_hidden = parse_list<int>(key, v);
  else if (key == "fm-batch") fm_batch = parse_number<int>(key, v);
  else if (key == "fm-lr") fm_lr = parse_number<double>(key, v);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "seeds") seeds = parse_list<std::uint64_t>(key, v);
  else throw ConfigError("config: unknown key '" + key + "'");
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "task=" << task << "\nagents=" << agents << "\nepisode-length=" << episode_length
     << "\ndelay=" << delay << "\nchain-gain=" << chain_gain << "\nchain-goal=" << chain_goal
     << "\nchain-two-sided=" << (chain_two_sided ? "true" : "false")
     << "\nchain-action-cost=" << chain_action_cost << "\ntotal-env-steps=" << total_env_steps << "\neval-every=" << eval_every
     << "\neval-episodes=" << eval_episodes << "\nwarmup=" << warmup << "\nupdate-every=" << update_every
     << "\nupdates-per-iteration=" << updates_per_iteration << "\nnoise-start=" << noise_start
     << "\nnoise-end=" << noise_end << "\ndiag-every=" << diag_every
     << "\nactor-hidden=" << join(actor_hidden) << "\ncritic-hidden=" << join(critic_hidden)
     << "\nvalue-hidden=" << join(value_hidden) << "\nlr=" << lr << "\ngamma=" << gamma
     << "\npolyak=" << polyak << "\ngrad-clip=" << grad_clip << "\nbatch-size=" << batch_size
     << "\nbuffer-size=" << buffer_size << "\nmethod=" << to_string(method) << "\nH=" << horizon
     << "\nK=" << K << "\nlambda-int=" << lambda_int << "\nc-max=" << c_max << "\ntau=" << gate_tau
     << "\nweights=" << (weights.empty() ? std::string("uniform") : join(weights))
     << "\nfm-epochs=" << fm_epochs << "\nfm-hidden=" << join(fm_hidden) << "\nfm-batch=" << fm_batch
     << "\nfm-lr=" << fm_lr << "\nseed=" << seed << "\nseeds=" << join(seeds) << "\n";
  return os.str();
}

RunConfig preset(const std::string& name) {
  RunConfig c;
  if (name == "paper") return c;
  if (name != "desk") throw ConfigError("config: unknown preset '" + name + "'");
  c.agents = 3;
  c.total_env_steps = 200000;
  c.eval_every = 10000;
  c.warmup = 5000;
  c.update_every = 10;
  c.actor_hidden = {64, 64};
  c.critic_hidden = {128, 128};
  c.value_hidden = {128, 128};
  c.batch_size = 128;
  c.buffer_size = 200000;
  c.K = 8;
  c.fm_hidden = {128, 128};
  c.fm_batch = 128;
  c.seeds = {1, 2, 3, 4, 5};
  c.seed = 1;
  return c;
}

RunConfig apply_text(RunConfig base, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  bool first = true;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "preset") {
      if (!first) throw ConfigError("config: 'preset' must be the first entry");
      base = preset(value);
    } else {
      base.set(key, value);
    }
    first = false;
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return apply_text(std::move(base), ss.str());
}

std::vector<std::map<std::string, std::string>> expand_grid(const std::string& text) {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("grid: expected key=value");
    const std::string key = trim(line.substr(0, eq));
    for (const auto& a : axes)
      if (a.first == key) throw ConfigError("grid: duplicate key '" + key + "'");
    axes.emplace_back(key, split(line.substr(eq + 1), '|'));
    if (axes.back().second.empty()) throw ConfigError("grid: empty value for '" + key + "'");
  }
  std::vector<std::map<std::string, std::string>> out(1);
  for (const auto& [key, values] : axes) {
    std::vector<std::map<std::string, std::string>> next;
    for (const auto& partial : out)
      for (const auto& v : values) {
        auto m = partial;
        m[key] = v;
        next.push_back(std::move(m));
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace gatefx::run
