#include "gatefx/run/rng_streams.hpp"

#include <map>
#include <sstream>
#include <stdexcept>

namespace gatefx::run {
namespace {

constexpr std::uint64_t kTopBit = 1ULL << 63;

template <typename F>
void for_each_stream(RngStreams& s, F&& f) {
  f("env-reset", s.env_reset);
  f("exploration", s.exploration);
  f("counterfactual", s.counterfactual);
  f("init", s.init);
  f("corruption", s.corruption);
  f("replay", s.replay);
  f("model", s.model);
}

}  // namespace

RngStreams derive_streams(std::uint64_t master) {
  return RngStreams{
      Rng(stream_seed(master, StreamKey::kEnvReset)),
      Rng(stream_seed(master, StreamKey::kExploration)),
      Rng(stream_seed(master, StreamKey::kCounterfactual)),
      Rng(stream_seed(master, StreamKey::kInit)),
      Rng(stream_seed(master, StreamKey::kCorruption)),
      Rng(stream_seed(master, StreamKey::kReplay)),
      Rng(stream_seed(master, StreamKey::kModel)),
  };
}

std::string RngStreams::serialize() const {
  std::ostringstream out;
  auto copy = *this;
  for_each_stream(copy, [&](const char* name, Rng& r) { out << name << '=' << r << '\n'; });
  return out.str();
}

RngStreams RngStreams::deserialize(std::string_view text) {
  std::map<std::string, std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    lines[line.substr(0, eq)] = line.substr(eq + 1);
  }
  RngStreams s = derive_streams(0);
  for_each_stream(s, [&](const char* name, Rng& r) {
    const auto it = lines.find(name);
    if (it == lines.end()) throw std::runtime_error(std::string("rng streams: missing ") + name);
    std::istringstream st(it->second);
    st >> r;
    if (!st) throw std::runtime_error(std::string("rng streams: bad state for ") + name);
  });
  return s;
}

std::uint64_t training_episode_seed(Rng& env_reset) { return env_reset() & ~kTopBit; }

std::uint64_t evaluation_episode_seed(std::uint64_t eval_seed, int episode) {
  return (splitmix64(stream_seed(eval_seed, StreamKey::kEval) + static_cast<std::uint64_t>(episode)) |
          kTopBit);
}

}  // namespace gatefx::run
