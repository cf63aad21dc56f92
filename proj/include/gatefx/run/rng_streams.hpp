// Named, independently keyed random streams derived from one master seed.
//
// Stream keys (stable; part of the checkpoint format):
//   env-reset = 1, exploration = 2, counterfactual = 3, init = 4,
//   corruption = 5, replay = 6, eval = 7, model = 8
// Each stream is an mt19937_64 seeded with splitmix64(master ^ splitmix64(key)).
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace gatefx::run {

using Rng = std::mt19937_64;

enum class StreamKey : std::uint64_t {
  kEnvReset = 1,
  kExploration = 2,
  kCounterfactual = 3,
  kInit = 4,
  kCorruption = 5,
  kReplay = 6,
  kEval = 7,
  kModel = 8,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master, StreamKey key) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(key)));
}

struct RngStreams {
  Rng env_reset;
  Rng exploration;
  Rng counterfactual;
  Rng init;
  Rng corruption;
  Rng replay;
  Rng model;

  /// Text form of every generator state, one `name=state` line each.
  std::string serialize() const;
  static RngStreams deserialize(std::string_view text);

  bool operator==(const RngStreams&) const = default;
};

RngStreams derive_streams(std::uint64_t master_seed);

/// Episode seeds for training draws have the top bit clear; evaluation seeds
/// have it set, so the two sets never intersect.
std::uint64_t training_episode_seed(Rng& env_reset);
std::uint64_t evaluation_episode_seed(std::uint64_t eval_seed, int episode);

}  // namespace gatefx::run
