#include "gatefx/run/instrument.hpp"

namespace gatefx::run {

Counters& counters() {
  static Counters c;
  return c;
}

const char* to_string(Bucket b) {
  switch (b) {
    case Bucket::kEnv: return "env";
    case Bucket::kBackbone: return "backbone";
    case Bucket::kForwardModel: return "fm";
    case Bucket::kEffect: return "effect";
    case Bucket::kGate: return "gate";
    case Bucket::kEval: return "eval";
    case Bucket::kOther: return "other";
    case Bucket::kCount: break;
  }
  return "?";
}

}  // namespace gatefx::run
