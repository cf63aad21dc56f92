#include "gatefx/env/particle_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace gatefx::env {
namespace {

Eigen::Vector2d clamp_box(const Eigen::Vector2d& p, double half) {
  return p.cwiseMax(-half).cwiseMin(half);
}

Eigen::Vector2d clamp_speed(const Eigen::Vector2d& v, double max_speed) {
  const double n = v.norm();
  return n > max_speed ? Eigen::Vector2d(v * (max_speed / n)) : v;
}

void integrate(Entity& e, const Eigen::Vector2d& accel, double max_speed, const EnvConfig& c) {
  e.velocity = clamp_speed(e.velocity * (1.0 - c.damping) + accel * c.accel_gain * c.dt, max_speed);
  e.position = clamp_box(e.position + e.velocity * c.dt, c.half_extent);
}

std::vector<const Entity*> landmarks_by_id(const WorldState& s) {
  std::vector<const Entity*> out;
  out.reserve(s.landmarks.size());
  for (const auto& l : s.landmarks) out.push_back(&l);
  std::sort(out.begin(), out.end(), [](const Entity* a, const Entity* b) { return a->id < b->id; });
  return out;
}

double team_reward(const WorldState& s, const EnvConfig& c) {
  double r = 0.0;
  if (c.task == Task::kPredatorPrey) {
    for (const auto& prey : s.prey)
      for (const auto& a : s.agents)
        if ((a.position - prey.position).norm() < c.collision_radius) r += c.predator_reward;
    return r;
  }
  for (const auto& l : s.landmarks) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : s.agents) best = std::min(best, (a.position - l.position).norm());
    r -= best;
  }
  for (std::size_t i = 0; i < s.agents.size(); ++i)
    for (std::size_t j = i + 1; j < s.agents.size(); ++j)
      if ((s.agents[i].position - s.agents[j].position).norm() < c.collision_radius)
        r -= c.agent_collision_penalty;
  return r;
}

}  // namespace

std::string to_string(Task t) {
  return t == Task::kPredatorPrey ? "predator-prey" : "cooperative-navigation";
}

Task parse_task(const std::string& s) {
  if (s == "predator-prey") return Task::kPredatorPrey;
  if (s == "cooperative-navigation") return Task::kCooperativeNavigation;
  throw std::invalid_argument("unknown task '" + s + "'");
}

int EnvConfig::landmark_count() const {
  if (task != Task::kCooperativeNavigation) return 0;
  return num_landmarks > 0 ? num_landmarks : num_agents;
}

void EnvConfig::validate() const {
  if (num_agents < 2) throw std::invalid_argument("EnvConfig: num_agents must be >= 2");
  if (episode_length < 1) throw std::invalid_argument("EnvConfig: episode_length must be >= 1");
  if (!(dt > 0)) throw std::invalid_argument("EnvConfig: dt must be positive");
  if (!(damping >= 0 && damping < 1)) throw std::invalid_argument("EnvConfig: damping must lie in [0,1)");
  if (!(max_speed > 0) || !(prey_max_speed > 0) || !(half_extent > 0))
    throw std::invalid_argument("EnvConfig: speeds and extent must be positive");
}

int centralized_state_dim(const EnvConfig& c) {
  const int prey = c.task == Task::kPredatorPrey ? 4 : 0;
  return 4 * c.num_agents + prey + 2 * c.landmark_count();
}

int observation_dim(const EnvConfig& c) {
  const int others = c.task == Task::kPredatorPrey ? 1 : c.landmark_count();
  return 4 + 2 * (c.num_agents - 1) + 2 * others;
}

WorldState reset(const EnvConfig& config, std::uint64_t episode_seed) {
  config.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(config.rng_seed),
                    static_cast<std::uint32_t>(config.rng_seed >> 32),
                    static_cast<std::uint32_t>(episode_seed),
                    static_cast<std::uint32_t>(episode_seed >> 32)};
  std::mt19937_64 rng(seq);
  const double bound = 0.8 * config.half_extent;
  std::uniform_real_distribution<double> u(-bound, bound);
  auto place = [&](Role role, int id) {
    Entity e;
    e.role = role;
    e.id = id;
    const double x = u(rng);
    const double y = u(rng);
    e.position = {x, y};
    return e;
  };
  WorldState s;
  for (int i = 0; i < config.num_agents; ++i) s.agents.push_back(place(Role::kAgent, i));
  if (config.task == Task::kPredatorPrey) s.prey.push_back(place(Role::kPrey, 0));
  for (int l = 0; l < config.landmark_count(); ++l) s.landmarks.push_back(place(Role::kLandmark, l));
  return s;
}

Eigen::Vector2d prey_flee_direction(const WorldState& state, const EnvConfig& c) {
  if (state.prey.empty()) return Eigen::Vector2d::Zero();
  const Entity& prey = state.prey.front();
  const Entity* nearest = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : state.agents) {
    const double d = (prey.position - a.position).squaredNorm();
    if (d < best) {
      best = d;
      nearest = &a;
    }
  }
  Eigen::Vector2d dir = nearest ? Eigen::Vector2d(prey.position - nearest->position)
                                : Eigen::Vector2d(1.0, 0.0);
  if (dir.norm() < 1e-12) dir = {1.0, 0.0};
  dir.normalize();
  // Reflect components that would drive the prey into a nearby wall.
  for (int k = 0; k < 2; ++k) {
    if (prey.position[k] > c.half_extent - c.prey_wall_margin && dir[k] > 0) dir[k] = -dir[k];
    if (prey.position[k] < -c.half_extent + c.prey_wall_margin && dir[k] < 0) dir[k] = -dir[k];
  }
  return dir;
}

StepResult step(const WorldState& state, const JointAction& action, const EnvConfig& config) {
  if (state.step_index >= config.episode_length)
    throw UsageError("step: episode already finished");
  if (action.rows() != static_cast<Eigen::Index>(state.agents.size()))
    throw std::invalid_argument("step: one action row per agent required");
  if (!action.allFinite() || action.cwiseAbs().maxCoeff() > 1.0 + 1e-12)
    throw std::invalid_argument("step: action components must lie in [-1, 1]");

  StepResult out;
  out.next_state = state;
  WorldState& next = out.next_state;
  const Eigen::Vector2d flee = prey_flee_direction(state, config);
  for (std::size_t i = 0; i < next.agents.size(); ++i)
    integrate(next.agents[i], action.row(static_cast<Eigen::Index>(i)).transpose(),
              config.max_speed, config);
  for (auto& prey : next.prey) integrate(prey, flee, config.prey_max_speed, config);
  ++next.step_index;
  out.team_reward = team_reward(next, config);
  out.done = next.step_index >= config.episode_length;
  for (std::size_t i = 0; i < next.agents.size(); ++i)
    out.observations.push_back(local_observation(next, static_cast<int>(i)));
  return out;
}

Eigen::VectorXd centralized_state(const WorldState& s) {
  const auto lms = landmarks_by_id(s);
  Eigen::VectorXd v(4 * s.agents.size() + 4 * s.prey.size() + 2 * lms.size());
  Eigen::Index k = 0;
  std::vector<const Entity*> agents;
  for (const auto& a : s.agents) agents.push_back(&a);
  std::sort(agents.begin(), agents.end(), [](const Entity* a, const Entity* b) { return a->id < b->id; });
  for (const Entity* a : agents) {
    v.segment<2>(k) = a->position;
    v.segment<2>(k + 2) = a->velocity;
    k += 4;
  }
  for (const auto& p : s.prey) {
    v.segment<2>(k) = p.position;
    v.segment<2>(k + 2) = p.velocity;
    k += 4;
  }
  for (const Entity* l : lms) {
    v.segment<2>(k) = l->position;
    k += 2;
  }
  return v;
}

Eigen::VectorXd local_observation(const WorldState& s, int agent) {
  if (agent < 0 || agent >= static_cast<int>(s.agents.size()))
    throw std::out_of_range("local_observation: bad agent id");
  const Entity& self = s.agents[static_cast<std::size_t>(agent)];
  const auto lms = landmarks_by_id(s);
  Eigen::VectorXd o(4 + 2 * (s.agents.size() - 1) + 2 * s.prey.size() + 2 * lms.size());
  Eigen::Index k = 0;
  o.segment<2>(k) = self.position;
  o.segment<2>(k + 2) = self.velocity;
  k += 4;
  for (std::size_t j = 0; j < s.agents.size(); ++j) {
    if (static_cast<int>(j) == agent) continue;
    o.segment<2>(k) = s.agents[j].position - self.position;
    k += 2;
  }
  for (const auto& p : s.prey) {
    o.segment<2>(k) = p.position - self.position;
    k += 2;
  }
  for (const Entity* l : lms) {
    o.segment<2>(k) = l->position - self.position;
    k += 2;
  }
  return o;
}

WorldState from_centralized(const Eigen::VectorXd& v, const EnvConfig& c, int step_index) {
  if (v.size() != centralized_state_dim(c))
    throw std::invalid_argument("from_centralized: state length does not match config");
  WorldState s;
  s.step_index = step_index;
  Eigen::Index k = 0;
  for (int i = 0; i < c.num_agents; ++i) {
    Entity e;
    e.role = Role::kAgent;
    e.id = i;
    e.position = v.segment<2>(k);
    e.velocity = v.segment<2>(k + 2);
    s.agents.push_back(e);
    k += 4;
  }
  if (c.task == Task::kPredatorPrey) {
    Entity e;
    e.role = Role::kPrey;
    e.position = v.segment<2>(k);
    e.velocity = v.segment<2>(k + 2);
    s.prey.push_back(e);
    k += 4;
  }
  for (int l = 0; l < c.landmark_count(); ++l) {
    Entity e;
    e.role = Role::kLandmark;
    e.id = l;
    e.position = v.segment<2>(k);
    s.landmarks.push_back(e);
    k += 2;
  }
  return s;
}

std::pair<double, double> reward_bounds(const EnvConfig& c) {
  if (c.task == Task::kPredatorPrey) return {0.0, c.predator_reward * c.num_agents};
  const double diagonal = 2.0 * std::sqrt(2.0) * c.half_extent;
  const double pairs = 0.5 * c.num_agents * (c.num_agents - 1);
  return {-c.landmark_count() * diagonal - pairs * c.agent_collision_penalty, 0.0};
}

ParticleEnv::ParticleEnv(EnvConfig config)
    : config_(std::move(config)),
      state_dim_(centralized_state_dim(config_)),
      obs_dim_(observation_dim(config_)) {
  config_.validate();
}

std::string ParticleEnv::name() const { return to_string(config_.task); }

Eigen::VectorXd ParticleEnv::reset(std::uint64_t episode_seed) const {
  return centralized_state(gatefx::env::reset(config_, episode_seed));
}

StepOutcome ParticleEnv::step(const Eigen::VectorXd& state, const Eigen::VectorXd& joint_action,
                              int step_index) const {
  if (joint_action.size() != joint_action_dim())
    throw std::invalid_argument("ParticleEnv::step: joint action length mismatch");
  const JointAction a = Eigen::Map<const JointAction>(joint_action.data(), config_.num_agents, 2);
  StepResult r = gatefx::env::step(from_centralized(state, config_, step_index), a, config_);
  return {centralized_state(r.next_state), r.team_reward, r.done};
}

void ParticleEnv::observations(const Eigen::MatrixXd& states, int agent,
                               Eigen::MatrixXd& out) const {
  if (agent < 0 || agent >= config_.num_agents)
    throw std::out_of_range("observations: bad agent id");
  if (states.rows() != state_dim_) throw std::invalid_argument("observations: state length mismatch");
  const Eigen::Index n = states.cols();
  const int na = config_.num_agents;
  const int others = config_.task == Task::kPredatorPrey ? 1 : config_.landmark_count();
  const int stride = config_.task == Task::kPredatorPrey ? 4 : 2;
  out.resize(obs_dim_, n);
  const Eigen::Index self = 4 * agent;
  out.topRows(4) = states.middleRows(self, 4);
  Eigen::Index k = 4;
  for (int j = 0; j < na; ++j) {
    if (j == agent) continue;
    out.middleRows(k, 2) = states.middleRows(4 * j, 2) - states.middleRows(self, 2);
    k += 2;
  }
  for (int e = 0; e < others; ++e) {
    out.middleRows(k, 2) = states.middleRows(4 * na + stride * e, 2) - states.middleRows(self, 2);
    k += 2;
  }
}

void ParticleEnv::features(const Eigen::MatrixXd& states, int agent, Eigen::MatrixXd& out) const {
  if (agent < 0 || agent >= config_.num_agents) throw std::out_of_range("features: bad agent id");
  if (states.rows() != state_dim_) throw std::invalid_argument("features: state length mismatch");
  out = states.middleRows(4 * agent, 4);
}

void ParticleEnv::clip_states(Eigen::MatrixXd& states) const {
  const double h = config_.half_extent;
  // Non-finite model outputs are zeroed before clipping.
  states = states.unaryExpr([](double x) { return std::isfinite(x) ? x : 0.0; });
  auto clip_block = [&](Eigen::Index row, bool has_velocity, double vmax) {
    states.middleRows(row, 2) = states.middleRows(row, 2).cwiseMax(-h).cwiseMin(h);
    if (!has_velocity) return;
    for (Eigen::Index c = 0; c < states.cols(); ++c) {
      const double n = states.block<2, 1>(row + 2, c).norm();
      if (n > vmax) states.block<2, 1>(row + 2, c) *= vmax / n;
    }
  };
  for (int i = 0; i < config_.num_agents; ++i) clip_block(4 * i, true, config_.max_speed);
  Eigen::Index k = 4 * config_.num_agents;
  if (config_.task == Task::kPredatorPrey) {
    clip_block(k, true, config_.prey_max_speed);
    k += 4;
  }
  for (int l = 0; l < config_.landmark_count(); ++l, k += 2) clip_block(k, false, 0.0);
}

}  // namespace gatefx::env
