// Deterministic 2-D particle world: predator-prey pursuit and cooperative
// navigation with a shared team reward.
//
// Dynamics are a damped double integrator:
//   v' = clamp_speed(v * (1 - damping) + a * accel_gain * dt)
//   p' = clamp_box(p + v' * dt)
// Step is a pure function of (state, action, config); the only randomness is
// the seeded placement at reset.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gatefx/env/environment.hpp"

namespace gatefx::env {

enum class Task { kPredatorPrey, kCooperativeNavigation };

std::string to_string(Task t);
Task parse_task(const std::string& s);

struct EnvConfig {
  Task task = Task::kPredatorPrey;
  int num_agents = 5;
  int episode_length = 25;
  double dt = 0.1;
  double damping = 0.25;
  double accel_gain = 5.0;
  double max_speed = 1.0;
  double prey_max_speed = 1.3;
  double half_extent = 1.0;
  double collision_radius = 0.15;
  /// Distance from a wall inside which the prey steers away from it.
  double prey_wall_margin = 0.15;
  /// Landmarks for cooperative navigation; <= 0 means one per agent.
  int num_landmarks = 0;
  double predator_reward = 10.0;
  double agent_collision_penalty = 1.0;
  std::uint64_t rng_seed = 0;

  int landmark_count() const;
  void validate() const;
};

enum class Role { kAgent, kPrey, kLandmark };

struct Entity {
  Role role = Role::kAgent;
  int id = 0;  // canonical order within its role
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();

  bool operator==(const Entity& o) const {
    return role == o.role && id == o.id && position == o.position && velocity == o.velocity;
  }
};

struct WorldState {
  std::vector<Entity> agents;
  std::vector<Entity> prey;       // at most one, predator-prey only
  std::vector<Entity> landmarks;  // navigation only; storage order is free
  int step_index = 0;

  bool operator==(const WorldState&) const = default;
};

/// Per-agent accelerations, one row per learning agent, components in [-1, 1].
using JointAction = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

struct StepResult {
  WorldState next_state;
  double team_reward = 0.0;
  std::vector<Eigen::VectorXd> observations;
  bool done = false;
};

WorldState reset(const EnvConfig& config, std::uint64_t episode_seed);
StepResult step(const WorldState& state, const JointAction& action, const EnvConfig& config);

Eigen::VectorXd centralized_state(const WorldState& state);
Eigen::VectorXd local_observation(const WorldState& state, int agent);

int centralized_state_dim(const EnvConfig& config);
int observation_dim(const EnvConfig& config);

/// Inverse of `centralized_state` for states laid out under `config`.
WorldState from_centralized(const Eigen::VectorXd& s, const EnvConfig& config, int step_index);

/// Reward range of one step: {min, max}.
std::pair<double, double> reward_bounds(const EnvConfig& config);

/// Scripted flee acceleration of the prey (unit length).
Eigen::Vector2d prey_flee_direction(const WorldState& state, const EnvConfig& config);

class ParticleEnv final : public Environment {
 public:
  explicit ParticleEnv(EnvConfig config);

  const EnvConfig& config() const { return config_; }

  std::string name() const override;
  int num_agents() const override { return config_.num_agents; }
  int action_dim() const override { return 2; }
  int state_dim() const override { return state_dim_; }
  int obs_dim() const override { return obs_dim_; }
  int feature_dim() const override { return 4; }
  int episode_length() const override { return config_.episode_length; }

  Eigen::VectorXd reset(std::uint64_t episode_seed) const override;
  StepOutcome step(const Eigen::VectorXd& state, const Eigen::VectorXd& joint_action,
                   int step_index) const override;
  void observations(const Eigen::MatrixXd& states, int agent, Eigen::MatrixXd& out) const override;
  void features(const Eigen::MatrixXd& states, int agent, Eigen::MatrixXd& out) const override;
  void clip_states(Eigen::MatrixXd& states) const override;

 private:
  EnvConfig config_;
  int state_dim_;
  int obs_dim_;
};

}  // namespace gatefx::env
