#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sillopt/nn.hpp"
#include "sillopt/rl_env.hpp"

namespace sill {

struct A2cConfig {
  std::vector<int> hidden{64, 64};
  double gamma = 0.99;
  int rollout = 5;
  double learning_rate = 7e-4;
  double value_weight = 0.5;
  double entropy_weight = 0.0;
  double max_grad_norm = 0.5;
  /// Rewards are multiplied by this before entering the returns.
  double reward_scale = 1e-3;
  int max_episodes = 200;
  std::optional<long> max_total_steps;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Shared trunk with 2N policy logits and one state value in a single head.
class ActorCritic {
 public:
  ActorCritic() = default;
  /// Policy logits start at exactly zero, so the fresh policy is uniform.
  ActorCritic(int observation_size, int action_count, const std::vector<int>& hidden, std::uint64_t seed);
  explicit ActorCritic(nn::DenseNetworkd network, int action_count);

  int observation_size() const { return network_.input_size(); }
  int action_count() const { return action_count_; }

  Eigen::VectorXd logits(const Eigen::VectorXd& obs) const;
  Eigen::VectorXd probabilities(const Eigen::VectorXd& obs) const;
  double value(const Eigen::VectorXd& obs) const;
  /// argmax probability; ties go to the lowest index.
  int greedy_action(const Eigen::VectorXd& obs) const;

  const nn::DenseNetworkd& network() const { return network_; }
  nn::DenseNetworkd& network() { return network_; }

 private:
  nn::DenseNetworkd network_;
  int action_count_ = 0;
};

struct A2cResult {
  ActorCritic agent;
  std::vector<double> episode_returns;  // undiscounted, one per completed episode
  std::vector<int> episode_lengths;
  long total_steps = 0;
};

/// n-step advantage actor-critic with Adam. Episode e resets the environment
/// with a seed drawn from the training generator.
A2cResult train_a2c(Environment& env, const A2cConfig& config);

struct StepRecord {
  ThicknessVector t;  // design after the action
  int action = 0;
  double reward = 0.0;
  ObjectiveTriple objectives;
};

struct EpisodeTrace {
  ThicknessVector initial_t;
  ObjectiveTriple initial_objectives;
  std::vector<StepRecord> steps;
  double episode_return = 0.0;
  std::optional<Termination> termination;

  const ThicknessVector& final_t() const { return steps.empty() ? initial_t : steps.back().t; }
  const ObjectiveTriple& final_objectives() const {
    return steps.empty() ? initial_objectives : steps.back().objectives;
  }
};

/// Greedy episodes, episode i reset with seed + i.
std::vector<EpisodeTrace> evaluate_greedy(SideSillEnv& env, const ActorCritic& agent, std::uint64_t seed,
                                          int episodes = 1);

/// step, action, reward, t..., ea_ss, ea_f, mass, total_energy; row 0 is the start design.
std::string episode_trace_csv(const EpisodeTrace& trace, const DesignSpace& space);
std::string return_trace_csv(const A2cResult& result);

inline constexpr int kAgentFormatVersion = 1;

nlohmann::json to_json_value(const ActorCritic& agent);
ActorCritic agent_from_json(const nlohmann::json& j);
void save_agent(const ActorCritic& agent, const std::filesystem::path& path);
ActorCritic load_agent(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const A2cConfig& c);
void from_json(const nlohmann::json& j, A2cConfig& c);

}  // namespace sill
