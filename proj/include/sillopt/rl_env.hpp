#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "sillopt/design_space.hpp"
#include "sillopt/evaluator.hpp"
#include "sillopt/objective.hpp"

namespace sill {

enum class Termination { StepLimit, TargetReached };

std::string to_string(Termination t);

struct StepResult {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool done = false;
  std::optional<Termination> termination;
  std::optional<ObjectiveTriple> objectives;
};

/// Contract violation: step() after the episode ended, or before reset().
class EpisodeFinished : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Discrete-action episodic environment.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int observation_size() const = 0;
  virtual int action_count() const = 0;
  virtual Eigen::VectorXd reset(std::uint64_t seed) = 0;
  virtual StepResult step(int action) = 0;
};

inline constexpr int kSurrogateStepLimit = 500;
inline constexpr int kCoupledStepLimit = 20;

struct EnvConfig {
  DesignSpace space;
  TargetSpec target;
  ScalingReference scaling;
  int max_steps = kSurrogateStepLimit;  // T1
  /// Fixed start design; a seeded random grid sample when empty.
  std::optional<ThicknessVector> initial;

  void validate() const;
};

struct EnvState {
  GridIndex index;
  ThicknessVector t;
  int step = 0;
  std::optional<ObjectiveTriple> last;
  bool done = false;
  std::optional<Termination> termination;
};

/// Wall-thickness editing environment: each action moves one wall by one grid
/// step (saturating at the bounds), the step reward is R of the resulting
/// design, and T2 adds the bonus and ends the episode.
class SideSillEnv : public Environment {
 public:
  SideSillEnv(EnvConfig config, std::shared_ptr<Evaluator> evaluator);

  int observation_size() const override { return config_.space.size(); }
  int action_count() const override { return 2 * config_.space.size(); }

  /// Evaluates the start design, so initial_objectives() is available.
  Eigen::VectorXd reset(std::uint64_t seed) override;
  StepResult step(int action) override;

  const EnvState& state() const { return state_; }
  const ObjectiveTriple& initial_objectives() const;
  const ThicknessVector& initial_design() const { return initial_t_; }
  const EnvConfig& config() const { return config_; }
  Evaluator& evaluator() { return *evaluator_; }

  /// Per-parameter affine map of thicknesses onto [0, 1].
  Eigen::VectorXd observe(const ThicknessVector& t) const;

 private:
  EnvConfig config_;
  std::shared_ptr<Evaluator> evaluator_;
  EnvState state_;
  ThicknessVector initial_t_;
  std::optional<ObjectiveTriple> initial_objectives_;
  bool started_ = false;
};

}  // namespace sill
