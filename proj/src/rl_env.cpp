#include "sillopt/rl_env.hpp"

#include <random>

namespace sill {

std::string to_string(Termination t) { return t == Termination::StepLimit ? "T1" : "T2"; }

void EnvConfig::validate() const {
  if (space.size() == 0) throw std::invalid_argument("environment needs a non-empty design space");
  if (max_steps < 1) throw std::invalid_argument("T1 must be >= 1");
  scaling.validate();
  if (initial) {
    space.check_arity(initial->size());
    if (!sill::validate(space, *initial)) throw std::invalid_argument("initial design is outside the design space");
  }
}

SideSillEnv::SideSillEnv(EnvConfig config, std::shared_ptr<Evaluator> evaluator)
    : config_(std::move(config)), evaluator_(std::move(evaluator)) {
  config_.validate();
  if (!evaluator_) throw std::invalid_argument("environment needs an evaluator");
}

Eigen::VectorXd SideSillEnv::observe(const ThicknessVector& t) const {
  const Eigen::VectorXd lo = config_.space.lower();
  const Eigen::VectorXd hi = config_.space.upper();
  return ((t - lo).array() / (hi - lo).array()).matrix();
}

Eigen::VectorXd SideSillEnv::reset(std::uint64_t seed) {
  state_ = EnvState{};
  if (config_.initial) {
    state_.index = config_.space.encode(*config_.initial);
  } else {
    std::mt19937_64 rng(seed);
    state_.index = random_grid_index(config_.space, rng);
  }
  state_.t = config_.space.decode(state_.index);
  initial_t_ = state_.t;
  initial_objectives_.reset();
  started_ = false;
  initial_objectives_ = evaluator_->evaluate(state_.t);
  state_.last = initial_objectives_;
  started_ = true;
  return observe(state_.t);
}

const ObjectiveTriple& SideSillEnv::initial_objectives() const {
  if (!initial_objectives_) throw std::logic_error("environment has not been reset");
  return *initial_objectives_;
}

StepResult SideSillEnv::step(int action) {
  if (!started_) throw EpisodeFinished("step() called before reset()");
  if (state_.done) throw EpisodeFinished("step() called after the episode ended");
  if (action < 0 || action >= action_count()) {
    throw std::out_of_range("action " + std::to_string(action) + " outside [0, " + std::to_string(action_count()) + ")");
  }
  const auto a = DesignAction::from_index(action, config_.space.size());
  state_.index = apply_action(config_.space, state_.index, a);
  state_.t = config_.space.decode(state_.index);
  ++state_.step;

  const ObjectiveTriple obj = evaluator_->evaluate(state_.t);
  state_.last = obj;

  StepResult out;
  out.reward = reward(config_.scaling, config_.target, obj);
  if (t2_satisfied(config_.scaling, config_.target, obj)) {
    out.reward += config_.target.t2_bonus;
    state_.termination = Termination::TargetReached;
  } else if (state_.step >= config_.max_steps) {
    state_.termination = Termination::StepLimit;
  }
  state_.done = state_.termination.has_value();
  out.done = state_.done;
  out.termination = state_.termination;
  out.objectives = obj;
  out.observation = observe(state_.t);
  return out;
}

}  // namespace sill
