#include "sillopt/a2c.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "sillopt/io.hpp"
#include "sillopt/surrogate.hpp"

namespace sill {

void A2cConfig::validate() const {
  if (!(gamma > 0 && gamma <= 1)) throw std::invalid_argument("gamma must be in (0, 1]");
  if (rollout < 1) throw std::invalid_argument("rollout length must be >= 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning rate must be > 0");
  if (value_weight < 0 || entropy_weight < 0) throw std::invalid_argument("loss weights must be >= 0");
  if (!(max_grad_norm > 0)) throw std::invalid_argument("max gradient norm must be > 0");
  if (!(reward_scale > 0)) throw std::invalid_argument("reward scale must be > 0");
  if (max_episodes < 1) throw std::invalid_argument("max episodes must be >= 1");
  if (max_total_steps && *max_total_steps < 1) throw std::invalid_argument("max total steps must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("hidden sizes must be positive");
  }
}

ActorCritic::ActorCritic(int observation_size, int action_count, const std::vector<int>& hidden,
                         std::uint64_t seed)
    : action_count_(action_count) {
  if (action_count < 1) throw std::invalid_argument("agent needs at least one action");
  std::vector<int> sizes{observation_size};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(action_count + 1);
  network_ = nn::DenseNetworkd(sizes, nn::Activation::Identity, seed);
  auto& head = network_.layers().back();
  head.weight.topRows(action_count).setZero();
  head.weight.bottomRows(1) *= 0.1;
}

ActorCritic::ActorCritic(nn::DenseNetworkd network, int action_count)
    : network_(std::move(network)), action_count_(action_count) {
  if (action_count < 1 || network_.output_size() != action_count + 1) {
    throw std::invalid_argument("network output must hold the action logits plus one value");
  }
}

Eigen::VectorXd ActorCritic::logits(const Eigen::VectorXd& obs) const {
  return network_.forward(obs).head(action_count_);
}

Eigen::VectorXd ActorCritic::probabilities(const Eigen::VectorXd& obs) const { return nn::softmax(logits(obs)); }

double ActorCritic::value(const Eigen::VectorXd& obs) const { return network_.forward(obs)[action_count_]; }

int ActorCritic::greedy_action(const Eigen::VectorXd& obs) const {
  Eigen::Index best = 0;
  probabilities(obs).maxCoeff(&best);
  return static_cast<int>(best);
}

namespace {

int sample(const Eigen::VectorXd& p, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

}  // namespace

A2cResult train_a2c(Environment& env, const A2cConfig& config) {
  config.validate();
  const int n_actions = env.action_count();
  std::mt19937_64 rng(config.seed);

  A2cResult result;
  result.agent = ActorCritic(env.observation_size(), n_actions, config.hidden, rng());
  ActorCritic& agent = result.agent;
  nn::AdamState<double> adam(agent.network(), nn::AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});

  Eigen::VectorXd obs = env.reset(rng());
  double episode_return = 0.0;
  int episode_length = 0;
  const auto budget_left = [&] { return !config.max_total_steps || result.total_steps < *config.max_total_steps; };

  std::vector<Eigen::VectorXd> states;
  std::vector<int> actions;
  std::vector<double> rewards;
  while (static_cast<int>(result.episode_returns.size()) < config.max_episodes && budget_left()) {
    states.clear();
    actions.clear();
    rewards.clear();
    bool ended = false;
    bool terminal = false;
    for (int k = 0; k < config.rollout && budget_left(); ++k) {
      const int a = sample(agent.probabilities(obs), rng);
      const StepResult sr = env.step(a);
      states.push_back(obs);
      actions.push_back(a);
      rewards.push_back(sr.reward * config.reward_scale);
      episode_return += sr.reward;
      ++episode_length;
      ++result.total_steps;
      obs = sr.observation;
      if (sr.done) {
        ended = true;
        // Hitting the step cap truncates the episode; the tail is still bootstrapped.
        terminal = sr.termination == Termination::TargetReached;
        break;
      }
    }

    const auto n = static_cast<Eigen::Index>(states.size());
    double ret = terminal ? 0.0 : agent.value(obs);
    Eigen::VectorXd returns(n);
    for (Eigen::Index t = n - 1; t >= 0; --t) {
      ret = rewards[static_cast<std::size_t>(t)] + config.gamma * ret;
      returns[t] = ret;
    }

    Eigen::MatrixXd x(env.observation_size(), n);
    for (Eigen::Index t = 0; t < n; ++t) x.col(t) = states[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd out = agent.network().forward_batch(x);
    Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(out.rows(), n);
    double loss = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const Eigen::VectorXd p = nn::softmax(out.col(t).head(n_actions));
      const double v = out(n_actions, t);
      const double adv = returns[t] - v;
      const int a = actions[static_cast<std::size_t>(t)];
      const Eigen::ArrayXd logp = p.array().max(1e-300).log();
      const double entropy = -(p.array() * logp).sum();
      loss += -logp[a] * adv + config.value_weight * adv * adv - config.entropy_weight * entropy;

      Eigen::VectorXd g = p * adv;  // d(-log p_a * A)/dz = -A (e_a - p)
      g[a] -= adv;
      g += config.entropy_weight * (p.array() * (logp + entropy)).matrix();
      upstream.col(t).head(n_actions) = g / static_cast<double>(n);
      upstream(n_actions, t) = config.value_weight * 2.0 * (v - returns[t]) / static_cast<double>(n);
    }
    loss /= static_cast<double>(n);
    const int episode = static_cast<int>(result.episode_returns.size());
    if (!std::isfinite(loss)) {
      throw TrainingDiverged(episode, "actor-critic loss became non-finite in episode " + std::to_string(episode));
    }

    auto grads = agent.network().backward(x, upstream);
    nn::clip_gradient_norm<double>(grads, config.max_grad_norm);
    try {
      nn::adam_step(agent.network(), grads, adam);
    } catch (const std::domain_error&) {
      throw TrainingDiverged(episode, "non-finite actor-critic gradient in episode " + std::to_string(episode));
    }

    if (ended) {
      result.episode_returns.push_back(episode_return);
      result.episode_lengths.push_back(episode_length);
      episode_return = 0.0;
      episode_length = 0;
      if (static_cast<int>(result.episode_returns.size()) < config.max_episodes && budget_left()) {
        obs = env.reset(rng());
      }
    }
  }
  return result;
}

std::vector<EpisodeTrace> evaluate_greedy(SideSillEnv& env, const ActorCritic& agent, std::uint64_t seed,
                                          int episodes) {
  if (agent.observation_size() != env.observation_size() || agent.action_count() != env.action_count()) {
    throw std::invalid_argument("agent does not match the environment's observation or action size");
  }
  std::vector<EpisodeTrace> traces;
  for (int e = 0; e < episodes; ++e) {
    Eigen::VectorXd obs = env.reset(seed + static_cast<std::uint64_t>(e));
    EpisodeTrace trace;
    trace.initial_t = env.initial_design();
    trace.initial_objectives = env.initial_objectives();
    for (;;) {
      const int a = agent.greedy_action(obs);
      const StepResult sr = env.step(a);
      trace.steps.push_back({env.state().t, a, sr.reward, *sr.objectives});
      trace.episode_return += sr.reward;
      obs = sr.observation;
      if (sr.done) {
        trace.termination = sr.termination;
        break;
      }
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

std::string episode_trace_csv(const EpisodeTrace& trace, const DesignSpace& space) {
  std::ostringstream os;
  os << "step,action,reward";
  for (const auto& p : space.params()) os << ',' << p.name;
  os << ",ea_ss,ea_f,mass,total_energy\n";
  const auto row = [&](int step, const std::string& action, const std::string& reward, const ThicknessVector& t,
                       const ObjectiveTriple& o) {
    os << step << ',' << action << ',' << reward;
    for (Eigen::Index i = 0; i < t.size(); ++i) os << ',' << io::format_double(t[i]);
    os << ',' << io::format_double(o.ea_ss) << ',' << io::format_double(o.ea_f) << ',' << io::format_double(o.mass)
       << ',' << io::format_double(o.total_energy()) << '\n';
  };
  row(0, "", "", trace.initial_t, trace.initial_objectives);
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    row(static_cast<int>(i + 1), std::to_string(s.action), io::format_double(s.reward), s.t, s.objectives);
  }
  return os.str();
}

std::string return_trace_csv(const A2cResult& result) {
  std::ostringstream os;
  os << "episode,return,length\n";
  for (std::size_t i = 0; i < result.episode_returns.size(); ++i) {
    os << i << ',' << io::format_double(result.episode_returns[i]) << ',' << result.episode_lengths[i] << '\n';
  }
  return os.str();
}

nlohmann::json to_json_value(const ActorCritic& agent) {
  return {{"format", "sillopt.a2c_agent"},
          {"version", kAgentFormatVersion},
          {"action_count", agent.action_count()},
          {"network", nn::to_json_value(agent.network())}};
}

ActorCritic agent_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "sillopt.a2c_agent") throw std::runtime_error("not an actor-critic agent document");
  if (j.value("version", 0) != kAgentFormatVersion) {
    throw std::runtime_error("unsupported agent format version " + std::to_string(j.value("version", 0)));
  }
  return ActorCritic(nn::network_from_json<double>(j.at("network")), j.at("action_count").get<int>());
}

void save_agent(const ActorCritic& agent, const std::filesystem::path& path) {
  io::write_json_atomic(path, to_json_value(agent));
}

ActorCritic load_agent(const std::filesystem::path& path) { return agent_from_json(io::read_json(path)); }

void to_json(nlohmann::json& j, const A2cConfig& c) {
  j = nlohmann::json{{"hidden", c.hidden},
                     {"gamma", c.gamma},
                     {"rollout", c.rollout},
                     {"learning_rate", c.learning_rate},
                     {"value_weight", c.value_weight},
                     {"entropy_weight", c.entropy_weight},
                     {"max_grad_norm", c.max_grad_norm},
                     {"reward_scale", c.reward_scale},
                     {"max_episodes", c.max_episodes},
                     {"seed", c.seed}};
  j["max_total_steps"] = c.max_total_steps ? nlohmann::json(*c.max_total_steps) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, A2cConfig& c) {
  c.hidden = j.value("hidden", c.hidden);
  c.gamma = j.value("gamma", c.gamma);
  c.rollout = j.value("rollout", c.rollout);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.value_weight = j.value("value_weight", c.value_weight);
  c.entropy_weight = j.value("entropy_weight", c.entropy_weight);
  c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
  c.reward_scale = j.value("reward_scale", c.reward_scale);
  c.max_episodes = j.value("max_episodes", c.max_episodes);
  if (j.contains("max_total_steps") && !j.at("max_total_steps").is_null()) {
    c.max_total_steps = j.at("max_total_steps").get<long>();
  }
  c.seed = j.value("seed", c.seed);
  c.validate();
}

}  // namespace sill
