#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sillopt/a2c.hpp"
#include "sillopt/io.hpp"

using namespace sill;

namespace {

ScalingReference ref() { return {{600, 1000}, {300, 900}, {10, 20}}; }

EnvConfig full_config(int max_steps = kSurrogateStepLimit) {
  EnvConfig c;
  c.space = DesignSpace::side_sill();
  c.scaling = ref();
  c.target.t2_threshold = 0.0;
  c.max_steps = max_steps;
  return c;
}

ThicknessVector grid_mid(const DesignSpace& s) { return snap_to_grid(s, s.midpoint()); }

std::shared_ptr<Evaluator> oracle() { return std::make_shared<OracleEvaluator>(default_oracle_config()); }

/// Single-state, two-action problem: action 0 pays +1, the other -1.
class Bandit : public Environment {
 public:
  int observation_size() const override { return 1; }
  int action_count() const override { return 2; }
  Eigen::VectorXd reset(std::uint64_t) override { return Eigen::VectorXd::Ones(1); }
  StepResult step(int action) override {
    StepResult r;
    r.observation = Eigen::VectorXd::Ones(1);
    r.reward = action == 0 ? 1.0 : -1.0;
    r.done = true;
    r.termination = Termination::TargetReached;
    return r;
  }
};

struct Reduced {
  DesignSpace space{{{"t1", 1.6, 2.8, 0.3}, {"t5", 1.5, 3.5, 0.5}, {"t6", 2.0, 4.0, 0.5}}};
  OracleConfig oracle = restrict_oracle(default_oracle_config(), {0, 4, 5}, DesignSpace::side_sill().midpoint());
  ScalingReference scaling;
  Reduced() {
    std::vector<ObjectiveTriple> objs;
    for (const auto& t : enumerate_grid(space)) objs.push_back(evaluate(oracle, t));
    scaling = fit_scaling_reference(objs);
  }
  EnvConfig config(int max_steps) const {
    EnvConfig c;
    c.space = space;
    c.scaling = scaling;
    c.target.t2_threshold = 0.0;  // never fires; episodes run to T1
    c.max_steps = max_steps;
    return c;
  }
};

}  // namespace

TEST_SUITE("rl") {
  TEST_CASE("observation map") {
    SideSillEnv env(full_config(), oracle());
    const auto& space = env.config().space;
    CHECK(env.observe(space.lower()).isZero());
    CHECK(env.observe(space.upper()).isOnes());
    const Eigen::VectorXd obs = env.reset(4);
    CHECK((obs.array() >= 0).all());
    CHECK((obs.array() <= 1).all());
    CHECK(env.observation_size() == 7);
    CHECK(env.action_count() == 14);
  }

  TEST_CASE("reset is seeded and honours a fixed start") {
    SideSillEnv env(full_config(), oracle());
    const Eigen::VectorXd a = env.reset(7);
    const Eigen::VectorXd b = env.reset(7);
    CHECK(a == b);
    auto cfg = full_config();
    cfg.initial = grid_mid(cfg.space);
    SideSillEnv fixed(cfg, oracle());
    fixed.reset(1);
    CHECK(fixed.initial_design() == grid_mid(cfg.space));
    CHECK(fixed.initial_objectives() == evaluate(default_oracle_config(), grid_mid(cfg.space)));
  }

  TEST_CASE("reward of the post-action design") {
    auto cfg = full_config();
    cfg.initial = grid_mid(cfg.space);
    SideSillEnv env(cfg, oracle());
    env.reset(0);
    const auto r = env.step(DesignAction{2, Direction::Increment}.index());
    REQUIRE(r.objectives.has_value());
    const auto expected = evaluate(default_oracle_config(), env.state().t);
    CHECK(*r.objectives == expected);
    CHECK(env.state().t[2] == doctest::Approx(grid_mid(cfg.space)[2] + 0.2));
    CHECK(r.reward == reward(cfg.scaling, cfg.target, expected));
    CHECK_FALSE(r.done);
  }

  TEST_CASE("T2 fires on the first step with the bonus") {
    auto cfg = full_config();
    cfg.initial = grid_mid(cfg.space);
    // Ideal energies equal to the design reached by the first action.
    const ThicknessVector next = apply_action(cfg.space, grid_mid(cfg.space), DesignAction{0, Direction::Increment});
    const auto o = evaluate(default_oracle_config(), next);
    cfg.target.ideal_ea_ss = o.ea_ss;
    cfg.target.ideal_ea_f = o.ea_f;
    cfg.target.t2_threshold = 5.0;
    SideSillEnv env(cfg, oracle());
    env.reset(0);
    const auto r = env.step(0);
    CHECK(r.done);
    CHECK(r.termination == Termination::TargetReached);
    CHECK(r.reward == doctest::Approx(reward(cfg.scaling, cfg.target, o) + 10.0));
    CHECK_THROWS_AS(env.step(0), EpisodeFinished);
  }

  TEST_CASE("saturation at a bound") {
    auto cfg = full_config();
    cfg.initial = cfg.space.upper();
    SideSillEnv env(cfg, oracle());
    env.reset(0);
    const auto first = env.step(0);
    CHECK(env.state().t == cfg.space.upper());
    const auto second = env.step(0);
    CHECK(second.reward == first.reward);
    CHECK(second.observation == first.observation);
  }

  TEST_CASE("T1 caps the episode and done is sticky") {
    SideSillEnv env(full_config(3), oracle());
    CHECK_THROWS_AS(env.step(0), EpisodeFinished);
    env.reset(2);
    CHECK_FALSE(env.step(1).done);
    CHECK_FALSE(env.step(1).done);
    const auto last = env.step(1);
    CHECK(last.done);
    CHECK(last.termination == Termination::StepLimit);
    CHECK_THROWS_AS(env.step(1), EpisodeFinished);
    CHECK_THROWS_AS(env.step(1), EpisodeFinished);
    env.reset(2);
    CHECK_THROWS_AS(env.step(14), std::out_of_range);
    CHECK_THROWS_AS(env.step(-1), std::out_of_range);
  }

  TEST_CASE("fresh agent is uniform") {
    const ActorCritic agent(7, 14, {64, 64}, 3);
    const Eigen::VectorXd p = agent.probabilities(Eigen::VectorXd::Constant(7, 0.3));
    for (int a = 0; a < 14; ++a) CHECK(p[a] == doctest::Approx(1.0 / 14));
    CHECK(agent.greedy_action(Eigen::VectorXd::Zero(7)) == 0);
  }

  TEST_CASE("bandit: the paying action dominates") {
    Bandit env;
    A2cConfig cfg;
    cfg.max_episodes = 2000;
    cfg.seed = 1;
    const auto res = train_a2c(env, cfg);
    CHECK(res.total_steps == 2000);
    CHECK(res.episode_returns.size() == 2000);
    CHECK(res.agent.probabilities(Eigen::VectorXd::Ones(1))[0] > 0.9);
  }

  TEST_CASE("training respects the budgets and is reproducible") {
    Reduced red;
    SideSillEnv env(red.config(10), std::make_shared<OracleEvaluator>(red.oracle));
    A2cConfig cfg;
    cfg.max_episodes = 6;
    cfg.seed = 4;
    const auto a = train_a2c(env, cfg);
    CHECK(a.episode_returns.size() == 6);
    CHECK(a.total_steps == 60);
    for (int len : a.episode_lengths) CHECK(len == 10);
    const auto b = train_a2c(env, cfg);
    CHECK(a.episode_returns == b.episode_returns);

    cfg.max_total_steps = 23;
    const auto c = train_a2c(env, cfg);
    CHECK(c.total_steps == 23);
    CHECK(c.episode_returns.size() == 2);
  }

  TEST_CASE("trained agent improves on a reduced space") {
    Reduced red;
    SideSillEnv env(red.config(15), std::make_shared<OracleEvaluator>(red.oracle));
    A2cConfig cfg;
    cfg.max_episodes = 200;
    cfg.seed = 2;
    const auto res = train_a2c(env, cfg);
    const auto traces = evaluate_greedy(env, res.agent, 100, 5);
    int improved = 0;
    for (const auto& tr : traces) {
      const double start = reward(red.scaling, TargetSpec{}, tr.initial_objectives);
      const double end = reward(red.scaling, TargetSpec{}, tr.final_objectives());
      improved += end >= start;
    }
    CHECK(improved >= 4);
  }

  TEST_CASE("agent persistence") {
    Reduced red;
    SideSillEnv env(red.config(8), std::make_shared<OracleEvaluator>(red.oracle));
    A2cConfig cfg;
    cfg.max_episodes = 5;
    const auto res = train_a2c(env, cfg);
    const auto dir = std::filesystem::temp_directory_path() / "sillopt_test_rl";
    std::filesystem::create_directories(dir);
    const auto path = dir / "agent.json";
    save_agent(res.agent, path);
    const auto back = load_agent(path);
    const auto t1 = evaluate_greedy(env, res.agent, 9, 2);
    const auto t2 = evaluate_greedy(env, back, 9, 2);
    REQUIRE(t1.size() == t2.size());
    for (std::size_t e = 0; e < t1.size(); ++e) {
      CHECK(episode_trace_csv(t1[e], red.space) == episode_trace_csv(t2[e], red.space));
    }

    std::string text = io::read_file(path);
    text.resize(text.size() / 2);
    io::write_file_atomic(path, text);
    CHECK_THROWS(load_agent(path));
  }

  TEST_CASE("episode trace csv") {
    auto cfg = full_config(4);
    cfg.initial = grid_mid(cfg.space);
    SideSillEnv env(cfg, oracle());
    const ActorCritic agent(7, 14, {8}, 1);
    const auto traces = evaluate_greedy(env, agent, 0);
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].steps.size() == 4);
    const std::string csv = episode_trace_csv(traces[0], cfg.space);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  }
}
