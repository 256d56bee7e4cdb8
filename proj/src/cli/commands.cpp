#include "cli/commands.hpp"

#include <csignal>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cli/results.hpp"
#include "sillopt/a2c.hpp"
#include "sillopt/dataset.hpp"
#include "sillopt/evaluator.hpp"
#include "sillopt/ga.hpp"
#include "sillopt/io.hpp"
#include "sillopt/netinv.hpp"
#include "sillopt/protocol.hpp"
#include "sillopt/rl_env.hpp"
#include "sillopt/surrogate.hpp"
#include "sillopt/svg.hpp"

namespace sill::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string runtime(Clock::time_point t0) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << seconds_since(t0) << " s";
  return os.str();
}

fs::path sibling(const fs::path& p, const std::string& ext) {
  fs::path out = p;
  return out.replace_extension(ext);
}

OracleConfig load_oracle(const std::string& path) {
  return path.empty() ? default_oracle_config() : load_oracle_config(path);
}

SurrogateModel load_model(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("model file not found: " + path);
  auto m = load_surrogate(path);
  if (!m.scaling) throw std::runtime_error(path + ": model carries no scaling reference");
  return m;
}

const CLI::Validator kTargetValidator(
    [](std::string& s) -> std::string {
      try {
        TargetSpec::parse(s);
        return {};
      } catch (const std::exception& e) {
        return e.what();
      }
    },
    "IDEAL_EA_SS,IDEAL_EA_F,MASS", "target");

TargetSpec make_target(const std::string& text, double t2) {
  TargetSpec t = TargetSpec::parse(text);
  t.t2_threshold = t2;
  return t;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOptions {
  std::size_t n = 310;
  std::uint64_t seed = 0;
  std::string space;
  std::string oracle;
  std::string out;
  std::string correlation;
};

int cmd_gen_data(const GenDataOptions& o) {
  const auto t0 = Clock::now();
  const DesignSpace space = o.space.empty() ? DesignSpace::side_sill() : load_design_space(o.space);
  const OracleConfig oracle = load_oracle(o.oracle);
  const Database db = generate(space, oracle, o.n, o.seed);
  save_csv(db, o.out);
  if (!o.correlation.empty()) io::write_file_atomic(o.correlation, correlation_matrix(db).to_csv());
  std::cout << "wrote " << db.size() << " records to " << o.out << " (" << runtime(t0) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train-surrogate

struct TrainOptions {
  std::string data;
  int trials = 10;
  int executions = 2;
  int epochs = 200;
  int batch = 32;
  int patience = 20;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  std::string out;
  std::string report;
};

int cmd_train_surrogate(const TrainOptions& o) {
  const auto t0 = Clock::now();
  if (!fs::exists(o.data)) throw std::runtime_error("data file not found: " + o.data);
  const Database db = load_csv(o.data);
  const auto [train, test] = split(db, o.train_fraction, o.seed);

  HyperparameterSpace hs;
  hs.max_trials = o.trials;
  hs.executions_per_trial = o.executions;
  TrainingOptions topt{o.epochs, o.batch, o.patience};
  SurrogateModel model = tune_surrogate(train, hs, topt, o.seed);
  model.scaling = fit_scaling_reference(db);
  save_surrogate(model, o.out);

  const SurrogateEvaluation ev = evaluate_surrogate(model, test);
  const fs::path report = o.report.empty() ? sibling(o.out, ".report.json") : fs::path(o.report);

  ojson r;
  r["train_size"] = train.size();
  r["test_size"] = test.size();
  r["hyperparameters"] = json(model.training.hyperparameters);
  r["search_space"] = {{"hidden", {hs.hidden_min, hs.hidden_max}},
                       {"learning_rate", {hs.learning_rate_min, hs.learning_rate_max}},
                       {"trials", hs.max_trials},
                       {"executions_per_trial", hs.executions_per_trial}};
  r["tuning"] = model.tuning ? to_json_value(*model.tuning) : json(nullptr);
  r["test"] = {{"mae_standardized", ev.mae},
               {"mse_standardized", ev.mse},
               {"within_5_percent", ev.fraction_within(5.0)},
               {"excluded_residuals", ev.excluded}};
  io::write_json_atomic(report, r);

  std::ostringstream csv;
  csv << "record,output,residual_percent\n";
  const char* names[] = {"ea_ss", "ea_f", "mass"};
  for (std::size_t i = 0; i < ev.residuals.size(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (ev.residuals[i][k]) csv << i << ',' << names[k] << ',' << io::format_double(*ev.residuals[i][k]) << '\n';
    }
  }
  io::write_file_atomic(sibling(report, ".residuals.csv"), csv.str());
  io::write_file_atomic(sibling(report, ".residuals.svg"),
                        svg::histogram(ev.defined_residuals(), 20, "Test residuals", "residual (%)"));

  std::cout << "test MAE (standardized) " << ev.mae << ", within +/-5%: " << ev.fraction_within(5.0) * 100
            << "% (" << runtime(t0) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// agents

void save_agent_document(const ActorCritic& agent, const DesignSpace& space, const ScalingReference& scaling,
                         const A2cConfig& config, const fs::path& path) {
  json j = to_json_value(agent);
  j["space"] = space;
  j["scaling"] = scaling;
  j["training"] = config;
  io::write_json_atomic(path, j);
}

struct AgentDocument {
  ActorCritic agent;
  DesignSpace space;
  ScalingReference scaling;
};

AgentDocument load_agent_document(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("agent file not found: " + path);
  const json j = io::read_json(path);
  try {
    return {agent_from_json(j), j.at("space").get<DesignSpace>(), j.at("scaling").get<ScalingReference>()};
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

struct A2cFlags {
  int episodes = 200;
  int max_steps = kSurrogateStepLimit;
  double lr = 7e-4;
  double gamma = 0.99;
  int rollout = 5;
  double entropy = 0.0;
  double value_weight = 0.5;
  double max_grad_norm = 0.5;
  double reward_scale = 1e-3;
  std::vector<int> hidden{64, 64};

  A2cConfig config(std::uint64_t seed) const {
    A2cConfig c;
    c.hidden = hidden;
    c.gamma = gamma;
    c.rollout = rollout;
    c.learning_rate = lr;
    c.value_weight = value_weight;
    c.entropy_weight = entropy;
    c.max_grad_norm = max_grad_norm;
    c.reward_scale = reward_scale;
    c.max_episodes = episodes;
    c.seed = seed;
    return c;
  }

  void add_to(CLI::App* sub) {
    sub->add_option("--episodes", episodes, "Training episodes")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--gamma", gamma, "Discount factor")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    sub->add_option("--rollout", rollout, "Steps per update")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--entropy", entropy, "Entropy bonus weight")->check(CLI::NonNegativeNumber)->capture_default_str();
    sub->add_option("--value-weight", value_weight, "Value loss weight")->check(CLI::NonNegativeNumber)->capture_default_str();
    sub->add_option("--max-grad-norm", max_grad_norm, "Gradient clipping norm")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--reward-scale", reward_scale, "Reward multiplier inside the returns")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--hidden", hidden, "Hidden layer widths")->check(CLI::PositiveNumber);
  }
};

// ---------------------------------------------------------------------------
// optimize

struct OptimizeOptions {
  std::string method;
  std::string model;
  std::string target = "800,600,13";
  double t2 = 5.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string trace;
  std::string oracle;
  std::string label;
  // ga
  std::string backend = "surrogate";
  GaConfig ga;
  // netinv
  InversionConfig ni;
  std::string mass_mode = "target";
  // rl
  std::string agent;
  A2cFlags a2c;
};

int cmd_optimize(OptimizeOptions o) {
  const auto t0 = Clock::now();
  auto model = std::make_shared<const SurrogateModel>(load_model(o.model));
  const OracleConfig oracle = load_oracle(o.oracle);
  const TargetSpec target = make_target(o.target, o.t2);
  const ObjectiveContext ctx{*model->scaling, target};
  const fs::path trace = o.trace.empty() ? sibling(o.out, ".trace.csv") : fs::path(o.trace);

  MethodResult result;
  result.method = o.method;
  result.space = model->space;
  result.target = target;
  result.scaling = *model->scaling;
  result.seed = o.seed;

  if (o.method == "ga") {
    std::shared_ptr<Evaluator> backend;
    if (o.backend == "oracle") backend = std::make_shared<OracleEvaluator>(oracle);
    else backend = std::make_shared<SurrogateEvaluator>(model);
    CachingEvaluator eval(backend);
    o.ga.seed = o.seed;
    const GaResult r = run_ga(o.ga, model->space, eval, ctx);
    io::write_file_atomic(trace, ga_trace_csv(r));
    result.label = "GA";
    result.design = r.best_design;
    result.predicted = r.best_objectives;
    result.details["backend"] = o.backend;
    result.details["config"] = json(o.ga);
    result.details["best_fitness"] = r.best_fitness;
    result.details["evaluations"] = r.evaluations;
  } else if (o.method == "netinv") {
    o.ni.seed = o.seed;
    o.ni.target = build_target(target, model->standardizer);
    o.ni.mass_mode = o.mass_mode == "penalty" ? MassMode::Penalty : MassMode::Target;
    const InversionResult r = multistart_invert(model->network, model->space, o.ni);
    io::write_file_atomic(trace, loss_trace_csv(r));
    result.label = "Network inversion";
    result.design = r.snapped;
    result.predicted = model->predict(r.snapped);
    result.details["config"] = json(o.ni);
    result.details["continuous"] = to_std(r.best);
    result.details["best_loss"] = r.best_loss;
    result.details["snapped_loss"] = r.snapped_loss;
    result.details["restart"] = r.restart;
    result.details["iterations"] = r.iterations;
  } else {
    auto eval = std::make_shared<CachingEvaluator>(std::make_shared<SurrogateEvaluator>(model));
    EnvConfig ec{model->space, target, *model->scaling, o.a2c.max_steps, std::nullopt};
    SideSillEnv env(ec, eval);
    ActorCritic agent;
    if (!o.agent.empty()) {
      auto doc = load_agent_document(o.agent);
      if (!(doc.space == model->space)) throw std::runtime_error("agent and model use different design spaces");
      agent = std::move(doc.agent);
    } else {
      agent = train_a2c(env, o.a2c.config(o.seed)).agent;
    }
    const EpisodeTrace ep = evaluate_greedy(env, agent, o.seed).front();
    io::write_file_atomic(trace, episode_trace_csv(ep, model->space));
    result.label = "RL";
    result.design = ep.final_t();
    result.predicted = ep.final_objectives();
    result.details["steps"] = ep.steps.size();
    result.details["termination"] = ep.termination ? to_string(*ep.termination) : "";
    result.details["initial"] = to_std(ep.initial_t);
  }
  if (!o.label.empty()) result.label = o.label;
  result.validated = evaluate(oracle, result.design);
  io::write_json_atomic(o.out, to_json_value(result));
  std::cout << result.label << ": " << format_thickness(result.design) << ", total energy "
            << result.validated.total_energy() << " J, mass " << result.validated.mass << " kg (" << runtime(t0)
            << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// rl-train / rl-eval

struct RlTrainOptions {
  std::string model;
  std::string target = "800,600,13";
  double t2 = 5.0;
  std::uint64_t seed = 0;
  std::string agent;
  std::string trace;
  A2cFlags a2c;
};

int cmd_rl_train(const RlTrainOptions& o) {
  const auto t0 = Clock::now();
  auto model = std::make_shared<const SurrogateModel>(load_model(o.model));
  auto eval = std::make_shared<CachingEvaluator>(std::make_shared<SurrogateEvaluator>(model));
  EnvConfig ec{model->space, make_target(o.target, o.t2), *model->scaling, o.a2c.max_steps, std::nullopt};
  SideSillEnv env(ec, eval);
  const A2cConfig config = o.a2c.config(o.seed);
  const A2cResult r = train_a2c(env, config);
  save_agent_document(r.agent, model->space, *model->scaling, config, o.agent);

  const fs::path trace = o.trace.empty() ? sibling(o.agent, ".returns.csv") : fs::path(o.trace);
  io::write_file_atomic(trace, return_trace_csv(r));
  svg::Series s{"episode return", {}, r.episode_returns};
  for (std::size_t i = 0; i < r.episode_returns.size(); ++i) s.x.push_back(static_cast<double>(i));
  io::write_file_atomic(sibling(trace, ".svg"), svg::line_plot({s}, "Episodic reward", "episode", "return"));
  std::cout << "trained " << r.episode_returns.size() << " episodes (" << r.total_steps << " steps, " << runtime(t0)
            << ")\n";
  return kExitOk;
}

struct RlEvalOptions {
  std::string agent;
  bool coupled = false;
  std::string endpoint;
  std::string model;
  std::optional<int> max_steps;
  std::string target = "800,600,13";
  double t2 = 5.0;
  std::uint64_t seed = 0;
  int episodes = 1;
  int timeout_ms = 30000;
  std::string out;
  std::string trace;
  std::string oracle;
  std::string label;
};

int cmd_rl_eval(RlEvalOptions o) {
  const auto t0 = Clock::now();
  AgentDocument doc = load_agent_document(o.agent);
  std::shared_ptr<Evaluator> eval;
  if (o.coupled) {
    if (o.endpoint.empty()) {
      if (const char* env = std::getenv("SILLOPT_ENDPOINT")) o.endpoint = env;
    }
    if (o.endpoint.empty()) throw CLI::ValidationError("--endpoint", "coupled mode needs --endpoint or SILLOPT_ENDPOINT");
    eval = std::make_shared<ExternalEvaluator>(o.endpoint, std::chrono::milliseconds(o.timeout_ms));
  } else {
    if (o.model.empty()) throw CLI::ValidationError("--model", "surrogate-backed evaluation needs --model");
    auto model = std::make_shared<const SurrogateModel>(load_model(o.model));
    if (!(model->space == doc.space)) throw std::runtime_error("agent and model use different design spaces");
    eval = std::make_shared<CachingEvaluator>(std::make_shared<SurrogateEvaluator>(model));
  }
  const TargetSpec target = make_target(o.target, o.t2);
  const int steps = o.max_steps.value_or(o.coupled ? kCoupledStepLimit : kSurrogateStepLimit);
  SideSillEnv env(EnvConfig{doc.space, target, doc.scaling, steps, std::nullopt}, eval);
  const auto traces = evaluate_greedy(env, doc.agent, o.seed, o.episodes);
  const EpisodeTrace& ep = traces.back();

  const fs::path trace =
      !o.trace.empty() ? fs::path(o.trace) : !o.out.empty() ? sibling(o.out, ".episode.csv") : fs::path();
  if (!trace.empty()) {
    io::write_file_atomic(trace, episode_trace_csv(ep, doc.space));
    svg::Series energy{"total energy (J)", {0.0}, {ep.initial_objectives.total_energy()}};
    svg::Series mass{"mass x100 (kg)", {0.0}, {ep.initial_objectives.mass * 100}};
    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
      energy.x.push_back(static_cast<double>(i + 1));
      energy.y.push_back(ep.steps[i].objectives.total_energy());
      mass.x.push_back(static_cast<double>(i + 1));
      mass.y.push_back(ep.steps[i].objectives.mass * 100);
    }
    io::write_file_atomic(sibling(trace, ".svg"),
                          svg::line_plot({energy, mass}, "Energy and mass per step", "step", "value"));
  }

  if (!o.out.empty()) {
    MethodResult result;
    result.method = o.coupled ? "rl-coupled" : "rl";
    std::ostringstream label;
    label << (o.coupled ? "RL with external solver" : "RL") << " (T2=" << io::format_double(o.t2) << ")";
    result.label = o.label.empty() ? label.str() : o.label;
    result.space = doc.space;
    result.target = target;
    result.scaling = doc.scaling;
    result.seed = o.seed;
    result.design = ep.final_t();
    result.predicted = ep.final_objectives();
    result.validated = evaluate(load_oracle(o.oracle), result.design);
    result.details["steps"] = ep.steps.size();
    result.details["termination"] = ep.termination ? to_string(*ep.termination) : "";
    result.details["initial"] = to_std(ep.initial_t);
    result.details["initial_objectives"] = json(ep.initial_objectives);
    result.details["evaluator_calls"] = eval->calls();
    io::write_json_atomic(o.out, to_json_value(result));
  }
  std::cout << "episode of " << ep.steps.size() << " steps: total energy " << ep.initial_objectives.total_energy()
            << " -> " << ep.final_objectives().total_energy() << " J (" << runtime(t0) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// compare

struct CompareOptions {
  std::vector<std::string> results;
  std::string out;
  std::string plot;
};

int cmd_compare(const CompareOptions& o) {
  std::vector<MethodResult> results;
  for (const auto& p : o.results) {
    if (!fs::exists(p)) throw std::runtime_error("result file not found: " + p);
    results.push_back(load_result(p));
  }
  const auto rows = compare(results);
  io::write_file_atomic(o.out, markdown_table(rows));
  if (!o.plot.empty()) {
    std::vector<std::string> labels;
    std::vector<double> energy;
    for (const auto& r : rows) {
      labels.push_back(r.method);
      energy.push_back(r.total_energy);
    }
    io::write_file_atomic(o.plot, svg::bar_chart(labels, energy, "Total absorbed energy", "energy (J)"));
    io::write_file_atomic(sibling(o.plot, ".csv"), comparison_csv(rows));
  }
  std::cout << markdown_table(rows);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// serve

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 0;
  std::string oracle;
  std::optional<std::uint64_t> noise_seed;
  int latency_ms = 0;
  bool stdio = false;
};

int cmd_serve(const ServeOptions& o) {
  OracleConfig oracle = load_oracle(o.oracle);
  if (o.noise_seed) oracle.noise_seed = o.noise_seed;
  oracle.latency = std::chrono::milliseconds(o.latency_ms);
  if (o.stdio) {
    serve_stream(oracle, std::cin, std::cout);
    return kExitOk;
  }
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  EvaluationServer server(oracle, o.host, static_cast<std::uint16_t>(o.port));
  server.start();
  std::cout << "listening on " << server.endpoint() << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  std::cout << "served " << server.requests_served() << " requests\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// --config expansion

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

void append_flag(std::vector<std::string>& out, const std::string& flag, const json& v) {
  const auto text = [](const json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
  if (v.is_boolean()) {
    if (v.get<bool>()) out.push_back(flag);
  } else if (v.is_array()) {
    out.push_back(flag);
    for (const auto& e : v) out.push_back(text(e));
  } else if (!v.is_null()) {
    out.push_back(flag);
    out.push_back(text(v));
  }
}

/// Splice the JSON config's entries in as flags; explicit flags win. Flat keys
/// apply to every command that knows them; an object under a command's name
/// applies to that command only and must name known flags.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config_path.empty()) return args;
  if (args.empty() || args[0].empty() || args[0][0] == '-') throw CLI::ValidationError("--config", "needs a command");
  const CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[0]);
  } catch (const CLI::OptionNotFound&) {
    return args;  // the parser reports the unknown command
  }
  json cfg;
  try {
    cfg = io::read_json(config_path);
  } catch (const std::exception& e) {
    throw CLI::ValidationError("--config", e.what());
  }
  if (!cfg.is_object()) throw CLI::ValidationError("--config", "config must be a JSON object");

  std::vector<std::string> injected;
  for (const auto& [key, value] : cfg.items()) {
    if (value.is_object()) continue;
    const std::string flag = "--" + key;
    if (sub->get_option_no_throw(flag) && !given_on_command_line(args, flag)) append_flag(injected, flag, value);
  }
  if (cfg.contains(args[0]) && cfg.at(args[0]).is_object()) {
    for (const auto& [key, value] : cfg.at(args[0]).items()) {
      const std::string flag = "--" + key;
      if (!sub->get_option_no_throw(flag)) {
        throw CLI::ValidationError("--config", "unknown option '" + key + "' for " + args[0]);
      }
      if (!given_on_command_line(args, flag)) append_flag(injected, flag, value);
    }
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args) {
  CLI::App app{"Side-sill crashworthiness optimization toolkit", "sillopt"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");
  app.add_option("--config", "JSON file of flag values; explicit flags take precedence");

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Sample designs and evaluate them on the oracle");
  gen_cmd->add_option("--n", gen.n, "Number of records")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Sampling seed")->capture_default_str();
  gen_cmd->add_option("--space", gen.space, "Design space JSON (default: side sill)");
  gen_cmd->add_option("--oracle", gen.oracle, "Oracle config JSON (default: calibrated side sill)");
  gen_cmd->add_option("--out", gen.out, "Output CSV")->required();
  gen_cmd->add_option("--correlation", gen.correlation, "Also write the correlation matrix CSV");

  TrainOptions tr;
  auto* tr_cmd = app.add_subcommand("train-surrogate", "Tune and train the surrogate network");
  tr_cmd->add_option("--data", tr.data, "Training CSV")->required();
  tr_cmd->add_option("--trials", tr.trials, "Random-search trials")->check(CLI::PositiveNumber)->capture_default_str();
  tr_cmd->add_option("--executions", tr.executions, "Trainings per trial")->check(CLI::PositiveNumber)->capture_default_str();
  tr_cmd->add_option("--epochs", tr.epochs, "Maximum epochs")->check(CLI::PositiveNumber)->capture_default_str();
  tr_cmd->add_option("--batch", tr.batch, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
  tr_cmd->add_option("--patience", tr.patience, "Early-stopping patience")->check(CLI::PositiveNumber)->capture_default_str();
  tr_cmd->add_option("--train-fraction", tr.train_fraction, "Train share of the data")
      ->check(CLI::Range(0.05, 0.95))
      ->capture_default_str();
  tr_cmd->add_option("--seed", tr.seed, "Split and tuning seed")->capture_default_str();
  tr_cmd->add_option("--out", tr.out, "Model JSON")->required();
  tr_cmd->add_option("--report", tr.report, "Report JSON (default: <out>.report.json)");

  OptimizeOptions op;
  auto* op_cmd = app.add_subcommand("optimize", "Run one optimizer against the surrogate");
  op_cmd->add_option("--method", op.method, "ga | netinv | rl")->required()->check(CLI::IsMember({"ga", "netinv", "rl"}));
  op_cmd->add_option("--model", op.model, "Surrogate model JSON")->required();
  op_cmd->add_option("--target", op.target, "Ideal objective array")->check(kTargetValidator)->capture_default_str();
  op_cmd->add_option("--t2", op.t2, "T2 threshold (scaled units)")->check(CLI::PositiveNumber)->capture_default_str();
  op_cmd->add_option("--seed", op.seed, "Optimizer seed")->capture_default_str();
  op_cmd->add_option("--out", op.out, "Result JSON")->required();
  op_cmd->add_option("--trace", op.trace, "Trace CSV (default: <out>.trace.csv)");
  op_cmd->add_option("--oracle", op.oracle, "Oracle config used for validation");
  op_cmd->add_option("--label", op.label, "Row name in comparisons");
  op_cmd->add_option("--backend", op.backend, "GA fitness backend")->check(CLI::IsMember({"surrogate", "oracle"}))->capture_default_str();
  op_cmd->add_option("--population", op.ga.population, "GA population")->capture_default_str();
  op_cmd->add_option("--generations", op.ga.generations, "GA generations")->capture_default_str();
  op_cmd->add_option("--crossover", op.ga.crossover_probability, "GA crossover probability")->capture_default_str();
  op_cmd->add_option("--mutation", op.ga.mutation_probability, "GA mutation probability")->capture_default_str();
  op_cmd->add_option("--tournament", op.ga.tournament_size, "GA tournament size")->capture_default_str();
  op_cmd->add_option("--elitism", op.ga.elitism, "GA elite count")->capture_default_str();
  op_cmd->add_option("--ni-lr", op.ni.learning_rate, "Inversion step size")->capture_default_str();
  op_cmd->add_option("--iterations", op.ni.max_iterations, "Inversion iterations")->capture_default_str();
  op_cmd->add_option("--tolerance", op.ni.tolerance, "Inversion stopping loss")->capture_default_str();
  op_cmd->add_option("--restarts", op.ni.restarts, "Inversion restarts")->capture_default_str();
  op_cmd->add_option("--mass-mode", op.mass_mode, "target | penalty")->check(CLI::IsMember({"target", "penalty"}))->capture_default_str();
  op_cmd->add_option("--mass-penalty", op.ni.mass_penalty, "Penalty weight in penalty mode")->capture_default_str();
  op_cmd->add_option("--agent", op.agent, "Trained agent (rl; trains one when omitted)");
  op_cmd->add_option("--max-steps", op.a2c.max_steps, "T1 step cap (rl)")->check(CLI::PositiveNumber)->capture_default_str();
  op.a2c.add_to(op_cmd);

  RlTrainOptions rt;
  auto* rt_cmd = app.add_subcommand("rl-train", "Train the actor-critic agent on the surrogate environment");
  rt_cmd->add_option("--model", rt.model, "Surrogate model JSON")->required();
  rt_cmd->add_option("--target", rt.target, "Ideal objective array")->check(kTargetValidator)->capture_default_str();
  rt_cmd->add_option("--t2", rt.t2, "T2 threshold (scaled units)")->check(CLI::PositiveNumber)->capture_default_str();
  rt_cmd->add_option("--seed", rt.seed, "Training seed")->capture_default_str();
  rt_cmd->add_option("--agent", rt.agent, "Output agent JSON")->required();
  rt_cmd->add_option("--trace", rt.trace, "Return trace CSV (default: <agent>.returns.csv)");
  rt_cmd->add_option("--max-steps", rt.a2c.max_steps, "T1 step cap")->check(CLI::PositiveNumber)->capture_default_str();
  rt.a2c.add_to(rt_cmd);

  RlEvalOptions re;
  auto* re_cmd = app.add_subcommand("rl-eval", "Greedy episode with a trained agent");
  re_cmd->add_option("--agent", re.agent, "Agent JSON")->required();
  re_cmd->add_flag("--coupled", re.coupled, "Evaluate against an external solver");
  re_cmd->add_option("--endpoint", re.endpoint, "tcp://host:port or exec:<command> (default: $SILLOPT_ENDPOINT)");
  re_cmd->add_option("--model", re.model, "Surrogate model JSON (uncoupled mode)");
  re_cmd->add_option("--max-steps", re.max_steps, "T1 step cap (default 20 coupled, 500 otherwise)")->check(CLI::PositiveNumber);
  re_cmd->add_option("--target", re.target, "Ideal objective array")->check(kTargetValidator)->capture_default_str();
  re_cmd->add_option("--t2", re.t2, "T2 threshold (scaled units)")->check(CLI::PositiveNumber)->capture_default_str();
  re_cmd->add_option("--seed", re.seed, "Reset seed")->capture_default_str();
  re_cmd->add_option("--episodes", re.episodes, "Episodes to run (last one is reported)")->check(CLI::PositiveNumber)->capture_default_str();
  re_cmd->add_option("--timeout-ms", re.timeout_ms, "Per-request timeout")->check(CLI::PositiveNumber)->capture_default_str();
  re_cmd->add_option("--out", re.out, "Result JSON");
  re_cmd->add_option("--trace", re.trace, "Episode CSV (default: <out>.episode.csv)");
  re_cmd->add_option("--oracle", re.oracle, "Oracle config used for validation");
  re_cmd->add_option("--label", re.label, "Row name in comparisons");

  CompareOptions cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Tabulate oracle-validated results");
  cmp_cmd->add_option("--results", cmp.results, "Result JSON files")->required();
  cmp_cmd->add_option("--out", cmp.out, "Markdown table")->required();
  cmp_cmd->add_option("--plot", cmp.plot, "Energy bar chart SVG (a CSV twin is written alongside)");

  ServeOptions sv;
  auto* sv_cmd = app.add_subcommand("serve", "Run the reference external evaluator");
  sv_cmd->add_option("--host", sv.host, "Listen address")->capture_default_str();
  sv_cmd->add_option("--port", sv.port, "Listen port (0 picks a free one)")->check(CLI::Range(0, 65535))->capture_default_str();
  sv_cmd->add_option("--oracle", sv.oracle, "Oracle config JSON");
  sv_cmd->add_option("--noise-seed", sv.noise_seed, "Enable seeded evaluation noise");
  sv_cmd->add_option("--latency-ms", sv.latency_ms, "Artificial delay per evaluation")->check(CLI::NonNegativeNumber);
  sv_cmd->add_flag("--stdio", sv.stdio, "Serve on stdin/stdout instead of TCP");

  try {
    std::vector<std::string> args = expand_config(app, raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  // Flag combinations the option checks cannot express are usage errors too.
  const auto usage_check = [](const char* what, auto&& validate) {
    try {
      validate();
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError(what, e.what());
    }
  };
  try {
    if (op_cmd->parsed()) {
      usage_check("GA options", [&] { op.ga.validate(); });
      usage_check("inversion options", [&] { op.ni.validate(); });
      usage_check("agent options", [&] { op.a2c.config(op.seed).validate(); });
    }
    if (rt_cmd->parsed()) usage_check("agent options", [&] { rt.a2c.config(rt.seed).validate(); });
    if (gen_cmd->parsed()) return cmd_gen_data(gen);
    if (tr_cmd->parsed()) return cmd_train_surrogate(tr);
    if (op_cmd->parsed()) return cmd_optimize(op);
    if (rt_cmd->parsed()) return cmd_rl_train(rt);
    if (re_cmd->parsed()) return cmd_rl_eval(re);
    if (cmp_cmd->parsed()) return cmd_compare(cmp);
    if (sv_cmd->parsed()) return cmd_serve(sv);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) { return run_cli(std::vector<std::string>(argv + 1, argv + argc)); }

}  // namespace sill::cli
