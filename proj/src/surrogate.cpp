#include "sillopt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sillopt/io.hpp"

namespace sill {

using Matrix = Eigen::MatrixXd;

void HyperparameterSpace::validate() const {
  if (hidden_min < 1 || hidden_max < hidden_min) throw std::invalid_argument("invalid hidden-width range");
  if (!(learning_rate_min > 0) || learning_rate_max < learning_rate_min) {
    throw std::invalid_argument("invalid learning-rate range");
  }
  if (max_trials < 1 || executions_per_trial < 1) throw std::invalid_argument("trials and executions must be >= 1");
}

Eigen::Vector3d SurrogateModel::predict_standardized(const ThicknessVector& t) const {
  space.check_arity(t.size());
  return network.forward(t);
}

ObjectiveTriple SurrogateModel::predict(const ThicknessVector& t) const {
  return ObjectiveTriple::from_vector(standardizer.invert(predict_standardized(t)));
}

namespace {

double mean_abs_error(const nn::DenseNetworkd& net, const Matrix& x, const Matrix& y) {
  return (net.forward_batch(x) - y).cwiseAbs().mean();
}

}  // namespace

SurrogateModel train_surrogate(const Database& train, const Hyperparameters& hp, const TrainingOptions& options,
                               std::uint64_t seed, const Database* validation) {
  if (train.empty()) throw std::invalid_argument("training database is empty");
  if (options.epochs < 1 || options.batch_size < 1) throw std::invalid_argument("epochs and batch size must be >= 1");

  SurrogateModel model;
  model.space = train.space;
  model.standardizer = fit_standardizer(train);
  model.training.hyperparameters = hp;

  const Matrix x = train.inputs().transpose();
  const Matrix y = model.standardizer.apply(train.outputs()).transpose();
  Matrix x_val;
  Matrix y_val;
  if (validation && !validation->empty()) {
    x_val = validation->inputs().transpose();
    y_val = model.standardizer.apply(validation->outputs()).transpose();
  }
  const bool has_validation = x_val.cols() > 0;

  const int n_in = train.space.size();
  model.network = nn::DenseNetworkd({n_in, hp.hidden[0], hp.hidden[1], hp.hidden[2], 3}, nn::Activation::Identity, seed);
  nn::AdamState<double> adam(model.network, {hp.learning_rate});

  std::mt19937_64 rng(seed ^ 0x5deece66dULL);
  std::vector<int> order(static_cast<std::size_t>(x.cols()));
  std::iota(order.begin(), order.end(), 0);

  nn::DenseNetworkd best = model.network;
  double best_mae = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sse = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
      const auto stop = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
      const std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(stop));
      const Matrix xb = x(Eigen::all, idx);
      const Matrix err = model.network.forward_batch(xb) - y(Eigen::all, idx);
      sse += err.squaredNorm();
      const Matrix upstream = (2.0 / static_cast<double>(err.size())) * err;
      try {
        nn::adam_step(model.network, model.network.backward(xb, upstream), adam);
      } catch (const std::domain_error&) {
        throw TrainingDiverged(epoch, "surrogate training diverged at epoch " + std::to_string(epoch));
      }
    }
    const double loss = sse / static_cast<double>(y.size());
    if (!std::isfinite(loss) || !model.network.all_finite()) {
      throw TrainingDiverged(epoch, "surrogate training diverged at epoch " + std::to_string(epoch));
    }
    model.training.train_loss.push_back(loss);

    if (has_validation) {
      const double mae = mean_abs_error(model.network, x_val, y_val);
      if (!std::isfinite(mae)) {
        throw TrainingDiverged(epoch, "surrogate validation error diverged at epoch " + std::to_string(epoch));
      }
      model.training.validation_mae.push_back(mae);
      if (mae < best_mae) {
        best_mae = mae;
        best = model.network;
        model.training.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= options.patience) {
        break;
      }
    }
  }

  if (has_validation) {
    model.network = std::move(best);
    model.training.best_validation_mae = best_mae;
  } else {
    model.training.best_epoch = static_cast<int>(model.training.train_loss.size());
  }
  return model;
}

SurrogateModel tune_surrogate(const Database& train, const HyperparameterSpace& space,
                              const TrainingOptions& options, std::uint64_t seed) {
  space.validate();
  const auto [fit_part, val_part] = split(train, 0.8, seed);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> width(space.hidden_min, space.hidden_max);
  std::uniform_real_distribution<double> log_lr(std::log(space.learning_rate_min), std::log(space.learning_rate_max));

  TuningReport report;
  std::optional<SurrogateModel> leader;  // best execution of the best trial so far
  double leader_mae = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < space.max_trials; ++trial) {
    Hyperparameters hp;
    for (auto& h : hp.hidden) h = width(rng);
    hp.learning_rate = std::clamp(std::exp(log_lr(rng)), space.learning_rate_min, space.learning_rate_max);

    double sum = 0.0;
    int ok = 0;
    std::optional<SurrogateModel> best_exec;
    for (int exec = 0; exec < space.executions_per_trial; ++exec) {
      TrialRecord rec{trial, exec, hp, rng(), std::nullopt, 0};
      try {
        auto m = train_surrogate(fit_part, hp, options, rec.seed, &val_part);
        rec.validation_mae = m.training.best_validation_mae;
        rec.best_epoch = m.training.best_epoch;
        sum += *rec.validation_mae;
        ++ok;
        if (!best_exec || *rec.validation_mae < best_exec->training.best_validation_mae) best_exec = std::move(m);
      } catch (const TrainingDiverged&) {
      }
      report.runs.push_back(rec);
    }
    if (ok > 0 && sum / ok < leader_mae) {
      leader_mae = sum / ok;
      leader = std::move(best_exec);
      report.best_trial = trial;
    }
  }
  if (!leader) throw std::runtime_error("all tuning trials diverged");
  report.best_mean_validation_mae = leader_mae;

  // The retrain is kept unless an execution of the chosen trial validated better.
  SurrogateModel model = std::move(*leader);
  report.final_model = "trial";
  try {
    auto retrained = train_surrogate(fit_part, model.training.hyperparameters, options, rng(), &val_part);
    if (retrained.training.best_validation_mae <= model.training.best_validation_mae) {
      model = std::move(retrained);
      report.final_model = "retrain";
    }
  } catch (const TrainingDiverged&) {
  }
  model.tuning = std::move(report);
  return model;
}

double SurrogateEvaluation::fraction_within(double percent) const {
  std::size_t total = 0;
  std::size_t inside = 0;
  for (const auto& row : residuals) {
    for (const auto& r : row) {
      if (!r) continue;
      ++total;
      if (std::abs(*r) <= percent) ++inside;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(total);
}

std::vector<double> SurrogateEvaluation::defined_residuals() const {
  std::vector<double> out;
  for (const auto& row : residuals) {
    for (const auto& r : row) {
      if (r) out.push_back(*r);
    }
  }
  return out;
}

SurrogateEvaluation evaluate_surrogate(const SurrogateModel& model, const Database& test) {
  if (test.empty()) throw std::invalid_argument("test database is empty");
  const Matrix truth = test.outputs();
  const Matrix pred_std = model.network.forward_batch(test.inputs().transpose()).transpose();
  const Matrix err = pred_std - model.standardizer.apply(truth);

  SurrogateEvaluation ev;
  ev.mae = err.cwiseAbs().mean();
  ev.mse = err.squaredNorm() / static_cast<double>(err.size());

  const Matrix pred = model.standardizer.invert(pred_std);
  ev.residuals.resize(test.size());
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    for (int k = 0; k < 3; ++k) {
      if (truth(i, k) == 0.0) {
        ++ev.excluded;
        continue;
      }
      ev.residuals[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          100.0 * (truth(i, k) - pred(i, k)) / truth(i, k);
    }
  }
  return ev;
}

void to_json(nlohmann::json& j, const Hyperparameters& hp) {
  j = nlohmann::json{{"hidden", hp.hidden}, {"learning_rate", hp.learning_rate}};
}

void from_json(const nlohmann::json& j, Hyperparameters& hp) {
  hp.hidden = j.at("hidden").get<std::array<int, 3>>();
  j.at("learning_rate").get_to(hp.learning_rate);
}

nlohmann::json to_json_value(const TrainingReport& r) {
  return {{"hyperparameters", r.hyperparameters},
          {"epochs_run", r.train_loss.size()},
          {"best_epoch", r.best_epoch},
          {"final_train_loss", r.train_loss.empty() ? 0.0 : r.train_loss.back()},
          {"best_validation_mae", r.best_validation_mae},
          {"train_loss", r.train_loss}};
}

nlohmann::json to_json_value(const TuningReport& r) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& run : r.runs) {
    runs.push_back({{"trial", run.trial},
                    {"execution", run.execution},
                    {"hyperparameters", run.hyperparameters},
                    {"seed", run.seed},
                    {"validation_mae", run.validation_mae ? nlohmann::json(*run.validation_mae) : nlohmann::json()},
                    {"best_epoch", run.best_epoch}});
  }
  return {{"runs", runs},
          {"best_trial", r.best_trial},
          {"best_mean_validation_mae", r.best_mean_validation_mae},
          {"final_model", r.final_model}};
}

nlohmann::json to_json_value(const SurrogateModel& model) {
  nlohmann::json j{{"format", "sillopt.surrogate"},
                   {"version", 1},
                   {"space", model.space},
                   {"network", nn::to_json_value(model.network)},
                   {"standardizer", model.standardizer},
                   {"hyperparameters", model.training.hyperparameters}};
  j["scaling"] = model.scaling ? nlohmann::json(*model.scaling) : nlohmann::json(nullptr);
  return j;
}

SurrogateModel surrogate_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "sillopt.surrogate") throw std::runtime_error("not a surrogate model document");
  if (j.value("version", 0) != 1) {
    throw std::runtime_error("unsupported surrogate format version " + std::to_string(j.value("version", 0)));
  }
  SurrogateModel m;
  m.space = j.at("space").get<DesignSpace>();
  m.network = nn::network_from_json<double>(j.at("network"));
  m.standardizer = j.at("standardizer").get<StandardizationStats>();
  m.training.hyperparameters = j.at("hyperparameters").get<Hyperparameters>();
  if (j.contains("scaling") && !j.at("scaling").is_null()) m.scaling = j.at("scaling").get<ScalingReference>();
  if (m.network.input_size() != m.space.size() || m.network.output_size() != 3) {
    throw std::runtime_error("surrogate network shape does not match its design space");
  }
  return m;
}

void save_surrogate(const SurrogateModel& model, const std::filesystem::path& path) {
  io::write_json_atomic(path, to_json_value(model));
}

SurrogateModel load_surrogate(const std::filesystem::path& path) {
  try {
    return surrogate_from_json(io::read_json(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("invalid surrogate model " + path.string() + ": " + e.what());
  }
}

}  // namespace sill
