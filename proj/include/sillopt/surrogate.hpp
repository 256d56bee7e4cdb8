#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "sillopt/dataset.hpp"
#include "sillopt/nn.hpp"

namespace sill {

/// Random-search ranges: three hidden widths (uniform integers) and an Adam
/// learning rate sampled log-uniformly.
struct HyperparameterSpace {
  int hidden_min = 32;
  int hidden_max = 512;
  double learning_rate_min = 1e-4;
  double learning_rate_max = 1e-2;
  int max_trials = 10;
  int executions_per_trial = 2;

  void validate() const;
};

struct Hyperparameters {
  std::array<int, 3> hidden{128, 128, 128};
  double learning_rate = 1e-3;
};

struct TrainingOptions {
  int epochs = 200;
  int batch_size = 32;
  int patience = 20;  // epochs without validation improvement before stopping
};

/// Raised when the training loss becomes non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, const std::string& what) : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

struct TrainingReport {
  Hyperparameters hyperparameters;
  std::vector<double> train_loss;       // per epoch, standardized MSE
  std::vector<double> validation_mae;   // per epoch, when a validation set was given
  int best_epoch = 0;                   // 1-based
  double best_validation_mae = 0.0;
};

struct TrialRecord {
  int trial = 0;
  int execution = 0;
  Hyperparameters hyperparameters;
  std::uint64_t seed = 0;
  std::optional<double> validation_mae;  // empty when the run diverged
  int best_epoch = 0;
};

struct TuningReport {
  std::vector<TrialRecord> runs;
  int best_trial = -1;
  double best_mean_validation_mae = 0.0;
  std::string final_model;  // "retrain" | "trial"
};

/// Trained 7 -> h1 -> h2 -> h3 -> 3 regressor on standardized objectives.
struct SurrogateModel {
  nn::DenseNetworkd network;
  StandardizationStats standardizer;
  DesignSpace space;
  std::optional<ScalingReference> scaling;
  TrainingReport training;
  std::optional<TuningReport> tuning;

  /// Network output on the standardized scale.
  Eigen::Vector3d predict_standardized(const ThicknessVector& t) const;
  /// Physical-scale prediction (J, J, kg); pcf is not modelled.
  ObjectiveTriple predict(const ThicknessVector& t) const;
};

/// Train one configuration with mini-batch Adam on standardized MSE.
///
/// With a validation set, training stops after `patience` epochs without a
/// validation-MAE improvement and the best weights are restored.
SurrogateModel train_surrogate(const Database& train, const Hyperparameters& hp, const TrainingOptions& options,
                               std::uint64_t seed, const Database* validation = nullptr);

/// Random search over `space`; selection by mean validation MAE over the
/// executions of each trial (ties go to the lower trial index). The chosen
/// configuration is retrained with a fresh seed on the same train/validation
/// carve-out, keeping the best-validation weights; the trial's own best
/// execution is returned instead when it validated better.
SurrogateModel tune_surrogate(const Database& train, const HyperparameterSpace& space,
                              const TrainingOptions& options, std::uint64_t seed);

struct SurrogateEvaluation {
  double mae = 0.0;  // standardized scale
  double mse = 0.0;
  /// 100 (true - predicted) / true per record and output; empty where true == 0.
  std::vector<std::array<std::optional<double>, 3>> residuals;
  std::size_t excluded = 0;

  /// Share of defined residuals with |r| <= percent.
  double fraction_within(double percent) const;
  std::vector<double> defined_residuals() const;
};

SurrogateEvaluation evaluate_surrogate(const SurrogateModel& model, const Database& test);

void to_json(nlohmann::json& j, const Hyperparameters& hp);
void from_json(const nlohmann::json& j, Hyperparameters& hp);
nlohmann::json to_json_value(const TrainingReport& r);
nlohmann::json to_json_value(const TuningReport& r);

nlohmann::json to_json_value(const SurrogateModel& model);
SurrogateModel surrogate_from_json(const nlohmann::json& j);
void save_surrogate(const SurrogateModel& model, const std::filesystem::path& path);
SurrogateModel load_surrogate(const std::filesystem::path& path);

}  // namespace sill
