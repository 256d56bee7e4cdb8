#include <filesystem>

#include "doctest.h"
#include "sillopt/surrogate.hpp"

using namespace sill;

namespace {

const Database& data() {
  static const Database db = generate(DesignSpace::side_sill(), default_oracle_config(), 120, 21);
  return db;
}

TrainingOptions quick(int epochs) { return {epochs, 32, 20}; }

Hyperparameters small_hp() {
  Hyperparameters hp;
  hp.hidden = {32, 32, 32};
  hp.learning_rate = 3e-3;
  return hp;
}

}  // namespace

TEST_SUITE("surrogate") {
  TEST_CASE("training is deterministic and reduces the loss") {
    const auto a = train_surrogate(data(), small_hp(), quick(30), 5);
    const auto b = train_surrogate(data(), small_hp(), quick(30), 5);
    for (std::size_t l = 0; l < a.network.layers().size(); ++l) {
      CHECK(a.network.layers()[l].weight == b.network.layers()[l].weight);
    }
    const auto& loss = a.training.train_loss;
    REQUIRE(loss.size() == 30);
    CHECK(*std::min_element(loss.begin(), loss.end()) <= loss.front());
    CHECK(loss.back() < loss.front());
  }

  TEST_CASE("duplicated records keep the shape contracts") {
    Database dup = data();
    dup.records.push_back(dup.records.front());
    const auto m = train_surrogate(dup, small_hp(), quick(2), 1);
    CHECK(m.network.input_size() == 7);
    CHECK(m.network.output_size() == 3);
  }

  TEST_CASE("validation restores the best epoch") {
    const auto [fit, val] = split(data(), 0.8, 3);
    const auto m = train_surrogate(fit, small_hp(), quick(40), 2, &val);
    REQUIRE(m.training.validation_mae.size() >= static_cast<std::size_t>(m.training.best_epoch));
    const double best = *std::min_element(m.training.validation_mae.begin(), m.training.validation_mae.end());
    CHECK(m.training.best_validation_mae == best);
    CHECK(evaluate_surrogate(m, val).mae == doctest::Approx(best).epsilon(1e-12));
  }

  TEST_CASE("tuning budget and ranges") {
    const HyperparameterSpace space;
    const auto m = tune_surrogate(data(), space, quick(3), 7);
    REQUIRE(m.tuning.has_value());
    CHECK(m.tuning->runs.size() == 20);
    for (const auto& run : m.tuning->runs) {
      for (int h : run.hyperparameters.hidden) {
        CHECK(h >= 32);
        CHECK(h <= 512);
      }
      CHECK(run.hyperparameters.learning_rate >= 1e-4);
      CHECK(run.hyperparameters.learning_rate <= 1e-2);
    }
    const auto& chosen = m.training.hyperparameters;
    const auto& best_run = m.tuning->runs[static_cast<std::size_t>(m.tuning->best_trial * 2)];
    CHECK(chosen.hidden == best_run.hyperparameters.hidden);
    CHECK(chosen.learning_rate == best_run.hyperparameters.learning_rate);

    double mean = 0.0, best_exec = 1e300;
    for (int e = 0; e < 2; ++e) {
      const auto& run = m.tuning->runs[static_cast<std::size_t>(m.tuning->best_trial * 2 + e)];
      REQUIRE(run.validation_mae.has_value());
      mean += *run.validation_mae / 2;
      best_exec = std::min(best_exec, *run.validation_mae);
    }
    CHECK(m.tuning->best_mean_validation_mae == doctest::Approx(mean).epsilon(1e-12));
    for (std::size_t t = 0; t < 10; ++t) {
      const auto& a = m.tuning->runs[2 * t];
      const auto& b = m.tuning->runs[2 * t + 1];
      if (a.validation_mae && b.validation_mae) {
        CHECK((*a.validation_mae + *b.validation_mae) / 2 >= m.tuning->best_mean_validation_mae - 1e-15);
      }
    }
    CHECK(m.training.best_validation_mae <= best_exec);
    CHECK((m.tuning->final_model == "retrain" || m.tuning->final_model == "trial"));
  }

  TEST_CASE("evaluation metrics") {
    const auto m = train_surrogate(data(), small_hp(), quick(10), 3);

    // Truth replaced by the model's own predictions.
    Database self = data();
    for (auto& r : self.records) r.objectives = m.predict(r.t);
    const auto perfect = evaluate_surrogate(m, self);
    CHECK(perfect.mae < 1e-12);
    CHECK(perfect.mse < 1e-20);
    for (double r : perfect.defined_residuals()) CHECK(std::abs(r) < 1e-9);

    // MAE recomputed independently.
    const auto ev = evaluate_surrogate(m, data());
    double sum = 0.0;
    for (const auto& r : data().records) {
      const Eigen::Vector3d z = m.standardizer.apply(r.objectives.as_vector());
      sum += (m.predict_standardized(r.t) - z).cwiseAbs().sum();
    }
    CHECK(ev.mae == doctest::Approx(sum / (3.0 * static_cast<double>(data().size()))).epsilon(1e-12));

    Database zero = data();
    zero.records.resize(3);
    zero.records[0].objectives.ea_f = 0.0;
    const auto ez = evaluate_surrogate(m, zero);
    CHECK(ez.excluded == 1);
    CHECK(ez.defined_residuals().size() == 8);
  }

  TEST_CASE("predict matches the network on the standardized scale") {
    const auto m = train_surrogate(data(), small_hp(), quick(5), 4);
    const ThicknessVector t = DesignSpace::side_sill().midpoint();
    const Eigen::Vector3d z = m.network.forward(t);
    const Eigen::Vector3d phys = m.predict(t).as_vector();
    CHECK((m.standardizer.apply(phys) - z).norm() < 1e-9);
    CHECK(m.predict(t) == m.predict(t));
  }

  TEST_CASE("model file round trip") {
    auto m = train_surrogate(data(), small_hp(), quick(3), 4);
    m.scaling = fit_scaling_reference(data());
    const auto path = std::filesystem::temp_directory_path() / "sillopt_test_model.json";
    save_surrogate(m, path);
    const auto back = load_surrogate(path);
    const ThicknessVector t = DesignSpace::side_sill().upper();
    CHECK(back.predict(t) == m.predict(t));
    CHECK(back.scaling == m.scaling);
    CHECK(back.space == m.space);
  }
}
