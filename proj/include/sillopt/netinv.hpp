#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sillopt/dataset.hpp"
#include "sillopt/design_space.hpp"
#include "sillopt/nn.hpp"
#include "sillopt/objective.hpp"

namespace sill {

/// Standardized [ideal_ea_ss, ideal_ea_f, mass_info].
Eigen::Vector3d build_target(const TargetSpec& target, const StandardizationStats& stats);

enum class MassMode {
  Target,   // mass output pulled toward Y[2] like the energies
  Penalty,  // last output minimized: E adds mass_penalty * F_mass instead
};

struct InversionConfig {
  double learning_rate = 0.01;
  int max_iterations = 2000;
  double tolerance = 1e-3;
  Eigen::VectorXd target = Eigen::VectorXd::Zero(3);  // standardized outputs
  std::uint64_t seed = 0;
  std::optional<ThicknessVector> initial;
  int restarts = 8;
  MassMode mass_mode = MassMode::Target;
  double mass_penalty = 1.0;

  void validate() const;
};

class InversionDiverged : public std::runtime_error {
 public:
  InversionDiverged(int iteration, const std::string& what) : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

struct InversionResult {
  ThicknessVector initial;
  ThicknessVector best;     // best-so-far continuous iterate
  double best_loss = 0.0;
  ThicknessVector snapped;  // `best` rounded to the grid
  double snapped_loss = 0.0;
  std::vector<double> loss_trace;  // E at x^0, x^1, ...
  int iterations = 0;              // updates performed
  int restart = 0;
};

/// E(x) and dE/dx for one design.
std::pair<double, Eigen::VectorXd> inversion_loss(const nn::DenseNetworkd& net, const ThicknessVector& x,
                                                  const InversionConfig& config);

/// Projected gradient descent x <- clamp(x - eta dE/dx), stopping after
/// max_iterations updates or once E < tolerance.
InversionResult invert(const nn::DenseNetworkd& net, const DesignSpace& space, const InversionConfig& config);

/// `config.restarts` runs, restart r starting from random_grid_sample(seed + r)
/// (restart 0 uses `config.initial` when set). Smallest snapped loss wins; ties
/// go to the lowest restart index.
InversionResult multistart_invert(const nn::DenseNetworkd& net, const DesignSpace& space,
                                  const InversionConfig& config);

std::string loss_trace_csv(const InversionResult& result);

void to_json(nlohmann::json& j, const InversionConfig& c);
void from_json(const nlohmann::json& j, InversionConfig& c);

}  // namespace sill
