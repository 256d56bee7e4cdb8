#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace sill {

/// Thickness values in mm, one entry per design parameter.
using ThicknessVector = Eigen::VectorXd;
/// Integer step index per design parameter (level k means min + k * step).
using GridIndex = Eigen::VectorXi;

/// Raised when a vector's length does not match the design space.
class ArityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by enumerate_grid when the grid exceeds the configured cap.
class GridTooLarge : public std::runtime_error {
 public:
  GridTooLarge(std::uint64_t count, std::uint64_t cap);
  std::uint64_t count() const { return count_; }

 private:
  std::uint64_t count_;
};

struct ParameterSpec {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  double step = 0.0;

  /// Number of grid levels, min and max inclusive.
  int levels() const;
  double value_at(int level) const { return min + level * step; }
  /// Nearest level to `value`, clipped to [0, levels() - 1].
  int nearest_level(double value) const;
};

/// Ordered list of bounded, stepped design parameters.
///
/// The constructor rejects specs with min >= max, step <= 0, or a range that
/// is not an integer multiple of the step (1e-9 relative tolerance).
class DesignSpace {
 public:
  DesignSpace() = default;
  explicit DesignSpace(std::vector<ParameterSpec> params);

  /// The seven wall-thickness regions of the multi-cell side sill.
  static DesignSpace side_sill();

  int size() const { return static_cast<int>(params_.size()); }
  const std::vector<ParameterSpec>& params() const { return params_; }
  const ParameterSpec& operator[](int i) const { return params_[static_cast<std::size_t>(i)]; }

  Eigen::VectorXd lower() const;
  Eigen::VectorXd upper() const;
  Eigen::VectorXd midpoint() const;
  Eigen::VectorXd steps() const;
  Eigen::VectorXi level_counts() const;
  /// Product of level counts, saturating at UINT64_MAX.
  std::uint64_t grid_size() const;

  ThicknessVector decode(const GridIndex& index) const;
  /// Nearest grid index for each component (out-of-range values clip).
  GridIndex encode(const ThicknessVector& t) const;

  void check_arity(Eigen::Index n) const;

  bool operator==(const DesignSpace& other) const;

 private:
  std::vector<ParameterSpec> params_;
};

enum class Direction { Increment, Decrement };

/// One RL action: move a single parameter by one step.
///
/// Flat action index = 2 * param + (direction == Decrement), so the action
/// space of an N-parameter design has exactly 2N entries.
struct DesignAction {
  int param = 0;
  Direction direction = Direction::Increment;

  static DesignAction from_index(int index, int num_params);
  int index() const { return 2 * param + (direction == Direction::Decrement ? 1 : 0); }
  DesignAction opposite() const;
};

bool validate(const DesignSpace& space, const ThicknessVector& t);
bool is_grid_aligned(const DesignSpace& space, const ThicknessVector& t);
ThicknessVector clamp(const DesignSpace& space, const ThicknessVector& t);
/// Clamp then round every component to its nearest grid level.
ThicknessVector snap_to_grid(const DesignSpace& space, const ThicknessVector& t);

GridIndex random_grid_index(const DesignSpace& space, std::mt19937_64& rng);
ThicknessVector random_grid_sample(const DesignSpace& space, std::mt19937_64& rng);
ThicknessVector random_grid_sample(const DesignSpace& space, std::uint64_t seed);

/// Saturating move: a step that would leave the range is a no-op.
GridIndex apply_action(const DesignSpace& space, const GridIndex& index, DesignAction action);
ThicknessVector apply_action(const DesignSpace& space, const ThicknessVector& t, DesignAction action);

inline constexpr std::uint64_t kDefaultGridCap = 1'000'000;

/// Every grid point once, in lexicographic order (first parameter most significant).
std::vector<ThicknessVector> enumerate_grid(const DesignSpace& space,
                                            std::uint64_t cap = kDefaultGridCap);

void to_json(nlohmann::json& j, const ParameterSpec& p);
void from_json(const nlohmann::json& j, ParameterSpec& p);
void to_json(nlohmann::json& j, const DesignSpace& space);
void from_json(const nlohmann::json& j, DesignSpace& space);

DesignSpace load_design_space(const std::filesystem::path& path);

}  // namespace sill
