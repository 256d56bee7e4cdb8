#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sillopt/oracle.hpp"

namespace sill {

enum class Objective { EaSs = 0, EaF = 1, Mass = 2 };

struct Range {
  double min = 0.0;
  double max = 1.0;
  bool operator==(const Range&) const = default;
};

/// Per-objective anchors for the affine map onto [1, 100].
struct ScalingReference {
  Range ea_ss;
  Range ea_f;
  Range mass;

  const Range& operator[](Objective o) const;
  void validate() const;
  bool operator==(const ScalingReference&) const = default;
};

/// The user's ideal objective array plus the reward weights.
///
/// `mass_info` travels with the array but does not enter the reward.
struct TargetSpec {
  double ideal_ea_ss = 800.0;
  double ideal_ea_f = 600.0;
  double mass_info = 13.0;
  double energy_weight = 1.0;
  double mass_weight = 0.5;  // magnitude of the mass penalty
  double t2_threshold = 5.0;
  double t2_bonus = 10.0;

  /// Parse "ea_ss,ea_f,mass", e.g. "800,600,13". Throws std::invalid_argument
  /// naming the expected arity.
  static TargetSpec parse(std::string_view text);
  std::string to_string() const;
};

/// 1 + 99 (x - min) / (max - min); extrapolates linearly outside [min, max].
double scale(const ScalingReference& ref, Objective which, double x);

/// R = w1 (f1 - M1) - w2 f2, with f1 the scaled energy sum of `current`,
/// M1 the scaled energy sum of the ideal array and f2 the scaled mass.
double reward(const ScalingReference& ref, const TargetSpec& target, const ObjectiveTriple& current);

/// O = -R. Every optimizer minimizes O (equivalently maximizes R).
double optimization_value(const ScalingReference& ref, const TargetSpec& target, const ObjectiveTriple& current);

/// dR / d(ea_ss, ea_f, mass) on the physical scale; constant because R is affine.
Eigen::Vector3d reward_gradient(const ScalingReference& ref, const TargetSpec& target);

/// Mean absolute scaled energy deviation from the ideal array.
double scaled_energy_gap(const ScalingReference& ref, const TargetSpec& target, const ObjectiveTriple& current);

/// Strict: gap < threshold.
bool t2_satisfied(const ScalingReference& ref, const TargetSpec& target, const ObjectiveTriple& current);

/// Per-objective min/max over `objectives`. Throws on an empty set or when
/// any objective is constant.
ScalingReference fit_scaling_reference(std::span<const ObjectiveTriple> objectives);

void to_json(nlohmann::json& j, const Range& r);
void from_json(const nlohmann::json& j, Range& r);
void to_json(nlohmann::json& j, const ScalingReference& r);
void from_json(const nlohmann::json& j, ScalingReference& r);
void to_json(nlohmann::json& j, const TargetSpec& t);
void from_json(const nlohmann::json& j, TargetSpec& t);

}  // namespace sill
