#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sillopt/design_space.hpp"

namespace sill {

/// Crash objectives of one design: inner-sill energy, front-part energy (J),
/// total mass (kg) and the informational peak contact force (N).
struct ObjectiveTriple {
  double ea_ss = 0.0;
  double ea_f = 0.0;
  double mass = 0.0;
  std::optional<double> pcf;

  double total_energy() const { return ea_ss + ea_f; }
  Eigen::Vector3d as_vector() const { return {ea_ss, ea_f, mass}; }
  static ObjectiveTriple from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], v[2], std::nullopt}; }

  bool operator==(const ObjectiveTriple&) const = default;
};

/// Saturating energy law E * (1 - exp(-(offset + a.t + t'Qt) / c)).
struct EnergyLaw {
  double scale = 0.0;       // E, J
  double saturation = 1.0;  // c
  double offset = 0.0;      // contribution of walls held fixed
  Eigen::VectorXd linear;   // a
  Eigen::MatrixXd coupling; // Q, symmetric

  double exponent(const Eigen::VectorXd& t) const { return offset + linear.dot(t) + t.dot(coupling * t); }
  double operator()(const Eigen::VectorXd& t) const;
};

/// Synthetic stand-in for the finite-element pole-impact simulation.
///
/// Mass is exact shell-extrusion geometry: density * length * sum(segment_i * t_i).
/// The energy laws are synthetic but calibrated so the mid-range design weighs
/// 14.5 kg and absorbs 800 J (inner sill) + 600 J (front part).
struct OracleConfig {
  Eigen::VectorXd segment_lengths;  // mm of cross-section wall per thickness region
  double extrusion_length = 2.0;    // m
  double density = 2700.0;          // kg/m^3
  double mass_offset = 0.0;         // kg, walls held fixed
  EnergyLaw inner_sill;
  EnergyLaw front_part;
  Eigen::VectorXd pcf_per_mm;       // N/mm
  double pcf_offset = 0.0;          // N
  std::optional<std::uint64_t> noise_seed;
  double noise_level = 0.02;        // relative std of multiplicative noise
  std::chrono::milliseconds latency{0};

  int arity() const { return static_cast<int>(segment_lengths.size()); }
  /// Throws std::invalid_argument on inconsistent shapes or non-physical values.
  void validate() const;
};

/// The calibrated seven-region configuration used throughout the project.
OracleConfig default_oracle_config();

/// Rescale segment lengths and energy scales so that `design` evaluates to
/// exactly (mass, ea_ss, ea_f).
OracleConfig calibrate(OracleConfig config, const Eigen::VectorXd& design, double mass, double ea_ss,
                       double ea_f);

/// Reduce an oracle to the parameters in `free`, folding the walls not listed
/// (held at their values in `base`) into constant offsets.
OracleConfig restrict_oracle(const OracleConfig& config, const std::vector<int>& free,
                             const Eigen::VectorXd& base);

double mass(const OracleConfig& config, const ThicknessVector& t);
std::pair<double, double> energy(const OracleConfig& config, const ThicknessVector& t);
ObjectiveTriple evaluate(const OracleConfig& config, const ThicknessVector& t);

void to_json(nlohmann::json& j, const ObjectiveTriple& o);
void from_json(const nlohmann::json& j, ObjectiveTriple& o);
void to_json(nlohmann::json& j, const OracleConfig& c);
void from_json(const nlohmann::json& j, OracleConfig& c);

OracleConfig load_oracle_config(const std::filesystem::path& path);

}  // namespace sill
