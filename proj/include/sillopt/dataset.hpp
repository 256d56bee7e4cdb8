#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sillopt/design_space.hpp"
#include "sillopt/objective.hpp"
#include "sillopt/oracle.hpp"

namespace sill {

struct SimulationRecord {
  ThicknessVector t;
  ObjectiveTriple objectives;
};

struct Provenance {
  std::string source = "synthetic";  // "synthetic" | "external"
  std::optional<std::uint64_t> seed;
  std::optional<std::string> timestamp;
};

/// Simulation database: designs and their evaluated objectives.
struct Database {
  DesignSpace space;
  std::vector<SimulationRecord> records;
  Provenance provenance;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  /// n x N thicknesses.
  Eigen::MatrixXd inputs() const;
  /// n x 3 objectives (ea_ss, ea_f, mass).
  Eigen::MatrixXd outputs() const;
  std::vector<ObjectiveTriple> objectives() const;
};

/// n grid-aligned random designs evaluated on the oracle; deterministic in seed.
Database generate(const DesignSpace& space, const OracleConfig& oracle, std::size_t n, std::uint64_t seed);

/// CSV with header t1,...,tN,ea_ss,ea_f,mass,pcf plus a sidecar metadata JSON
/// (see metadata_path) holding the design space and provenance.
void save_csv(const Database& db, const std::filesystem::path& path);
/// Reads the sidecar when present; otherwise `space` (or the default side-sill
/// space) supplies the parameter columns.
Database load_csv(const std::filesystem::path& path, std::optional<DesignSpace> space = std::nullopt);
std::filesystem::path metadata_path(const std::filesystem::path& csv_path);

/// Seeded shuffle, then the first round(fraction * n) records form the train part.
std::pair<Database, Database> split(const Database& db, double fraction, std::uint64_t seed);

/// Per-output z-score statistics (population standard deviation).
struct StandardizationStats {
  Eigen::RowVector3d mean = Eigen::RowVector3d::Zero();
  Eigen::RowVector3d std = Eigen::RowVector3d::Ones();

  /// Rows are samples.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& outputs) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& standardized) const;
  Eigen::Vector3d apply(const Eigen::Vector3d& output) const;
  Eigen::Vector3d invert(const Eigen::Vector3d& standardized) const;
};

StandardizationStats fit_standardizer(const Database& train);

ScalingReference fit_scaling_reference(const Database& db);

/// Pearson correlation over {t1..tN, ea_ss, ea_f, mass}. Pairs involving a
/// zero-variance column are marked undefined instead of producing NaN.
struct CorrelationMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> defined;

  std::optional<double> at(std::size_t i, std::size_t j) const;
  std::string to_csv() const;
};

CorrelationMatrix correlation_matrix(const Database& db);

void to_json(nlohmann::json& j, const StandardizationStats& s);
void from_json(const nlohmann::json& j, StandardizationStats& s);
void to_json(nlohmann::json& j, const Provenance& p);
void from_json(const nlohmann::json& j, Provenance& p);

}  // namespace sill
