#include "sillopt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "sillopt/io.hpp"

namespace sill {

Eigen::MatrixXd Database::inputs() const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(records.size()), space.size());
  for (std::size_t i = 0; i < records.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = records[i].t.transpose();
  return x;
}

Eigen::MatrixXd Database::outputs() const {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(records.size()), 3);
  for (std::size_t i = 0; i < records.size(); ++i) {
    y.row(static_cast<Eigen::Index>(i)) = records[i].objectives.as_vector().transpose();
  }
  return y;
}

std::vector<ObjectiveTriple> Database::objectives() const {
  std::vector<ObjectiveTriple> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.objectives);
  return out;
}

Database generate(const DesignSpace& space, const OracleConfig& oracle, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample count must be > 0");
  if (oracle.arity() != space.size()) throw ArityError("oracle arity does not match the design space");
  Database db;
  db.space = space;
  db.provenance = {"synthetic", seed, std::nullopt};
  std::mt19937_64 rng(seed);
  db.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto t = random_grid_sample(space, rng);
    auto o = evaluate(oracle, t);
    db.records.push_back({std::move(t), o});
  }
  return db;
}

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

void save_csv(const Database& db, const std::filesystem::path& path) {
  std::ostringstream os;
  for (const auto& p : db.space.params()) os << p.name << ',';
  os << "ea_ss,ea_f,mass,pcf\n";
  for (const auto& r : db.records) {
    db.space.check_arity(r.t.size());
    for (Eigen::Index i = 0; i < r.t.size(); ++i) os << io::format_double(r.t[i]) << ',';
    os << io::format_double(r.objectives.ea_ss) << ',' << io::format_double(r.objectives.ea_f) << ','
       << io::format_double(r.objectives.mass) << ',';
    if (r.objectives.pcf) os << io::format_double(*r.objectives.pcf);
    os << '\n';
  }
  io::write_file_atomic(path, os.str());

  nlohmann::json meta{{"format", "sillopt.database"},
                      {"version", 1},
                      {"space", db.space},
                      {"provenance", db.provenance},
                      {"records", db.records.size()}};
  io::write_json_atomic(metadata_path(path), meta);
}

Database load_csv(const std::filesystem::path& path, std::optional<DesignSpace> space) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open database " + path.string());

  Database db;
  const auto meta_path = metadata_path(path);
  if (std::filesystem::exists(meta_path)) {
    const auto meta = io::read_json(meta_path);
    db.space = meta.at("space").get<DesignSpace>();
    db.provenance = meta.at("provenance").get<Provenance>();
  } else {
    db.space = space.value_or(DesignSpace::side_sill());
  }

  std::string line;
  if (!std::getline(in, line) || line.empty()) throw std::runtime_error(path.string() + ": no records");
  const auto header = io::split_csv_line(line);
  std::vector<std::string> expected;
  for (const auto& p : db.space.params()) expected.push_back(p.name);
  for (const char* c : {"ea_ss", "ea_f", "mass", "pcf"}) expected.emplace_back(c);

  std::vector<std::size_t> column(expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const auto it = std::find(header.begin(), header.end(), expected[k]);
    if (it == header.end()) throw std::runtime_error(path.string() + ": missing column '" + expected[k] + "'");
    column[k] = static_cast<std::size_t>(it - header.begin());
  }

  const int n_params = db.space.size();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = io::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) + " has " +
                               std::to_string(fields.size()) + " fields, expected " + std::to_string(header.size()));
    }
    try {
      SimulationRecord r;
      r.t.resize(n_params);
      for (int i = 0; i < n_params; ++i) r.t[i] = io::parse_double(fields[column[static_cast<std::size_t>(i)]]);
      const auto base = static_cast<std::size_t>(n_params);
      r.objectives.ea_ss = io::parse_double(fields[column[base]]);
      r.objectives.ea_f = io::parse_double(fields[column[base + 1]]);
      r.objectives.mass = io::parse_double(fields[column[base + 2]]);
      const auto& pcf = fields[column[base + 3]];
      if (!pcf.empty()) r.objectives.pcf = io::parse_double(pcf);
      db.records.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (db.records.empty()) throw std::runtime_error(path.string() + ": no records");
  return db;
}

std::pair<Database, Database> split(const Database& db, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split fraction must be in (0, 1)");
  std::vector<std::size_t> order(db.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(db.size())));

  Database train{db.space, {}, db.provenance};
  Database test{db.space, {}, db.provenance};
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? train : test).records.push_back(db.records[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

Eigen::MatrixXd StandardizationStats::apply(const Eigen::MatrixXd& outputs) const {
  return (outputs.rowwise() - mean).array().rowwise() / std.array();
}

Eigen::MatrixXd StandardizationStats::invert(const Eigen::MatrixXd& standardized) const {
  return (standardized.array().rowwise() * std.array()).matrix().rowwise() + mean;
}

Eigen::Vector3d StandardizationStats::apply(const Eigen::Vector3d& output) const {
  return (output - mean.transpose()).cwiseQuotient(std.transpose());
}

Eigen::Vector3d StandardizationStats::invert(const Eigen::Vector3d& standardized) const {
  return standardized.cwiseProduct(std.transpose()) + mean.transpose();
}

StandardizationStats fit_standardizer(const Database& train) {
  if (train.size() < 2) throw std::invalid_argument("standardizer needs at least 2 records");
  const Eigen::MatrixXd y = train.outputs();
  StandardizationStats s;
  s.mean = y.colwise().mean();
  s.std = ((y.rowwise() - s.mean).array().square().colwise().mean()).sqrt();
  static constexpr const char* kNames[] = {"ea_ss", "ea_f", "mass"};
  for (int k = 0; k < 3; ++k) {
    if (!(s.std[k] > 0.0)) throw std::invalid_argument(std::string("zero variance in output ") + kNames[k]);
  }
  return s;
}

ScalingReference fit_scaling_reference(const Database& db) {
  const auto objectives = db.objectives();
  return fit_scaling_reference(std::span<const ObjectiveTriple>(objectives));
}

std::optional<double> CorrelationMatrix::at(std::size_t i, std::size_t j) const {
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  if (!defined(a, b)) return std::nullopt;
  return values(a, b);
}

std::string CorrelationMatrix::to_csv() const {
  std::ostringstream os;
  os << "variable";
  for (const auto& l : labels) os << ',' << l;
  os << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    os << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      os << ',';
      if (defined(i, j)) os << io::format_double(values(i, j));
    }
    os << '\n';
  }
  return os.str();
}

CorrelationMatrix correlation_matrix(const Database& db) {
  if (db.size() < 3) throw std::invalid_argument("correlation matrix needs at least 3 records");
  CorrelationMatrix c;
  for (const auto& p : db.space.params()) c.labels.push_back(p.name);
  c.labels.insert(c.labels.end(), {"ea_ss", "ea_f", "mass"});

  Eigen::MatrixXd data(static_cast<Eigen::Index>(db.size()), db.space.size() + 3);
  data << db.inputs(), db.outputs();
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  const Eigen::VectorXd norms = centered.colwise().norm();
  const Eigen::MatrixXd cov = centered.transpose() * centered;

  const auto m = data.cols();
  c.values = Eigen::MatrixXd::Zero(m, m);
  c.defined.setConstant(m, m, false);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      // Relative threshold: a column is constant if its spread is at rounding level.
      const double scale_i = std::max(1.0, data.col(i).cwiseAbs().maxCoeff());
      const double scale_j = std::max(1.0, data.col(j).cwiseAbs().maxCoeff());
      if (norms[i] <= 1e-12 * scale_i || norms[j] <= 1e-12 * scale_j) continue;
      c.defined(i, j) = true;
      c.values(i, j) = i == j ? 1.0 : std::clamp(cov(i, j) / (norms[i] * norms[j]), -1.0, 1.0);
    }
  }
  return c;
}

void to_json(nlohmann::json& j, const StandardizationStats& s) {
  j = nlohmann::json{{"mean", {s.mean[0], s.mean[1], s.mean[2]}}, {"std", {s.std[0], s.std[1], s.std[2]}}};
}

void from_json(const nlohmann::json& j, StandardizationStats& s) {
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto sd = j.at("std").get<std::vector<double>>();
  if (mean.size() != 3 || sd.size() != 3) throw std::invalid_argument("standardizer must have 3 outputs");
  for (int k = 0; k < 3; ++k) {
    s.mean[k] = mean[static_cast<std::size_t>(k)];
    s.std[k] = sd[static_cast<std::size_t>(k)];
    if (!(s.std[k] > 0.0)) throw std::invalid_argument("standardizer std must be > 0");
  }
}

void to_json(nlohmann::json& j, const Provenance& p) {
  j = nlohmann::json{{"source", p.source}};
  j["seed"] = p.seed ? nlohmann::json(*p.seed) : nlohmann::json(nullptr);
  j["timestamp"] = p.timestamp ? nlohmann::json(*p.timestamp) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, Provenance& p) {
  j.at("source").get_to(p.source);
  if (j.contains("seed") && !j.at("seed").is_null()) p.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("timestamp") && !j.at("timestamp").is_null()) p.timestamp = j.at("timestamp").get<std::string>();
}

}  // namespace sill
