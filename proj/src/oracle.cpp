#include "sillopt/oracle.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <thread>

namespace sill {

namespace {

constexpr double kMm2ToM2 = 1e-6;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t design_hash(std::uint64_t seed, const Eigen::VectorXd& t) {
  std::uint64_t h = splitmix64(seed);
  for (Eigen::Index i = 0; i < t.size(); ++i) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(t[i]));
  return h;
}

void check_law(const EnergyLaw& law, int n, const char* name) {
  if (law.linear.size() != n || law.coupling.rows() != n || law.coupling.cols() != n) {
    throw std::invalid_argument(std::string("energy law ") + name + " has inconsistent arity");
  }
  if (!(law.saturation > 0)) throw std::invalid_argument(std::string("energy law ") + name + ": saturation must be > 0");
  if (!(law.scale >= 0)) throw std::invalid_argument(std::string("energy law ") + name + ": scale must be >= 0");
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

double EnergyLaw::operator()(const Eigen::VectorXd& t) const {
  return scale * -std::expm1(-exponent(t) / saturation);
}

void OracleConfig::validate() const {
  const int n = arity();
  if (n == 0) throw std::invalid_argument("oracle config has no segments");
  if (!(density > 0)) throw std::invalid_argument("density must be > 0");
  if (!(extrusion_length > 0)) throw std::invalid_argument("extrusion length must be > 0");
  if ((segment_lengths.array() <= 0).any()) throw std::invalid_argument("segment lengths must be > 0");
  check_law(inner_sill, n, "inner_sill");
  check_law(front_part, n, "front_part");
  if (pcf_per_mm.size() != n) throw std::invalid_argument("pcf coefficients have inconsistent arity");
  if (!(noise_level >= 0)) throw std::invalid_argument("noise level must be >= 0");
}

OracleConfig default_oracle_config() {
  OracleConfig c;
  // Relative wall lengths; calibrate() fixes the absolute scale.
  c.segment_lengths = vec({120, 90, 90, 110, 80, 60, 60});

  // The front walls t6/t7 carry most of the crush load and interact.
  c.inner_sill.linear = vec({0.30, 0.10, 0.10, 0.15, 0.05, 0.60, 0.60});
  c.inner_sill.coupling = Eigen::MatrixXd::Zero(7, 7);
  c.inner_sill.coupling(5, 6) = c.inner_sill.coupling(6, 5) = 0.02;
  c.inner_sill.saturation = 1.6;

  c.front_part.linear = vec({0.0, 0.0, 0.0, 0.0, 0.15, 0.80, 0.80});
  c.front_part.coupling = Eigen::MatrixXd::Zero(7, 7);
  c.front_part.coupling(5, 6) = c.front_part.coupling(6, 5) = 0.02;
  c.front_part.saturation = 2.0;

  c.pcf_per_mm = vec({6000, 4000, 4000, 5000, 7000, 9000, 9000});

  return calibrate(std::move(c), DesignSpace::side_sill().midpoint(), 14.5, 800.0, 600.0);
}

OracleConfig calibrate(OracleConfig config, const Eigen::VectorXd& design, double mass_kg, double ea_ss,
                       double ea_f) {
  config.inner_sill.scale = 1.0;
  config.front_part.scale = 1.0;
  config.mass_offset = 0.0;
  config.validate();
  config.segment_lengths *= mass_kg / mass(config, design);
  config.inner_sill.scale = ea_ss / config.inner_sill(design);
  config.front_part.scale = ea_f / config.front_part(design);
  return config;
}

OracleConfig restrict_oracle(const OracleConfig& config, const std::vector<int>& free,
                             const Eigen::VectorXd& base) {
  config.validate();
  const int n = config.arity();
  if (base.size() != n) throw ArityError("base design arity does not match oracle");
  std::vector<bool> is_free(static_cast<std::size_t>(n), false);
  for (int i : free) {
    if (i < 0 || i >= n) throw std::out_of_range("free parameter index out of range");
    is_free[static_cast<std::size_t>(i)] = true;
  }
  // Fixed walls contribute through the base vector with free entries zeroed.
  Eigen::VectorXd fixed = base;
  for (int i : free) fixed[i] = 0.0;

  const auto m = static_cast<Eigen::Index>(free.size());
  auto restrict_law = [&](const EnergyLaw& law) {
    EnergyLaw r;
    r.scale = law.scale;
    r.saturation = law.saturation;
    r.offset = law.exponent(fixed);
    const Eigen::VectorXd cross = 2.0 * law.coupling * fixed;
    r.linear.resize(m);
    r.coupling.resize(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      r.linear[a] = law.linear[free[a]] + cross[free[a]];
      for (Eigen::Index b = 0; b < m; ++b) r.coupling(a, b) = law.coupling(free[a], free[b]);
    }
    return r;
  };

  OracleConfig r = config;
  r.segment_lengths.resize(m);
  r.pcf_per_mm.resize(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    r.segment_lengths[a] = config.segment_lengths[free[a]];
    r.pcf_per_mm[a] = config.pcf_per_mm[free[a]];
  }
  r.mass_offset = mass(config, fixed);
  r.pcf_offset = config.pcf_offset + config.pcf_per_mm.dot(fixed);
  r.inner_sill = restrict_law(config.inner_sill);
  r.front_part = restrict_law(config.front_part);
  return r;
}

double mass(const OracleConfig& config, const ThicknessVector& t) {
  if (t.size() != config.arity()) throw ArityError("thickness arity does not match oracle config");
  return config.mass_offset +
         config.density * config.extrusion_length * kMm2ToM2 * config.segment_lengths.dot(t);
}

std::pair<double, double> energy(const OracleConfig& config, const ThicknessVector& t) {
  if (t.size() != config.arity()) throw ArityError("thickness arity does not match oracle config");
  return {config.inner_sill(t), config.front_part(t)};
}

ObjectiveTriple evaluate(const OracleConfig& config, const ThicknessVector& t) {
  const auto [ea_ss, ea_f] = energy(config, t);
  ObjectiveTriple out{ea_ss, ea_f, mass(config, t), config.pcf_offset + config.pcf_per_mm.dot(t)};
  if (config.noise_seed) {
    std::mt19937_64 rng(design_hash(*config.noise_seed, t));
    std::normal_distribution<double> z(0.0, config.noise_level);
    out.ea_ss *= 1.0 + z(rng);
    out.ea_f *= 1.0 + z(rng);
    *out.pcf *= 1.0 + z(rng);
  }
  if (config.latency.count() > 0) std::this_thread::sleep_for(config.latency);
  return out;
}

void to_json(nlohmann::json& j, const ObjectiveTriple& o) {
  j = nlohmann::json{{"ea_ss", o.ea_ss}, {"ea_f", o.ea_f}, {"mass", o.mass}};
  j["pcf"] = o.pcf ? nlohmann::json(*o.pcf) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ObjectiveTriple& o) {
  j.at("ea_ss").get_to(o.ea_ss);
  j.at("ea_f").get_to(o.ea_f);
  j.at("mass").get_to(o.mass);
  if (j.contains("pcf") && !j.at("pcf").is_null()) o.pcf = j.at("pcf").get<double>();
  else o.pcf.reset();
}

namespace {

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json law_json(const EnergyLaw& law) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < law.coupling.rows(); ++r) rows.push_back(vector_json(law.coupling.row(r).transpose()));
  return {{"scale", law.scale}, {"saturation", law.saturation}, {"offset", law.offset},
          {"linear", vector_json(law.linear)}, {"coupling", rows}};
}

EnergyLaw law_from(const nlohmann::json& j) {
  EnergyLaw law;
  j.at("scale").get_to(law.scale);
  j.at("saturation").get_to(law.saturation);
  law.offset = j.value("offset", 0.0);
  law.linear = vector_from(j.at("linear"));
  const auto& rows = j.at("coupling");
  const auto n = static_cast<Eigen::Index>(rows.size());
  law.coupling.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::VectorXd row = vector_from(rows.at(static_cast<std::size_t>(r)));
    if (row.size() != n) throw std::invalid_argument("coupling matrix must be square");
    law.coupling.row(r) = row.transpose();
  }
  return law;
}

}  // namespace

void to_json(nlohmann::json& j, const OracleConfig& c) {
  j = nlohmann::json{{"segment_lengths", vector_json(c.segment_lengths)},
                     {"extrusion_length", c.extrusion_length},
                     {"density", c.density},
                     {"mass_offset", c.mass_offset},
                     {"inner_sill", law_json(c.inner_sill)},
                     {"front_part", law_json(c.front_part)},
                     {"pcf_per_mm", vector_json(c.pcf_per_mm)},
                     {"pcf_offset", c.pcf_offset},
                     {"noise_level", c.noise_level},
                     {"latency_ms", c.latency.count()}};
  j["noise_seed"] = c.noise_seed ? nlohmann::json(*c.noise_seed) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, OracleConfig& c) {
  c.segment_lengths = vector_from(j.at("segment_lengths"));
  j.at("extrusion_length").get_to(c.extrusion_length);
  j.at("density").get_to(c.density);
  c.mass_offset = j.value("mass_offset", 0.0);
  c.inner_sill = law_from(j.at("inner_sill"));
  c.front_part = law_from(j.at("front_part"));
  c.pcf_per_mm = vector_from(j.at("pcf_per_mm"));
  c.pcf_offset = j.value("pcf_offset", 0.0);
  c.noise_level = j.value("noise_level", 0.02);
  c.latency = std::chrono::milliseconds(j.value("latency_ms", 0));
  if (j.contains("noise_seed") && !j.at("noise_seed").is_null()) c.noise_seed = j.at("noise_seed").get<std::uint64_t>();
  else c.noise_seed.reset();
  c.validate();
}

OracleConfig load_oracle_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open oracle config " + path.string());
  return nlohmann::json::parse(in).get<OracleConfig>();
}

}  // namespace sill
