#include "sillopt/objective.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace sill {

const Range& ScalingReference::operator[](Objective o) const {
  switch (o) {
    case Objective::EaSs: return ea_ss;
    case Objective::EaF: return ea_f;
    case Objective::Mass: return mass;
  }
  throw std::out_of_range("unknown objective");
}

void ScalingReference::validate() const {
  for (const auto* r : {&ea_ss, &ea_f, &mass}) {
    if (!(r->min < r->max)) throw std::invalid_argument("scaling reference needs min < max for every objective");
  }
}

TargetSpec TargetSpec::parse(std::string_view text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    auto field = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v)) {
      throw std::invalid_argument("target must be 3 comma-separated numbers (ea_ss,ea_f,mass), got '" +
                                  std::string(text) + "'");
    }
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (values.size() != 3) {
    throw std::invalid_argument("target must have 3 values (ea_ss,ea_f,mass), got " + std::to_string(values.size()));
  }
  TargetSpec t;
  t.ideal_ea_ss = values[0];
  t.ideal_ea_f = values[1];
  t.mass_info = values[2];
  return t;
}

std::string TargetSpec::to_string() const {
  std::ostringstream os;
  os << ideal_ea_ss << ',' << ideal_ea_f << ',' << mass_info;
  return os.str();
}

double scale(const ScalingReference& ref, Objective which, double x) {
  const auto& r = ref[which];
  return 1.0 + 99.0 * (x - r.min) / (r.max - r.min);
}

double reward(const ScalingReference& ref, const TargetSpec& target, const ObjectiveTriple& current) {
  const double f1 = scale(ref, Objective::EaSs, current.ea_ss) + scale(ref, Objective::EaF, current.ea_f);
  const double m1 = scale(ref, Objective::EaSs, target.ideal_ea_ss) + scale(ref, Objective::EaF, target.ideal_ea_f);
  const double f2 = scale(ref, Objective::Mass, current.mass);
  return target.energy_weight * (f1 - m1) - target.mass_weight * f2;
}

double optimization_value(const ScalingReference& ref, const TargetSpec& target, const ObjectiveTriple& current) {
  return -reward(ref, target, current);
}

Eigen::Vector3d reward_gradient(const ScalingReference& ref, const TargetSpec& target) {
  const auto slope = [](const Range& r) { return 99.0 / (r.max - r.min); };
  return {target.energy_weight * slope(ref.ea_ss), target.energy_weight * slope(ref.ea_f),
          -target.mass_weight * slope(ref.mass)};
}

double scaled_energy_gap(const ScalingReference& ref, const TargetSpec& target, const ObjectiveTriple& current) {
  const double d_ss = scale(ref, Objective::EaSs, current.ea_ss) - scale(ref, Objective::EaSs, target.ideal_ea_ss);
  const double d_f = scale(ref, Objective::EaF, current.ea_f) - scale(ref, Objective::EaF, target.ideal_ea_f);
  return 0.5 * (std::abs(d_ss) + std::abs(d_f));
}

bool t2_satisfied(const ScalingReference& ref, const TargetSpec& target, const ObjectiveTriple& current) {
  return scaled_energy_gap(ref, target, current) < target.t2_threshold;
}

ScalingReference fit_scaling_reference(std::span<const ObjectiveTriple> objectives) {
  if (objectives.empty()) throw std::invalid_argument("cannot fit a scaling reference to an empty set");
  ScalingReference ref{{objectives[0].ea_ss, objectives[0].ea_ss},
                       {objectives[0].ea_f, objectives[0].ea_f},
                       {objectives[0].mass, objectives[0].mass}};
  for (const auto& o : objectives) {
    ref.ea_ss = {std::min(ref.ea_ss.min, o.ea_ss), std::max(ref.ea_ss.max, o.ea_ss)};
    ref.ea_f = {std::min(ref.ea_f.min, o.ea_f), std::max(ref.ea_f.max, o.ea_f)};
    ref.mass = {std::min(ref.mass.min, o.mass), std::max(ref.mass.max, o.mass)};
  }
  try {
    ref.validate();
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("degenerate scaling reference: an objective is constant over the database");
  }
  return ref;
}

void to_json(nlohmann::json& j, const Range& r) { j = nlohmann::json{{"min", r.min}, {"max", r.max}}; }

void from_json(const nlohmann::json& j, Range& r) {
  j.at("min").get_to(r.min);
  j.at("max").get_to(r.max);
}

void to_json(nlohmann::json& j, const ScalingReference& r) {
  j = nlohmann::json{{"ea_ss", r.ea_ss}, {"ea_f", r.ea_f}, {"mass", r.mass}};
}

void from_json(const nlohmann::json& j, ScalingReference& r) {
  j.at("ea_ss").get_to(r.ea_ss);
  j.at("ea_f").get_to(r.ea_f);
  j.at("mass").get_to(r.mass);
  r.validate();
}

void to_json(nlohmann::json& j, const TargetSpec& t) {
  j = nlohmann::json{{"ideal", {t.ideal_ea_ss, t.ideal_ea_f, t.mass_info}},
                     {"energy_weight", t.energy_weight},
                     {"mass_weight", t.mass_weight},
                     {"t2_threshold", t.t2_threshold},
                     {"t2_bonus", t.t2_bonus}};
}

void from_json(const nlohmann::json& j, TargetSpec& t) {
  const auto ideal = j.at("ideal").get<std::vector<double>>();
  if (ideal.size() != 3) throw std::invalid_argument("target 'ideal' must have 3 entries");
  t.ideal_ea_ss = ideal[0];
  t.ideal_ea_f = ideal[1];
  t.mass_info = ideal[2];
  t.energy_weight = j.value("energy_weight", 1.0);
  t.mass_weight = j.value("mass_weight", 0.5);
  t.t2_threshold = j.value("t2_threshold", 5.0);
  t.t2_bonus = j.value("t2_bonus", 10.0);
}

}  // namespace sill
