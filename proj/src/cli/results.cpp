#include "cli/results.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "sillopt/io.hpp"

namespace sill::cli {

namespace {

nlohmann::ordered_json triple_json(const ObjectiveTriple& o) {
  nlohmann::ordered_json j;
  j["ea_ss"] = o.ea_ss;
  j["ea_f"] = o.ea_f;
  j["mass"] = o.mass;
  j["pcf"] = o.pcf ? nlohmann::ordered_json(*o.pcf) : nlohmann::ordered_json(nullptr);
  return j;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

nlohmann::ordered_json to_json_value(const MethodResult& r) {
  nlohmann::ordered_json j;
  j["format"] = "sillopt.result";
  j["version"] = kResultFormatVersion;
  j["method"] = r.method;
  j["label"] = r.label;
  j["space"] = nlohmann::json(r.space);
  j["target"] = nlohmann::json(r.target);
  j["scaling"] = nlohmann::json(r.scaling);
  j["seed"] = r.seed;
  j["design"] = std::vector<double>(r.design.data(), r.design.data() + r.design.size());
  j["predicted"] = r.predicted ? triple_json(*r.predicted) : nlohmann::ordered_json(nullptr);
  j["validated"] = triple_json(r.validated);
  j["total_energy"] = r.validated.total_energy();
  j["objective_value"] = optimization_value(r.scaling, r.target, r.validated);
  j["details"] = r.details;
  return j;
}

MethodResult result_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "sillopt.result") throw std::runtime_error("not a result document");
  if (j.value("version", 0) != kResultFormatVersion) {
    throw std::runtime_error("unsupported result format version " + std::to_string(j.value("version", 0)));
  }
  MethodResult r;
  r.method = j.at("method").get<std::string>();
  r.label = j.value("label", r.method);
  r.space = j.at("space").get<DesignSpace>();
  r.target = j.at("target").get<TargetSpec>();
  r.scaling = j.at("scaling").get<ScalingReference>();
  r.seed = j.value("seed", std::uint64_t{0});
  const auto d = j.at("design").get<std::vector<double>>();
  r.design = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
  r.space.check_arity(r.design.size());
  if (j.contains("predicted") && !j.at("predicted").is_null()) r.predicted = j.at("predicted").get<ObjectiveTriple>();
  r.validated = j.at("validated").get<ObjectiveTriple>();
  if (j.contains("details")) r.details = j.at("details");
  return r;
}

MethodResult load_result(const std::filesystem::path& path) {
  try {
    return result_from_json(io::read_json(path));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

ComparisonRow make_row(const MethodResult& r) {
  ComparisonRow row;
  row.method = r.label;
  row.thickness = r.design;
  row.total_energy = r.validated.ea_ss + r.validated.ea_f;
  row.mass = r.validated.mass;
  row.objective = optimization_value(r.scaling, r.target, r.validated);
  return row;
}

std::vector<ComparisonRow> compare(const std::vector<MethodResult>& results) {
  if (results.empty()) throw std::invalid_argument("nothing to compare");
  std::vector<ComparisonRow> rows;
  for (const auto& r : results) {
    if (!(r.space == results.front().space)) {
      throw std::runtime_error("result '" + r.label + "' uses a different design space than '" +
                               results.front().label + "'");
    }
    rows.push_back(make_row(r));
  }
  return rows;
}

std::string format_thickness(const ThicknessVector& t) {
  std::string out;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    std::string s = io::format_double(std::round(t[i] * 1e9) / 1e9);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    if (i) out += '-';
    out += s;
  }
  return out;
}

std::string markdown_table(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "| Method | Thickness (mm) | Total energy (J) | Mass (kg) | O |\n";
  os << "|---|---|---:|---:|---:|\n";
  for (const auto& r : rows) {
    os << "| " << r.method << " | " << format_thickness(r.thickness) << " | " << fixed2(r.total_energy) << " | "
       << fixed2(r.mass) << " | " << fixed2(r.objective) << " |\n";
  }
  return os.str();
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "method,thickness,total_energy,mass,objective\n";
  for (const auto& r : rows) {
    os << '"' << r.method << "\"," << format_thickness(r.thickness) << ',' << io::format_double(r.total_energy) << ','
       << io::format_double(r.mass) << ',' << io::format_double(r.objective) << '\n';
  }
  return os.str();
}

}  // namespace sill::cli
