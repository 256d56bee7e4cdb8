#include "sillopt/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace sill {

GridTooLarge::GridTooLarge(std::uint64_t count, std::uint64_t cap)
    : std::runtime_error("grid has " + std::to_string(count) + " points, exceeding the cap of " +
                         std::to_string(cap)),
      count_(count) {}

int ParameterSpec::levels() const {
  return static_cast<int>(std::llround((max - min) / step)) + 1;
}

int ParameterSpec::nearest_level(double value) const {
  const auto k = std::llround((value - min) / step);
  const auto top = static_cast<long long>(levels() - 1);
  return static_cast<int>(std::clamp(k, 0LL, top));
}

DesignSpace::DesignSpace(std::vector<ParameterSpec> params) : params_(std::move(params)) {
  if (params_.empty()) throw std::invalid_argument("design space needs at least one parameter");
  for (const auto& p : params_) {
    if (!(p.min < p.max)) throw std::invalid_argument("parameter " + p.name + ": min must be < max");
    if (!(p.step > 0)) throw std::invalid_argument("parameter " + p.name + ": step must be > 0");
    const double ratio = (p.max - p.min) / p.step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, std::abs(ratio))) {
      throw std::invalid_argument("parameter " + p.name + ": range is not a multiple of the step");
    }
  }
}

DesignSpace DesignSpace::side_sill() {
  return DesignSpace({
      {"t1", 1.5, 3.0, 0.1},
      {"t2", 2.0, 4.0, 0.2},
      {"t3", 2.0, 4.0, 0.2},
      {"t4", 1.0, 3.0, 0.1},
      {"t5", 1.5, 3.5, 0.1},
      {"t6", 2.0, 4.0, 0.2},
      {"t7", 2.0, 4.0, 0.2},
  });
}

Eigen::VectorXd DesignSpace::lower() const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v[i] = (*this)[i].min;
  return v;
}

Eigen::VectorXd DesignSpace::upper() const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v[i] = (*this)[i].max;
  return v;
}

Eigen::VectorXd DesignSpace::midpoint() const { return 0.5 * (lower() + upper()); }

Eigen::VectorXd DesignSpace::steps() const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v[i] = (*this)[i].step;
  return v;
}

Eigen::VectorXi DesignSpace::level_counts() const {
  Eigen::VectorXi v(size());
  for (int i = 0; i < size(); ++i) v[i] = (*this)[i].levels();
  return v;
}

std::uint64_t DesignSpace::grid_size() const {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 1;
  for (const auto& p : params_) {
    const auto n = static_cast<std::uint64_t>(p.levels());
    if (total > kMax / n) return kMax;
    total *= n;
  }
  return total;
}

ThicknessVector DesignSpace::decode(const GridIndex& index) const {
  check_arity(index.size());
  ThicknessVector t(size());
  for (int i = 0; i < size(); ++i) t[i] = (*this)[i].value_at(index[i]);
  return t;
}

GridIndex DesignSpace::encode(const ThicknessVector& t) const {
  check_arity(t.size());
  GridIndex k(size());
  for (int i = 0; i < size(); ++i) k[i] = (*this)[i].nearest_level(t[i]);
  return k;
}

void DesignSpace::check_arity(Eigen::Index n) const {
  if (n != size()) {
    throw ArityError("expected " + std::to_string(size()) + " thickness values, got " +
                     std::to_string(n));
  }
}

bool DesignSpace::operator==(const DesignSpace& other) const {
  if (size() != other.size()) return false;
  for (int i = 0; i < size(); ++i) {
    const auto& a = (*this)[i];
    const auto& b = other[i];
    if (a.name != b.name || a.min != b.min || a.max != b.max || a.step != b.step) return false;
  }
  return true;
}

DesignAction DesignAction::from_index(int index, int num_params) {
  if (index < 0 || index >= 2 * num_params) {
    throw std::out_of_range("action index " + std::to_string(index) + " outside [0, " +
                            std::to_string(2 * num_params) + ")");
  }
  return {index / 2, index % 2 == 0 ? Direction::Increment : Direction::Decrement};
}

DesignAction DesignAction::opposite() const {
  return {param, direction == Direction::Increment ? Direction::Decrement : Direction::Increment};
}

bool validate(const DesignSpace& space, const ThicknessVector& t) {
  space.check_arity(t.size());
  for (int i = 0; i < space.size(); ++i) {
    if (!(t[i] >= space[i].min && t[i] <= space[i].max)) return false;
  }
  return true;
}

bool is_grid_aligned(const DesignSpace& space, const ThicknessVector& t) {
  if (!validate(space, t)) return false;
  for (int i = 0; i < space.size(); ++i) {
    const auto& p = space[i];
    const double k = (t[i] - p.min) / p.step;
    if (std::abs(k - std::round(k)) > 1e-6) return false;
  }
  return true;
}

ThicknessVector clamp(const DesignSpace& space, const ThicknessVector& t) {
  space.check_arity(t.size());
  return t.cwiseMax(space.lower()).cwiseMin(space.upper());
}

ThicknessVector snap_to_grid(const DesignSpace& space, const ThicknessVector& t) {
  return space.decode(space.encode(t));
}

GridIndex random_grid_index(const DesignSpace& space, std::mt19937_64& rng) {
  GridIndex k(space.size());
  for (int i = 0; i < space.size(); ++i) {
    std::uniform_int_distribution<int> pick(0, space[i].levels() - 1);
    k[i] = pick(rng);
  }
  return k;
}

ThicknessVector random_grid_sample(const DesignSpace& space, std::mt19937_64& rng) {
  return space.decode(random_grid_index(space, rng));
}

ThicknessVector random_grid_sample(const DesignSpace& space, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_grid_sample(space, rng);
}

GridIndex apply_action(const DesignSpace& space, const GridIndex& index, DesignAction action) {
  space.check_arity(index.size());
  if (action.param < 0 || action.param >= space.size()) {
    throw std::out_of_range("action parameter " + std::to_string(action.param) + " out of range");
  }
  GridIndex next = index;
  const int delta = action.direction == Direction::Increment ? 1 : -1;
  const int moved = next[action.param] + delta;
  if (moved >= 0 && moved < space[action.param].levels()) next[action.param] = moved;
  return next;
}

ThicknessVector apply_action(const DesignSpace& space, const ThicknessVector& t, DesignAction action) {
  return space.decode(apply_action(space, space.encode(t), action));
}

std::vector<ThicknessVector> enumerate_grid(const DesignSpace& space, std::uint64_t cap) {
  const auto total = space.grid_size();
  if (total > cap) throw GridTooLarge(total, cap);

  const Eigen::VectorXi counts = space.level_counts();
  std::vector<ThicknessVector> out;
  out.reserve(static_cast<std::size_t>(total));
  GridIndex k = GridIndex::Zero(space.size());
  for (std::uint64_t n = 0; n < total; ++n) {
    out.push_back(space.decode(k));
    for (int i = space.size() - 1; i >= 0; --i) {
      if (++k[i] < counts[i]) break;
      k[i] = 0;
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const ParameterSpec& p) {
  j = nlohmann::json{{"name", p.name}, {"min", p.min}, {"max", p.max}, {"step", p.step}};
}

void from_json(const nlohmann::json& j, ParameterSpec& p) {
  j.at("name").get_to(p.name);
  j.at("min").get_to(p.min);
  j.at("max").get_to(p.max);
  j.at("step").get_to(p.step);
}

void to_json(nlohmann::json& j, const DesignSpace& space) {
  j = nlohmann::json{{"parameters", space.params()}};
}

void from_json(const nlohmann::json& j, DesignSpace& space) {
  space = DesignSpace(j.at("parameters").get<std::vector<ParameterSpec>>());
}

DesignSpace load_design_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open design space file " + path.string());
  return nlohmann::json::parse(in).get<DesignSpace>();
}

}  // namespace sill
