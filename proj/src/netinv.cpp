#include "sillopt/netinv.hpp"

#include <cmath>
#include <sstream>

#include "sillopt/io.hpp"

namespace sill {

Eigen::Vector3d build_target(const TargetSpec& target, const StandardizationStats& stats) {
  return stats.apply(Eigen::Vector3d(target.ideal_ea_ss, target.ideal_ea_f, target.mass_info));
}

void InversionConfig::validate() const {
  if (!(learning_rate > 0)) throw std::invalid_argument("inversion learning rate must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("inversion max iterations must be >= 1");
  if (!(tolerance >= 0)) throw std::invalid_argument("inversion tolerance must be >= 0");
  if (restarts < 1) throw std::invalid_argument("inversion restarts must be >= 1");
  if (target.size() == 0 || !target.allFinite()) throw std::invalid_argument("inversion target must be finite");
}

std::pair<double, Eigen::VectorXd> inversion_loss(const nn::DenseNetworkd& net, const ThicknessVector& x,
                                                  const InversionConfig& config) {
  const Eigen::VectorXd y = net.forward(x);
  if (y.size() != config.target.size()) throw ArityError("inversion target size does not match network output");
  const Eigen::VectorXd r = y - config.target;
  Eigen::VectorXd upstream = 2.0 * r;
  double loss;
  if (config.mass_mode == MassMode::Target) {
    loss = r.squaredNorm();
  } else {
    const Eigen::Index last = y.size() - 1;
    loss = r.head(last).squaredNorm() + config.mass_penalty * y[last];
    upstream[last] = config.mass_penalty;
  }
  const auto grads = net.backward(x, upstream);
  return {loss, grads.input.col(0)};
}

namespace {

void check_finite(double loss, int iteration) {
  if (!std::isfinite(loss)) {
    throw InversionDiverged(iteration, "inversion loss became non-finite at iteration " + std::to_string(iteration));
  }
}

}  // namespace

InversionResult invert(const nn::DenseNetworkd& net, const DesignSpace& space, const InversionConfig& config) {
  config.validate();
  space.check_arity(net.input_size());

  InversionResult res;
  res.initial = config.initial ? clamp(space, *config.initial) : random_grid_sample(space, config.seed);
  space.check_arity(res.initial.size());

  ThicknessVector x = res.initial;
  auto [loss, grad] = inversion_loss(net, x, config);
  check_finite(loss, 0);
  res.loss_trace.push_back(loss);
  res.best = x;
  res.best_loss = loss;

  for (int it = 1; it <= config.max_iterations && loss >= config.tolerance; ++it) {
    x = clamp(space, x - config.learning_rate * grad);
    std::tie(loss, grad) = inversion_loss(net, x, config);
    check_finite(loss, it);
    res.loss_trace.push_back(loss);
    res.iterations = it;
    if (loss < res.best_loss) {
      res.best_loss = loss;
      res.best = x;
    }
  }

  res.snapped = snap_to_grid(space, res.best);
  res.snapped_loss = inversion_loss(net, res.snapped, config).first;
  return res;
}

InversionResult multistart_invert(const nn::DenseNetworkd& net, const DesignSpace& space,
                                  const InversionConfig& config) {
  config.validate();
  std::optional<InversionResult> best;
  for (int r = 0; r < config.restarts; ++r) {
    InversionConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(r);
    if (r > 0) c.initial.reset();
    InversionResult res = invert(net, space, c);
    res.restart = r;
    if (!best || res.snapped_loss < best->snapped_loss) best = std::move(res);
  }
  return *best;
}

std::string loss_trace_csv(const InversionResult& result) {
  std::ostringstream os;
  os << "iteration,loss\n";
  for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
    os << i << ',' << io::format_double(result.loss_trace[i]) << '\n';
  }
  return os.str();
}

void to_json(nlohmann::json& j, const InversionConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"max_iterations", c.max_iterations},
                     {"tolerance", c.tolerance},
                     {"target", std::vector<double>(c.target.data(), c.target.data() + c.target.size())},
                     {"seed", c.seed},
                     {"restarts", c.restarts},
                     {"mass_mode", c.mass_mode == MassMode::Target ? "target" : "penalty"},
                     {"mass_penalty", c.mass_penalty}};
  if (c.initial) j["initial"] = std::vector<double>(c.initial->data(), c.initial->data() + c.initial->size());
}

void from_json(const nlohmann::json& j, InversionConfig& c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.tolerance = j.value("tolerance", c.tolerance);
  if (j.contains("target")) {
    const auto t = j.at("target").get<std::vector<double>>();
    if (t.empty()) throw ArityError("inversion target is empty");
    c.target = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
  }
  c.seed = j.value("seed", c.seed);
  c.restarts = j.value("restarts", c.restarts);
  if (j.contains("mass_mode")) {
    const auto m = j.at("mass_mode").get<std::string>();
    if (m == "target") c.mass_mode = MassMode::Target;
    else if (m == "penalty") c.mass_mode = MassMode::Penalty;
    else throw std::invalid_argument("unknown mass mode '" + m + "'");
  }
  c.mass_penalty = j.value("mass_penalty", c.mass_penalty);
  if (j.contains("initial")) {
    const auto v = j.at("initial").get<std::vector<double>>();
    c.initial = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  c.validate();
}

}  // namespace sill
