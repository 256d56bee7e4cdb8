#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

// Dense multilayer perceptron with ReLU hidden layers, reverse-mode gradients
// with respect to both parameters and inputs, Adam, and a finite-difference
// gradient checker. Batches are stored column-wise: one sample per column.

namespace sill::nn {

enum class Activation { Identity, ReLU, Softmax };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

template <typename Scalar>
class DenseNetwork {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Layer {
    Matrix weight;  // out x in
    Vector bias;
  };

  struct Gradients {
    std::vector<Layer> layers;
    Matrix input;  // dL/dx, one column per sample
  };

  DenseNetwork() = default;

  /// Glorot-uniform weights, zero biases.
  DenseNetwork(const std::vector<int>& sizes, Activation output, std::uint64_t seed) : output_(output) {
    if (sizes.size() < 2) throw std::invalid_argument("network needs at least input and output sizes");
    std::mt19937_64 rng(seed);
    for (std::size_t l = 1; l < sizes.size(); ++l) {
      if (sizes[l - 1] <= 0 || sizes[l] <= 0) throw std::invalid_argument("layer sizes must be positive");
      const Scalar limit = std::sqrt(Scalar(6) / Scalar(sizes[l - 1] + sizes[l]));
      std::uniform_real_distribution<double> u(-double(limit), double(limit));
      Layer layer{Matrix(sizes[l], sizes[l - 1]), Vector::Zero(sizes[l])};
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = Scalar(u(rng));
      layers_.push_back(std::move(layer));
    }
  }

  DenseNetwork(std::vector<Layer> layers, Activation output) : layers_(std::move(layers)), output_(output) {
    if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (layers_[l].bias.size() != layers_[l].weight.rows()) throw std::invalid_argument("bias size mismatch");
      if (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows()) {
        throw std::invalid_argument("incompatible consecutive layer sizes");
      }
    }
  }

  int input_size() const { return static_cast<int>(layers_.front().weight.cols()); }
  int output_size() const { return static_cast<int>(layers_.back().weight.rows()); }
  Activation output_activation() const { return output_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  std::vector<int> sizes() const {
    std::vector<int> s{input_size()};
    for (const auto& l : layers_) s.push_back(static_cast<int>(l.weight.rows()));
    return s;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  bool all_finite() const {
    for (const auto& l : layers_) {
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
  }

  Matrix forward_batch(const Matrix& x) const {
    check_input(x.rows());
    Matrix a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = (layers_[l].weight * a).colwise() + layers_[l].bias;
      a = l + 1 < layers_.size() ? Matrix(z.cwiseMax(Scalar(0))) : apply_output(std::move(z));
    }
    return a;
  }

  Vector forward(const Vector& x) const { return forward_batch(x); }

  /// Reverse-mode pass. `upstream` is dL/dy for each column of `x`;
  /// parameter gradients are summed over the batch.
  Gradients backward(const Matrix& x, const Matrix& upstream) const {
    check_input(x.rows());
    if (upstream.rows() != output_size() || upstream.cols() != x.cols()) {
      throw std::invalid_argument("upstream gradient shape does not match network output");
    }
    // Post-activation values per layer; pre-activation sign is recoverable
    // from ReLU output (a > 0 iff z > 0).
    std::vector<Matrix> acts;
    acts.reserve(layers_.size() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = (layers_[l].weight * acts.back()).colwise() + layers_[l].bias;
      acts.push_back(l + 1 < layers_.size() ? Matrix(z.cwiseMax(Scalar(0))) : apply_output(std::move(z)));
    }

    Matrix delta = upstream;
    if (output_ == Activation::Softmax) {
      const Matrix& p = acts.back();
      const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> dot = (p.array() * upstream.array()).colwise().sum();
      delta = p.array() * (upstream.rowwise() - dot).array();
    } else if (output_ == Activation::ReLU) {
      delta = delta.array() * (acts.back().array() > Scalar(0)).template cast<Scalar>();
    }

    Gradients g;
    g.layers.resize(layers_.size());
    for (std::size_t l = layers_.size(); l-- > 0;) {
      g.layers[l].weight.noalias() = delta * acts[l].transpose();
      g.layers[l].bias = delta.rowwise().sum();
      Matrix prev = layers_[l].weight.transpose() * delta;
      if (l > 0) prev = prev.array() * (acts[l].array() > Scalar(0)).template cast<Scalar>();
      delta = std::move(prev);
    }
    g.input = std::move(delta);
    return g;
  }

 private:
  void check_input(Eigen::Index rows) const {
    if (layers_.empty()) throw std::logic_error("network has no layers");
    if (rows != input_size()) {
      throw std::invalid_argument("input has " + std::to_string(rows) + " entries, network expects " +
                                  std::to_string(input_size()));
    }
  }

  Matrix apply_output(Matrix z) const {
    switch (output_) {
      case Activation::Identity: return z;
      case Activation::ReLU: return z.cwiseMax(Scalar(0));
      case Activation::Softmax: {
        const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> top = z.colwise().maxCoeff();
        Matrix e = (z.rowwise() - top).array().exp();
        const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> sum = e.colwise().sum();
        return e.array().rowwise() / sum.array();
      }
    }
    return z;
  }

  std::vector<Layer> layers_;
  Activation output_ = Activation::Identity;
};

using DenseNetworkd = DenseNetwork<double>;

/// Numerically stable softmax of one logit vector.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = logits.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (logits.array() - top).exp();
  return e / e.sum();
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of a single parameter block.
template <typename P, typename G, typename M>
void adam_update(Eigen::MatrixBase<P>& param, const Eigen::MatrixBase<G>& grad, Eigen::MatrixBase<M>& m,
                 Eigen::MatrixBase<M>& v, long step, const AdamConfig& cfg) {
  using Scalar = typename P::Scalar;
  const Scalar b1 = Scalar(cfg.beta1);
  const Scalar b2 = Scalar(cfg.beta2);
  m = b1 * m + (Scalar(1) - b1) * grad;
  v = b2 * v + (Scalar(1) - b2) * grad.cwiseAbs2();
  const Scalar c1 = Scalar(1) - std::pow(b1, Scalar(step));
  const Scalar c2 = Scalar(1) - std::pow(b2, Scalar(step));
  param.array() -= Scalar(cfg.learning_rate) * (m.array() / c1) / ((v.array() / c2).sqrt() + Scalar(cfg.epsilon));
}

template <typename Scalar>
struct AdamState {
  using Layer = typename DenseNetwork<Scalar>::Layer;

  AdamConfig config;
  long step = 0;
  std::vector<Layer> m;
  std::vector<Layer> v;

  AdamState() = default;
  AdamState(const DenseNetwork<Scalar>& net, AdamConfig cfg) : config(cfg) {
    for (const auto& l : net.layers()) {
      Layer zero{DenseNetwork<Scalar>::Matrix::Zero(l.weight.rows(), l.weight.cols()),
                 DenseNetwork<Scalar>::Vector::Zero(l.bias.size())};
      m.push_back(zero);
      v.push_back(zero);
    }
  }
};

/// Apply one Adam step in place. Throws std::domain_error on a non-finite
/// gradient, leaving parameters and state untouched.
template <typename Scalar>
void adam_step(DenseNetwork<Scalar>& net, const typename DenseNetwork<Scalar>::Gradients& grads,
               AdamState<Scalar>& state) {
  auto& layers = net.layers();
  if (grads.layers.size() != layers.size() || state.m.size() != layers.size()) {
    throw std::invalid_argument("gradient / optimizer state shape does not match network");
  }
  for (const auto& g : grads.layers) {
    if (!g.weight.allFinite() || !g.bias.allFinite()) throw std::domain_error("non-finite gradient");
  }
  ++state.step;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    adam_update(layers[l].weight, grads.layers[l].weight, state.m[l].weight, state.v[l].weight, state.step,
                state.config);
    adam_update(layers[l].bias, grads.layers[l].bias, state.m[l].bias, state.v[l].bias, state.step, state.config);
  }
}

template <typename Scalar>
Scalar gradient_norm(const typename DenseNetwork<Scalar>::Gradients& g) {
  Scalar sq = 0;
  for (const auto& l : g.layers) sq += l.weight.squaredNorm() + l.bias.squaredNorm();
  return std::sqrt(sq);
}

/// Rescale so the global parameter-gradient norm is at most `max_norm`.
template <typename Scalar>
Scalar clip_gradient_norm(typename DenseNetwork<Scalar>::Gradients& g, Scalar max_norm) {
  const Scalar norm = gradient_norm<Scalar>(g);
  if (norm > max_norm && norm > Scalar(0)) {
    const Scalar f = max_norm / norm;
    for (auto& l : g.layers) {
      l.weight *= f;
      l.bias *= f;
    }
  }
  return norm;
}

// ---------------------------------------------------------------------------
// Gradient check

struct GradientCheckReport {
  double max_param_error = 0.0;
  double max_input_error = 0.0;
  std::size_t entries_checked = 0;
  bool passed = false;
};

/// Compare analytic gradients of loss(net(x)) against central differences
/// over every parameter and every input entry.
///
/// `loss(y)` returns {L, dL/dy}. The relative error of one entry is
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
template <typename Scalar, typename Loss>
GradientCheckReport gradient_check(const DenseNetwork<Scalar>& net, const typename DenseNetwork<Scalar>::Vector& x,
                                   Loss&& loss, Scalar h, Scalar tol, Scalar floor = Scalar(1e-8)) {
  using Vector = typename DenseNetwork<Scalar>::Vector;
  const auto value_at = [&](const DenseNetwork<Scalar>& n, const Vector& input) {
    return loss(n.forward(input)).first;
  };
  const auto rel = [&](Scalar a, Scalar b) {
    return double(std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor}));
  };

  const Vector y = net.forward(x);
  const auto analytic = net.backward(x, loss(y).second);

  GradientCheckReport report;
  DenseNetwork<Scalar> probe = net;
  for (std::size_t l = 0; l < probe.layers().size(); ++l) {
    auto check_block = [&](auto& block, const auto& grad_block) {
      for (Eigen::Index i = 0; i < block.size(); ++i) {
        Scalar& p = block.data()[i];
        const Scalar saved = p;
        p = saved + h;
        const Scalar plus = value_at(probe, x);
        p = saved - h;
        const Scalar minus = value_at(probe, x);
        p = saved;
        const Scalar numeric = (plus - minus) / (Scalar(2) * h);
        report.max_param_error = std::max(report.max_param_error, rel(grad_block.data()[i], numeric));
        ++report.entries_checked;
      }
    };
    check_block(probe.layers()[l].weight, analytic.layers[l].weight);
    check_block(probe.layers()[l].bias, analytic.layers[l].bias);
  }

  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const Scalar plus = value_at(net, xp);
    xp[i] = x[i] - h;
    const Scalar minus = value_at(net, xp);
    xp[i] = x[i];
    const Scalar numeric = (plus - minus) / (Scalar(2) * h);
    report.max_input_error = std::max(report.max_input_error, rel(analytic.input(i, 0), numeric));
    ++report.entries_checked;
  }
  report.passed = report.max_param_error <= double(tol) && report.max_input_error <= double(tol);
  return report;
}

// ---------------------------------------------------------------------------
// Serialization (versioned JSON, row-major weights)

inline constexpr int kModelFormatVersion = 1;

template <typename Scalar>
nlohmann::json to_json_value(const DenseNetwork<Scalar>& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(double(l.weight(r, c)));
    }
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back({{"weight", w}, {"bias", b}});
  }
  return {{"format", "sillopt.dense_network"},
          {"version", kModelFormatVersion},
          {"sizes", net.sizes()},
          {"hidden_activation", "relu"},
          {"output_activation", to_string(net.output_activation())},
          {"layers", layers}};
}

template <typename Scalar>
DenseNetwork<Scalar> network_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "sillopt.dense_network") throw std::runtime_error("not a dense network document");
  if (j.value("version", 0) != kModelFormatVersion) {
    throw std::runtime_error("unsupported network format version " + std::to_string(j.value("version", 0)));
  }
  if (j.value("hidden_activation", "") != "relu") throw std::runtime_error("only relu hidden layers are supported");
  const auto sizes = j.at("sizes").get<std::vector<int>>();
  const auto& layers_json = j.at("layers");
  if (sizes.size() < 2 || layers_json.size() != sizes.size() - 1) throw std::runtime_error("layer count mismatch");
  std::vector<typename DenseNetwork<Scalar>::Layer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto w = layers_json[l].at("weight").get<std::vector<double>>();
    const auto b = layers_json[l].at("bias").get<std::vector<double>>();
    const int rows = sizes[l + 1];
    const int cols = sizes[l];
    if (w.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) ||
        b.size() != static_cast<std::size_t>(rows)) {
      throw std::runtime_error("layer " + std::to_string(l) + " has the wrong number of parameters");
    }
    typename DenseNetwork<Scalar>::Layer layer{typename DenseNetwork<Scalar>::Matrix(rows, cols),
                                               typename DenseNetwork<Scalar>::Vector(rows)};
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) layer.weight(r, c) = Scalar(w[static_cast<std::size_t>(r * cols + c)]);
      layer.bias[r] = Scalar(b[static_cast<std::size_t>(r)]);
    }
    layers.push_back(std::move(layer));
  }
  return DenseNetwork<Scalar>(std::move(layers), activation_from_string(j.at("output_activation").get<std::string>()));
}

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::Softmax: return "softmax";
  }
  return "identity";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::ReLU;
  if (s == "softmax") return Activation::Softmax;
  throw std::runtime_error("unknown activation '" + s + "'");
}

}  // namespace sill::nn
