#include "sillopt/evaluator.hpp"

namespace sill {

OracleEvaluator::OracleEvaluator(OracleConfig config) : config_(std::move(config)) { config_.validate(); }

ObjectiveTriple OracleEvaluator::evaluate(const ThicknessVector& t) {
  ++calls_;
  return sill::evaluate(config_, t);
}

SurrogateEvaluator::SurrogateEvaluator(std::shared_ptr<const SurrogateModel> model) : model_(std::move(model)) {
  if (!model_) throw std::invalid_argument("surrogate evaluator needs a model");
}

ObjectiveTriple SurrogateEvaluator::evaluate(const ThicknessVector& t) {
  ++calls_;
  return model_->predict(t);
}

ExternalEvaluator::ExternalEvaluator(std::string endpoint, std::chrono::milliseconds timeout)
    : client_(std::move(endpoint), timeout) {}

ObjectiveTriple ExternalEvaluator::evaluate(const ThicknessVector& t) {
  ++calls_;
  return client_.query(t);
}

CachingEvaluator::CachingEvaluator(std::shared_ptr<Evaluator> inner) : inner_(std::move(inner)) {
  if (!inner_) throw std::invalid_argument("caching evaluator needs a backend");
}

ObjectiveTriple CachingEvaluator::evaluate(const ThicknessVector& t) {
  ++calls_;
  std::vector<double> key(t.data(), t.data() + t.size());
  if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
  auto result = inner_->evaluate(t);
  cache_.emplace(std::move(key), result);
  return result;
}

}  // namespace sill
