#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sillopt/oracle.hpp"
#include "sillopt/protocol.hpp"
#include "sillopt/surrogate.hpp"

namespace sill {

/// Backend that maps a design to its objectives.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual ObjectiveTriple evaluate(const ThicknessVector& t) = 0;
  virtual std::string name() const = 0;
  virtual std::uint64_t calls() const { return calls_; }

 protected:
  std::uint64_t calls_ = 0;
};

class OracleEvaluator : public Evaluator {
 public:
  explicit OracleEvaluator(OracleConfig config);
  ObjectiveTriple evaluate(const ThicknessVector& t) override;
  std::string name() const override { return "oracle"; }
  const OracleConfig& config() const { return config_; }

 private:
  OracleConfig config_;
};

class SurrogateEvaluator : public Evaluator {
 public:
  explicit SurrogateEvaluator(std::shared_ptr<const SurrogateModel> model);
  ObjectiveTriple evaluate(const ThicknessVector& t) override;
  std::string name() const override { return "surrogate"; }
  const SurrogateModel& model() const { return *model_; }

 private:
  std::shared_ptr<const SurrogateModel> model_;
};

/// Delegates to an external solver process over the wire protocol.
class ExternalEvaluator : public Evaluator {
 public:
  ExternalEvaluator(std::string endpoint, std::chrono::milliseconds timeout);
  ObjectiveTriple evaluate(const ThicknessVector& t) override;
  std::string name() const override { return "external"; }

 private:
  ExternalClient client_;
};

/// Memoizes a deterministic backend, keyed on the exact bit pattern of the design.
class CachingEvaluator : public Evaluator {
 public:
  explicit CachingEvaluator(std::shared_ptr<Evaluator> inner);
  ObjectiveTriple evaluate(const ThicknessVector& t) override;
  std::string name() const override { return inner_->name(); }
  std::size_t cache_size() const { return cache_.size(); }

 private:
  std::shared_ptr<Evaluator> inner_;
  std::map<std::vector<double>, ObjectiveTriple> cache_;
};

}  // namespace sill
