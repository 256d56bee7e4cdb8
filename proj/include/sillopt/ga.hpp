#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sillopt/design_space.hpp"
#include "sillopt/evaluator.hpp"
#include "sillopt/objective.hpp"

namespace sill {

/// Grid-index encoding shared with the RL action space and brute force.
using Chromosome = GridIndex;

/// Scaling and target that turn objectives into the shared optimization value.
struct ObjectiveContext {
  ScalingReference scaling;
  TargetSpec target;
};

struct GaConfig {
  int population = 50;
  int generations = 100;
  double crossover_probability = 0.8;
  double mutation_probability = 0.1;
  int tournament_size = 3;
  int elitism = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// -O(T) of the decoded design (higher is better).
double fitness(Evaluator& evaluator, const DesignSpace& space, const ObjectiveContext& ctx, const Chromosome& c);

/// Tournament of k uniform draws (with replacement); best fitness wins, ties
/// go to the earliest draw. Returns the winner's population index.
std::size_t select(std::span<const double> fitnesses, int k, std::mt19937_64& rng);

/// Single-point crossover at a fixed cut: children swap tails from position `cut`.
std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& a, const Chromosome& b, int cut);
/// With probability p, cut uniformly in [1, arity - 1]; otherwise copy the parents.
std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, double p, std::mt19937_64& rng);

/// Each gene is resampled uniformly over its levels with probability p.
Chromosome mutate(const Chromosome& c, const Eigen::VectorXi& level_counts, double p, std::mt19937_64& rng);

struct GenerationStats {
  int generation = 0;
  double best = 0.0;
  double mean = 0.0;
};

struct GaResult {
  Chromosome best;
  ThicknessVector best_design;
  double best_fitness = 0.0;
  ObjectiveTriple best_objectives;
  std::vector<GenerationStats> trace;
  std::uint64_t evaluations = 0;
};

/// Generational GA with elitism. Deterministic for a fixed seed.
GaResult run_ga(const GaConfig& config, const DesignSpace& space, Evaluator& evaluator, const ObjectiveContext& ctx);

std::string ga_trace_csv(const GaResult& result);

void to_json(nlohmann::json& j, const GaConfig& c);
void from_json(const nlohmann::json& j, GaConfig& c);

}  // namespace sill
