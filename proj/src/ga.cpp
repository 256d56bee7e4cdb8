#include "sillopt/ga.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "sillopt/io.hpp"

namespace sill {

void GaConfig::validate() const {
  if (population < 2) throw std::invalid_argument("GA population must be >= 2");
  if (generations < 1) throw std::invalid_argument("GA generations must be >= 1");
  if (crossover_probability < 0 || crossover_probability > 1) throw std::invalid_argument("crossover probability must be in [0, 1]");
  if (mutation_probability < 0 || mutation_probability > 1) throw std::invalid_argument("mutation probability must be in [0, 1]");
  if (tournament_size < 1 || tournament_size > population) throw std::invalid_argument("tournament size must be in [1, population]");
  if (elitism < 0 || elitism >= population) throw std::invalid_argument("elitism must be in [0, population)");
}

double fitness(Evaluator& evaluator, const DesignSpace& space, const ObjectiveContext& ctx, const Chromosome& c) {
  return -optimization_value(ctx.scaling, ctx.target, evaluator.evaluate(space.decode(c)));
}

std::size_t select(std::span<const double> fitnesses, int k, std::mt19937_64& rng) {
  if (fitnesses.empty()) throw std::invalid_argument("cannot select from an empty population");
  std::uniform_int_distribution<std::size_t> pick(0, fitnesses.size() - 1);
  std::size_t best = pick(rng);
  for (int i = 1; i < k; ++i) {
    const std::size_t cand = pick(rng);
    if (fitnesses[cand] > fitnesses[best]) best = cand;
  }
  return best;
}

std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& a, const Chromosome& b, int cut) {
  if (a.size() != b.size()) throw ArityError("parents differ in length");
  if (cut < 1 || cut >= a.size()) throw std::out_of_range("crossover cut must be in [1, arity - 1]");
  Chromosome c1 = a;
  Chromosome c2 = b;
  const auto tail = a.size() - cut;
  c1.tail(tail) = b.tail(tail);
  c2.tail(tail) = a.tail(tail);
  return {std::move(c1), std::move(c2)};
}

std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, double p, std::mt19937_64& rng) {
  if (a.size() != b.size()) throw ArityError("parents differ in length");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (a.size() < 2 || u(rng) >= p) return {a, b};
  std::uniform_int_distribution<int> cut(1, static_cast<int>(a.size()) - 1);
  return crossover_at(a, b, cut(rng));
}

Chromosome mutate(const Chromosome& c, const Eigen::VectorXi& level_counts, double p, std::mt19937_64& rng) {
  if (c.size() != level_counts.size()) throw ArityError("chromosome length does not match the design space");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Chromosome out = c;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (u(rng) < p) {
      std::uniform_int_distribution<int> level(0, level_counts[i] - 1);
      out[i] = level(rng);
    }
  }
  return out;
}

GaResult run_ga(const GaConfig& config, const DesignSpace& space, Evaluator& evaluator, const ObjectiveContext& ctx) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const Eigen::VectorXi levels = space.level_counts();

  // Each distinct chromosome is evaluated once per run.
  std::map<std::vector<int>, double> memo;
  GaResult result;
  auto score = [&](const Chromosome& c) {
    std::vector<int> key(c.data(), c.data() + c.size());
    if (const auto it = memo.find(key); it != memo.end()) return it->second;
    const double f = fitness(evaluator, space, ctx, c);
    ++result.evaluations;
    memo.emplace(std::move(key), f);
    return f;
  };

  std::vector<Chromosome> pop;
  pop.reserve(static_cast<std::size_t>(config.population));
  for (int i = 0; i < config.population; ++i) pop.push_back(random_grid_index(space, rng));

  result.best_fitness = -std::numeric_limits<double>::infinity();
  std::vector<double> fit(pop.size());
  for (int gen = 0; gen < config.generations; ++gen) {
    for (std::size_t i = 0; i < pop.size(); ++i) fit[i] = score(pop[i]);

    std::vector<std::size_t> rank(pop.size());
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });
    if (fit[rank[0]] > result.best_fitness) {
      result.best_fitness = fit[rank[0]];
      result.best = pop[rank[0]];
    }
    result.trace.push_back({gen, fit[rank[0]], std::accumulate(fit.begin(), fit.end(), 0.0) / static_cast<double>(fit.size())});
    if (gen + 1 == config.generations) break;

    std::vector<Chromosome> next;
    next.reserve(pop.size());
    for (int e = 0; e < config.elitism; ++e) next.push_back(pop[rank[static_cast<std::size_t>(e)]]);
    while (next.size() < pop.size()) {
      const auto& p1 = pop[select(fit, config.tournament_size, rng)];
      const auto& p2 = pop[select(fit, config.tournament_size, rng)];
      auto [c1, c2] = crossover(p1, p2, config.crossover_probability, rng);
      next.push_back(mutate(c1, levels, config.mutation_probability, rng));
      if (next.size() < pop.size()) next.push_back(mutate(c2, levels, config.mutation_probability, rng));
    }
    pop = std::move(next);
  }

  result.best_design = space.decode(result.best);
  result.best_objectives = evaluator.evaluate(result.best_design);
  return result;
}

std::string ga_trace_csv(const GaResult& result) {
  std::ostringstream os;
  os << "generation,best,mean\n";
  for (const auto& g : result.trace) {
    os << g.generation << ',' << io::format_double(g.best) << ',' << io::format_double(g.mean) << '\n';
  }
  return os.str();
}

void to_json(nlohmann::json& j, const GaConfig& c) {
  j = nlohmann::json{{"population", c.population},
                     {"generations", c.generations},
                     {"crossover_probability", c.crossover_probability},
                     {"mutation_probability", c.mutation_probability},
                     {"tournament_size", c.tournament_size},
                     {"elitism", c.elitism},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, GaConfig& c) {
  c.population = j.value("population", c.population);
  c.generations = j.value("generations", c.generations);
  c.crossover_probability = j.value("crossover_probability", c.crossover_probability);
  c.mutation_probability = j.value("mutation_probability", c.mutation_probability);
  c.tournament_size = j.value("tournament_size", c.tournament_size);
  c.elitism = j.value("elitism", c.elitism);
  c.seed = j.value("seed", c.seed);
  c.validate();
}

}  // namespace sill
