#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "noma/field.hpp"
#include "noma/meta.hpp"
#include "noma/task.hpp"

namespace noma {

// One candidate configuration: field architecture, meta-learning schedule,
// and loss weights, evolved jointly.
struct Genome {
  int hash_levels = 8;
  int log2_table_size = 14;
  int features_per_level = 2;
  int hidden_width = 32;
  int hidden_layers = 2;
  int meta_steps = 60;
  int inner_iters = 15;
  float eta = 1e-2f;
  float beta = 0.1f;
  float per_level_scale = 1.45f;
  float lambda_d = 0.1f;
  float lambda_sigma = 1e-4f;
  DensityActivation density_activation = DensityActivation::kExpClamped;

  bool operator==(const Genome&) const = default;
};

struct IntRange {
  int lo = 0, hi = 0;
};
struct RealRange {
  float lo = 0.f, hi = 0.f;
};

// Declared bounds for every gene; search operators never leave them.
struct GeneDomains {
  IntRange hash_levels{2, 8};
  IntRange log2_table_size{8, 14};
  std::vector<int> features_per_level{1, 2};
  std::vector<int> hidden_width{8, 16, 32};
  IntRange hidden_layers{1, 2};
  IntRange meta_steps{15, 60};
  IntRange inner_iters{5, 15};
  RealRange eta{1e-3f, 3e-2f};
  RealRange beta{0.02f, 0.5f};
  RealRange per_level_scale{1.25f, 1.6f};
  RealRange lambda_d{0.01f, 0.5f};
  RealRange lambda_sigma{1e-5f, 1e-3f};
};

constexpr int kGenomeGeneCount = 13;

FieldArch arch_of(const Genome& g);
MetaConfig meta_config_of(const Genome& g, const InnerOptions& inner, std::uint64_t seed);

Genome random_genome(const GeneDomains& domains, std::mt19937& rng);
// The reference configuration: architecture and budget genes at their domain
// caps, remaining genes at library defaults (clamped into domain).
Genome default_genome(const GeneDomains& domains);
bool genome_in_domain(const Genome& g, const GeneDomains& domains);

// Both objectives are minimized.
struct Evaluation {
  double time_per_iter = 0.0;  // scaled per-iteration training cost, seconds
  double cd = 0.0;             // mean test-task Chamfer distance, meters
};

struct SearchConfig {
  int population = 8;
  int generations = 5;
  std::uint64_t seed = 0;
  InnerOptions inner{64, 0.25f, 16, {}};  // shared by meta-training and adaptation
  int adapt_iters = 60;                   // test-time adaptation budget per task
  int grid_resolution = 32;               // bake resolution for evaluation meshes
  int metric_samples = 2048;              // surface samples per mesh for CD
  double time_scale = 2.5e-10;            // seconds per modeled arithmetic op
  GeneDomains domains;
  float mutation_rate = -1.f;  // < 0 -> 1/kGenomeGeneCount
};

// Deterministic per-iteration training cost: arithmetic operations of one
// forward+backward+update pass over a ray batch, times cfg.time_scale.
// A model, not a measurement, so search trajectories are seed-reproducible.
double iter_cost_model(const FieldArch& arch, const InnerOptions& inner);

// Meta-train on the train split with the genome's own config, adapt on each
// test task for a fixed budget, bake a mesh, and score mean Chamfer distance
// against ground truth. Non-finite training -> cd penalty 1e6.
Evaluation evaluate_genome(const Genome& g, const std::vector<Task>& train_tasks,
                           const std::vector<Task>& test_tasks, std::uint64_t eval_seed,
                           const SearchConfig& cfg);

// Fronts of mutually non-dominated indices, best first; every index appears
// exactly once (minimization in both objectives).
std::vector<std::vector<std::size_t>> non_dominated_sort(const std::vector<Evaluation>& evals);

// NSGA-II crowding over one front's evaluations; boundaries +inf, zero
// objective range treated as range 1.
std::vector<double> crowding_distance(const std::vector<Evaluation>& front);

struct Population {
  std::vector<Genome> genomes;
  std::vector<Evaluation> evals;
};

// Binary tournament on (front rank, crowding), uniform crossover for
// integer/categorical genes, blend crossover for real genes, per-gene reset
// mutation. Returns |pop| children, all within domain.
std::vector<Genome> make_offspring(const Population& pop, const GeneDomains& domains,
                                   std::mt19937& rng, float mutation_rate);

// One elitist generation: evaluate offspring, then select the best
// |pop| of parents+children by (front, crowding). Population size preserved.
Population evolve(const Population& pop, const GeneDomains& domains, std::mt19937& rng,
                  const std::function<Evaluation(const Genome&)>& evaluate,
                  float mutation_rate = -1.f);

// Index of the knee of a front: objectives normalized to [0,1] over the
// front, then maximum perpendicular distance to the chord between the two
// normalized extremes; ties (and collinear fronts) resolve to smallest cd.
std::size_t knee_index(const std::vector<Evaluation>& front);

struct SearchResult {
  Population final_population;
  std::vector<std::size_t> front0;  // indices into final_population
  Genome knee;
  Evaluation knee_eval;
  ParamVector theta;  // meta-learned parameters for the knee genome
  std::vector<std::string> log_lines;  // "gen,idx,<13 genes>,time,cd"
};

SearchResult run_search(const std::vector<Task>& train_tasks, const std::vector<Task>& test_tasks,
                        const SearchConfig& cfg);

// "gen,idx," + 13 comma-separated gene values + ",time,cd".
std::string search_log_line(int gen, std::size_t idx, const Genome& g, const Evaluation& e);

}  // namespace noma
