#include "noma/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "noma/density_grid.hpp"
#include "noma/errors.hpp"
#include "noma/marching_cubes.hpp"
#include "noma/mesh.hpp"
#include "noma/metrics.hpp"

namespace noma {
namespace {

constexpr double kPenaltyCd = 1e6;

std::uint32_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t s = base * 0x9E3779B97F4A7C15ULL + salt * 0xD1B54A32D192ED03ULL + 1;
  s ^= s >> 31;
  s *= 0x94D049BB133111EBULL;
  s ^= s >> 29;
  return static_cast<std::uint32_t>(s ^ (s >> 32));
}

int uniform_int(IntRange r, std::mt19937& rng) {
  return std::uniform_int_distribution<int>(r.lo, r.hi)(rng);
}

int uniform_choice(const std::vector<int>& options, std::mt19937& rng) {
  return options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
}

float uniform_real(RealRange r, std::mt19937& rng) {
  return std::uniform_real_distribution<float>(r.lo, r.hi)(rng);
}

int clamp_int(int v, IntRange r) { return std::clamp(v, r.lo, r.hi); }
float clamp_real(float v, RealRange r) { return std::clamp(v, r.lo, r.hi); }

int nearest_choice(int v, const std::vector<int>& options) {
  int best = options.front();
  for (int o : options)
    if (std::abs(o - v) < std::abs(best - v)) best = o;
  return best;
}

bool all_finite(const ParamVector& v) {
  for (float x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// a dominates b under minimization of both objectives.
bool dominates(const Evaluation& a, const Evaluation& b) {
  return a.time_per_iter <= b.time_per_iter && a.cd <= b.cd &&
         (a.time_per_iter < b.time_per_iter || a.cd < b.cd);
}

struct RankInfo {
  std::vector<int> rank;
  std::vector<double> crowd;
};

RankInfo rank_population(const std::vector<Evaluation>& evals) {
  RankInfo info;
  info.rank.assign(evals.size(), 0);
  info.crowd.assign(evals.size(), 0.0);
  auto fronts = non_dominated_sort(evals);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    std::vector<Evaluation> sub;
    sub.reserve(fronts[f].size());
    for (std::size_t idx : fronts[f]) sub.push_back(evals[idx]);
    auto cd = crowding_distance(sub);
    for (std::size_t k = 0; k < fronts[f].size(); ++k) {
      info.rank[fronts[f][k]] = static_cast<int>(f);
      info.crowd[fronts[f][k]] = cd[k];
    }
  }
  return info;
}

std::size_t tournament(const RankInfo& info, std::size_t n, std::mt19937& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t a = pick(rng), b = pick(rng);
  if (info.rank[a] != info.rank[b]) return info.rank[a] < info.rank[b] ? a : b;
  if (info.crowd[a] != info.crowd[b]) return info.crowd[a] > info.crowd[b] ? a : b;
  return a;
}

Genome crossover(const Genome& a, const Genome& b, std::mt19937& rng) {
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<float> blend(0.f, 1.f);
  auto pick_int = [&](int x, int y) { return coin(rng) ? x : y; };
  auto mix_real = [&](float x, float y) {
    float u = blend(rng);
    return x + u * (y - x);  // exact when x == y
  };
  Genome c;
  c.hash_levels = pick_int(a.hash_levels, b.hash_levels);
  c.log2_table_size = pick_int(a.log2_table_size, b.log2_table_size);
  c.features_per_level = pick_int(a.features_per_level, b.features_per_level);
  c.hidden_width = pick_int(a.hidden_width, b.hidden_width);
  c.hidden_layers = pick_int(a.hidden_layers, b.hidden_layers);
  c.meta_steps = pick_int(a.meta_steps, b.meta_steps);
  c.inner_iters = pick_int(a.inner_iters, b.inner_iters);
  c.eta = mix_real(a.eta, b.eta);
  c.beta = mix_real(a.beta, b.beta);
  c.per_level_scale = mix_real(a.per_level_scale, b.per_level_scale);
  c.lambda_d = mix_real(a.lambda_d, b.lambda_d);
  c.lambda_sigma = mix_real(a.lambda_sigma, b.lambda_sigma);
  c.density_activation = coin(rng) ? a.density_activation : b.density_activation;
  return c;
}

void mutate(Genome& g, const GeneDomains& d, float rate, std::mt19937& rng) {
  std::bernoulli_distribution hit(rate);
  if (hit(rng)) g.hash_levels = uniform_int(d.hash_levels, rng);
  if (hit(rng)) g.log2_table_size = uniform_int(d.log2_table_size, rng);
  if (hit(rng)) g.features_per_level = uniform_choice(d.features_per_level, rng);
  if (hit(rng)) g.hidden_width = uniform_choice(d.hidden_width, rng);
  if (hit(rng)) g.hidden_layers = uniform_int(d.hidden_layers, rng);
  if (hit(rng)) g.meta_steps = uniform_int(d.meta_steps, rng);
  if (hit(rng)) g.inner_iters = uniform_int(d.inner_iters, rng);
  if (hit(rng)) g.eta = uniform_real(d.eta, rng);
  if (hit(rng)) g.beta = uniform_real(d.beta, rng);
  if (hit(rng)) g.per_level_scale = uniform_real(d.per_level_scale, rng);
  if (hit(rng)) g.lambda_d = uniform_real(d.lambda_d, rng);
  if (hit(rng)) g.lambda_sigma = uniform_real(d.lambda_sigma, rng);
  if (hit(rng))
    g.density_activation = std::bernoulli_distribution(0.5)(rng) ? DensityActivation::kExpClamped
                                                                 : DensityActivation::kSoftplus;
}

}  // namespace

FieldArch arch_of(const Genome& g) {
  FieldArch arch;
  arch.hash_levels = g.hash_levels;
  arch.features_per_level = g.features_per_level;
  arch.log2_table_size = g.log2_table_size;
  arch.per_level_scale = g.per_level_scale;
  arch.hidden_width = g.hidden_width;
  arch.hidden_layers = g.hidden_layers;
  arch.density_activation = g.density_activation;
  return arch;
}

MetaConfig meta_config_of(const Genome& g, const InnerOptions& inner, std::uint64_t seed) {
  MetaConfig cfg;
  cfg.N = g.meta_steps;
  cfg.q = g.inner_iters;
  cfg.eta = g.eta;
  cfg.beta = g.beta;
  cfg.seed = seed;
  cfg.inner = inner;
  cfg.inner.weights.lambda_d = g.lambda_d;
  cfg.inner.weights.lambda_sigma = g.lambda_sigma;
  return cfg;
}

Genome random_genome(const GeneDomains& d, std::mt19937& rng) {
  Genome g;
  g.hash_levels = uniform_int(d.hash_levels, rng);
  g.log2_table_size = uniform_int(d.log2_table_size, rng);
  g.features_per_level = uniform_choice(d.features_per_level, rng);
  g.hidden_width = uniform_choice(d.hidden_width, rng);
  g.hidden_layers = uniform_int(d.hidden_layers, rng);
  g.meta_steps = uniform_int(d.meta_steps, rng);
  g.inner_iters = uniform_int(d.inner_iters, rng);
  g.eta = uniform_real(d.eta, rng);
  g.beta = uniform_real(d.beta, rng);
  g.per_level_scale = uniform_real(d.per_level_scale, rng);
  g.lambda_d = uniform_real(d.lambda_d, rng);
  g.lambda_sigma = uniform_real(d.lambda_sigma, rng);
  g.density_activation = std::bernoulli_distribution(0.5)(rng) ? DensityActivation::kExpClamped
                                                               : DensityActivation::kSoftplus;
  return g;
}

Genome default_genome(const GeneDomains& d) {
  Genome g;  // member initializers hold the library defaults
  g.hash_levels = clamp_int(g.hash_levels, d.hash_levels);
  g.log2_table_size = clamp_int(g.log2_table_size, d.log2_table_size);
  g.features_per_level = nearest_choice(g.features_per_level, d.features_per_level);
  g.hidden_width = nearest_choice(g.hidden_width, d.hidden_width);
  g.hidden_layers = clamp_int(g.hidden_layers, d.hidden_layers);
  g.meta_steps = d.meta_steps.hi;
  g.inner_iters = d.inner_iters.hi;
  g.eta = clamp_real(g.eta, d.eta);
  g.beta = clamp_real(g.beta, d.beta);
  g.per_level_scale = clamp_real(g.per_level_scale, d.per_level_scale);
  g.lambda_d = clamp_real(g.lambda_d, d.lambda_d);
  g.lambda_sigma = clamp_real(g.lambda_sigma, d.lambda_sigma);
  return g;
}

bool genome_in_domain(const Genome& g, const GeneDomains& d) {
  auto in_int = [](int v, IntRange r) { return v >= r.lo && v <= r.hi; };
  auto in_real = [](float v, RealRange r) { return v >= r.lo && v <= r.hi; };
  auto in_set = [](int v, const std::vector<int>& s) {
    return std::find(s.begin(), s.end(), v) != s.end();
  };
  return in_int(g.hash_levels, d.hash_levels) && in_int(g.log2_table_size, d.log2_table_size) &&
         in_set(g.features_per_level, d.features_per_level) &&
         in_set(g.hidden_width, d.hidden_width) && in_int(g.hidden_layers, d.hidden_layers) &&
         in_int(g.meta_steps, d.meta_steps) && in_int(g.inner_iters, d.inner_iters) &&
         in_real(g.eta, d.eta) && in_real(g.beta, d.beta) &&
         in_real(g.per_level_scale, d.per_level_scale) && in_real(g.lambda_d, d.lambda_d) &&
         in_real(g.lambda_sigma, d.lambda_sigma);
}

double iter_cost_model(const FieldArch& arch, const InnerOptions& inner) {
  const double L = arch.hash_levels, F = arch.features_per_level;
  const double W = arch.hidden_width, H = arch.hidden_layers;
  const double in = L * F;
  // Encoder: 8 corners per level, hash + gather + trilinear blend.
  const double encode = L * 8.0 * (2.0 * F + 10.0);
  // MLP multiply-accumulates, two ops each, plus activations.
  const double mlp = 2.0 * (in * W + std::max(H - 1.0, 0.0) * W * W + 4.0 * W) + H * W;
  // Backward roughly doubles the forward work.
  const double per_point = 3.0 * (encode + mlp);
  const double points = static_cast<double>(inner.rays_per_iter) * inner.samples_per_ray;
  // Dense first-moment/second-moment update over every parameter.
  const double adam = 10.0 * static_cast<double>(param_count(arch));
  return points * per_point + adam;
}

Evaluation evaluate_genome(const Genome& g, const std::vector<Task>& train_tasks,
                           const std::vector<Task>& test_tasks, std::uint64_t eval_seed,
                           const SearchConfig& cfg) {
  if (train_tasks.empty() || test_tasks.empty())
    throw DataError("evaluate_genome: empty task set");
  const FieldArch arch = arch_of(g);
  Evaluation ev;
  ev.time_per_iter = cfg.time_scale * iter_cost_model(arch, cfg.inner);

  MetaConfig meta_cfg = meta_config_of(g, cfg.inner, eval_seed);
  ParamVector theta = meta_train(train_tasks, arch, meta_cfg);
  if (!all_finite(theta)) {
    ev.cd = kPenaltyCd;
    return ev;
  }

  InnerOptions adapt_opts = meta_cfg.inner;
  double cd_sum = 0.0;
  for (std::size_t i = 0; i < test_tasks.size(); ++i) {
    const Task& task = test_tasks[i];
    std::mt19937 rng(mix_seed(eval_seed, 0x7E57ULL + i));
    ParamVector adapted =
        inner_adapt(theta, arch, task, cfg.adapt_iters, g.eta, rng, adapt_opts);
    double task_cd = kPenaltyCd;
    if (all_finite(adapted)) {
      DensityGrid grid = refresh_grid(arch, adapted, cfg.grid_resolution);
      Mesh mesh = marching_cubes(grid, choose_iso(grid));
      if (!mesh.triangles.empty()) {
        Box3 box = task.object_box();
        Mesh metric = transformed(mesh, task.gt_size, Pose{{}, box.min});
        auto rec = sample_surface(metric, cfg.metric_samples, mix_seed(eval_seed, 0xAB1ULL + i));
        auto gt = sample_surface(task.gt_mesh, cfg.metric_samples, mix_seed(eval_seed, 0xCB1ULL + i));
        task_cd = chamfer(rec, gt);
      }
    }
    cd_sum += task_cd;
  }
  ev.cd = cd_sum / static_cast<double>(test_tasks.size());
  if (!std::isfinite(ev.cd)) ev.cd = kPenaltyCd;
  return ev;
}

std::vector<std::vector<std::size_t>> non_dominated_sort(const std::vector<Evaluation>& evals) {
  const std::size_t n = evals.size();
  std::vector<std::vector<std::size_t>> fronts;
  if (n == 0) return fronts;
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<int> count(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (dominates(evals[i], evals[j]))
        dominated[i].push_back(j);
      else if (dominates(evals[j], evals[i]))
        ++count[i];
    }
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i)
    if (count[i] == 0) current.push_back(i);
  while (!current.empty()) {
    fronts.push_back(current);
    std::vector<std::size_t> next;
    for (std::size_t i : current)
      for (std::size_t j : dominated[i])
        if (--count[j] == 0) next.push_back(j);
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(const std::vector<Evaluation>& front) {
  const std::size_t n = front.size();
  if (n == 0) throw DataError("crowding_distance: empty front");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), kInf);
    return dist;
  }
  auto accumulate_axis = [&](auto key) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return key(front[a]) < key(front[b]); });
    double range = key(front[order.back()]) - key(front[order.front()]);
    if (range <= 0.0) range = 1.0;
    dist[order.front()] = kInf;
    dist[order.back()] = kInf;
    for (std::size_t k = 1; k + 1 < n; ++k)
      if (dist[order[k]] != kInf)
        dist[order[k]] += (key(front[order[k + 1]]) - key(front[order[k - 1]])) / range;
  };
  accumulate_axis([](const Evaluation& e) { return e.time_per_iter; });
  accumulate_axis([](const Evaluation& e) { return e.cd; });
  return dist;
}

std::vector<Genome> make_offspring(const Population& pop, const GeneDomains& domains,
                                   std::mt19937& rng, float mutation_rate) {
  if (pop.genomes.size() != pop.evals.size() || pop.genomes.empty())
    throw DataError("make_offspring: population and evaluations differ");
  if (mutation_rate < 0.f) mutation_rate = 1.f / kGenomeGeneCount;
  RankInfo info = rank_population(pop.evals);
  std::vector<Genome> children;
  children.reserve(pop.genomes.size());
  for (std::size_t c = 0; c < pop.genomes.size(); ++c) {
    std::size_t p1 = tournament(info, pop.genomes.size(), rng);
    std::size_t p2 = tournament(info, pop.genomes.size(), rng);
    Genome child = crossover(pop.genomes[p1], pop.genomes[p2], rng);
    mutate(child, domains, mutation_rate, rng);
    children.push_back(child);
  }
  return children;
}

Population evolve(const Population& pop, const GeneDomains& domains, std::mt19937& rng,
                  const std::function<Evaluation(const Genome&)>& evaluate,
                  float mutation_rate) {
  std::vector<Genome> children = make_offspring(pop, domains, rng, mutation_rate);
  Population combined = pop;
  for (const Genome& child : children) {
    combined.genomes.push_back(child);
    combined.evals.push_back(evaluate(child));
  }
  auto fronts = non_dominated_sort(combined.evals);
  Population next;
  const std::size_t target = pop.genomes.size();
  for (const auto& front : fronts) {
    if (next.genomes.size() >= target) break;
    if (next.genomes.size() + front.size() <= target) {
      for (std::size_t idx : front) {
        next.genomes.push_back(combined.genomes[idx]);
        next.evals.push_back(combined.evals[idx]);
      }
      continue;
    }
    std::vector<Evaluation> sub;
    sub.reserve(front.size());
    for (std::size_t idx : front) sub.push_back(combined.evals[idx]);
    auto crowd = crowding_distance(sub);
    std::vector<std::size_t> order(front.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (crowd[a] != crowd[b]) return crowd[a] > crowd[b];
      return front[a] < front[b];
    });
    for (std::size_t k = 0; next.genomes.size() < target; ++k) {
      next.genomes.push_back(combined.genomes[front[order[k]]]);
      next.evals.push_back(combined.evals[front[order[k]]]);
    }
  }
  return next;
}

std::size_t knee_index(const std::vector<Evaluation>& front) {
  if (front.empty()) throw DataError("knee_index: empty front");
  const std::size_t n = front.size();
  if (n == 1) return 0;
  double tmin = front[0].time_per_iter, tmax = tmin;
  double cmin = front[0].cd, cmax = cmin;
  for (const Evaluation& e : front) {
    tmin = std::min(tmin, e.time_per_iter);
    tmax = std::max(tmax, e.time_per_iter);
    cmin = std::min(cmin, e.cd);
    cmax = std::max(cmax, e.cd);
  }
  const double trange = (tmax - tmin) > 0.0 ? (tmax - tmin) : 1.0;
  const double crange = (cmax - cmin) > 0.0 ? (cmax - cmin) : 1.0;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = (front[i].time_per_iter - tmin) / trange;
    y[i] = (front[i].cd - cmin) / crange;
  }
  // Chord endpoints: lexicographic extremes along the normalized time axis.
  std::size_t a = 0, b = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] < x[a] || (x[i] == x[a] && y[i] > y[a])) a = i;
    if (x[i] > x[b] || (x[i] == x[b] && y[i] < y[b])) b = i;
  }
  const double ex = x[b] - x[a], ey = y[b] - y[a];
  const double len = std::sqrt(ex * ex + ey * ey);
  std::size_t best = 0;
  double best_dist = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    if (len > 0.0) d = std::abs(ex * (y[i] - y[a]) - ey * (x[i] - x[a])) / len;
    if (d > best_dist || (d == best_dist && front[i].cd < front[best].cd)) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

std::string search_log_line(int gen, std::size_t idx, const Genome& g, const Evaluation& e) {
  std::ostringstream ss;
  ss.precision(9);
  ss << gen << "," << idx << "," << g.hash_levels << "," << g.log2_table_size << ","
     << g.features_per_level << "," << g.hidden_width << "," << g.hidden_layers << ","
     << g.meta_steps << "," << g.inner_iters << "," << g.eta << "," << g.beta << ","
     << g.per_level_scale << "," << g.lambda_d << "," << g.lambda_sigma << ","
     << static_cast<int>(g.density_activation) << "," << e.time_per_iter << "," << e.cd;
  return ss.str();
}

SearchResult run_search(const std::vector<Task>& train_tasks, const std::vector<Task>& test_tasks,
                        const SearchConfig& cfg) {
  if (cfg.population < 2) throw UsageError("search population must be at least 2");
  if (cfg.generations < 1) throw UsageError("search needs at least one generation");

  auto evaluate = [&](const Genome& g) {
    return evaluate_genome(g, train_tasks, test_tasks, cfg.seed, cfg);
  };

  std::mt19937 rng(mix_seed(cfg.seed, 0xA11CEULL));
  SearchResult result;
  Population pop;
  pop.genomes.push_back(default_genome(cfg.domains));
  for (int i = 1; i < cfg.population; ++i) pop.genomes.push_back(random_genome(cfg.domains, rng));
  for (const Genome& g : pop.genomes) pop.evals.push_back(evaluate(g));
  for (std::size_t i = 0; i < pop.genomes.size(); ++i)
    result.log_lines.push_back(search_log_line(0, i, pop.genomes[i], pop.evals[i]));

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    pop = evolve(pop, cfg.domains, rng, evaluate, cfg.mutation_rate);
    for (std::size_t i = 0; i < pop.genomes.size(); ++i)
      result.log_lines.push_back(search_log_line(gen, i, pop.genomes[i], pop.evals[i]));
  }

  auto fronts = non_dominated_sort(pop.evals);
  result.front0 = fronts.front();
  std::vector<Evaluation> front_evals;
  front_evals.reserve(result.front0.size());
  for (std::size_t idx : result.front0) front_evals.push_back(pop.evals[idx]);
  const std::size_t knee_pos = knee_index(front_evals);
  result.knee = pop.genomes[result.front0[knee_pos]];
  result.knee_eval = pop.evals[result.front0[knee_pos]];
  result.final_population = std::move(pop);
  result.theta = meta_train(train_tasks, arch_of(result.knee),
                            meta_config_of(result.knee, cfg.inner, cfg.seed));
  return result;
}

}  // namespace noma
