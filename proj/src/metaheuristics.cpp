#include "coloc/metaheuristics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace coloc {

void BaselineSettings::validate() const {
  if (sa.iterations < 1 || ga.generations < 1 || tabu.iterations < 1)
    throw std::invalid_argument("baseline: iteration budgets must be positive");
  if (ga.population < 2 || ga.elites < 0 || ga.elites >= ga.population)
    throw std::invalid_argument("baseline: GA population must exceed the elite count");
  if (ga.tournament < 1) throw std::invalid_argument("baseline: GA tournament size must be >= 1");
  if (tabu.memory < 0) throw std::invalid_argument("baseline: tabu memory must be >= 0");
  if (!(sa.target_acceptance > 0.0 && sa.target_acceptance < 1.0))
    throw std::invalid_argument("baseline: SA target acceptance must lie in (0, 1)");
}

Assignment random_assignment(int n, std::mt19937_64& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  // Fisher-Yates with explicit draws so the sequence is library independent.
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return Assignment(std::move(p));
}

namespace {

using Clock = std::chrono::steady_clock;

int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

class Run {
 public:
  Run(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
      const BaselineSettings& settings)
      : cost(rss, network, params), settings_(settings), start_(Clock::now()), rng(settings.seed) {
    settings.validate();
  }

  bool exhausted() const {
    if (settings_.max_evaluations > 0.0 && cost.evaluations() >= settings_.max_evaluations) return true;
    if (settings_.time_budget_seconds > 0.0 && elapsed() >= settings_.time_budget_seconds) return true;
    return false;
  }

  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

  /// Schedule position in [0, 1]: the furthest along of the iteration count
  /// and whichever budgets are set.
  double progress(int t, int iterations) const {
    double p = static_cast<double>(t) / iterations;
    if (settings_.max_evaluations > 0.0) p = std::max(p, cost.evaluations() / settings_.max_evaluations);
    if (settings_.time_budget_seconds > 0.0) p = std::max(p, elapsed() / settings_.time_budget_seconds);
    return std::min(p, 1.0);
  }

  Assignment initial() {
    if (settings_.initial) {
      if (settings_.initial->size() != cost.num_blindfolded())
        throw std::invalid_argument("baseline: initial assignment size mismatch");
      return *settings_.initial;
    }
    return random_assignment(cost.num_blindfolded(), rng);
  }

  void record(SearchResult& res, const Assignment& a, double c) const {
    res.cost_trace.push_back({elapsed(), cost.evaluations(), c,
                              settings_.truth ? accuracy(a, *settings_.truth) : -1.0});
  }

  AssignmentCost cost;

 private:
  const BaselineSettings& settings_;
  Clock::time_point start_;

 public:
  std::mt19937_64 rng;
};

}  // namespace

// ---------------------------------------------------------------------------

SearchResult simulated_annealing(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                                 const BaselineSettings& settings) {
  Run run(rss, network, params, settings);
  const auto& sa = settings.sa;
  const int n = network.num_blindfolded();
  SearchResult res;
  Assignment current = run.initial();
  double c = run.cost.total(current);
  Assignment best = current;
  double best_c = c;
  run.record(res, best, best_c);
  if (n < 2) {
    res.assignment = best;
    res.cost = best_c;
    res.evaluations = run.cost.evaluations();
    return res;
  }

  Move mv;
  auto slice_move = [&](const Assignment& base, int len) {
    const int s = uniform_int(run.rng, 0, n - len);
    mv.devices.resize(static_cast<std::size_t>(len));
    mv.targets.resize(static_cast<std::size_t>(len));
    for (int k = 0; k < len; ++k) {
      mv.devices[static_cast<std::size_t>(k)] = s + k;
      mv.targets[static_cast<std::size_t>(k)] = base[s + k];
    }
    if (sa.slice == SliceOperator::Reverse) {
      std::reverse(mv.targets.begin(), mv.targets.end());
    } else {
      for (int k = len - 1; k > 0; --k)
        std::swap(mv.targets[static_cast<std::size_t>(k)], mv.targets[static_cast<std::size_t>(uniform_int(run.rng, 0, k))]);
    }
  };
  auto fraction = [&](int t) {
    return 1.0 / (1.0 + std::exp(sa.steepness * (run.progress(t, sa.iterations) - sa.midpoint)));
  };
  auto length = [&](double frac) { return std::clamp(static_cast<int>(std::lround(frac * n)), 2, n); };

  double t0 = sa.initial_temperature;
  if (t0 < 0.0) {
    // Mean uphill step over slices of every length, scaled to the target
    // acceptance.  Sampling all lengths matters for small N, where the
    // early full-length slice is a single move.
    double uphill = 0.0;
    double magnitude = 0.0;
    int count = 0;
    for (int k = 0; k < 100; ++k) {
      slice_move(current, uniform_int(run.rng, 2, n));
      const double d = run.cost.move_delta(current, mv.devices, mv.targets);
      magnitude += std::abs(d);
      if (d > 0.0) {
        uphill += d;
        ++count;
      }
    }
    const double step = count > 0 ? uphill / count : magnitude / 100.0;
    t0 = step > 0.0 ? -step / std::log(sa.target_acceptance) : 1.0;
  }

  int t = 0;
  for (; t < sa.iterations && !run.exhausted(); ++t) {
    const double frac = fraction(t);
    slice_move(current, length(frac));
    const double d = run.cost.move_delta(current, mv.devices, mv.targets);
    const double temperature = t0 * frac;
    const bool accept = d < 0.0 || (temperature > 0.0 && uniform01(run.rng) < std::exp(-d / temperature));
    if (!accept) continue;
    current = current.with_moves(mv.devices, mv.targets);
    c += d;
    if (c < best_c - 1e-12 * std::max(1.0, std::abs(best_c))) {
      c = run.cost.total(current);
      if (c < best_c) {
        best = current;
        best_c = c;
        run.record(res, best, best_c);
      }
    }
  }
  res.assignment = best;
  res.cost = best_c;
  res.iterations = t;
  res.evaluations = run.cost.evaluations();
  return res;
}

// ---------------------------------------------------------------------------

std::vector<int> order_crossover(const std::vector<int>& first, const std::vector<int>& second, int cut_lo,
                                 int cut_hi) {
  const int n = static_cast<int>(first.size());
  if (static_cast<int>(second.size()) != n || cut_lo < 0 || cut_hi > n || cut_lo > cut_hi)
    throw std::invalid_argument("order_crossover: bad parents or cut points");
  std::vector<int> child(static_cast<std::size_t>(n), -1);
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  for (int k = cut_lo; k < cut_hi; ++k) {
    child[static_cast<std::size_t>(k)] = first[static_cast<std::size_t>(k)];
    taken[static_cast<std::size_t>(first[static_cast<std::size_t>(k)])] = 1;
  }
  int write = cut_hi % std::max(n, 1);
  for (int s = 0; s < n; ++s) {
    const int gene = second[static_cast<std::size_t>((cut_hi + s) % n)];
    if (taken[static_cast<std::size_t>(gene)]) continue;
    while (child[static_cast<std::size_t>(write)] != -1) write = (write + 1) % n;
    child[static_cast<std::size_t>(write)] = gene;
    taken[static_cast<std::size_t>(gene)] = 1;
  }
  return child;
}

SearchResult genetic_algorithm(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                               const BaselineSettings& settings) {
  Run run(rss, network, params, settings);
  const auto& ga = settings.ga;
  const int n = network.num_blindfolded();

  struct Individual {
    Assignment genes;
    double cost = 0.0;
  };
  auto by_cost = [](const Individual& a, const Individual& b) { return a.cost < b.cost; };

  std::vector<Individual> pop;
  pop.reserve(static_cast<std::size_t>(ga.population));
  {
    Assignment first = run.initial();
    const double c = run.cost.total(first);
    pop.push_back({std::move(first), c});
  }
  while (static_cast<int>(pop.size()) < ga.population) {
    Assignment a = random_assignment(n, run.rng);
    const double c = run.cost.total(a);
    pop.push_back({std::move(a), c});
  }
  std::stable_sort(pop.begin(), pop.end(), by_cost);

  SearchResult res;
  run.record(res, pop.front().genes, pop.front().cost);

  auto tournament = [&]() -> const Individual& {
    int pick = uniform_int(run.rng, 0, ga.population - 1);
    for (int k = 1; k < ga.tournament; ++k) pick = std::min(pick, uniform_int(run.rng, 0, ga.population - 1));
    return pop[static_cast<std::size_t>(pick)];  // population is sorted by cost
  };

  int gen = 0;
  for (; gen < ga.generations && !run.exhausted(); ++gen) {
    std::vector<Individual> next(pop.begin(), pop.begin() + ga.elites);
    while (static_cast<int>(next.size()) < ga.population) {
      const auto& p1 = tournament();
      const auto& p2 = tournament();
      int lo = uniform_int(run.rng, 0, n);
      int hi = uniform_int(run.rng, 0, n);
      if (lo > hi) std::swap(lo, hi);
      auto child = order_crossover(p1.genes.perm(), p2.genes.perm(), lo, hi);
      if (n >= 2 && uniform01(run.rng) < ga.mutation_rate) {
        const int a = uniform_int(run.rng, 0, n - 1);
        int b = uniform_int(run.rng, 0, n - 2);
        if (b >= a) ++b;
        std::swap(child[static_cast<std::size_t>(a)], child[static_cast<std::size_t>(b)]);
      }
      Assignment genes(std::move(child));
      const double c = run.cost.total(genes);
      next.push_back({std::move(genes), c});
    }
    std::stable_sort(next.begin(), next.end(), by_cost);
    const double prev_best = pop.front().cost;
    pop = std::move(next);
    if (pop.front().cost < prev_best) run.record(res, pop.front().genes, pop.front().cost);
  }

  res.assignment = pop.front().genes;
  res.cost = pop.front().cost;
  res.iterations = gen;
  res.evaluations = run.cost.evaluations();
  return res;
}

// ---------------------------------------------------------------------------

SearchResult tabu_search(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                         const BaselineSettings& settings, std::vector<TabuStep>* log) {
  Run run(rss, network, params, settings);
  const int n = network.num_blindfolded();
  // A memory covering every pair swap would leave no admissible move, so it
  // is capped one below the neighbourhood size.
  const int pairs = n * (n - 1) / 2;
  const int memory = std::min(settings.tabu.memory, std::max(pairs - 1, 0));
  SearchResult res;
  Assignment current = run.initial();
  double c = run.cost.total(current);
  Assignment best = current;
  double best_c = c;
  run.record(res, best, best_c);

  std::deque<std::pair<int, int>> recent;
  auto is_tabu = [&](std::pair<int, int> m) { return std::find(recent.begin(), recent.end(), m) != recent.end(); };

  int it = 0;
  for (; it < settings.tabu.iterations && !run.exhausted(); ++it) {
    const double tol = 1e-12 * std::max(1.0, std::abs(best_c));
    std::pair<int, int> chosen{-1, -1};
    double chosen_delta = 0.0;
    bool chosen_aspiration = false;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        const int devs[2] = {a, b};
        const int tgts[2] = {current[b], current[a]};
        const double d = run.cost.move_delta(current, devs, tgts);
        const bool tabu = is_tabu({a, b});
        const bool aspiration = tabu && c + d < best_c - tol;
        if (tabu && !aspiration) continue;
        if (chosen.first < 0 || d < chosen_delta) {
          chosen = {a, b};
          chosen_delta = d;
          chosen_aspiration = aspiration;
        }
      }
    }
    if (chosen.first < 0) break;
    // Without memory the walk is plain steepest descent and ends at a local optimum.
    if (memory == 0 && !(chosen_delta < -tol)) break;

    const int devs[2] = {chosen.first, chosen.second};
    const int tgts[2] = {current[chosen.second], current[chosen.first]};
    current = current.with_moves(devs, tgts);
    c = run.cost.total(current);
    if (memory > 0) {
      recent.push_back(chosen);
      if (static_cast<int>(recent.size()) > memory) recent.pop_front();
    }
    if (log) log->push_back({chosen, chosen_aspiration, c});
    if (c < best_c - tol) {
      best = current;
      best_c = c;
      run.record(res, best, best_c);
    }
  }

  res.assignment = best;
  res.cost = best_c;
  res.iterations = it;
  res.evaluations = run.cost.evaluations();
  return res;
}

}  // namespace coloc
