#pragma once

// Baseline permutation-space solvers: simulated annealing, a genetic
// algorithm and tabu search, all minimizing the MLE assignment cost.

#include "coloc/las.hpp"
#include "coloc/model.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace coloc {

enum class SliceOperator { Reverse, Shuffle };

struct AnnealingParams {
  /// Slice-length fraction 1 / (1 + exp(steepness * (progress - midpoint))),
  /// where progress is the largest of the iteration, evaluation-budget and
  /// time-budget fractions used so far.
  double steepness = 10.0;
  double midpoint = 0.5;
  /// Initial temperature; negative means calibrate to `target_acceptance`.
  double initial_temperature = -1.0;
  double target_acceptance = 0.8;
  int iterations = 200'000;
  SliceOperator slice = SliceOperator::Reverse;
};

struct GeneticParams {
  int generations = 100'000;
  int population = 50;
  int elites = 10;
  int tournament = 3;
  double mutation_rate = 0.3;
};

struct TabuParams {
  int memory = 50;
  int iterations = 100'000;
};

struct BaselineSettings {
  std::uint64_t seed = 0;
  /// Budget in full-cost evaluations (incremental evaluations are counted
  /// fractionally); <= 0 disables it.
  double max_evaluations = 0.0;
  /// Optional wall-clock budget; <= 0 disables it.  Results then depend on
  /// machine speed.
  double time_budget_seconds = 0.0;
  /// Starting assignment; a seeded uniformly random permutation otherwise.
  std::optional<Assignment> initial;
  const Assignment* truth = nullptr;

  AnnealingParams sa;
  GeneticParams ga;
  TabuParams tabu;

  void validate() const;
};

/// Uniformly random permutation of [0, n).
Assignment random_assignment(int n, std::mt19937_64& rng);

SearchResult simulated_annealing(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                                 const BaselineSettings& settings);

/// Order crossover (OX1): the slice [cut_lo, cut_hi) is copied from
/// `first`, remaining positions follow `second`'s order.
std::vector<int> order_crossover(const std::vector<int>& first, const std::vector<int>& second, int cut_lo,
                                 int cut_hi);

SearchResult genetic_algorithm(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                               const BaselineSettings& settings);

struct TabuStep {
  std::pair<int, int> swap;  // devices, smaller index first
  bool aspiration = false;
  double cost = 0.0;
};

SearchResult tabu_search(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                         const BaselineSettings& settings, std::vector<TabuStep>* log = nullptr);

}  // namespace coloc
