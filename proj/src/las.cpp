#include "coloc/las.hpp"

#include "coloc/assign.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace coloc {

double accuracy(const Assignment& result, const Assignment& truth) {
  if (result.size() != truth.size()) throw std::invalid_argument("accuracy: assignment sizes differ");
  if (truth.size() == 0) return 1.0;
  int hits = 0;
  for (int i = 0; i < truth.size(); ++i) hits += result[i] == truth[i];
  return static_cast<double>(hits) / truth.size();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Move diff_move(const Assignment& base, const Assignment& cand) {
  if (cand.size() != base.size()) throw std::invalid_argument("las_search: candidate size mismatch");
  Move m;
  for (int d = 0; d < base.size(); ++d) {
    if (base[d] != cand[d]) {
      m.devices.push_back(d);
      m.targets.push_back(cand[d]);
    }
  }
  return m;
}

// Shared ascent loop.  `delta(base, base_cost, move)` scores a candidate;
// `exact(assignment)` recomputes the cost of an accepted assignment.
struct AscentContext {
  Clock::time_point start;
  std::function<double()> evaluations;
  const Assignment* truth = nullptr;
  std::vector<TracePoint>* trace = nullptr;

  void record(const Assignment& a, double cost) const {
    if (!trace) return;
    trace->push_back({seconds_since(start), evaluations(), cost, truth ? accuracy(a, *truth) : -1.0});
  }
};

struct AscentOutcome {
  Assignment assignment;
  double cost = 0.0;
  int sweeps = 0;
};

AscentOutcome ascend(const Assignment& initial, double initial_cost, const MoveEnumerator& enumerate,
                     const std::function<double(const Assignment&, double, const Move&)>& delta,
                     const std::function<double(const Assignment&)>& exact, AcceptRule rule, int max_sweeps,
                     const AscentContext& ctx) {
  AscentOutcome out{initial, initial_cost, 0};
  bool improved = true;
  while (improved && out.sweeps < max_sweeps) {
    improved = false;
    ++out.sweeps;
    const double tol = 1e-12 * std::max(1.0, std::abs(out.cost));
    Move best;
    double best_delta = -tol;
    bool found = false;
    enumerate(out.assignment, [&](const Move& m) {
      const double d = delta(out.assignment, out.cost, m);
      if (d < best_delta) {
        best_delta = d;
        best = m;
        found = true;
        if (rule == AcceptRule::FirstImprovement) return false;
      }
      return true;
    });
    if (found) {
      out.assignment = out.assignment.with_moves(best.devices, best.targets);
      out.cost = exact(out.assignment);
      improved = true;
      ctx.record(out.assignment, out.cost);
    }
  }
  return out;
}

}  // namespace

SearchResult las_search(const Assignment& initial, const CandidateFn& candidates, const CostFn& cost_fn,
                        const LasOptions& options) {
  long long calls = 0;
  auto counted = [&](const Assignment& a) {
    ++calls;
    return cost_fn(a);
  };
  SearchResult res;
  AscentContext ctx{Clock::now(), [&] { return static_cast<double>(calls); }, options.truth, &res.cost_trace};
  const double c0 = counted(initial);
  ctx.record(initial, c0);
  auto enumerate = [&](const Assignment& base, const MoveVisitor& visit) {
    for (const auto& cand : candidates(base)) {
      if (!Assignment::is_bijection(cand.perm())) throw std::invalid_argument("las_search: invalid candidate");
      if (!visit(diff_move(base, cand))) return;
    }
  };
  auto delta = [&](const Assignment& base, double base_cost, const Move& m) {
    return counted(base.with_moves(m.devices, m.targets)) - base_cost;
  };
  const auto out = ascend(initial, c0, enumerate, delta, counted, options.rule, options.max_sweeps, ctx);
  res.assignment = out.assignment;
  res.cost = out.cost;
  res.iterations = out.sweeps;
  res.evaluations = static_cast<double>(calls);
  return res;
}

SearchResult las_search(const Assignment& initial, const MoveEnumerator& enumerate, const AssignmentCost& cost,
                        const LasOptions& options) {
  SearchResult res;
  const double e0 = cost.evaluations();
  AscentContext ctx{Clock::now(), [&] { return cost.evaluations() - e0; }, options.truth, &res.cost_trace};
  const double c0 = cost.total(initial);
  ctx.record(initial, c0);
  auto delta = [&](const Assignment& base, double, const Move& m) { return cost.move_delta(base, m.devices, m.targets); };
  auto exact = [&](const Assignment& a) { return cost.total(a); };
  const auto out = ascend(initial, c0, enumerate, delta, exact, options.rule, options.max_sweeps, ctx);
  res.assignment = out.assignment;
  res.cost = out.cost;
  res.iterations = out.sweeps;
  res.evaluations = cost.evaluations() - e0;
  return res;
}

// ---------------------------------------------------------------------------

void enumerate_k_swaps(const Assignment& current, int k, const MoveVisitor& visit) {
  const int n = current.size();
  if (k < 2 || k > n) throw std::invalid_argument("k_swap_candidates: k must satisfy 2 <= k <= N_t");
  for (int m = 2; m <= k; ++m) {
    // Subsets of size m in lexicographic order, each with all its derangements.
    std::vector<int> subset(static_cast<std::size_t>(m));
    std::iota(subset.begin(), subset.end(), 0);
    while (true) {
      std::vector<int> held(static_cast<std::size_t>(m));
      for (int a = 0; a < m; ++a) held[static_cast<std::size_t>(a)] = current[subset[static_cast<std::size_t>(a)]];
      std::vector<int> order(static_cast<std::size_t>(m));
      std::iota(order.begin(), order.end(), 0);
      Move mv{subset, std::vector<int>(static_cast<std::size_t>(m))};
      while (std::next_permutation(order.begin(), order.end())) {
        bool deranged = true;
        for (int a = 0; a < m && deranged; ++a) deranged = order[static_cast<std::size_t>(a)] != a;
        if (!deranged) continue;
        for (int a = 0; a < m; ++a) mv.targets[static_cast<std::size_t>(a)] = held[static_cast<std::size_t>(order[static_cast<std::size_t>(a)])];
        if (!visit(mv)) return;
      }
      int pos = m - 1;
      while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == n - m + pos) --pos;
      if (pos < 0) break;
      ++subset[static_cast<std::size_t>(pos)];
      for (int a = pos + 1; a < m; ++a) subset[static_cast<std::size_t>(a)] = subset[static_cast<std::size_t>(a - 1)] + 1;
    }
  }
}

std::vector<Assignment> k_swap_candidates(const Assignment& current, int k) {
  std::vector<Assignment> out;
  enumerate_k_swaps(current, k, [&](const Move& m) {
    out.push_back(current.with_moves(m.devices, m.targets));
    return true;
  });
  return out;
}

void enumerate_group_permutations(const Assignment& current, std::span<const int> group, const MoveVisitor& visit) {
  std::vector<int> devices(group.begin(), group.end());
  std::sort(devices.begin(), devices.end());
  devices.erase(std::unique(devices.begin(), devices.end()), devices.end());
  if (devices.size() < 2) return;
  std::vector<int> held;
  for (int d : devices) held.push_back(current[d]);
  std::vector<int> arrangement = held;
  std::sort(arrangement.begin(), arrangement.end());
  Move mv;
  do {
    mv.devices.clear();
    mv.targets.clear();
    for (std::size_t a = 0; a < devices.size(); ++a) {
      if (arrangement[a] != held[a]) {
        mv.devices.push_back(devices[a]);
        mv.targets.push_back(arrangement[a]);
      }
    }
    if (mv.devices.empty()) continue;
    if (!visit(mv)) return;
  } while (std::next_permutation(arrangement.begin(), arrangement.end()));
}

std::vector<Assignment> crlb_candidates(const Assignment& current, int device, const NeighborSets& neighbors) {
  if (device < 0 || device >= current.size()) throw std::out_of_range("crlb_candidates: bad device index");
  std::vector<int> group{device};
  for (int j : neighbors[static_cast<std::size_t>(device)]) group.push_back(j);
  std::vector<Assignment> out;
  enumerate_group_permutations(current, group, [&](const Move& m) {
    out.push_back(current.with_moves(m.devices, m.targets));
    return true;
  });
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct CsoStage {
  Assignment assignment;
  int iterations = 0;
  long long evaluations = 0;
};

CsoStage run_cso(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                 const PipelineSettings& settings) {
  const auto estimate = continuous_estimate(rss, network, params, settings);
  return {solve_assignment(build_cost_matrix(estimate, network)), estimate.iterations, estimate.evaluations};
}

}  // namespace

PositionEstimate continuous_estimate(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                                     const PipelineSettings& settings) {
  const auto init = relaxed_init(rss, network, params, settings.init_solver);
  SolverSettings free_run = settings.refine_solver;
  free_run.clamp_to_install_box = false;
  PositionEstimate best = refine_mle(init, rss, network, params, free_run);
  int iterations = init.iterations + best.iterations;
  long long evaluations = init.evaluations + best.evaluations;
  if (settings.boxed_restart) {
    SolverSettings boxed = settings.refine_solver;
    boxed.clamp_to_install_box = true;
    PositionEstimate alt = refine_mle(init, rss, network, params, boxed);
    iterations += alt.iterations;
    evaluations += alt.evaluations;
    if (alt.objective < best.objective) best = std::move(alt);
  }
  best.iterations = iterations;
  best.evaluations = evaluations;
  return best;
}

SearchResult cso(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                 const PipelineSettings& settings) {
  const auto start = Clock::now();
  const auto stage = run_cso(rss, network, params, settings);
  const AssignmentCost cost(rss, network, params);
  SearchResult res;
  res.assignment = stage.assignment;
  res.cost = cost.total(res.assignment);
  res.iterations = stage.iterations;
  res.evaluations = static_cast<double>(stage.evaluations) + 1.0;
  res.cost_trace.push_back({seconds_since(start), res.evaluations, res.cost,
                            settings.truth ? accuracy(res.assignment, *settings.truth) : -1.0});
  return res;
}

NeighborSets crlb_position_neighbors(const DeviceNetwork& network, const PathLossParams& params,
                                     const PipelineSettings& settings, const RssMatrix* connectivity) {
  PathLossParams crlb_params = params;
  if (!(crlb_params.sigma > 0.0)) crlb_params.sigma = settings.fallback_sigma;
  const auto fim = fisher_information(network, crlb_params, {settings.strict_paper_fim, connectivity});
  auto sets = position_neighbor_sets(network, device_covariances(fim), settings.confidence, settings.metric);
  if (settings.max_neighbors >= 0)
    for (auto& s : sets)
      if (static_cast<int>(s.size()) > settings.max_neighbors) s.resize(static_cast<std::size_t>(settings.max_neighbors));
  return sets;
}

SearchResult crlb_las(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                      const PipelineSettings& settings) {
  const auto start = Clock::now();
  const auto stage = run_cso(rss, network, params, settings);
  const AssignmentCost cost(rss, network, params);
  const auto by_position = crlb_position_neighbors(network, params, settings, &rss);
  const double continuous_evals = static_cast<double>(stage.evaluations);

  SearchResult res;
  res.initial_assignment = stage.assignment;
  AscentContext ctx{start, [&] { return continuous_evals + cost.evaluations(); }, settings.truth, &res.cost_trace};

  Assignment current = stage.assignment;
  double current_cost = cost.total(current);
  ctx.record(current, current_cost);
  const int nt = network.num_blindfolded();

  auto delta = [&](const Assignment& base, double, const Move& m) { return cost.move_delta(base, m.devices, m.targets); };
  auto exact = [&](const Assignment& a) { return cost.total(a); };

  int passes = 0;
  int sweeps = 0;
  bool changed = true;
  while (changed && passes < settings.max_passes) {
    changed = false;
    ++passes;
    std::vector<int> order(static_cast<std::size_t>(nt));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return by_position[static_cast<std::size_t>(current[a])].size() > by_position[static_cast<std::size_t>(current[b])].size();
    });
    for (int device : order) {
      auto enumerate = [&](const Assignment& base, const MoveVisitor& visit) {
        const auto owner = base.inverse();
        std::vector<int> group{device};
        for (int q : by_position[static_cast<std::size_t>(base[device])]) group.push_back(owner[static_cast<std::size_t>(q)]);
        enumerate_group_permutations(base, group, visit);
      };
      const auto out = ascend(current, current_cost, enumerate, delta, exact, settings.rule, 1'000'000, ctx);
      sweeps += out.sweeps;
      if (out.assignment != current) {
        current = out.assignment;
        current_cost = out.cost;
        changed = true;
      }
    }
  }

  res.assignment = current;
  res.cost = current_cost;
  res.iterations = sweeps;
  res.evaluations = continuous_evals + cost.evaluations();
  return res;
}

}  // namespace coloc
