#pragma once

// Likelihood ascent search over assignments, the CRLB-restricted variant,
// and the end-to-end CSO / CRLB-LAS pipelines.

#include "coloc/continuous.hpp"
#include "coloc/crlb.hpp"
#include "coloc/model.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace coloc {

struct TracePoint {
  double elapsed_seconds = 0.0;
  double evaluations = 0.0;  // full-cost equivalents spent so far
  double cost = 0.0;
  double accuracy = -1.0;    // negative when the truth is unknown
};

struct SearchResult {
  Assignment assignment;
  double cost = 0.0;
  int iterations = 0;
  double evaluations = 0.0;
  std::vector<TracePoint> cost_trace;
  /// CRLB-LAS only: the projected continuous solution it started from.
  std::optional<Assignment> initial_assignment;
};

/// Fraction of devices placed at their true install point.
double accuracy(const Assignment& result, const Assignment& truth);

/// A rearrangement of some devices relative to a base assignment:
/// devices[k] moves to install point targets[k].
struct Move {
  std::vector<int> devices;
  std::vector<int> targets;
};

enum class AcceptRule {
  /// Scan the whole candidate set, keeping the running best (the listing's
  /// "if c(pi) < E_b" loop), then rebuild the set.
  ScanAll,
  /// Rebuild the candidate set as soon as one candidate improves.
  FirstImprovement,
};

struct LasOptions {
  AcceptRule rule = AcceptRule::ScanAll;
  int max_sweeps = 1'000'000;
  const Assignment* truth = nullptr;  // for accuracy in the trace
};

/// Calls `visit(move)` for each candidate; returning false stops the enumeration.
using MoveVisitor = std::function<bool(const Move&)>;
using MoveEnumerator = std::function<void(const Assignment&, const MoveVisitor&)>;

/// Generic ascent with a caller-supplied candidate set and cost function.
using CandidateFn = std::function<std::vector<Assignment>(const Assignment&)>;
using CostFn = std::function<double(const Assignment&)>;
SearchResult las_search(const Assignment& initial, const CandidateFn& candidates, const CostFn& cost_fn,
                        const LasOptions& options = {});

/// Incremental variant: candidates are moves scored with AssignmentCost::move_delta.
SearchResult las_search(const Assignment& initial, const MoveEnumerator& enumerate, const AssignmentCost& cost,
                        const LasOptions& options = {});

/// Every assignment within Hamming distance k of `current` (excluding it).
std::vector<Assignment> k_swap_candidates(const Assignment& current, int k);
/// Same set as moves, in the same order.
void enumerate_k_swaps(const Assignment& current, int k, const MoveVisitor& visit);

/// Every rearrangement of the install points held by {i} u neighbors[i],
/// other devices fixed, excluding the unchanged assignment.
std::vector<Assignment> crlb_candidates(const Assignment& current, int device, const NeighborSets& neighbors);
void enumerate_group_permutations(const Assignment& current, std::span<const int> group, const MoveVisitor& visit);

struct PipelineSettings {
  SolverSettings init_solver{.max_iterations = 2000, .tolerance = 1e-7, .step = {}, .smoothing = 1e-3, .trace = {}};
  SolverSettings refine_solver{};
  /// Also refine inside the install-point box and keep whichever estimate
  /// has the lower objective.  The box rules out mirror images outside
  /// the installation volume; the free run avoids stalling on its faces.
  bool boxed_restart = true;
  double confidence = 0.95;
  NeighborMetric metric = NeighborMetric::Pairwise;
  bool strict_paper_fim = false;
  /// Sigma used for the CRLB when the path-loss sigma is zero.
  double fallback_sigma = 1.0;
  /// Largest neighbor set searched per device (nearest by Mahalanobis distance).
  int max_neighbors = 5;
  AcceptRule rule = AcceptRule::ScanAll;
  int max_passes = 1000;
  const Assignment* truth = nullptr;
};

/// relaxed_init -> refine_mle (free, and boxed when enabled) keeping the
/// lower objective.
PositionEstimate continuous_estimate(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                                     const PipelineSettings& settings = {});

/// continuous_estimate -> build_cost_matrix -> solve_assignment.
SearchResult cso(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                 const PipelineSettings& settings = {});

/// CSO followed by CRLB-restricted ascent, device by device (largest
/// neighbor set first), repeated until a full pass changes nothing.
SearchResult crlb_las(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                      const PipelineSettings& settings = {});

/// Neighbor sets over install points used by crlb_las (capped and sorted).
NeighborSets crlb_position_neighbors(const DeviceNetwork& network, const PathLossParams& params,
                                     const PipelineSettings& settings, const RssMatrix* connectivity = nullptr);

}  // namespace coloc
