#pragma once

// Continuous-space cooperative localization: a convex minimax initializer
// followed by gradient refinement of the RSS least-squares objective.

#include "coloc/model.hpp"

#include <functional>
#include <vector>

namespace coloc {

struct PositionEstimate {
  std::vector<Position> positions;  // blindfolded devices only
  double objective = 0.0;
  int iterations = 0;
  /// Objective or gradient passes over all measured pairs.
  long long evaluations = 0;
  int jitter_events = 0;
};

struct StepRule {
  double initial_step = 1.0;
  double shrink = 0.5;       // backtracking factor
  double armijo = 1e-4;      // sufficient-decrease constant
  int max_backtracks = 60;
};

struct SolverSettings {
  int max_iterations = 5000;
  double tolerance = 1e-8;   // relative objective change
  StepRule step;
  /// Final log-sum-exp temperature for the minimax surrogate, relative to
  /// the current largest squared ratio.
  double smoothing = 1e-4;
  /// Keep refined positions inside the axis-aligned bounding box of the
  /// install points, which contains every admissible position.
  bool clamp_to_install_box = false;
  /// Optional (iteration, objective) sink for convergence traces.
  std::function<void(int, double)> trace;

  void validate() const;
};

/// Minimizes max over measured pairs of |p_i - p_j| / d_ij with anchors
/// fixed, where d_ij is the range implied by the RSS.  The returned
/// objective is the achieved maximum ratio t'.
PositionEstimate relaxed_init(const RssMatrix& rss, const DeviceNetwork& network,
                              const PathLossParams& params, const SolverSettings& settings = {});

/// Least-squares RSS objective over blindfolded/blindfolded and
/// blindfolded/anchor pairs at free positions.  Pair distances are clamped
/// at kMinPairDistance.
inline constexpr double kMinPairDistance = 1e-6;

double p2_objective(const std::vector<Position>& positions, const RssMatrix& rss,
                    const DeviceNetwork& network, const PathLossParams& params);

/// Gradient ordered [x_0, y_0, z_0, x_1, ...] over blindfolded devices.
Eigen::VectorXd p2_gradient(const std::vector<Position>& positions, const RssMatrix& rss,
                            const DeviceNetwork& network, const PathLossParams& params);

/// Gradient descent with Armijo backtracking from `init`, projected onto
/// the install-point box when `clamp_to_install_box` is set.
PositionEstimate refine_mle(const PositionEstimate& init, const RssMatrix& rss,
                            const DeviceNetwork& network, const PathLossParams& params,
                            const SolverSettings& settings = {});

}  // namespace coloc
