#pragma once

#include <functional>
#include <span>
#include <vector>

namespace acs {

struct OptimizerConfig {
  /// maximize_box: stop when the relative change in the objective between
  /// accepted iterates falls below this.
  double rel_tol = 1e-5;
  /// maximize_scalar: bracket tolerance as a fraction of (hi - lo).
  double x_tol = 1e-5;
  int max_iter = 100;
  double fd_step = 1e-3;
  /// Start for maximize_box; empty means (2, ..., 2) clamped into the box.
  std::vector<double> initial_guess;
  /// L-BFGS history length.
  int memory = 10;
  /// Extra deterministic starts spread along the box diagonal (0 = single start).
  int multi_start = 0;

  /// Throws std::invalid_argument on non-positive tolerances or max_iter < 1.
  void validate() const;
};

struct OptimizeOutcome {
  std::vector<double> argmax;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  /// True where argmax lies within fd_step of a box face.
  std::vector<bool> boundary_hit;

  bool any_boundary_hit() const;
};

using ScalarObjective = std::function<double(double)>;
using BoxObjective = std::function<double(std::span<const double>)>;

/// Bounded scalar maximization by golden-section search with successive
/// parabolic interpolation (Brent). Throws acs::NumericalError if f returns a
/// non-finite value.
OptimizeOutcome maximize_scalar(const ScalarObjective& f, double lo, double hi,
                                const OptimizerConfig& cfg = {});

/// Projected limited-memory BFGS ascent on a box, with finite-difference
/// gradients and backtracking Armijo steps along the projection arc.
OptimizeOutcome maximize_box(const BoxObjective& f, std::span<const double> lo,
                             std::span<const double> hi, const OptimizerConfig& cfg = {});

}  // namespace acs
