// Box-constrained limited-memory BFGS.
//
// Each iteration finds the generalized Cauchy point of the quadratic model
// along the projected steepest-descent path, minimizes the model over the
// variables that are still free there, and line-searches toward that point.
// Problems here have a handful of variables, so the limited-memory matrix
// is formed densely from the stored curvature pairs.

#ifndef SMAXENT_OPTIMIZER_HPP
#define SMAXENT_OPTIMIZER_HPP

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "smaxent/grammar.hpp"
#include "smaxent/objective.hpp"

namespace smaxent {

class Dataset;

struct OptimizerConfig {
  double lower_bound = 0.0;
  double upper_bound = std::numeric_limits<double>::infinity();
  std::size_t memory = 10;
  std::size_t max_iterations = 500;
  /// Infinity norm of the projected gradient.
  double gradient_tolerance = 1e-6;
  /// Relative decrease (f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1).
  double objective_tolerance = 1e-9;

  /// Throws std::invalid_argument.
  void validate() const;
};

enum class Termination { kGradientConverged, kObjectiveConverged, kMaxIterations, kLineSearchFailure };

std::string to_string(Termination t);

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  static Bounds uniform(std::size_t n, double lower, double upper = std::numeric_limits<double>::infinity());
};

/// Returns f(x) and writes the gradient into `grad`.
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct BoxResult {
  std::vector<double> x;
  double f = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  Termination termination = Termination::kMaxIterations;
  /// Objective at the start point and at every accepted iterate.
  std::vector<double> trace;
};

std::vector<double> project_to_bounds(std::span<const double> x, const Bounds& bounds);
WeightVector project_to_bounds(const StrataMatrix& weights, double lower_bound);

/// Minimizes f over the box. x0 is projected onto the box first.
/// Deterministic; never throws on numerical trouble, reporting
/// kLineSearchFailure with the best iterate instead.
BoxResult minimize_box(const ObjectiveFn& f, std::vector<double> x0, const Bounds& bounds,
                       const OptimizerConfig& config);

struct OptimizeResult {
  WeightVector initial_weights;
  WeightVector final_weights;
  ObjectiveValue final_objective;
  std::size_t iterations = 0;
  Termination termination = Termination::kMaxIterations;
  std::vector<double> trace;
};

OptimizeResult minimize(const Dataset& dataset, const WeightVector& init, const RegularizationConfig& objcfg,
                        const OptimizerConfig& optcfg);

}  // namespace smaxent

#endif  // SMAXENT_OPTIMIZER_HPP
