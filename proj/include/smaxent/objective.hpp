// Regularized KL-divergence objective over a stratal dataset and its
// analytic gradient.

#ifndef SMAXENT_OBJECTIVE_HPP
#define SMAXENT_OBJECTIVE_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "smaxent/grammar.hpp"

namespace smaxent {

class Dataset;

struct ObservedEntry {
  std::string ur;
  std::string surface;
  double p = 0.0;

  bool operator==(const ObservedEntry&) const = default;
};

/// Observed probability of each (UR, SR) mapping, in declaration order.
struct ObservedDistribution {
  std::vector<ObservedEntry> entries;

  double probability(const std::string& ur, const std::string& surface) const;
  bool operator==(const ObservedDistribution&) const = default;
};

struct RegularizationConfig {
  double mu = 0.0;
  double sigma2 = 10000.0;
};

struct ObjectiveValue {
  double kl = 0.0;
  double penalty = 0.0;
  double total = 0.0;
  /// Set when some attested mapping had expected probability below the
  /// clamp floor; kl is then finite but meaningless as a divergence.
  bool saturated = false;
};

struct ObjectiveGradient {
  StrataMatrix kl;
  StrataMatrix penalty;
  StrataMatrix total;
  bool saturated = false;
};

/// Expected probabilities are clamped to this floor inside objective() and
/// gradient() so that line searches see finite values.
inline constexpr double kProbabilityFloor = 1e-300;

/// Sum over every observed mapping of p_obs * ln(p_obs / p_exp). Returns
/// +infinity when an attested mapping has zero expected probability.
/// Throws StructuralError when an attested mapping has no expected entry.
double kl_divergence(const ObservedDistribution& observed, std::span<const SurfaceDistribution> expected);

double l2_penalty(const WeightVector& weights, const RegularizationConfig& config);

std::vector<SurfaceDistribution> predict(const Dataset& dataset, const WeightVector& weights);

ObjectiveValue objective(const Dataset& dataset, const WeightVector& weights, const RegularizationConfig& config);

/// d(total)/d(w[s][k]) by a forward pass over reaching mass and a backward
/// pass over p_obs / p_exp, split into KL and penalty parts.
ObjectiveGradient gradient(const Dataset& dataset, const WeightVector& weights, const RegularizationConfig& config);

/// Objective and gradient from one forward/backward sweep.
std::pair<ObjectiveValue, ObjectiveGradient> evaluate(const Dataset& dataset, const WeightVector& weights,
                                                      const RegularizationConfig& config);

// Finite-difference gradient check.

struct GradientCheckOptions {
  double step = 1e-5;
  double rel_tol = 1e-4;
  double abs_tol = 1e-7;
};

struct GradientCheckPoint {
  StrataMatrix point;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  bool passed = false;
};

using GradientFn = std::function<StrataMatrix(const Dataset&, const WeightVector&, const RegularizationConfig&)>;

/// Compares an analytic gradient against central differences of the
/// objective. The objective is smooth across w = 0, so trial points may
/// step below the bound. A coordinate passes if its absolute error is
/// within abs_tol or its relative error within rel_tol.
GradientCheckPoint check_gradient(const Dataset& dataset, const WeightVector& weights,
                                  const RegularizationConfig& config, const GradientFn& analytic,
                                  const GradientCheckOptions& options = {});

}  // namespace smaxent

#endif  // SMAXENT_OBJECTIVE_HPP
