// Stratal MaxEnt grammar core: step tableaux chained across strata, path
// probabilities and surface marginals.

#ifndef SMAXENT_GRAMMAR_HPP
#define SMAXENT_GRAMMAR_HPP

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace smaxent {

/// Raised when grammar objects are inconsistent with each other
/// (length mismatches, dangling candidates, incomplete graphs).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Constraint {
  std::string name;
  std::size_t index = 0;

  bool operator==(const Constraint&) const = default;
};

/// Ordered, uniquely named constraints shared by every stratum.
class ConstraintSet {
 public:
  ConstraintSet() = default;
  explicit ConstraintSet(const std::vector<std::string>& names);

  std::size_t size() const { return constraints_.size(); }
  const Constraint& operator[](std::size_t i) const { return constraints_.at(i); }
  const std::vector<Constraint>& all() const { return constraints_; }
  std::vector<std::string> names() const;

  bool operator==(const ConstraintSet&) const = default;

 private:
  std::vector<Constraint> constraints_;
};

/// Real matrix laid out strata x constraints, row-major. Used for weights
/// and for gradients (which may be negative).
class StrataMatrix {
 public:
  StrataMatrix() = default;
  StrataMatrix(std::size_t strata, std::size_t constraints, double fill = 0.0);
  StrataMatrix(std::size_t strata, std::size_t constraints, std::vector<double> values);

  std::size_t strata() const { return strata_; }
  std::size_t constraints() const { return constraints_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t s, std::size_t k) { return values_[s * constraints_ + k]; }
  double operator()(std::size_t s, std::size_t k) const { return values_[s * constraints_ + k]; }

  std::span<const double> row(std::size_t s) const {
    return std::span<const double>(values_).subspan(s * constraints_, constraints_);
  }
  std::span<double> row(std::size_t s) {
    return std::span<double>(values_).subspan(s * constraints_, constraints_);
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool operator==(const StrataMatrix&) const = default;

 private:
  std::size_t strata_ = 0;
  std::size_t constraints_ = 0;
  std::vector<double> values_;
};

/// Nonnegative, finite stratum weights. Construction throws on a violation.
class WeightVector {
 public:
  WeightVector() = default;
  WeightVector(std::size_t strata, std::size_t constraints, double fill = 0.0);
  WeightVector(std::size_t strata, std::size_t constraints, std::vector<double> values);
  explicit WeightVector(StrataMatrix m);

  std::size_t strata() const { return m_.strata(); }
  std::size_t constraints() const { return m_.constraints(); }
  std::size_t size() const { return m_.size(); }
  double operator()(std::size_t s, std::size_t k) const { return m_(s, k); }
  std::span<const double> row(std::size_t s) const { return m_.row(s); }
  const std::vector<double>& values() const { return m_.values(); }
  const StrataMatrix& matrix() const { return m_; }

  bool operator==(const WeightVector&) const = default;

 private:
  StrataMatrix m_;
};

struct StepTableau {
  std::size_t stratum = 0;
  std::string input_form;
  std::vector<std::string> candidates;
  /// candidates x constraints, nonnegative counts.
  std::vector<std::vector<int>> violations;

  bool operator==(const StepTableau&) const = default;
};

struct PathStep {
  std::size_t stratum = 0;
  std::string input_form;
  std::string chosen;

  bool operator==(const PathStep&) const = default;
};

struct DerivationPath {
  std::vector<PathStep> steps;
  const std::string& surface() const { return steps.back().chosen; }
};

struct SurfaceDistribution {
  std::string ur;
  /// Surface forms in first-reached order with their probabilities.
  std::vector<std::pair<std::string, double>> entries;

  double probability(const std::string& surface) const;
};

/// Per-UR tree of step tableaux. Stratum-0 input is the UR; each candidate
/// of a non-final stratum names the input of exactly one tableau at the
/// next stratum. Immutable after construction.
class DerivationGraph {
 public:
  /// Validates the structure and builds successor links; throws
  /// StructuralError naming the offending form.
  DerivationGraph(std::string ur, std::size_t strata_count, std::size_t constraint_count,
                  std::vector<StepTableau> tableaux);

  const std::string& ur() const { return ur_; }
  std::size_t strata_count() const { return strata_count_; }
  std::size_t constraint_count() const { return constraint_count_; }

  /// Tableaux grouped by stratum, in declaration order within a stratum.
  const std::vector<std::vector<StepTableau>>& layers() const { return layers_; }
  const StepTableau& tableau(std::size_t stratum, const std::string& input) const;
  /// Index within layers()[stratum], or npos when absent.
  std::size_t find_tableau(std::size_t stratum, const std::string& input) const;

  /// For a non-final stratum: index of the next-stratum tableau fed by
  /// candidate c of tableau t. For the final stratum: index into surfaces().
  std::size_t successor(std::size_t stratum, std::size_t t, std::size_t c) const {
    return successors_[stratum][t][c];
  }
  const std::vector<std::string>& surfaces() const { return surfaces_; }
  std::size_t surface_index(const std::string& surface) const;

  /// Tableaux in stratum order then declaration order.
  std::vector<StepTableau> all_tableaux() const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::string ur_;
  std::size_t strata_count_;
  std::size_t constraint_count_;
  std::vector<std::vector<StepTableau>> layers_;
  std::vector<std::map<std::string, std::size_t>> index_;
  std::vector<std::vector<std::vector<std::size_t>>> successors_;
  std::vector<std::string> surfaces_;
};

double harmony(std::span<const double> weights, std::span<const int> violations);

/// Softmax over candidate harmonies, max-shifted.
std::vector<double> step_distribution(const StepTableau& tableau, std::span<const double> weights);

double path_probability(const DerivationGraph& graph, const DerivationPath& path,
                        const WeightVector& weights);

/// Forward propagation of reaching mass stratum by stratum. Result
/// entries follow graph.surfaces() order.
SurfaceDistribution surface_distribution(const DerivationGraph& graph, const WeightVector& weights);

std::vector<DerivationPath> enumerate_paths(const DerivationGraph& graph);

}  // namespace smaxent

#endif  // SMAXENT_GRAMMAR_HPP
