// Learning datasets: built-in case-study corpora and the JSON file format.

#ifndef SMAXENT_DATASETS_HPP
#define SMAXENT_DATASETS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smaxent/grammar.hpp"
#include "smaxent/objective.hpp"

namespace smaxent {

/// Invalid dataset content. `location()` is a path into the document,
/// e.g. "inputs[1].tableaux[2].candidates[0]".
class DatasetError : public std::runtime_error {
 public:
  DatasetError(std::string location, const std::string& message)
      : std::runtime_error(location.empty() ? message : location + ": " + message), location_(std::move(location)) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

/// Observed target for one graph: surface index into graph.surfaces() and
/// its observed probability.
struct Target {
  std::size_t surface = 0;
  double p = 0.0;
};

class Dataset {
 public:
  /// Validates cross-references between graphs and observations; throws
  /// DatasetError.
  Dataset(std::string name, ConstraintSet constraints, std::size_t strata_count, std::vector<DerivationGraph> graphs,
          ObservedDistribution observed, double sigma2_default);

  const std::string& name() const { return name_; }
  const ConstraintSet& constraints() const { return constraints_; }
  std::size_t strata_count() const { return strata_count_; }
  const std::vector<DerivationGraph>& graphs() const { return graphs_; }
  const ObservedDistribution& observed() const { return observed_; }
  double sigma2_default() const { return sigma2_default_; }

  /// Observed targets per graph, same order as graphs().
  const std::vector<std::vector<Target>>& targets() const { return targets_; }
  std::size_t graph_index(const std::string& ur) const;

  std::size_t weight_count() const { return strata_count_ * constraints_.size(); }

  bool operator==(const Dataset& other) const;

 private:
  std::string name_;
  ConstraintSet constraints_;
  std::size_t strata_count_;
  std::vector<DerivationGraph> graphs_;
  ObservedDistribution observed_;
  double sigma2_default_;
  std::vector<std::vector<Target>> targets_;
};

/// Names accepted by builtin(), in listing order.
const std::vector<std::string>& builtin_names();

/// Throws DatasetError listing the valid names when `name` is unknown.
Dataset builtin(std::string_view name);

Dataset parse_dataset(std::string_view text);

/// A built-in name, or else the path of a dataset file.
Dataset load_dataset(const std::string& name_or_path);

/// Canonical JSON text: two-space indentation, fixed key order, arrays in
/// declared order, zero counts included.
std::string serialize_dataset(const Dataset& dataset);

}  // namespace smaxent

#endif  // SMAXENT_DATASETS_HPP
