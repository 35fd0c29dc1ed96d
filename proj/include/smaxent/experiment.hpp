// Seeded multi-restart learning experiments: initial weights, success
// classification, local-optimum clustering, and reports.

#ifndef SMAXENT_EXPERIMENT_HPP
#define SMAXENT_EXPERIMENT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smaxent/datasets.hpp"
#include "smaxent/optimizer.hpp"

namespace smaxent {

struct ExperimentConfig {
  std::vector<std::string> datasets;
  std::size_t runs = 100;
  std::uint64_t seed = 1;
  double init_low = 0.0;
  double init_high = 10.0;
  /// Same initializations for every dataset of a sweep (per weight shape).
  bool shared_inits = true;
  /// Overrides each dataset's default sigma2 when set.
  std::optional<double> sigma2;
  double mu = 0.0;
  OptimizerConfig optimizer;
  /// 0 means one worker per hardware thread.
  std::size_t workers = 0;

  /// Throws std::invalid_argument.
  void validate() const;
};

/// Reads the JSON form of ExperimentConfig (same field names; optimizer
/// settings nested under "optimizer"). Throws std::invalid_argument.
ExperimentConfig parse_experiment_config(std::string_view text);

struct FailingForm {
  std::string ur;
  std::string surface;
  double predicted = 0.0;
};

struct RunClassification {
  bool success = false;
  std::vector<FailingForm> failing_forms;
};

/// Success iff every mapping observed with probability 1 is predicted with
/// probability strictly above 0.5.
RunClassification classify(const Dataset& dataset, const WeightVector& weights);

/// `runs` weight vectors of the given shape, each entry uniform on
/// [init_low, init_high], reproducible from `seed`.
std::vector<WeightVector> draw_initializations(std::uint64_t seed, std::size_t runs, std::size_t strata,
                                               std::size_t constraints, double init_low, double init_high);

struct RunResult {
  std::size_t run_index = 0;
  WeightVector initial_weights;
  WeightVector final_weights;
  ObjectiveValue final_objective;
  std::size_t iterations = 0;
  Termination termination = Termination::kMaxIterations;
  std::vector<SurfaceDistribution> distributions;
  RunClassification classification;
  /// Non-empty when the optimizer threw; the run then counts as a failure.
  std::string error;
};

struct OptimumCluster {
  /// Per UR, per surface form, rounded to the clustering precision.
  std::vector<SurfaceDistribution> representative;
  std::vector<std::size_t> members;
  WeightVector representative_weights;
  bool success = false;
};

/// Groups runs whose surface distributions agree after rounding to
/// `decimals`. Sorted by descending size, ties by first member.
std::vector<OptimumCluster> cluster_runs(const std::vector<RunResult>& results, int decimals = 2);

/// Index of the cluster containing `run_index`, or -1.
int cluster_of(const std::vector<OptimumCluster>& clusters, std::size_t run_index);

struct DatasetOutcome {
  std::string dataset;
  std::size_t strata = 0;
  std::vector<std::string> constraint_names;
  double sigma2 = 0.0;
  std::size_t success_count = 0;
  std::vector<RunResult> runs;
  std::vector<OptimumCluster> clusters;
};

struct ExperimentOutput {
  ExperimentConfig config;
  std::vector<DatasetOutcome> outcomes;
};

RunResult run_single(const Dataset& dataset, std::size_t run_index, const WeightVector& init,
                     const RegularizationConfig& reg, const OptimizerConfig& opt);

ExperimentOutput run_experiment(const ExperimentConfig& config);

enum class ReportFormat { kTableText, kCsv };

/// Throws std::invalid_argument on an unknown name ("table-text", "csv").
ReportFormat parse_report_format(std::string_view name);

std::string emit_report(const ExperimentOutput& output, ReportFormat format);

// Static evaluation of weight grids, for inspecting how single weights
// shape the objective landscape.

struct FrozenWeight {
  std::size_t stratum = 0;
  std::size_t constraint = 0;
  std::vector<double> values;
};

struct SweepRow {
  WeightVector weights;
  std::vector<SurfaceDistribution> distributions;
  double kl = 0.0;
};

/// Evaluates the KL divergence and surface distributions at every point of
/// the Cartesian product of the frozen value lists (first list varies
/// slowest), starting from `base`. No optimization is done.
std::vector<SweepRow> diagnostic_sweep(const Dataset& dataset, const std::vector<FrozenWeight>& frozen,
                                       const WeightVector& base);

}  // namespace smaxent

#endif  // SMAXENT_EXPERIMENT_HPP
