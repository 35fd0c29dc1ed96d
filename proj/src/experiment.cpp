#include "smaxent/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <json.hpp>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>

namespace smaxent {

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw std::invalid_argument("at least one dataset is required");
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (!(init_low >= 0.0) || !std::isfinite(init_high) || init_low > init_high) {
    throw std::invalid_argument("need 0 <= init_low <= init_high");
  }
  if (sigma2 && !(*sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be > 0");
  optimizer.validate();
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  using Json = nlohmann::json;
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("experiment config must be a JSON object");

  ExperimentConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "datasets") cfg.datasets = value.get<std::vector<std::string>>();
      else if (key == "runs") cfg.runs = value.get<std::size_t>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "init_low") cfg.init_low = value.get<double>();
      else if (key == "init_high") cfg.init_high = value.get<double>();
      else if (key == "shared_inits") cfg.shared_inits = value.get<bool>();
      else if (key == "sigma2") cfg.sigma2 = value.get<double>();
      else if (key == "mu") cfg.mu = value.get<double>();
      else if (key == "workers") cfg.workers = value.get<std::size_t>();
      else if (key == "optimizer") {
        for (const auto& [okey, ovalue] : value.items()) {
          if (okey == "lower_bound") cfg.optimizer.lower_bound = ovalue.get<double>();
          else if (okey == "memory") cfg.optimizer.memory = ovalue.get<std::size_t>();
          else if (okey == "max_iterations") cfg.optimizer.max_iterations = ovalue.get<std::size_t>();
          else if (okey == "gradient_tolerance") cfg.optimizer.gradient_tolerance = ovalue.get<double>();
          else if (okey == "objective_tolerance") cfg.optimizer.objective_tolerance = ovalue.get<double>();
          else throw std::invalid_argument("unknown optimizer key \"" + okey + "\"");
        }
      } else {
        throw std::invalid_argument("unknown key \"" + key + "\"");
      }
    }
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("bad value in experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunClassification classify(const Dataset& dataset, const WeightVector& weights) {
  RunClassification out;
  const auto dists = predict(dataset, weights);
  for (std::size_t g = 0; g < dataset.graphs().size(); ++g) {
    for (const auto& target : dataset.targets()[g]) {
      if (target.p != 1.0) continue;
      const auto& [surface, p] = dists[g].entries[target.surface];
      if (!(p > 0.5)) out.failing_forms.push_back({dataset.graphs()[g].ur(), surface, p});
    }
  }
  out.success = out.failing_forms.empty();
  return out;
}

std::vector<WeightVector> draw_initializations(std::uint64_t seed, std::size_t runs, std::size_t strata,
                                               std::size_t constraints, double init_low, double init_high) {
  if (init_low > init_high) throw std::invalid_argument("init_low must not exceed init_high");
  std::mt19937_64 rng(seed);
  std::vector<WeightVector> out;
  out.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    std::vector<double> w(strata * constraints);
    for (auto& v : w) {
      // 53 random bits -> [0, 1); spelled out so draws do not depend on the
      // standard library's distribution implementation.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v = init_low == init_high ? init_low : init_low + (init_high - init_low) * u;
    }
    out.emplace_back(strata, constraints, std::move(w));
  }
  return out;
}

RunResult run_single(const Dataset& dataset, std::size_t run_index, const WeightVector& init,
                     const RegularizationConfig& reg, const OptimizerConfig& opt) {
  RunResult r;
  r.run_index = run_index;
  r.initial_weights = init;
  try {
    OptimizeResult res = minimize(dataset, init, reg, opt);
    r.final_weights = res.final_weights;
    r.final_objective = res.final_objective;
    r.iterations = res.iterations;
    r.termination = res.termination;
    r.classification = classify(dataset, r.final_weights);
  } catch (const std::exception& e) {
    r.error = e.what();
    r.final_weights = init;
    r.final_objective = objective(dataset, init, reg);
    r.termination = Termination::kLineSearchFailure;
    r.classification = classify(dataset, init);
    r.classification.success = false;
  }
  r.distributions = predict(dataset, r.final_weights);
  return r;
}

std::vector<OptimumCluster> cluster_runs(const std::vector<RunResult>& results, int decimals) {
  const double scale = std::pow(10.0, decimals);
  std::vector<OptimumCluster> clusters;
  std::map<std::pair<bool, std::vector<long long>>, std::size_t> index;
  for (const auto& r : results) {
    std::vector<long long> key;
    for (const auto& d : r.distributions) {
      for (const auto& [surface, p] : d.entries) key.push_back(std::llround(p * scale));
    }
    const bool success = r.classification.success;
    auto [it, inserted] = index.emplace(std::make_pair(success, key), clusters.size());
    if (inserted) {
      OptimumCluster c;
      c.success = success;
      c.representative_weights = r.final_weights;
      std::size_t i = 0;
      for (const auto& d : r.distributions) {
        SurfaceDistribution rounded{d.ur, {}};
        for (const auto& [surface, p] : d.entries) rounded.entries.emplace_back(surface, key[i++] / scale);
        c.representative.push_back(std::move(rounded));
      }
      clusters.push_back(std::move(c));
    }
    clusters[it->second].members.push_back(r.run_index);
  }
  std::stable_sort(clusters.begin(), clusters.end(), [](const OptimumCluster& a, const OptimumCluster& b) {
    if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
    return a.members.front() < b.members.front();
  });
  return clusters;
}

int cluster_of(const std::vector<OptimumCluster>& clusters, std::size_t run_index) {
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& m = clusters[c].members;
    if (std::find(m.begin(), m.end(), run_index) != m.end()) return static_cast<int>(c);
  }
  return -1;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<Dataset> datasets;
  for (const auto& name : config.datasets) datasets.push_back(load_dataset(name));

  ExperimentOutput output;
  output.config = config;
  for (std::size_t di = 0; di < datasets.size(); ++di) {
    const Dataset& ds = datasets[di];
    const std::uint64_t seed = config.shared_inits ? config.seed : splitmix64(config.seed ^ splitmix64(di));
    const auto inits = draw_initializations(seed, config.runs, ds.strata_count(), ds.constraints().size(),
                                            config.init_low, config.init_high);
    const RegularizationConfig reg{config.mu, config.sigma2.value_or(ds.sigma2_default())};

    DatasetOutcome outcome;
    outcome.dataset = ds.name();
    outcome.strata = ds.strata_count();
    outcome.constraint_names = ds.constraints().names();
    outcome.sigma2 = reg.sigma2;
    outcome.runs.resize(config.runs);

    std::size_t workers = config.workers ? config.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, config.runs);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t r = next++; r < config.runs; r = next++) {
        outcome.runs[r] = run_single(ds, r, inits[r], reg, config.optimizer);
      }
    };
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    for (const auto& r : outcome.runs) outcome.success_count += r.classification.success ? 1 : 0;
    outcome.clusters = cluster_runs(outcome.runs);
    output.outcomes.push_back(std::move(outcome));
  }
  return output;
}

std::vector<SweepRow> diagnostic_sweep(const Dataset& dataset, const std::vector<FrozenWeight>& frozen,
                                       const WeightVector& base) {
  for (const auto& f : frozen) {
    if (f.values.empty()) throw std::invalid_argument("diagnostic sweep value lists must be nonempty");
    if (f.stratum >= base.strata() || f.constraint >= base.constraints()) {
      throw std::invalid_argument("diagnostic sweep coordinate out of range");
    }
  }
  std::vector<SweepRow> rows;
  std::vector<std::size_t> pos(frozen.size(), 0);
  while (true) {
    StrataMatrix m = base.matrix();
    for (std::size_t i = 0; i < frozen.size(); ++i) m(frozen[i].stratum, frozen[i].constraint) = frozen[i].values[pos[i]];
    SweepRow row;
    row.weights = WeightVector(std::move(m));
    row.distributions = predict(dataset, row.weights);
    row.kl = kl_divergence(dataset.observed(), row.distributions);
    rows.push_back(std::move(row));

    // Odometer increment, last list fastest.
    std::size_t i = frozen.size();
    while (i > 0) {
      --i;
      if (++pos[i] < frozen[i].values.size()) break;
      pos[i] = 0;
      if (i == 0) return rows;
    }
    if (frozen.empty()) return rows;
  }
}

}  // namespace smaxent
