#include "smaxent/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smaxent/datasets.hpp"

namespace smaxent {

double ObservedDistribution::probability(const std::string& ur, const std::string& surface) const {
  for (const auto& e : entries) {
    if (e.ur == ur && e.surface == surface) return e.p;
  }
  return 0.0;
}

namespace {

struct Sweep {
  double kl = 0.0;
  bool saturated = false;
  StrataMatrix grad;
};

// Works on an unconstrained matrix so that finite differences may probe
// slightly negative weights.
Sweep sweep(const Dataset& dataset, const StrataMatrix& w, bool with_gradient) {
  const std::size_t strata = dataset.strata_count();
  const std::size_t nk = dataset.constraints().size();
  Sweep out;
  if (with_gradient) out.grad = StrataMatrix(strata, nk, 0.0);

  for (std::size_t g = 0; g < dataset.graphs().size(); ++g) {
    const auto& graph = dataset.graphs()[g];
    const auto& layers = graph.layers();
    const auto& targets = dataset.targets()[g];

    // Forward: reaching mass of every tableau input, then of every surface.
    std::vector<std::vector<double>> mass(strata + 1);
    std::vector<std::vector<std::vector<double>>> probs(strata);
    mass[0] = {1.0};
    for (std::size_t s = 0; s < strata; ++s) {
      const bool last = s + 1 == strata;
      mass[s + 1].assign(last ? graph.surfaces().size() : layers[s + 1].size(), 0.0);
      probs[s].resize(layers[s].size());
      for (std::size_t t = 0; t < layers[s].size(); ++t) {
        probs[s][t] = step_distribution(layers[s][t], w.row(s));
        for (std::size_t c = 0; c < probs[s][t].size(); ++c) {
          mass[s + 1][graph.successor(s, t, c)] += mass[s][t] * probs[s][t][c];
        }
      }
    }

    // dKL/dP(surface) for each surface form.
    std::vector<double> upstream(graph.surfaces().size(), 0.0);
    for (const auto& target : targets) {
      if (target.p <= 0.0) continue;
      double expected = mass[strata][target.surface];
      if (expected < kProbabilityFloor) {
        out.saturated = true;
        expected = kProbabilityFloor;
      }
      out.kl += target.p * (std::log(target.p) - std::log(expected));
      upstream[target.surface] = -target.p / expected;
    }
    if (!with_gradient) continue;

    // Backward: upstream[t] holds dKL/d(mass reaching tableau t) at stratum s.
    for (std::size_t s = strata; s-- > 0;) {
      std::vector<double> here(layers[s].size(), 0.0);
      for (std::size_t t = 0; t < layers[s].size(); ++t) {
        const auto& tab = layers[s][t];
        const auto& p = probs[s][t];
        double through = 0.0;
        for (std::size_t c = 0; c < p.size(); ++c) through += p[c] * upstream[graph.successor(s, t, c)];
        here[t] = through;
        if (mass[s][t] == 0.0) continue;
        // d p_c / d w_k = p_c (E[v_k] - v_ck)
        for (std::size_t k = 0; k < nk; ++k) {
          double expected_v = 0.0;
          for (std::size_t c = 0; c < p.size(); ++c) expected_v += p[c] * tab.violations[c][k];
          double acc = 0.0;
          for (std::size_t c = 0; c < p.size(); ++c) {
            acc += p[c] * (expected_v - tab.violations[c][k]) * upstream[graph.successor(s, t, c)];
          }
          out.grad(s, k) += mass[s][t] * acc;
        }
      }
      upstream = std::move(here);
    }
  }
  return out;
}

double penalty_of(const StrataMatrix& w, const RegularizationConfig& config) {
  double sum = 0.0;
  for (double v : w.values()) sum += (v - config.mu) * (v - config.mu);
  return sum / (2.0 * config.sigma2);
}

void check_shape(const Dataset& dataset, const WeightVector& weights) {
  if (weights.strata() != dataset.strata_count() || weights.constraints() != dataset.constraints().size()) {
    throw StructuralError("weights are " + std::to_string(weights.strata()) + "x" +
                          std::to_string(weights.constraints()) + ", dataset '" + dataset.name() + "' needs " +
                          std::to_string(dataset.strata_count()) + "x" +
                          std::to_string(dataset.constraints().size()));
  }
}

void check_config(const RegularizationConfig& config) {
  if (!(config.sigma2 > 0.0)) throw StructuralError("sigma2 must be > 0");
}

}  // namespace

double kl_divergence(const ObservedDistribution& observed, std::span<const SurfaceDistribution> expected) {
  double kl = 0.0;
  for (const auto& e : observed.entries) {
    if (e.p <= 0.0) continue;
    auto dist = std::find_if(expected.begin(), expected.end(), [&](const auto& d) { return d.ur == e.ur; });
    if (dist == expected.end()) throw StructuralError("no expected distribution for /" + e.ur + "/");
    auto entry = std::find_if(dist->entries.begin(), dist->entries.end(),
                              [&](const auto& kv) { return kv.first == e.surface; });
    if (entry == dist->entries.end()) {
      throw StructuralError("[" + e.surface + "] is not a surface form of /" + e.ur + "/");
    }
    if (entry->second <= 0.0) return std::numeric_limits<double>::infinity();
    kl += e.p * std::log(e.p / entry->second);
  }
  return kl;
}

double l2_penalty(const WeightVector& weights, const RegularizationConfig& config) {
  check_config(config);
  return penalty_of(weights.matrix(), config);
}

std::vector<SurfaceDistribution> predict(const Dataset& dataset, const WeightVector& weights) {
  check_shape(dataset, weights);
  std::vector<SurfaceDistribution> out;
  out.reserve(dataset.graphs().size());
  for (const auto& g : dataset.graphs()) out.push_back(surface_distribution(g, weights));
  return out;
}

ObjectiveValue objective(const Dataset& dataset, const WeightVector& weights, const RegularizationConfig& config) {
  return evaluate(dataset, weights, config).first;
}

ObjectiveGradient gradient(const Dataset& dataset, const WeightVector& weights, const RegularizationConfig& config) {
  return evaluate(dataset, weights, config).second;
}

std::pair<ObjectiveValue, ObjectiveGradient> evaluate(const Dataset& dataset, const WeightVector& weights,
                                                      const RegularizationConfig& config) {
  check_shape(dataset, weights);
  check_config(config);
  Sweep s = sweep(dataset, weights.matrix(), true);

  ObjectiveValue value;
  value.kl = s.kl;
  value.penalty = penalty_of(weights.matrix(), config);
  value.total = value.kl + value.penalty;
  value.saturated = s.saturated;

  ObjectiveGradient grad;
  grad.kl = std::move(s.grad);
  grad.penalty = StrataMatrix(weights.strata(), weights.constraints());
  grad.total = grad.kl;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double d = (weights.values()[i] - config.mu) / config.sigma2;
    grad.penalty.values()[i] = d;
    grad.total.values()[i] += d;
  }
  grad.saturated = s.saturated;
  return {value, grad};
}

GradientCheckPoint check_gradient(const Dataset& dataset, const WeightVector& weights,
                                  const RegularizationConfig& config, const GradientFn& analytic,
                                  const GradientCheckOptions& options) {
  check_shape(dataset, weights);
  check_config(config);
  const StrataMatrix a = analytic(dataset, weights, config);

  auto total_at = [&](const StrataMatrix& w) { return sweep(dataset, w, false).kl + penalty_of(w, config); };

  GradientCheckPoint result;
  result.point = weights.matrix();
  result.passed = true;
  StrataMatrix probe = weights.matrix();
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double w0 = probe.values()[i];
    probe.values()[i] = w0 + options.step;
    const double up = total_at(probe);
    probe.values()[i] = w0 - options.step;
    const double down = total_at(probe);
    probe.values()[i] = w0;

    const double fd = (up - down) / (2.0 * options.step);
    const double abs_err = std::abs(a.values()[i] - fd);
    const double scale = std::max(std::abs(a.values()[i]), std::abs(fd));
    const double rel_err = scale > 0.0 ? abs_err / scale : 0.0;
    result.max_abs_error = std::max(result.max_abs_error, abs_err);
    result.max_rel_error = std::max(result.max_rel_error, rel_err);
    if (!(abs_err <= options.abs_tol || rel_err <= options.rel_tol)) result.passed = false;
  }
  return result;
}

}  // namespace smaxent
