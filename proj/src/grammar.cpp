#include "smaxent/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace smaxent {

ConstraintSet::ConstraintSet(const std::vector<std::string>& names) {
  std::set<std::string> seen;
  constraints_.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) throw StructuralError("constraint " + std::to_string(i) + " has an empty name");
    if (!seen.insert(names[i]).second) throw StructuralError("duplicate constraint name '" + names[i] + "'");
    constraints_.push_back({names[i], i});
  }
}

std::vector<std::string> ConstraintSet::names() const {
  std::vector<std::string> out;
  out.reserve(constraints_.size());
  for (const auto& c : constraints_) out.push_back(c.name);
  return out;
}

StrataMatrix::StrataMatrix(std::size_t strata, std::size_t constraints, double fill)
    : strata_(strata), constraints_(constraints), values_(strata * constraints, fill) {}

StrataMatrix::StrataMatrix(std::size_t strata, std::size_t constraints, std::vector<double> values)
    : strata_(strata), constraints_(constraints), values_(std::move(values)) {
  if (values_.size() != strata_ * constraints_) {
    throw StructuralError("expected " + std::to_string(strata_ * constraints_) + " values for a " +
                          std::to_string(strata_) + "x" + std::to_string(constraints_) +
                          " matrix, got " + std::to_string(values_.size()));
  }
}

namespace {

void check_weights(const StrataMatrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    double w = m.values()[i];
    if (!std::isfinite(w) || w < 0.0) {
      throw StructuralError("weight " + std::to_string(i) + " must be finite and >= 0, got " + std::to_string(w));
    }
  }
}

}  // namespace

WeightVector::WeightVector(std::size_t strata, std::size_t constraints, double fill)
    : m_(strata, constraints, fill) {
  check_weights(m_);
}

WeightVector::WeightVector(std::size_t strata, std::size_t constraints, std::vector<double> values)
    : m_(strata, constraints, std::move(values)) {
  check_weights(m_);
}

WeightVector::WeightVector(StrataMatrix m) : m_(std::move(m)) { check_weights(m_); }

double SurfaceDistribution::probability(const std::string& surface) const {
  for (const auto& [form, p] : entries) {
    if (form == surface) return p;
  }
  return 0.0;
}

DerivationGraph::DerivationGraph(std::string ur, std::size_t strata_count, std::size_t constraint_count,
                                 std::vector<StepTableau> tableaux)
    : ur_(std::move(ur)), strata_count_(strata_count), constraint_count_(constraint_count) {
  const std::string where = "graph /" + ur_ + "/: ";
  if (strata_count_ == 0) throw StructuralError(where + "strata count must be >= 1");

  layers_.resize(strata_count_);
  index_.resize(strata_count_);
  for (auto& t : tableaux) {
    const std::string at = where + "stratum " + std::to_string(t.stratum) + " tableau '" + t.input_form + "': ";
    if (t.stratum >= strata_count_) throw StructuralError(at + "stratum out of range");
    if (t.candidates.empty()) throw StructuralError(at + "no candidates");
    if (t.violations.size() != t.candidates.size()) {
      throw StructuralError(at + "violation rows do not match candidate count");
    }
    std::set<std::string> seen;
    for (std::size_t c = 0; c < t.candidates.size(); ++c) {
      if (!seen.insert(t.candidates[c]).second) {
        throw StructuralError(at + "duplicate candidate '" + t.candidates[c] + "'");
      }
      if (t.violations[c].size() != constraint_count_) {
        throw StructuralError(at + "candidate '" + t.candidates[c] + "' has " +
                              std::to_string(t.violations[c].size()) + " violation counts, expected " +
                              std::to_string(constraint_count_));
      }
      for (int v : t.violations[c]) {
        if (v < 0) throw StructuralError(at + "candidate '" + t.candidates[c] + "' has a negative violation count");
      }
    }
    auto& idx = index_[t.stratum];
    if (!idx.emplace(t.input_form, layers_[t.stratum].size()).second) {
      throw StructuralError(at + "duplicate tableau");
    }
    layers_[t.stratum].push_back(std::move(t));
  }

  if (layers_[0].size() != 1 || layers_[0][0].input_form != ur_) {
    throw StructuralError(where + "stratum 0 must contain exactly one tableau, with the UR as input");
  }

  successors_.resize(strata_count_);
  for (std::size_t s = 0; s + 1 < strata_count_; ++s) {
    std::vector<bool> reached(layers_[s + 1].size(), false);
    successors_[s].resize(layers_[s].size());
    for (std::size_t t = 0; t < layers_[s].size(); ++t) {
      const auto& tab = layers_[s][t];
      for (const auto& cand : tab.candidates) {
        auto it = index_[s + 1].find(cand);
        if (it == index_[s + 1].end()) {
          throw StructuralError(where + "candidate '" + cand + "' of stratum " + std::to_string(s) + " tableau '" +
                                tab.input_form + "' has no stratum " + std::to_string(s + 1) + " tableau");
        }
        reached[it->second] = true;
        successors_[s][t].push_back(it->second);
      }
    }
    for (std::size_t t = 0; t < reached.size(); ++t) {
      if (!reached[t]) {
        throw StructuralError(where + "stratum " + std::to_string(s + 1) + " tableau '" +
                              layers_[s + 1][t].input_form + "' is unreachable");
      }
    }
  }

  const std::size_t last = strata_count_ - 1;
  std::map<std::string, std::size_t> surface_idx;
  successors_[last].resize(layers_[last].size());
  for (std::size_t t = 0; t < layers_[last].size(); ++t) {
    for (const auto& cand : layers_[last][t].candidates) {
      auto [it, inserted] = surface_idx.emplace(cand, surfaces_.size());
      if (inserted) surfaces_.push_back(cand);
      successors_[last][t].push_back(it->second);
    }
  }
}

std::size_t DerivationGraph::find_tableau(std::size_t stratum, const std::string& input) const {
  if (stratum >= strata_count_) return npos;
  auto it = index_[stratum].find(input);
  return it == index_[stratum].end() ? npos : it->second;
}

const StepTableau& DerivationGraph::tableau(std::size_t stratum, const std::string& input) const {
  std::size_t t = find_tableau(stratum, input);
  if (t == npos) {
    throw StructuralError("graph /" + ur_ + "/: no stratum " + std::to_string(stratum) + " tableau for '" + input + "'");
  }
  return layers_[stratum][t];
}

std::size_t DerivationGraph::surface_index(const std::string& surface) const {
  auto it = std::find(surfaces_.begin(), surfaces_.end(), surface);
  return it == surfaces_.end() ? npos : static_cast<std::size_t>(it - surfaces_.begin());
}

std::vector<StepTableau> DerivationGraph::all_tableaux() const {
  std::vector<StepTableau> out;
  for (const auto& layer : layers_) out.insert(out.end(), layer.begin(), layer.end());
  return out;
}

double harmony(std::span<const double> weights, std::span<const int> violations) {
  if (weights.size() != violations.size()) {
    throw StructuralError("harmony: " + std::to_string(weights.size()) + " weights vs " +
                          std::to_string(violations.size()) + " violation counts");
  }
  double h = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) h -= weights[k] * violations[k];
  return h;
}

std::vector<double> step_distribution(const StepTableau& tableau, std::span<const double> weights) {
  const std::size_t n = tableau.candidates.size();
  std::vector<double> p(n);
  double hmax = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < n; ++c) {
    p[c] = harmony(weights, tableau.violations[c]);
    hmax = std::max(hmax, p[c]);
  }
  double z = 0.0;
  for (auto& v : p) {
    v = std::exp(v - hmax);
    z += v;
  }
  for (auto& v : p) v /= z;
  return p;
}

double path_probability(const DerivationGraph& graph, const DerivationPath& path, const WeightVector& weights) {
  if (path.steps.size() != graph.strata_count()) {
    throw StructuralError("path has " + std::to_string(path.steps.size()) + " steps, graph has " +
                          std::to_string(graph.strata_count()) + " strata");
  }
  double prob = 1.0;
  std::string expected_input = graph.ur();
  for (std::size_t s = 0; s < path.steps.size(); ++s) {
    const auto& step = path.steps[s];
    if (step.stratum != s || step.input_form != expected_input) {
      throw StructuralError("path step " + std::to_string(s) + " does not continue from '" + expected_input + "'");
    }
    const auto& tab = graph.tableau(s, step.input_form);
    auto it = std::find(tab.candidates.begin(), tab.candidates.end(), step.chosen);
    if (it == tab.candidates.end()) {
      throw StructuralError("path step " + std::to_string(s) + ": '" + step.chosen + "' is not a candidate of '" +
                            step.input_form + "'");
    }
    prob *= step_distribution(tab, weights.row(s))[static_cast<std::size_t>(it - tab.candidates.begin())];
    expected_input = step.chosen;
  }
  return prob;
}

SurfaceDistribution surface_distribution(const DerivationGraph& graph, const WeightVector& weights) {
  if (weights.strata() != graph.strata_count() || weights.constraints() != graph.constraint_count()) {
    throw StructuralError("weights shape does not match graph /" + graph.ur() + "/");
  }
  const auto& layers = graph.layers();
  std::vector<double> mass{1.0};
  for (std::size_t s = 0; s < layers.size(); ++s) {
    const bool last = s + 1 == layers.size();
    std::vector<double> next(last ? graph.surfaces().size() : layers[s + 1].size(), 0.0);
    for (std::size_t t = 0; t < layers[s].size(); ++t) {
      if (mass[t] == 0.0) continue;
      auto p = step_distribution(layers[s][t], weights.row(s));
      for (std::size_t c = 0; c < p.size(); ++c) next[graph.successor(s, t, c)] += mass[t] * p[c];
    }
    mass = std::move(next);
  }
  SurfaceDistribution out{graph.ur(), {}};
  for (std::size_t i = 0; i < mass.size(); ++i) out.entries.emplace_back(graph.surfaces()[i], mass[i]);
  return out;
}

namespace {

void extend_paths(const DerivationGraph& graph, std::size_t stratum, std::size_t t, DerivationPath& prefix,
                  std::vector<DerivationPath>& out) {
  const auto& tab = graph.layers()[stratum][t];
  for (std::size_t c = 0; c < tab.candidates.size(); ++c) {
    prefix.steps.push_back({stratum, tab.input_form, tab.candidates[c]});
    if (stratum + 1 == graph.strata_count()) {
      out.push_back(prefix);
    } else {
      extend_paths(graph, stratum + 1, graph.successor(stratum, t, c), prefix, out);
    }
    prefix.steps.pop_back();
  }
}

}  // namespace

std::vector<DerivationPath> enumerate_paths(const DerivationGraph& graph) {
  std::vector<DerivationPath> out;
  DerivationPath prefix;
  extend_paths(graph, 0, 0, prefix, out);
  return out;
}

}  // namespace smaxent
