// Shared fixtures and independent oracles for the test binaries.
//
// The oracles avoid the library's forward pass and max-shifted softmax:
// surface marginals come from a recursive walk over every derivation path
// with a plain exp/sum softmax, and gradients from central differences or
// from posterior path weights.

#ifndef SMAXENT_TESTS_SUPPORT_HPP
#define SMAXENT_TESTS_SUPPORT_HPP

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "smaxent/datasets.hpp"
#include "smaxent/experiment.hpp"

namespace fixtures {

using smaxent::WeightVector;

// Word-level row then phrase-level row, constraint declaration order.
inline WeightVector french_fit() { return WeightVector(2, 3, {6.24, 6.24, 0, 0, 0, 6.93}); }
inline WeightVector canadian_fit() { return WeightVector(2, 4, {10.44, 5.02, 0, 11.13, 0, 6.81, 6.12, 0}); }
inline WeightVector bottleneck_init() { return WeightVector(2, 4, {1, 7, 3, 1, 0, 6.28, 6.29, 0}); }

inline WeightVector optimum(int which) {
  switch (which) {
    case 1: return WeightVector(2, 4, {0, 0, 0, 0, 0, 0, 7.75, 0});
    case 2: return WeightVector(2, 4, {0, 6.60, 0, 0, 0, 5.91, 5.92, 5.90});
    case 3: return WeightVector(2, 4, {0, 0.69, 6.14, 6.54, 6.51, 5.86, 0.04, 0});
    default: return WeightVector(2, 4, {0, 0, 0, 0, 0, 0, 7.01, 6.60});
  }
}

// Raising/flapping toy tableau over *ait, Ident(C), Ident(V), *VTV.
inline smaxent::StepTableau toy_mitre() {
  return {0, "maɪtə", {"maɪtə", "maɪɾə", "mʌɪtə", "mʌɪɾə"}, {{1, 0, 0, 1}, {0, 1, 0, 0}, {0, 0, 1, 1}, {0, 1, 1, 0}}};
}

inline WeightVector random_weights(std::mt19937_64& rng, std::size_t strata, std::size_t constraints, double hi) {
  std::uniform_real_distribution<double> u(0.0, hi);
  std::vector<double> v(strata * constraints);
  for (auto& x : v) x = u(rng);
  return WeightVector(strata, constraints, std::move(v));
}

}  // namespace fixtures

namespace oracle {

using smaxent::Dataset;
using smaxent::DerivationGraph;
using smaxent::StepTableau;
using smaxent::StrataMatrix;
using smaxent::WeightVector;

inline std::vector<double> naive_softmax(const StepTableau& t, const std::vector<double>& w) {
  std::vector<double> e;
  double z = 0.0;
  for (const auto& row : t.violations) {
    double h = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) h -= w[k] * row[k];
    e.push_back(std::exp(h));
    z += e.back();
  }
  for (auto& x : e) x /= z;
  return e;
}

struct Path {
  std::vector<std::pair<const StepTableau*, std::size_t>> steps;  // tableau, chosen candidate
  double p = 1.0;
  std::string surface;
};

// Weights may be negative here; finite differences step across zero.
inline std::vector<Path> walk(const DerivationGraph& g, const StrataMatrix& w) {
  std::vector<Path> out;
  std::function<void(std::size_t, const std::string&, Path)> rec = [&](std::size_t s, const std::string& input,
                                                                       Path path) {
    const StepTableau& t = g.tableau(s, input);
    const auto row = w.row(s);
    const auto p = naive_softmax(t, std::vector<double>(row.begin(), row.end()));
    for (std::size_t c = 0; c < t.candidates.size(); ++c) {
      Path next = path;
      next.steps.emplace_back(&t, c);
      next.p *= p[c];
      if (s + 1 == g.strata_count()) {
        next.surface = t.candidates[c];
        out.push_back(std::move(next));
      } else {
        rec(s + 1, t.candidates[c], std::move(next));
      }
    }
  };
  rec(0, g.ur(), Path{});
  return out;
}

inline std::map<std::string, double> marginals(const DerivationGraph& g, const StrataMatrix& w) {
  std::map<std::string, double> m;
  for (const auto& p : walk(g, w)) m[p.surface] += p.p;
  return m;
}

inline double kl(const Dataset& d, const StrataMatrix& w) {
  double total = 0.0;
  for (const auto& e : d.observed().entries) {
    if (e.p == 0.0) continue;
    const auto m = marginals(d.graphs()[d.graph_index(e.ur)], w);
    total += e.p * std::log(e.p / m.at(e.surface));
  }
  return total;
}

inline std::map<std::string, double> marginals(const DerivationGraph& g, const WeightVector& w) {
  return marginals(g, w.matrix());
}
inline double kl(const Dataset& d, const WeightVector& w) { return kl(d, w.matrix()); }

inline double penalty(const StrataMatrix& w, double mu, double sigma2) {
  double total = 0.0;
  for (double x : w.values()) total += (x - mu) * (x - mu) / (2 * sigma2);
  return total;
}

inline StrataMatrix finite_difference(const std::function<double(const StrataMatrix&)>& f, const StrataMatrix& at,
                                      double h = 1e-5) {
  StrataMatrix g(at.strata(), at.constraints());
  for (std::size_t i = 0; i < at.size(); ++i) {
    StrataMatrix up = at, down = at;
    up.values()[i] += h;
    down.values()[i] -= h;
    g.values()[i] = (f(up) - f(down)) / (2 * h);
  }
  return g;
}

// Posterior-weighted expected violation differences, plus the penalty
// derivative.
inline StrataMatrix posterior_gradient(const Dataset& d, const WeightVector& w, double mu, double sigma2) {
  StrataMatrix g(w.strata(), w.constraints());
  for (const auto& e : d.observed().entries) {
    if (e.p == 0.0) continue;
    const auto paths = walk(d.graphs()[d.graph_index(e.ur)], w.matrix());
    double z = 0.0;
    for (const auto& p : paths) z += p.surface == e.surface ? p.p : 0.0;
    for (const auto& p : paths) {
      if (p.surface != e.surface) continue;
      const double q = p.p / z;
      for (const auto& [tab, chosen] : p.steps) {
        const auto row = w.row(tab->stratum);
        const auto probs = naive_softmax(*tab, std::vector<double>(row.begin(), row.end()));
        for (std::size_t k = 0; k < w.constraints(); ++k) {
          double expected = 0.0;
          for (std::size_t c = 0; c < probs.size(); ++c) expected += probs[c] * tab->violations[c][k];
          g(tab->stratum, k) += e.p * q * (tab->violations[chosen][k] - expected);
        }
      }
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] += (w.values()[i] - mu) / sigma2;
  return g;
}

}  // namespace oracle

#endif  // SMAXENT_TESTS_SUPPORT_HPP
