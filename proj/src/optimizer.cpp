#include "smaxent/optimizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <stdexcept>

#include "smaxent/datasets.hpp"

namespace smaxent {

void OptimizerConfig::validate() const {
  if (!(lower_bound >= 0.0) || !std::isfinite(lower_bound)) {
    throw std::invalid_argument("lower_bound must be finite and >= 0");
  }
  if (!(upper_bound > lower_bound)) throw std::invalid_argument("upper_bound must exceed lower_bound");
  if (memory < 1) throw std::invalid_argument("memory must be >= 1");
  if (!(gradient_tolerance > 0.0)) throw std::invalid_argument("gradient_tolerance must be > 0");
  if (!(objective_tolerance > 0.0)) throw std::invalid_argument("objective_tolerance must be > 0");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kGradientConverged:
      return "gradient_converged";
    case Termination::kObjectiveConverged:
      return "objective_converged";
    case Termination::kMaxIterations:
      return "max_iterations";
    case Termination::kLineSearchFailure:
      return "line_search_failure";
  }
  return "unknown";
}

Bounds Bounds::uniform(std::size_t n, double lower, double upper) {
  return Bounds{std::vector<double>(n, lower), std::vector<double>(n, upper)};
}

std::vector<double> project_to_bounds(std::span<const double> x, const Bounds& bounds) {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], bounds.lower[i], bounds.upper[i]);
  return out;
}

WeightVector project_to_bounds(const StrataMatrix& weights, double lower_bound) {
  StrataMatrix m = weights;
  for (auto& v : m.values()) v = std::max(v, lower_bound);
  return WeightVector(std::move(m));
}

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Vec to_vec(std::span<const double> x) { return Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size())); }
std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

struct Problem {
  const ObjectiveFn& fn;
  const Bounds& bounds;
  std::size_t evaluations = 0;

  double operator()(const Vec& x, Vec& g) {
    ++evaluations;
    g.resize(x.size());
    std::vector<double> grad(static_cast<std::size_t>(x.size()));
    double f = fn(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), grad);
    g = to_vec(grad);
    return f;
  }

  Vec project(const Vec& x) const {
    Vec p = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      p[i] = std::clamp(x[i], bounds.lower[static_cast<std::size_t>(i)], bounds.upper[static_cast<std::size_t>(i)]);
    }
    return p;
  }
};

double projected_gradient_norm(const Problem& p, const Vec& x, const Vec& g) {
  return (p.project(x - g) - x).lpNorm<Eigen::Infinity>();
}

// Dense limited-memory BFGS matrix: theta*I updated with the stored pairs.
Mat lbfgs_matrix(const std::deque<Vec>& s, const std::deque<Vec>& y, Eigen::Index n) {
  double theta = 1.0;
  if (!s.empty()) theta = y.back().squaredNorm() / s.back().dot(y.back());
  Mat b = theta * Mat::Identity(n, n);
  for (std::size_t i = 0; i < s.size(); ++i) {
    Vec bs = b * s[i];
    b += y[i] * y[i].transpose() / y[i].dot(s[i]) - bs * bs.transpose() / s[i].dot(bs);
  }
  return b;
}

// Generalized Cauchy point: first local minimizer of the quadratic model
// along x(t) = P(x - t g).
Vec cauchy_point(const Problem& p, const Vec& x, const Vec& g, const Mat& b) {
  const Eigen::Index n = x.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> breaks(static_cast<std::size_t>(n), inf);
  Vec d = -g;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (g[i] < 0.0 && std::isfinite(p.bounds.upper[ui])) breaks[ui] = (x[i] - p.bounds.upper[ui]) / g[i];
    else if (g[i] > 0.0 && std::isfinite(p.bounds.lower[ui])) breaks[ui] = (x[i] - p.bounds.lower[ui]) / g[i];
    else if (g[i] == 0.0) breaks[ui] = 0.0;
    if (breaks[ui] <= 0.0) d[i] = 0.0;
  }

  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (breaks[static_cast<std::size_t>(i)] > 0.0) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) {
    return breaks[static_cast<std::size_t>(a)] < breaks[static_cast<std::size_t>(c)];
  });

  Vec z = Vec::Zero(n);  // displacement from x at the segment start
  double t_prev = 0.0;
  std::size_t next = 0;
  while (d.squaredNorm() > 0.0) {
    const double t_next = next < order.size() ? breaks[static_cast<std::size_t>(order[next])] : inf;
    const Vec bd = b * d;
    const double slope = g.dot(d) + z.dot(bd);
    const double curv = d.dot(bd);
    if (slope >= 0.0) break;
    const double dt = curv > 0.0 ? -slope / curv : inf;
    if (dt < t_next - t_prev) {
      z += dt * d;
      break;
    }
    if (!std::isfinite(t_next)) break;  // unbounded non-convex direction: cannot happen with PD b
    z += (t_next - t_prev) * d;
    t_prev = t_next;
    // Fix every variable whose breakpoint is reached here.
    while (next < order.size() && breaks[static_cast<std::size_t>(order[next])] <= t_prev) {
      const Eigen::Index i = order[next++];
      const auto ui = static_cast<std::size_t>(i);
      z[i] = (d[i] > 0.0 ? p.bounds.upper[ui] : p.bounds.lower[ui]) - x[i];
      d[i] = 0.0;
    }
  }
  return p.project(x + z);
}

// Minimizes the model over the variables free at the Cauchy point, then
// truncates the step to stay inside the box.
Vec subspace_minimum(const Problem& p, const Vec& x, const Vec& g, const Mat& b, const Vec& xc) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (xc[i] > p.bounds.lower[ui] && xc[i] < p.bounds.upper[ui]) free.push_back(i);
  }
  if (free.empty()) return xc;

  const Vec r = g + b * (xc - x);
  const auto nf = static_cast<Eigen::Index>(free.size());
  Mat bff(nf, nf);
  Vec rf(nf);
  for (Eigen::Index a = 0; a < nf; ++a) {
    rf[a] = r[free[static_cast<std::size_t>(a)]];
    for (Eigen::Index c = 0; c < nf; ++c) bff(a, c) = b(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(c)]);
  }
  Eigen::LDLT<Mat> ldlt(bff);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return xc;
  const Vec du = ldlt.solve(-rf);
  if (!du.allFinite()) return xc;

  double alpha = 1.0;
  for (Eigen::Index a = 0; a < nf; ++a) {
    const Eigen::Index i = free[static_cast<std::size_t>(a)];
    const auto ui = static_cast<std::size_t>(i);
    if (du[a] < 0.0) alpha = std::min(alpha, (p.bounds.lower[ui] - xc[i]) / du[a]);
    else if (du[a] > 0.0) alpha = std::min(alpha, (p.bounds.upper[ui] - xc[i]) / du[a]);
  }
  Vec xbar = xc;
  for (Eigen::Index a = 0; a < nf; ++a) xbar[free[static_cast<std::size_t>(a)]] += alpha * du[a];
  return p.project(xbar);
}

struct Trial {
  double alpha = 0.0;
  double f = 0.0;
  Vec x;
  Vec g;
};

// Line search for the strong Wolfe conditions on [0, alpha_max], with
// interpolating zoom. Returns nothing if no sufficient-decrease point was
// found.
std::optional<Trial> line_search(Problem& p, const Vec& x, double f0, const Vec& g0, const Vec& d, double alpha0,
                                 double alpha_max) {
  constexpr double kArmijo = 1e-3;
  constexpr double kCurvature = 0.9;
  constexpr int kMaxEvaluations = 30;
  const double dphi0 = g0.dot(d);
  if (!(dphi0 < 0.0)) return std::nullopt;

  int evals = 0;
  auto eval = [&](double alpha) {
    Trial t;
    t.alpha = alpha;
    t.x = p.project(x + alpha * d);
    t.f = p(t.x, t.g);
    ++evals;
    return t;
  };
  auto armijo = [&](const Trial& t) { return std::isfinite(t.f) && t.f <= f0 + kArmijo * t.alpha * dphi0; };
  auto curvature = [&](const Trial& t) { return std::abs(t.g.dot(d)) <= -kCurvature * dphi0; };

  auto zoom = [&](Trial lo, Trial hi) -> std::optional<Trial> {
    // lo satisfies sufficient decrease (or is the start point, alpha 0).
    while (evals < kMaxEvaluations) {
      const double width = hi.alpha - lo.alpha;
      if (std::abs(width) <= 1e-16 * std::max(1.0, std::abs(hi.alpha))) break;
      // Quadratic interpolation from f(lo), f'(lo), f(hi), safeguarded.
      const double dlo = lo.alpha == 0.0 ? dphi0 : lo.g.dot(d);
      const double denom = 2.0 * (hi.f - lo.f - dlo * width);
      double alpha = lo.alpha + 0.5 * width;
      if (std::isfinite(hi.f) && denom > 0.0) alpha = lo.alpha - dlo * width * width / denom;
      const double a = std::min(lo.alpha, hi.alpha);
      const double c = std::max(lo.alpha, hi.alpha);
      alpha = std::clamp(alpha, a + 0.1 * (c - a), c - 0.1 * (c - a));

      Trial t = eval(alpha);
      const double flo = lo.alpha == 0.0 ? f0 : lo.f;
      if (!armijo(t) || t.f >= flo) {
        hi = std::move(t);
      } else {
        if (curvature(t)) return t;
        if (t.g.dot(d) * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(t);
      }
    }
    if (lo.alpha > 0.0) return lo;
    return std::nullopt;
  };

  Trial start{0.0, f0, x, g0};
  Trial prev = start;
  double alpha = std::min(alpha0, alpha_max);
  while (evals < kMaxEvaluations) {
    Trial t = eval(alpha);
    if (!armijo(t) || (prev.alpha > 0.0 && t.f >= prev.f)) return zoom(prev, t);
    if (curvature(t)) return t;
    if (t.g.dot(d) >= 0.0) return zoom(t, prev);
    if (alpha >= alpha_max) return t;
    prev = std::move(t);
    alpha = std::min(2.0 * alpha, alpha_max);
  }
  if (prev.alpha > 0.0) return prev;
  return std::nullopt;
}

}  // namespace

BoxResult minimize_box(const ObjectiveFn& fn, std::vector<double> x0, const Bounds& bounds,
                       const OptimizerConfig& config) {
  config.validate();
  if (bounds.lower.size() != x0.size() || bounds.upper.size() != x0.size()) {
    throw std::invalid_argument("bounds do not match the start point");
  }
  Problem p{fn, bounds};
  const Eigen::Index n = static_cast<Eigen::Index>(x0.size());

  Vec x = p.project(to_vec(x0));
  Vec g;
  double f = p(x, g);

  BoxResult result;
  result.trace.push_back(f);
  result.termination = Termination::kMaxIterations;
  std::deque<Vec> s_hist, y_hist;

  while (result.iterations < config.max_iterations) {
    if (projected_gradient_norm(p, x, g) <= config.gradient_tolerance) {
      result.termination = Termination::kGradientConverged;
      break;
    }

    std::optional<Trial> step;
    for (int attempt = 0; attempt < 2 && !step; ++attempt) {
      Vec d;
      if (attempt == 0) {
        const Mat b = lbfgs_matrix(s_hist, y_hist, n);
        const Vec xc = cauchy_point(p, x, g, b);
        d = subspace_minimum(p, x, g, b, xc) - x;
        if (!(g.dot(d) < 0.0)) d = xc - x;
      } else {
        // Fallback: one projected-gradient step with the memory discarded.
        s_hist.clear();
        y_hist.clear();
        d = p.project(x - g) - x;
      }
      if (!(g.dot(d) < 0.0)) continue;
      const double alpha0 = s_hist.empty() ? std::min(1.0, 1.0 / d.norm()) : 1.0;
      step = line_search(p, x, f, g, d, alpha0, 1.0);
    }
    if (!step) {
      result.termination = projected_gradient_norm(p, x, g) <= config.gradient_tolerance
                               ? Termination::kGradientConverged
                               : Termination::kLineSearchFailure;
      break;
    }

    const Vec s = step->x - x;
    const Vec y = step->g - g;
    const double sy = s.dot(y);
    if (sy > std::numeric_limits<double>::epsilon() * y.squaredNorm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      if (s_hist.size() > config.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }

    const double decrease = (f - step->f) / std::max({std::abs(f), std::abs(step->f), 1.0});
    x = std::move(step->x);
    g = std::move(step->g);
    f = step->f;
    ++result.iterations;
    result.trace.push_back(f);
    if (decrease <= config.objective_tolerance) {
      result.termination = Termination::kObjectiveConverged;
      break;
    }
  }

  result.x = to_std(x);
  result.f = f;
  result.evaluations = p.evaluations;
  return result;
}

OptimizeResult minimize(const Dataset& dataset, const WeightVector& init, const RegularizationConfig& objcfg,
                        const OptimizerConfig& optcfg) {
  optcfg.validate();
  if (init.strata() != dataset.strata_count() || init.constraints() != dataset.constraints().size()) {
    throw StructuralError("initial weights do not match dataset '" + dataset.name() + "'");
  }
  const std::size_t strata = init.strata();
  const std::size_t nk = init.constraints();

  ObjectiveFn fn = [&](std::span<const double> x, std::span<double> grad) {
    WeightVector w(strata, nk, std::vector<double>(x.begin(), x.end()));
    auto [value, g] = evaluate(dataset, w, objcfg);
    std::copy(g.total.values().begin(), g.total.values().end(), grad.begin());
    return value.total;
  };

  BoxResult box = minimize_box(fn, init.values(), Bounds::uniform(init.size(), optcfg.lower_bound, optcfg.upper_bound),
                               optcfg);
  OptimizeResult out;
  out.initial_weights = init;
  out.final_weights = WeightVector(strata, nk, box.x);
  out.final_objective = objective(dataset, out.final_weights, objcfg);
  out.iterations = box.iterations;
  out.termination = box.termination;
  out.trace = std::move(box.trace);
  return out;
}

}  // namespace smaxent
