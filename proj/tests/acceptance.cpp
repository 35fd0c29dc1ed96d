// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any hard criterion fails; criterion 12 is informational.

#include <cstdio>
#include <map>
#include <sstream>

#include "support.hpp"

using namespace smaxent;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string& title, const Outcome& o, bool hard = true) {
  std::printf("criterion %2d %s: %s (%s)\n", n, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str());
  if (!o.pass && hard) ++failures;
}

std::string num(double v, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double surface_p(const Dataset& ds, const std::vector<SurfaceDistribution>& pred, const std::string& ur,
                 const std::string& sr) {
  return pred[ds.graph_index(ur)].probability(sr);
}

Outcome toy_tableau() {
  const auto p = step_distribution(fixtures::toy_mitre(), std::vector<double>{7, 5, 1, 0});
  const double expected[] = {0.002, 0.018, 0.973, 0.007};
  bool ok = true;
  std::string d;
  for (int c = 0; c < 4; ++c) {
    ok = ok && std::abs(p[c] - expected[c]) <= 0.001;
    d += (c ? " " : "") + num(p[c]);
  }
  return {ok, d};
}

Outcome french_fit() {
  const auto ds = builtin("french-opaque");
  const auto pred = predict(ds, fixtures::french_fit());
  const double a = surface_p(ds, pred, "set#a", "sɛ.ta"), b = surface_p(ds, pred, "se#ta", "se.ta");
  return {a >= 0.99 && b >= 0.99, "/set#a/->[sɛ.ta] " + num(a) + ", /se#ta/->[se.ta] " + num(b)};
}

Outcome canadian_fit() {
  const auto ds = builtin("en-opaque-mitre-cider-life-lie-for");
  const auto pred = predict(ds, fixtures::canadian_fit());
  const std::tuple<const char*, const char*, double> rows[] = {{"maɪtə", "mʌɪɾə", 0.99},
                                                               {"saɪdə", "saɪɾə", 0.99},
                                                               {"laɪf", "lʌɪf", 1.00},
                                                               {"laɪ#fɔɪ", "laɪ fɔɪ", 0.99},
                                                               {"laɪ#fɔɪ", "lʌɪ fɔɪ", 0.01}};
  bool ok = true;
  std::string d;
  for (const auto& [ur, sr, want] : rows) {
    const double p = surface_p(ds, pred, ur, sr);
    ok = ok && std::abs(p - want) <= 0.01 + 1e-12;
    d += std::string(d.empty() ? "" : ", ") + "[" + sr + "] " + num(p);
  }
  return {ok, d};
}

Outcome word_tableau() {
  const auto ds = builtin("en-opaque-mitre-cider");
  const auto& t = ds.graphs()[ds.graph_index("maɪtə")].tableau(0, "maɪtə");
  const auto p = oracle::naive_softmax(t, {1, 7, 3, 1});
  const auto q = step_distribution(t, std::vector<double>{1, 7, 3, 1});
  std::map<std::string, double> by;
  for (std::size_t c = 0; c < t.candidates.size(); ++c) {
    by[t.candidates[c]] = q[c];
    if (std::abs(p[c] - q[c]) > 1e-12) return {false, "library and oracle softmax disagree"};
  }
  const double flap = by["maɪɾə"], faithful = by["maɪtə"];
  return {std::abs(flap - 0.95) <= 0.005 && std::abs(faithful - 0.05) <= 0.005,
          "[maɪɾə] " + num(flap) + ", [maɪtə] " + num(faithful)};
}

Outcome kl_table() {
  const auto ds = builtin("en-opaque-mitre-cider");
  const double ident_low[] = {6.28, 1.0, 0.0}, want[] = {5.87, 1.63, 1.39};
  bool ok = true;
  std::string d;
  for (int i = 0; i < 3; ++i) {
    StrataMatrix m = fixtures::bottleneck_init().matrix();
    m(1, 1) = ident_low[i];
    const double kl = oracle::kl(ds, m);
    ok = ok && std::abs(kl - want[i]) <= 0.05;
    d += (i ? " " : "") + num(kl);
  }
  return {ok, "KL " + d};
}

Outcome bottleneck_table() {
  const auto ds = builtin("en-opaque-mitre-cider");
  const double word[4][4] = {{1, 7, 3, 1}, {4, 3, 2, 4}, {6, 3, 1, 6}, {7, 3, 0, 7}};
  bool ok = true;
  std::string d;
  for (const auto& w : word) {
    StrataMatrix m(2, 4, {w[0], w[1], w[2], w[3], 0, 0, 6.29, 0});
    const auto marg = oracle::marginals(ds.graphs()[ds.graph_index("maɪtə")], m);
    const double a = marg.at("maɪɾə"), b = marg.at("mʌɪɾə"), kl = oracle::kl(ds, m);
    ok = ok && std::abs(a - 0.5) <= 0.005 && std::abs(b - 0.5) <= 0.005 && std::abs(kl - 1.39) <= 0.02;
    d += std::string(d.empty() ? "" : "; ") + num(a, 3) + "/" + num(b, 3) + " KL " + num(kl, 3);
  }
  return {ok, d};
}

Outcome gradient_property() {
  std::size_t points = 0, bad = 0;
  double worst = 0, worst_abs = 0;
  for (const auto& name : builtin_names()) {
    const auto ds = builtin(name);
    const RegularizationConfig reg{0.0, ds.sigma2_default()};
    std::mt19937_64 rng(1000 + points);
    for (int i = 0; i < 100; ++i, ++points) {
      const auto w = fixtures::random_weights(rng, ds.strata_count(), ds.constraints().size(), 10.0);
      const auto g = gradient(ds, w, reg).total;
      const auto fd = oracle::finite_difference(
          [&](const StrataMatrix& m) { return oracle::kl(ds, m) + oracle::penalty(m, reg.mu, reg.sigma2); },
          w.matrix(), 1e-5);
      bool ok = true;
      for (std::size_t k = 0; k < g.size(); ++k) {
        const double err = std::abs(g.values()[k] - fd.values()[k]);
        const double rel = err / std::max(std::abs(fd.values()[k]), 1e-300);
        worst_abs = std::max(worst_abs, err);
        if (err > 1e-7) worst = std::max(worst, rel);
        ok = ok && (err <= 1e-7 || rel <= 1e-4);
      }
      bad += ok ? 0 : 1;
    }
  }
  return {bad == 0, std::to_string(points - bad) + "/" + std::to_string(points) + " points, max abs err " +
                        sci(worst_abs) + ", worst rel err above 1e-7 abs " + sci(worst)};
}

Outcome marginal_property() {
  double worst = 0;
  std::size_t evals = 0;
  std::mt19937_64 rng(77);
  for (const auto& name : builtin_names()) {
    const auto ds = builtin(name);
    for (int i = 0; i < 1000; ++i) {
      const auto w = fixtures::random_weights(rng, ds.strata_count(), ds.constraints().size(), 10.0);
      for (const auto& g : ds.graphs()) {
        const auto fwd = surface_distribution(g, w);
        const auto ref = oracle::marginals(g, w);
        for (const auto& [sr, p] : fwd.entries) worst = std::max(worst, std::abs(p - ref.at(sr)));
        ++evals;
      }
    }
  }
  return {worst <= 1e-12, std::to_string(evals) + " graph evaluations, max diff " + sci(worst)};
}

ExperimentOutput sweep(const std::vector<std::string>& names) {
  ExperimentConfig cfg;
  cfg.datasets = names;
  cfg.runs = 100;
  cfg.seed = 1;
  cfg.shared_inits = true;
  return run_experiment(cfg);
}

Outcome french_sweep() {
  const auto out = sweep({"french-opaque"});
  const auto& o = out.outcomes[0];
  bool ok = o.success_count >= 90;
  std::string d = "success " + std::to_string(o.success_count) + "/100";
  for (const auto& c : o.clusters) {
    if (c.success) continue;
    for (const auto& dist : c.representative)
      for (const auto& [sr, p] : dist.entries) ok = ok && std::abs(p - 0.5) < 1e-9;
    for (auto r : c.members)
      for (double w : o.runs[r].final_weights.values()) ok = ok && w < 0.5;
    d += ", failure cluster of " + std::to_string(c.members.size());
  }
  return {ok, d};
}

const std::vector<std::string> kEnglish = {
    "en-opaque-mitre-cider",           "en-opaque-mitre-cider-life",
    "en-opaque-mitre-cider-lie-for",   "en-opaque-mitre-cider-life-lie-for",
    "en-transparent-mitre-cider",      "en-transparent-mitre-cider-life",
    "en-transparent-mitre-cider-lie-for", "en-transparent-mitre-cider-life-lie-for"};

Outcome english_sweep(const ExperimentOutput& out) {
  const std::map<std::string, std::pair<int, int>> ranges = {
      {"en-opaque-mitre-cider", {36, 66}},           {"en-opaque-mitre-cider-life", {46, 76}},
      {"en-opaque-mitre-cider-lie-for", {72, 100}},  {"en-opaque-mitre-cider-life-lie-for", {77, 100}},
      {"en-transparent-mitre-cider", {95, 100}},     {"en-transparent-mitre-cider-life", {90, 100}},
      {"en-transparent-mitre-cider-lie-for", {95, 100}}, {"en-transparent-mitre-cider-life-lie-for", {78, 100}}};
  std::map<std::string, int> n;
  bool ok = true;
  std::string d;
  for (const auto& o : out.outcomes) {
    const int c = static_cast<int>(o.success_count);
    n[o.dataset] = c;
    const auto [lo, hi] = ranges.at(o.dataset);
    const bool in = c >= lo && c <= hi;
    ok = ok && in;
    d += std::string(d.empty() ? "" : ", ") + o.dataset.substr(3) + " " + std::to_string(c) + (in ? "" : "!");
  }
  const int slack = 8;
  const std::string op = "en-opaque-mitre-cider", tr = "en-transparent-mitre-cider";
  std::vector<std::string> broken;
  auto le = [&](const std::string& a, const std::string& b) {
    if (n[a] > n[b] + slack) broken.push_back(a.substr(3) + " <= " + b.substr(3));
  };
  le(op, op + "-life");
  le(op + "-life", op + "-life-lie-for");
  le(op, op + "-lie-for");
  le(op + "-lie-for", op + "-life-lie-for");
  for (const auto& s : {"", "-life", "-lie-for"}) le(tr + "-life-lie-for", tr + s);
  if (std::abs(n[op + "-life-lie-for"] - n[tr + "-life-lie-for"]) > 15) broken.push_back("full opaque ~ transparent");
  for (const auto& b : broken) d += "; ordering violated: " + b;
  return {ok && broken.empty(), d};
}

Outcome directed_optimum() {
  const auto ds = builtin("en-opaque-mitre-cider");
  const RegularizationConfig reg{0.0, 9000.0};
  const auto r = minimize(ds, fixtures::bottleneck_init(), reg, {});
  const auto pred = predict(ds, r.final_weights);
  const auto cls = classify(ds, r.final_weights);
  const double m1 = surface_p(ds, pred, "maɪtə", "mʌɪɾə"), m2 = surface_p(ds, pred, "maɪtə", "maɪɾə");
  const double c1 = surface_p(ds, pred, "saɪdə", "saɪɾə"), c2 = surface_p(ds, pred, "saɪdə", "sʌɪɾə");
  const bool near = std::abs(m1 - 0.5) <= 0.05 && std::abs(m2 - 0.5) <= 0.05 && std::abs(c1 - 0.5) <= 0.05 &&
                    std::abs(c2 - 0.5) <= 0.05;
  std::ostringstream d;
  d << (cls.success ? "success" : "failure") << " after " << r.iterations << " iterations; [mʌɪɾə] " << num(m1, 3)
    << " [maɪɾə] " << num(m2, 3) << " [saɪɾə] " << num(c1, 3) << " [sʌɪɾə] " << num(c2, 3);
  return {!cls.success && near, d.str()};
}

// Reported local optima as surface distributions; unlisted forms are 0.
using Catalog = std::map<std::string, std::map<std::string, double>>;
const std::vector<std::pair<std::string, Catalog>> kOptima = {
    {"I",
     {{"maɪtə", {{"mʌɪɾə", 0.5}, {"maɪɾə", 0.5}}},
      {"saɪdə", {{"saɪɾə", 0.5}, {"sʌɪɾə", 0.5}}},
      {"laɪf", {{"laɪf", 0.5}, {"lʌɪf", 0.5}}},
      {"laɪ#fɔɪ", {{"laɪ fɔɪ", 0.5}, {"lʌɪ fɔɪ", 0.5}}}}},
    {"II",
     {{"maɪtə", {{"mʌɪɾə", 0.67}, {"maɪɾə", 0.33}}},
      {"saɪdə", {{"sʌɪɾə", 0.67}, {"saɪɾə", 0.33}}},
      {"laɪf", {{"lʌɪf", 1.0}}},
      {"laɪ#fɔɪ", {{"laɪ fɔɪ", 0.67}, {"lʌɪ fɔɪ", 0.33}}}}},
    {"III",
     {{"maɪtə", {{"mʌɪɾə", 0.5}, {"maɪɾə", 0.5}}},
      {"saɪdə", {{"saɪɾə", 0.5}, {"sʌɪɾə", 0.5}}},
      {"laɪf", {{"lʌɪf", 1.0}}}}},
    {"IV",
     {{"maɪtə", {{"maɪɾə", 1.0}}},
      {"saɪdə", {{"saɪɾə", 1.0}}},
      {"laɪf", {{"laɪf", 0.5}, {"lʌɪf", 0.5}}},
      {"laɪ#fɔɪ", {{"laɪ fɔɪ", 0.5}, {"lʌɪ fɔɪ", 0.5}}}}}};

std::string match_optimum(const OptimumCluster& c) {
  for (const auto& [label, cat] : kOptima) {
    bool ok = true;
    for (const auto& d : c.representative) {
      const auto it = cat.find(d.ur);
      if (it == cat.end()) {
        ok = false;
        break;
      }
      for (const auto& [sr, p] : d.entries) {
        const auto f = it->second.find(sr);
        ok = ok && std::abs(p - (f == it->second.end() ? 0.0 : f->second)) <= 0.05;
      }
    }
    if (ok) return label;
  }
  return "";
}

Outcome cluster_catalog(const ExperimentOutput& out) {
  std::size_t failed = 0, matched = 0;
  std::string d;
  for (const auto& o : out.outcomes) {
    for (const auto& c : o.clusters) {
      if (c.success) continue;
      failed += c.members.size();
      const std::string label = match_optimum(c);
      if (!label.empty()) {
        matched += c.members.size();
        d += "; " + o.dataset.substr(3) + ": " + std::to_string(c.members.size()) + " at optimum " + label;
      } else {
        std::string desc;
        for (const auto& dist : c.representative)
          for (const auto& [sr, p] : dist.entries)
            if (p > 0) desc += " [" + sr + "] " + num(p, 2);
        d += "; " + o.dataset.substr(3) + ": novel cluster of " + std::to_string(c.members.size()) + ":" + desc;
      }
    }
  }
  return {true, std::to_string(failed) + " failed runs, " + std::to_string(matched) + " in known optima" + d};
}

}  // namespace

int main() {
  report(1, "toy tableau probabilities", toy_tableau());
  report(2, "French grammar fit", french_fit());
  report(3, "Canadian grammar fit", canadian_fit());
  report(4, "word-level mitre tableau", word_tableau());
  report(5, "KL over phrase Ident(low)", kl_table());
  report(6, "bottleneck with phrase Ident(low) = 0", bottleneck_table());
  report(7, "gradient vs finite differences", gradient_property());
  report(8, "forward marginals vs path enumeration", marginal_property());
  report(9, "French learnability sweep", french_sweep());
  const auto english = sweep(kEnglish);
  report(10, "English learnability sweeps", english_sweep(english));
  report(11, "directed local optimum from the bottleneck start", directed_optimum());
  report(12, "failure cluster catalog (informational)", cluster_catalog(english), false);
  std::printf("%d hard criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
