#include "smaxent/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "smaxent/datasets.hpp"
#include "smaxent/experiment.hpp"

namespace smaxent {

namespace {

// Input problems that map to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string general(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

std::string pad(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : std::string(width - w, ' ') + s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

// Numbers separated by commas and/or whitespace. nullopt if any token is
// not a number.
std::optional<std::vector<double>> parse_numbers(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) return std::nullopt;
      out.push_back(v);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return out;
}

// A literal list, or else the path of a file holding one.
WeightVector parse_weights(const std::string& spec, const Dataset& ds) {
  auto values = parse_numbers(spec);
  if (!values) {
    values = parse_numbers(read_file(spec));
    if (!values) throw InputError("weights file '" + spec + "' does not hold a list of numbers");
  }
  if (values->size() != ds.weight_count()) {
    throw InputError("expected " + std::to_string(ds.weight_count()) + " weights (" +
                     std::to_string(ds.strata_count()) + " strata x " + std::to_string(ds.constraints().size()) +
                     " constraints, stratum-major), got " + std::to_string(values->size()));
  }
  try {
    return WeightVector(ds.strata_count(), ds.constraints().size(), std::move(*values));
  } catch (const StructuralError& e) {
    throw InputError(e.what());
  }
}

std::string weights_line(const WeightVector& w) {
  std::string out;
  for (std::size_t s = 0; s < w.strata(); ++s) {
    if (s) out += " |";
    for (std::size_t k = 0; k < w.constraints(); ++k) out += " " + fixed(w(s, k), 2);
  }
  return out;
}

std::string distribution_line(const SurfaceDistribution& d) {
  std::string out = "/" + d.ur + "/";
  for (std::size_t i = 0; i < d.entries.size(); ++i) {
    out += (i ? ", [" : " [") + d.entries[i].first + "] " + fixed(d.entries[i].second, 3);
  }
  return out;
}

// Dataset selection shared by several commands.
struct DatasetSource {
  std::string name;
  std::string file;

  void add_to(CLI::App* cmd, bool required) {
    auto* d = cmd->add_option("--dataset", name, "built-in dataset name");
    auto* f = cmd->add_option("--file", file, "dataset JSON file");
    d->excludes(f);
    if (required) {
      cmd->callback([this] {
        if (name.empty() && file.empty()) throw CLI::ValidationError("one of --dataset or --file is required");
      });
    }
  }
  bool given() const { return !name.empty() || !file.empty(); }
  Dataset load() const {
    if (!file.empty()) return parse_dataset(read_file(file));
    return builtin(name);
  }
};

void print_tableau(std::ostream& out, const StepTableau& tab, const ConstraintSet& cons,
                   std::span<const double> weights, double reach) {
  const auto p = step_distribution(tab, weights);
  std::size_t first = display_width(tab.input_form);
  for (const auto& c : tab.candidates) first = std::max(first, display_width(c) + 2);
  std::vector<std::size_t> widths;
  for (std::size_t k = 0; k < cons.size(); ++k) widths.push_back(std::max<std::size_t>(display_width(cons[k].name), 6));

  out << "stratum " << tab.stratum << ", input " << tab.input_form << " (reached with p = " << fixed(reach, 3)
      << ")\n";
  out << pad("", first);
  for (std::size_t k = 0; k < cons.size(); ++k) out << "  " << lpad(cons[k].name, widths[k]);
  out << "  " << lpad("H", 9) << "  " << lpad("e^H", 9) << "  " << lpad("p", 6) << "\n";
  out << pad("", first);
  for (std::size_t k = 0; k < cons.size(); ++k) out << "  " << lpad(fixed(weights[k], 2), widths[k]);
  out << "\n";
  for (std::size_t c = 0; c < tab.candidates.size(); ++c) {
    const double h = harmony(weights, tab.violations[c]);
    out << pad("[" + tab.candidates[c] + "]", first);
    for (std::size_t k = 0; k < cons.size(); ++k) {
      const int v = tab.violations[c][k];
      out << "  " << lpad(v ? std::to_string(-v) : "", widths[k]);
    }
    out << "  " << lpad(fixed(h, 2), 9) << "  " << lpad(fixed(std::exp(h), 3), 9) << "  " << lpad(fixed(p[c], 3), 6)
        << "\n";
  }
}

void print_graph(std::ostream& out, const DerivationGraph& graph, const ConstraintSet& cons,
                 const WeightVector& weights) {
  out << "UR /" << graph.ur() << "/\n";
  const auto& layers = graph.layers();
  std::vector<double> reach{1.0};
  for (std::size_t s = 0; s < layers.size(); ++s) {
    std::vector<double> next(s + 1 < layers.size() ? layers[s + 1].size() : 0, 0.0);
    for (std::size_t t = 0; t < layers[s].size(); ++t) {
      if (!(reach[t] > 0.0)) continue;
      const auto& tab = layers[s][t];
      print_tableau(out, tab, cons, weights.row(s), reach[t]);
      out << "\n";
      if (s + 1 < layers.size()) {
        const auto p = step_distribution(tab, weights.row(s));
        for (std::size_t c = 0; c < p.size(); ++c) next[graph.successor(s, t, c)] += reach[t] * p[c];
      }
    }
    reach = std::move(next);
  }
  out << "surface distribution " << distribution_line(surface_distribution(graph, weights)) << "\n";
}

struct OptimizerFlags {
  std::optional<double> sigma2;
  double mu = 0.0;
  OptimizerConfig opt;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--sigma2", sigma2, "regularization variance (default: the dataset's)");
    cmd->add_option("--mu", mu, "regularization mean");
    cmd->add_option("--memory", opt.memory, "stored curvature pairs");
    cmd->add_option("--max-iterations", opt.max_iterations);
    cmd->add_option("--gradient-tolerance", opt.gradient_tolerance, "projected-gradient infinity norm");
    cmd->add_option("--objective-tolerance", opt.objective_tolerance, "relative objective decrease");
  }
};

int cmd_tableau(const DatasetSource& src, const std::string& weights_spec, const std::string& ur, std::ostream& out) {
  const Dataset ds = src.load();
  const WeightVector w = parse_weights(weights_spec, ds);
  if (!ur.empty()) {
    const std::size_t g = ds.graph_index(ur);
    if (g == DerivationGraph::npos) throw InputError("no underlying form /" + ur + "/ in " + ds.name());
    print_graph(out, ds.graphs()[g], ds.constraints(), w);
    return kExitOk;
  }
  for (std::size_t g = 0; g < ds.graphs().size(); ++g) {
    if (g) out << "\n";
    print_graph(out, ds.graphs()[g], ds.constraints(), w);
  }
  return kExitOk;
}

int cmd_learn(const DatasetSource& src, const std::string& init_spec, std::uint64_t seed, double low, double high,
              const OptimizerFlags& flags, std::ostream& out) {
  const Dataset ds = src.load();
  WeightVector init;
  if (init_spec == "random") {
    if (!(low >= 0.0) || !(low <= high) || !std::isfinite(high)) throw InputError("need 0 <= init-low <= init-high");
    init = draw_initializations(seed, 1, ds.strata_count(), ds.constraints().size(), low, high).front();
  } else {
    init = parse_weights(init_spec, ds);
  }
  flags.opt.validate();
  const RegularizationConfig reg{flags.mu, flags.sigma2.value_or(ds.sigma2_default())};
  if (!(reg.sigma2 > 0.0)) throw InputError("sigma2 must be > 0");

  const OptimizeResult res = minimize(ds, init, reg, flags.opt);
  const RunClassification cls = classify(ds, res.final_weights);

  out << "dataset: " << ds.name() << "\n";
  if (init_spec == "random") out << "seed: " << seed << "\n";
  out << "init:" << weights_line(res.initial_weights) << "\n";
  out << "final:" << weights_line(res.final_weights) << "\n";
  out << "objective: " << general(res.final_objective.total) << " (kl " << general(res.final_objective.kl)
      << ", penalty " << general(res.final_objective.penalty) << ")\n";
  out << "iterations: " << res.iterations << ", trace length: " << res.trace.size()
      << ", termination: " << to_string(res.termination) << "\n";
  for (const auto& d : predict(ds, res.final_weights)) out << distribution_line(d) << "\n";
  out << "classification: " << (cls.success ? "success" : "failure") << "\n";
  for (const auto& f : cls.failing_forms) {
    out << "  /" << f.ur << "/ -> [" << f.surface << "] " << fixed(f.predicted, 3) << "\n";
  }
  return cls.success ? kExitOk : kExitClassification;
}

struct ExperimentFlags {
  std::string config_file;
  std::vector<std::string> datasets;
  std::optional<std::size_t> runs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool independent_inits = false;
  std::string out_prefix;
  std::string format = "table-text";
};

int cmd_experiment(const ExperimentFlags& f, const OptimizerFlags& of, std::ostream& out) {
  ExperimentConfig cfg;
  if (!f.config_file.empty()) {
    cfg = parse_experiment_config(read_file(f.config_file));
  } else {
    cfg.datasets = f.datasets;
    cfg.sigma2 = of.sigma2;
    cfg.mu = of.mu;
    cfg.optimizer = of.opt;
  }
  if (f.runs) cfg.runs = *f.runs;
  if (f.seed) cfg.seed = *f.seed;
  if (f.workers) cfg.workers = *f.workers;
  if (f.independent_inits) cfg.shared_inits = false;
  const ReportFormat format = parse_report_format(f.format);
  cfg.validate();

  const ExperimentOutput result = run_experiment(cfg);
  if (f.out_prefix.empty()) {
    out << emit_report(result, format);
    return kExitOk;
  }
  const std::pair<std::string, ReportFormat> files[] = {{f.out_prefix + ".txt", ReportFormat::kTableText},
                                                        {f.out_prefix + ".csv", ReportFormat::kCsv}};
  for (const auto& [path, fmt] : files) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw InputError("cannot write '" + path + "'");
    file << emit_report(result, fmt);
  }
  for (const auto& o : result.outcomes) out << o.dataset << " " << o.success_count << "/" << o.runs.size() << "\n";
  out << "wrote " << files[0].first << " and " << files[1].first << "\n";
  return kExitOk;
}

int cmd_gradcheck(const DatasetSource& src, std::size_t points, std::uint64_t seed, bool corrupt, std::ostream& out) {
  std::vector<Dataset> sets;
  if (src.given()) {
    sets.push_back(src.load());
  } else {
    for (const auto& n : builtin_names()) sets.push_back(builtin(n));
  }
  GradientFn analytic = [corrupt](const Dataset& d, const WeightVector& w, const RegularizationConfig& r) {
    StrataMatrix g = gradient(d, w, r).total;
    if (corrupt && g.size()) g.values()[0] += 1.0;
    return g;
  };
  std::size_t failures = 0;
  for (const auto& ds : sets) {
    const RegularizationConfig reg{0.0, ds.sigma2_default()};
    const auto pts = draw_initializations(seed, points, ds.strata_count(), ds.constraints().size(), 0.0, 10.0);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto r = check_gradient(ds, pts[i], reg, analytic);
      out << ds.name() << " point " << i << ": " << (r.passed ? "pass" : "FAIL") << " (max abs err "
          << general(r.max_abs_error) << ", max rel err " << general(r.max_rel_error) << ")\n";
      bad += r.passed ? 0 : 1;
    }
    out << ds.name() << ": " << (pts.size() - bad) << "/" << pts.size() << " points pass\n";
    failures += bad;
  }
  return failures ? kExitClassification : kExitOk;
}

int cmd_datasets(const std::string& export_name, std::ostream& out) {
  if (!export_name.empty()) {
    out << serialize_dataset(load_dataset(export_name));
    return kExitOk;
  }
  std::size_t width = 4;
  for (const auto& n : builtin_names()) width = std::max(width, n.size() + 2);
  out << pad("name", width) << "strata  constraints  URs\n";
  for (const auto& n : builtin_names()) {
    const Dataset ds = builtin(n);
    out << pad(n, width) << lpad(std::to_string(ds.strata_count()), 6) << "  "
        << lpad(std::to_string(ds.constraints().size()), 11) << "  " << lpad(std::to_string(ds.graphs().size()), 3)
        << "\n";
  }
  return kExitOk;
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  const std::string text = read_file(path);
  try {
    const Dataset ds = parse_dataset(text);
    out << "valid: " << ds.name() << " (" << ds.strata_count() << " strata, " << ds.constraints().size()
        << " constraints, " << ds.graphs().size() << " URs)\n";
    return kExitOk;
  } catch (const DatasetError& e) {
    err << "invalid: " << (e.location().empty() ? "" : "at " + e.location() + ": ");
    const std::string what = e.what();
    const std::string prefix = e.location() + ": ";
    err << (!e.location().empty() && what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what) << "\n";
    return kExitUsage;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stratal MaxEnt grammar evaluation and learning"};
  app.name("smaxent");
  app.require_subcommand(1, 1);

  DatasetSource tab_src;
  std::string tab_weights, tab_ur;
  auto* tab = app.add_subcommand("tableau", "print step tableaux and surface distributions");
  tab_src.add_to(tab, true);
  tab->add_option("--weights", tab_weights, "stratum-major list, or a file holding one")->required();
  tab->add_option("--ur", tab_ur, "restrict to one underlying form");

  DatasetSource learn_src;
  std::string learn_init;
  std::uint64_t learn_seed = 1;
  double learn_low = 0.0, learn_high = 10.0;
  OptimizerFlags learn_opt;
  auto* learn = app.add_subcommand("learn", "run the optimizer once");
  learn_src.add_to(learn, true);
  learn->add_option("--init", learn_init, "stratum-major list, a file holding one, or 'random'")->required();
  learn->add_option("--seed", learn_seed, "seed for --init random");
  learn->add_option("--init-low", learn_low);
  learn->add_option("--init-high", learn_high);
  learn_opt.add_to(learn);

  ExperimentFlags exp_flags;
  OptimizerFlags exp_opt;
  auto* exp = app.add_subcommand("experiment", "multi-restart learning sweep");
  auto* exp_cfg = exp->add_option("--config", exp_flags.config_file, "experiment JSON file");
  auto* exp_ds = exp->add_option("--datasets", exp_flags.datasets, "dataset names or files")->delimiter(',');
  exp_cfg->excludes(exp_ds);
  exp->add_option("--runs", exp_flags.runs);
  exp->add_option("--seed", exp_flags.seed);
  exp->add_option("--workers", exp_flags.workers, "0 = one per hardware thread");
  exp->add_flag("--independent-inits", exp_flags.independent_inits, "draw separate initializations per dataset");
  exp->add_option("--out", exp_flags.out_prefix, "write <prefix>.txt and <prefix>.csv");
  exp->add_option("--format", exp_flags.format, "stdout report format when --out is absent")
      ->check(CLI::IsMember({"table-text", "csv"}));
  exp_opt.add_to(exp);
  for (const char* n : {"--sigma2", "--mu", "--memory", "--max-iterations", "--gradient-tolerance",
                        "--objective-tolerance"}) {
    exp_cfg->excludes(exp->get_option(n));
  }
  exp->callback([&] {
    if (exp_flags.config_file.empty() && exp_flags.datasets.empty()) {
      throw CLI::ValidationError("one of --config or --datasets is required");
    }
  });

  DatasetSource grad_src;
  std::size_t grad_points = 100;
  std::uint64_t grad_seed = 1;
  bool grad_corrupt = false;
  auto* grad = app.add_subcommand("gradcheck", "compare the analytic gradient with finite differences");
  grad_src.add_to(grad, false);
  grad->add_option("--points", grad_points, "random weight vectors per dataset");
  grad->add_option("--seed", grad_seed);
  grad->add_flag("--corrupt-gradient", grad_corrupt)->group("");  // test hook

  std::string export_name;
  auto* list = app.add_subcommand("datasets", "list built-in datasets");
  list->add_option("--export", export_name, "print a dataset as JSON");

  std::string validate_file;
  auto* val = app.add_subcommand("validate", "check a dataset file");
  val->add_option("--file", validate_file)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*tab) return cmd_tableau(tab_src, tab_weights, tab_ur, out);
    if (*learn) return cmd_learn(learn_src, learn_init, learn_seed, learn_low, learn_high, learn_opt, out);
    if (*exp) return cmd_experiment(exp_flags, exp_opt, out);
    if (*grad) return cmd_gradcheck(grad_src, grad_points, grad_seed, grad_corrupt, out);
    if (*list) return cmd_datasets(export_name, out);
    if (*val) return cmd_validate(validate_file, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace smaxent
