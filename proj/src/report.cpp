#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "smaxent/experiment.hpp"

namespace smaxent {

namespace {

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

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// UTF-8 aware padding for the table columns.
std::string pad(const std::string& s, std::size_t width) {
  std::size_t chars = 0;
  for (unsigned char c : s) chars += (c & 0xC0) != 0x80 ? 1 : 0;
  return chars >= width ? s : s + std::string(width - chars, ' ');
}

std::string table_text(const ExperimentOutput& output) {
  const auto& cfg = output.config;
  std::ostringstream os;
  os << "seed: " << cfg.seed << "  runs: " << cfg.runs << "  init: U[" << general(cfg.init_low) << ", "
     << general(cfg.init_high) << "]  shared inits: " << (cfg.shared_inits ? "yes" : "no") << "\n\n";

  std::size_t width = 8;
  for (const auto& o : output.outcomes) width = std::max(width, o.dataset.size() + 2);
  os << pad("Dataset", width) << "Learned successfully\n";
  for (const auto& o : output.outcomes) {
    os << pad(o.dataset, width) << o.success_count << "/" << o.runs.size() << "\n";
  }

  for (const auto& o : output.outcomes) {
    os << "\nOptima for " << o.dataset << " (sigma2 = " << general(o.sigma2) << ")\n";
    for (std::size_t c = 0; c < o.clusters.size(); ++c) {
      const auto& cl = o.clusters[c];
      os << "  cluster " << c << ": " << cl.members.size() << " run" << (cl.members.size() == 1 ? "" : "s") << ", "
         << (cl.success ? "success" : "failure") << "\n";
      for (const auto& d : cl.representative) {
        os << "    /" << d.ur << "/ ";
        for (std::size_t i = 0; i < d.entries.size(); ++i) {
          os << (i ? ", " : "") << "[" << d.entries[i].first << "] " << fixed(d.entries[i].second, 2);
        }
        os << "\n";
      }
      os << "    sample weights:";
      const auto& w = cl.representative_weights;
      for (std::size_t s = 0; s < w.strata(); ++s) {
        os << (s ? " |" : "");
        for (std::size_t k = 0; k < w.constraints(); ++k) os << " " << fixed(w(s, k), 2);
      }
      os << "\n";
    }
    for (const auto& r : o.runs) {
      if (!r.error.empty()) os << "  run " << r.run_index << " error: " << r.error << "\n";
    }
  }
  return os.str();
}

std::string csv(const ExperimentOutput& output) {
  // Union of probability and weight columns across datasets, in order of
  // first appearance.
  std::vector<std::string> prob_cols, weight_cols;
  auto add = [](std::vector<std::string>& cols, const std::string& c) {
    if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
  };
  auto prob_name = [](const std::string& ur, const std::string& sr) { return "p:/" + ur + "/->[" + sr + "]"; };
  auto weight_name = [](std::size_t s, const std::string& c) { return "w:" + std::to_string(s) + ":" + c; };

  for (const auto& o : output.outcomes) {
    if (o.runs.empty()) continue;
    for (const auto& d : o.runs.front().distributions) {
      for (const auto& [sr, p] : d.entries) add(prob_cols, prob_name(d.ur, sr));
    }
  }
  for (const auto& o : output.outcomes) {
    for (std::size_t s = 0; s < o.strata; ++s) {
      for (const auto& c : o.constraint_names) add(weight_cols, weight_name(s, c));
    }
  }

  std::ostringstream os;
  os << "dataset,run_index,seed,success,final_objective,cluster_id";
  for (const auto& c : prob_cols) os << "," << csv_field(c);
  for (const auto& c : weight_cols) os << "," << csv_field(c);
  os << "\n";

  for (const auto& o : output.outcomes) {
    for (const auto& r : o.runs) {
      std::vector<std::string> probs(prob_cols.size()), weights(weight_cols.size());
      for (const auto& d : r.distributions) {
        for (const auto& [sr, p] : d.entries) {
          auto it = std::find(prob_cols.begin(), prob_cols.end(), prob_name(d.ur, sr));
          probs[static_cast<std::size_t>(it - prob_cols.begin())] = fixed(p, 6);
        }
      }
      for (std::size_t s = 0; s < o.strata; ++s) {
        for (std::size_t k = 0; k < o.constraint_names.size(); ++k) {
          auto it = std::find(weight_cols.begin(), weight_cols.end(), weight_name(s, o.constraint_names[k]));
          weights[static_cast<std::size_t>(it - weight_cols.begin())] = fixed(r.final_weights(s, k), 6);
        }
      }
      os << csv_field(o.dataset) << "," << r.run_index << "," << output.config.seed << ","
         << (r.classification.success ? "true" : "false") << "," << general(r.final_objective.total) << ","
         << cluster_of(o.clusters, r.run_index);
      for (const auto& v : probs) os << "," << v;
      for (const auto& v : weights) os << "," << v;
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "table-text") return ReportFormat::kTableText;
  if (name == "csv") return ReportFormat::kCsv;
  throw std::invalid_argument("unknown report format '" + std::string(name) + "' (expected table-text or csv)");
}

std::string emit_report(const ExperimentOutput& output, ReportFormat format) {
  switch (format) {
    case ReportFormat::kTableText:
      return table_text(output);
    case ReportFormat::kCsv:
      return csv(output);
  }
  throw std::invalid_argument("unknown report format");
}

}  // namespace smaxent
