#include "smaxent/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace smaxent {

Dataset::Dataset(std::string name, ConstraintSet constraints, std::size_t strata_count,
                 std::vector<DerivationGraph> graphs, ObservedDistribution observed, double sigma2_default)
    : name_(std::move(name)),
      constraints_(std::move(constraints)),
      strata_count_(strata_count),
      graphs_(std::move(graphs)),
      observed_(std::move(observed)),
      sigma2_default_(sigma2_default) {
  if (name_.empty()) throw DatasetError("name", "dataset name is empty");
  if (constraints_.size() == 0) throw DatasetError("constraints", "at least one constraint is required");
  if (strata_count_ == 0) throw DatasetError("strata", "strata must be >= 1");
  if (!(sigma2_default_ > 0.0) || !std::isfinite(sigma2_default_)) throw DatasetError("sigma2", "sigma2 must be > 0");
  if (graphs_.empty()) throw DatasetError("inputs", "at least one input is required");

  std::set<std::string> urs;
  for (std::size_t g = 0; g < graphs_.size(); ++g) {
    const auto& graph = graphs_[g];
    const std::string at = "inputs[" + std::to_string(g) + "]";
    if (!urs.insert(graph.ur()).second) throw DatasetError(at, "duplicate UR /" + graph.ur() + "/");
    if (graph.strata_count() != strata_count_) {
      throw DatasetError(at, "graph has " + std::to_string(graph.strata_count()) + " strata, dataset has " +
                                 std::to_string(strata_count_));
    }
    if (graph.constraint_count() != constraints_.size()) {
      throw DatasetError(at, "graph uses " + std::to_string(graph.constraint_count()) + " constraints, dataset has " +
                                 std::to_string(constraints_.size()));
    }
  }

  targets_.resize(graphs_.size());
  std::vector<double> sums(graphs_.size(), 0.0);
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < observed_.entries.size(); ++i) {
    const auto& e = observed_.entries[i];
    const std::string at = "observed[" + std::to_string(i) + "]";
    std::size_t g = graph_index(e.ur);
    if (g == DerivationGraph::npos) throw DatasetError(at, "unknown UR /" + e.ur + "/");
    std::size_t surface = graphs_[g].surface_index(e.surface);
    if (surface == DerivationGraph::npos) {
      throw DatasetError(at, "[" + e.surface + "] is not reachable from /" + e.ur + "/");
    }
    if (!std::isfinite(e.p) || e.p < 0.0 || e.p > 1.0) {
      throw DatasetError(at, "probability must lie in [0, 1], got " + std::to_string(e.p));
    }
    if (!seen.emplace(e.ur, e.surface).second) {
      throw DatasetError(at, "duplicate observation /" + e.ur + "/ -> [" + e.surface + "]");
    }
    targets_[g].push_back({surface, e.p});
    sums[g] += e.p;
  }
  for (std::size_t g = 0; g < graphs_.size(); ++g) {
    if (std::abs(sums[g] - 1.0) > 1e-9) {
      throw DatasetError("observed", "probabilities for /" + graphs_[g].ur() + "/ sum to " + std::to_string(sums[g]) +
                                         ", expected 1");
    }
  }
}

std::size_t Dataset::graph_index(const std::string& ur) const {
  for (std::size_t g = 0; g < graphs_.size(); ++g) {
    if (graphs_[g].ur() == ur) return g;
  }
  return DerivationGraph::npos;
}

bool Dataset::operator==(const Dataset& other) const {
  if (name_ != other.name_ || constraints_ != other.constraints_ || strata_count_ != other.strata_count_ ||
      observed_ != other.observed_ || sigma2_default_ != other.sigma2_default_ ||
      graphs_.size() != other.graphs_.size()) {
    return false;
  }
  for (std::size_t g = 0; g < graphs_.size(); ++g) {
    if (graphs_[g].ur() != other.graphs_[g].ur() || graphs_[g].all_tableaux() != other.graphs_[g].all_tableaux()) {
      return false;
    }
  }
  return true;
}

namespace {

// ---------------------------------------------------------------------------
// Southern French tensing/laxing

// Constraint order: *[-tense]/Open, *[+tense]/Closed, Ident(V).
// A form is described by the quality of its first vowel and whether that
// vowel sits in a closed syllable at the stratum being evaluated.
struct FrenchForm {
  std::string text;
  bool lax;
  bool closed;
};

std::vector<int> french_violations(bool input_lax, const FrenchForm& out) {
  return {out.lax && !out.closed ? 1 : 0, !out.lax && out.closed ? 1 : 0, out.lax != input_lax ? 1 : 0};
}

StepTableau french_tableau(std::size_t stratum, const std::string& input, bool input_lax,
                           const std::vector<FrenchForm>& candidates) {
  StepTableau t{stratum, input, {}, {}};
  for (const auto& c : candidates) {
    t.candidates.push_back(c.text);
    t.violations.push_back(french_violations(input_lax, c));
  }
  return t;
}

Dataset french_opaque() {
  // Phrase-level candidates are resyllabified: the first vowel is open.
  const std::vector<FrenchForm> surface = {{"se.ta", false, false}, {"sɛ.ta", true, false}};

  // /set#a/: the word level sees a closed syllable before the boundary.
  std::vector<StepTableau> cette = {
      french_tableau(0, "set#a", false, {{"set#a", false, true}, {"sɛt#a", true, true}}),
      french_tableau(1, "set#a", false, surface),
      french_tableau(1, "sɛt#a", true, surface),
  };
  // /se#ta/: open at both levels.
  std::vector<StepTableau> cest = {
      french_tableau(0, "se#ta", false, {{"se#ta", false, false}, {"sɛ#ta", true, false}}),
      french_tableau(1, "se#ta", false, surface),
      french_tableau(1, "sɛ#ta", true, surface),
  };

  std::vector<DerivationGraph> graphs;
  graphs.emplace_back("set#a", 2, 3, std::move(cette));
  graphs.emplace_back("se#ta", 2, 3, std::move(cest));
  ObservedDistribution observed{{{"set#a", "sɛ.ta", 1.0}, {"se#ta", "se.ta", 1.0}}};
  return Dataset("french-opaque", ConstraintSet({"*[-tense]/Open", "*[+tense]/Closed", "Ident(V)"}), 2,
                 std::move(graphs), std::move(observed), 10000.0);
}

// ---------------------------------------------------------------------------
// Canadian English raising and flapping

// Constraint order: Ident(son), Ident(low), *V́TV, *aɪ,aʊ/_[-vce].
enum class Cons { kT, kD, kFlap, kOther };

struct EnglishForm {
  std::string text;
  bool raised;
  Cons cons;
  // Diphthong is followed by a voiceless consonant visible at this stratum.
  bool voiceless_next;
};

std::vector<int> english_violations(const EnglishForm& in, const EnglishForm& out) {
  const bool in_flap = in.cons == Cons::kFlap;
  const bool out_flap = out.cons == Cons::kFlap;
  const bool stop = out.cons == Cons::kT || out.cons == Cons::kD;
  return {
      (in.cons != Cons::kOther && in_flap != out_flap) ? 1 : 0,
      in.raised != out.raised ? 1 : 0,
      stop ? 1 : 0,
      (!out.raised && out.voiceless_next) ? 1 : 0,
  };
}

StepTableau english_tableau(std::size_t stratum, const EnglishForm& input, const std::vector<EnglishForm>& candidates) {
  StepTableau t{stratum, input.text, {}, {}};
  for (const auto& c : candidates) {
    t.candidates.push_back(c.text);
    t.violations.push_back(english_violations(input, c));
  }
  return t;
}

// Two-stratum graph where every output of the word level is re-evaluated at
// the phrase level against the same candidate set.
DerivationGraph english_graph(const EnglishForm& ur, const std::vector<EnglishForm>& word,
                              const std::vector<EnglishForm>& phrase) {
  std::vector<StepTableau> tableaux{english_tableau(0, ur, word)};
  for (const auto& w : word) tableaux.push_back(english_tableau(1, w, phrase));
  return DerivationGraph(ur.text, 2, 4, std::move(tableaux));
}

// /maɪtə/ and /saɪdə/: four candidates per tableau, no t<->d changes.
DerivationGraph flapping_graph(const std::string& onset, Cons stop) {
  const std::string stop_text = stop == Cons::kT ? "t" : "d";
  const bool voiceless = stop == Cons::kT;
  auto form = [&](bool raised, bool flap) {
    return EnglishForm{onset + (raised ? "ʌɪ" : "aɪ") + (flap ? "ɾ" : stop_text) + "ə", raised,
                       flap ? Cons::kFlap : stop, voiceless && !flap};
  };
  std::vector<EnglishForm> cands = {form(false, false), form(false, true), form(true, false), form(true, true)};
  return english_graph(cands[0], cands, cands);
}

DerivationGraph life_graph() {
  std::vector<EnglishForm> cands = {{"laɪf", false, Cons::kOther, true}, {"lʌɪf", true, Cons::kOther, true}};
  return english_graph(cands[0], cands, cands);
}

// The word level cannot see the /f/ across the boundary; the phrase level can.
DerivationGraph lie_for_graph() {
  std::vector<EnglishForm> word = {{"laɪ#fɔɪ", false, Cons::kOther, false}, {"lʌɪ#fɔɪ", true, Cons::kOther, false}};
  std::vector<EnglishForm> phrase = {{"laɪ fɔɪ", false, Cons::kOther, true}, {"lʌɪ fɔɪ", true, Cons::kOther, true}};
  return english_graph(word[0], word, phrase);
}

Dataset english(bool opaque, bool life, bool lie_for) {
  std::string name = std::string("en-") + (opaque ? "opaque" : "transparent") + "-mitre-cider";
  if (life) name += "-life";
  if (lie_for) name += "-lie-for";

  std::vector<DerivationGraph> graphs{flapping_graph("m", Cons::kT), flapping_graph("s", Cons::kD)};
  ObservedDistribution observed{{{"maɪtə", opaque ? "mʌɪɾə" : "maɪɾə", 1.0}, {"saɪdə", "saɪɾə", 1.0}}};
  if (life) {
    graphs.push_back(life_graph());
    observed.entries.push_back({"laɪf", "lʌɪf", 1.0});
  }
  if (lie_for) {
    graphs.push_back(lie_for_graph());
    observed.entries.push_back({"laɪ#fɔɪ", "laɪ fɔɪ", 1.0});
  }
  return Dataset(name, ConstraintSet({"Ident(son)", "Ident(low)", "*V́TV", "*aɪ,aʊ/_[-vce]"}), 2, std::move(graphs),
                 std::move(observed), 9000.0);
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {
      "french-opaque",
      "en-opaque-mitre-cider",
      "en-opaque-mitre-cider-life",
      "en-opaque-mitre-cider-lie-for",
      "en-opaque-mitre-cider-life-lie-for",
      "en-transparent-mitre-cider",
      "en-transparent-mitre-cider-life",
      "en-transparent-mitre-cider-lie-for",
      "en-transparent-mitre-cider-life-lie-for",
  };
  return names;
}

Dataset builtin(std::string_view name) {
  if (name == "french-opaque") return french_opaque();
  for (bool opaque : {true, false}) {
    for (bool life : {false, true}) {
      for (bool lie_for : {false, true}) {
        Dataset d = english(opaque, life, lie_for);
        if (d.name() == name) return d;
      }
    }
  }
  std::string listing;
  for (const auto& n : builtin_names()) listing += (listing.empty() ? "" : ", ") + n;
  throw DatasetError("", "unknown dataset '" + std::string(name) + "'; available: " + listing);
}

}  // namespace smaxent
