#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "smaxent/datasets.hpp"

namespace smaxent {

namespace {

using Json = nlohmann::ordered_json;

const Json& field(const Json& obj, const std::string& key, const std::string& at) {
  if (!obj.is_object()) throw DatasetError(at, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw DatasetError(at, "missing key \"" + key + "\"");
  return *it;
}

std::string child(const std::string& at, const std::string& key) { return at.empty() ? key : at + "." + key; }
std::string child(const std::string& at, std::size_t i) { return at + "[" + std::to_string(i) + "]"; }

const Json& array_field(const Json& obj, const std::string& key, const std::string& at) {
  const Json& v = field(obj, key, at);
  if (!v.is_array()) throw DatasetError(child(at, key), "expected an array");
  return v;
}

std::string string_field(const Json& obj, const std::string& key, const std::string& at) {
  const Json& v = field(obj, key, at);
  if (!v.is_string()) throw DatasetError(child(at, key), "expected a string");
  return v.get<std::string>();
}

double number_field(const Json& obj, const std::string& key, const std::string& at) {
  const Json& v = field(obj, key, at);
  if (!v.is_number()) throw DatasetError(child(at, key), "expected a number");
  return v.get<double>();
}

std::size_t count_field(const Json& obj, const std::string& key, const std::string& at) {
  const Json& v = field(obj, key, at);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw DatasetError(child(at, key), "expected a nonnegative integer");
  }
  return v.get<std::size_t>();
}

StepTableau parse_tableau(const Json& j, const std::string& at) {
  StepTableau t;
  t.stratum = count_field(j, "stratum", at);
  t.input_form = string_field(j, "input", at);
  const Json& cands = array_field(j, "candidates", at);
  for (std::size_t c = 0; c < cands.size(); ++c) {
    const std::string cat = child(child(at, "candidates"), c);
    t.candidates.push_back(string_field(cands[c], "form", cat));
    const Json& v = array_field(cands[c], "violations", cat);
    std::vector<int> row;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const std::string vat = child(child(cat, "violations"), k);
      if (!v[k].is_number_integer()) throw DatasetError(vat, "expected an integer violation count");
      long long n = v[k].get<long long>();
      if (n < 0) throw DatasetError(vat, "negative violation count");
      row.push_back(static_cast<int>(n));
    }
    t.violations.push_back(std::move(row));
  }
  return t;
}

}  // namespace

Dataset parse_dataset(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DatasetError("", std::string("invalid JSON: ") + e.what());
  }

  const std::string name = string_field(doc, "name", "");
  const double sigma2 = number_field(doc, "sigma2", "");
  std::vector<std::string> names;
  const Json& cons = array_field(doc, "constraints", "");
  for (std::size_t i = 0; i < cons.size(); ++i) {
    if (!cons[i].is_string()) throw DatasetError(child("constraints", i), "expected a string");
    names.push_back(cons[i].get<std::string>());
  }
  ConstraintSet constraints;
  try {
    constraints = ConstraintSet(names);
  } catch (const StructuralError& e) {
    throw DatasetError("constraints", e.what());
  }
  const std::size_t strata = count_field(doc, "strata", "");

  std::vector<DerivationGraph> graphs;
  const Json& inputs = array_field(doc, "inputs", "");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string at = child("inputs", i);
    std::string ur = string_field(inputs[i], "ur", at);
    std::vector<StepTableau> tableaux;
    const Json& tabs = array_field(inputs[i], "tableaux", at);
    for (std::size_t t = 0; t < tabs.size(); ++t) tableaux.push_back(parse_tableau(tabs[t], child(child(at, "tableaux"), t)));
    try {
      graphs.emplace_back(std::move(ur), strata, constraints.size(), std::move(tableaux));
    } catch (const StructuralError& e) {
      throw DatasetError(at, e.what());
    }
  }

  ObservedDistribution observed;
  const Json& obs = array_field(doc, "observed", "");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::string at = child("observed", i);
    observed.entries.push_back({string_field(obs[i], "ur", at), string_field(obs[i], "surface", at),
                                number_field(obs[i], "p", at)});
  }

  return Dataset(name, std::move(constraints), strata, std::move(graphs), std::move(observed), sigma2);
}

Dataset load_dataset(const std::string& name_or_path) {
  const auto& names = builtin_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return builtin(name_or_path);
  std::ifstream in(name_or_path, std::ios::binary);
  if (!in) return builtin(name_or_path);  // reports the unknown name with the listing
  std::ostringstream text;
  text << in.rdbuf();
  return parse_dataset(text.str());
}

std::string serialize_dataset(const Dataset& dataset) {
  Json doc;
  doc["name"] = dataset.name();
  doc["sigma2"] = dataset.sigma2_default();
  doc["constraints"] = dataset.constraints().names();
  doc["strata"] = dataset.strata_count();
  doc["inputs"] = Json::array();
  for (const auto& graph : dataset.graphs()) {
    Json input;
    input["ur"] = graph.ur();
    input["tableaux"] = Json::array();
    for (const auto& tab : graph.all_tableaux()) {
      Json jt;
      jt["stratum"] = tab.stratum;
      jt["input"] = tab.input_form;
      jt["candidates"] = Json::array();
      for (std::size_t c = 0; c < tab.candidates.size(); ++c) {
        Json jc;
        jc["form"] = tab.candidates[c];
        jc["violations"] = tab.violations[c];
        jt["candidates"].push_back(std::move(jc));
      }
      input["tableaux"].push_back(std::move(jt));
    }
    doc["inputs"].push_back(std::move(input));
  }
  doc["observed"] = Json::array();
  for (const auto& e : dataset.observed().entries) {
    Json je;
    je["ur"] = e.ur;
    je["surface"] = e.surface;
    je["p"] = e.p;
    doc["observed"].push_back(std::move(je));
  }
  return doc.dump(2) + "\n";
}

}  // namespace smaxent
