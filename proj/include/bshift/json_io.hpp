#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bshift/acceptance.hpp"
#include "bshift/error.hpp"
#include "bshift/pattern_set.hpp"
#include "bshift/probvec.hpp"
#include "bshift/rgamma.hpp"

namespace bshift::io {

using json = nlohmann::ordered_json;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out || !(out << text)) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
}

// ---- probability vectors --------------------------------------------------------

inline json to_json(const ProbVector& v) {
  json atoms = json::array();
  for (const auto& a : v.atoms()) atoms.push_back({{"label", a.label}, {"mass", a.mass}});
  json out{{"atoms", std::move(atoms)}};
  if (const auto& t = v.tail()) out["tail"] = {{"prefix", t->prefix}, {"mass", t->mass}, {"log_decay", t->log_decay}};
  return out;
}

/// {"atoms": [{"label": ..., "mass": ...}, ...]} with an optional geometric "tail".
inline ProbVector probvec_from_json(const json& j, const std::string& where = "vector") {
  const auto bad = [&](const std::string& what) { return Error(ErrorCode::InvalidConfig, where + ": " + what); };
  if (!j.is_object() || !j.contains("atoms") || !j["atoms"].is_array())
    throw bad("expected an object with an \"atoms\" array");
  for (const auto& [key, _] : j.items())
    if (key != "atoms" && key != "tail") throw bad("unknown key \"" + key + "\"");
  std::vector<std::pair<std::string, double>> atoms;
  for (std::size_t i = 0; i < j["atoms"].size(); ++i) {
    const auto& a = j["atoms"][i];
    if (!a.is_object() || !a.contains("label") || !a["label"].is_string() || !a.contains("mass") ||
        !a["mass"].is_number())
      throw bad("atom " + std::to_string(i) + " needs a string \"label\" and a numeric \"mass\"");
    atoms.emplace_back(a["label"].get<std::string>(), a["mass"].get<double>());
  }
  std::optional<GeometricTail> tail;
  if (j.contains("tail")) {
    const auto& t = j["tail"];
    if (!t.is_object() || !t.contains("prefix") || !t.contains("mass") || !t.contains("log_decay") ||
        !t["prefix"].is_string() || !t["mass"].is_number() || !t["log_decay"].is_number())
      throw bad("\"tail\" needs \"prefix\", \"mass\" and \"log_decay\"");
    tail = GeometricTail{t["prefix"].get<std::string>(), t["mass"].get<double>(), t["log_decay"].get<double>()};
  }
  try {
    return ProbVector(std::move(atoms), std::move(tail));
  } catch (const Error& e) {
    throw bad(e.what());
  }
}

inline ProbVector read_probvec(const std::string& path) { return probvec_from_json(read_json_file(path), path); }

// ---- witnesses and chains -----------------------------------------------------------

inline json labels(const std::vector<Symbol>& symbols) {
  json out = json::array();
  for (const Symbol s : symbols) out.push_back(label_of(s));
  return out;
}

inline json to_json(const PatternSet& p) {
  json out{{"gamma_order", p.gamma_order}};
  switch (p.kind) {
    case PatternSet::Kind::OneMarkedCoordinate:
      out["kind"] = "one_marked";
      out["marked"] = labels(p.marked);
      out["filler"] = labels(p.filler);
      break;
    case PatternSet::Kind::ExactlyOnce:
      out["kind"] = "exactly_once";
      out["marked"] = labels(p.marked);
      out["filler"] = labels(p.filler);
      break;
    case PatternSet::Kind::ExplicitList: {
      out["kind"] = "explicit";
      json list = json::array();
      for (const auto& pat : p.listed) list.push_back(labels(pat));
      out["patterns"] = std::move(list);
      break;
    }
  }
  return out;
}

inline json to_json(const CertificateReport& r) {
  json out = json::array();
  for (const auto& c : r.checks) out.push_back({{"name", c.name}, {"pass", c.pass}, {"residual", c.residual}});
  return out;
}

inline json to_json(const RGammaWitness& w) {
  const auto& c = w.certificate;
  const auto report = verify_witness(w);
  return {{"gamma_order", w.gamma_order},
          {"left", to_json(w.left)},
          {"right", to_json(w.right)},
          {"p_set", to_json(w.p_set)},
          {"certificate",
           {{"entropy_left", c.entropy_left},
            {"entropy_right", c.entropy_right},
            {"p_mass_left", c.p_mass_left},
            {"p_mass_right", c.p_mass_right},
            {"stabilizer_check", c.stabilizer_check}}},
          {"checks", to_json(report)},
          {"pass", report.pass()}};
}

inline json to_json(const ReductionChain& chain) {
  json spaces = json::array(), links = json::array();
  for (const auto& s : chain.spaces) spaces.push_back(to_json(s));
  for (const auto& w : chain.witnesses) links.push_back(to_json(w));
  return {{"length", chain.spaces.size()}, {"spaces", std::move(spaces)}, {"witnesses", std::move(links)}};
}

// ---- acceptance reports ---------------------------------------------------------------

inline json to_json(const acceptance::CriterionResult& r) {
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return {{"id", r.id}, {"title", r.title}, {"pass", r.pass()}, {"seconds", r.seconds}, {"checks", std::move(checks)}};
}

inline json to_json(const std::vector<acceptance::CriterionResult>& results) {
  json list = json::array();
  bool all = !results.empty();
  for (const auto& r : results) {
    list.push_back(to_json(r));
    all = all && r.pass();
  }
  return {{"pass", all}, {"criteria", std::move(list)}};
}

/// Aligned human summary of a report.
inline std::string summary(const std::vector<acceptance::CriterionResult>& results, bool details) {
  std::ostringstream out;
  for (const auto& r : results) {
    char head[160];
    std::snprintf(head, sizeof head, "%-4s  %2d  %-32s %8.1f s\n", r.pass() ? "PASS" : "FAIL", r.id, r.title.c_str(),
                  r.seconds);
    out << head;
    if (!details) continue;
    for (const auto& c : r.checks) out << "            [" << (c.pass ? "ok" : "FAIL") << "] " << c.name << ": " << c.detail << "\n";
  }
  return out.str();
}

}  // namespace bshift::io
