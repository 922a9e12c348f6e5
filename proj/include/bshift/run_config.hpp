#pragma once

#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "bshift/acceptance.hpp"
#include "bshift/iso.hpp"
#include "bshift/json_io.hpp"

namespace bshift {

/// "Z", "Z<n>" or "Z<n1>*Z<n2>", the forms printed by GroupSpec::name().
inline GroupSpec parse_group(const std::string& text) {
  static const std::regex cyclic(R"(Z(\d+))"), free(R"(Z(\d+)\*Z(\d+))");
  std::smatch m;
  try {
    if (text == "Z") return GroupSpec::integers();
    if (std::regex_match(text, m, cyclic)) return GroupSpec::cyclic(std::stoi(m[1]));
    if (std::regex_match(text, m, free)) return GroupSpec::free_product(std::stoi(m[1]), std::stoi(m[2]));
  } catch (const std::out_of_range&) {
  }
  throw Error(ErrorCode::InvalidConfig, "group: expected Z, Zn or Zn*Zm, got \"" + text + "\"");
}

/// Settings shared by every command. Keys of the JSON config and flag names agree.
struct RunConfig {
  std::string group = "Z5*Z5";
  ProbVector lambda = acceptance::detail::running_lambda();
  ProbVector kappa = acceptance::detail::running_kappa();
  int gamma_order = 5;
  std::vector<std::string> p_marked{"c"};
  std::vector<std::string> p_filler{"d"};
  std::string code = "permutation";
  std::map<std::string, std::string> sigma{{"a", "b"}, {"b", "a"}, {"c", "c"}, {"d", "d"}};
  std::int64_t shift = 1;
  std::vector<int> marker_radii = MarkerParams{}.radii;
  int window = MarkerParams{}.window;
  int priority_radius = MarkerParams{}.priority_radius;
  Seed128 seed = acceptance::Config{}.seed;
  std::size_t samples = 100;
  std::size_t positions = 6;
  acceptance::Config counts;
  std::size_t scale = 1;
  std::vector<int> criteria;
  unsigned threads = 0;
  std::string out;

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k{
        "group",         "lambda",        "kappa",          "gamma_order",      "p_marked",       "p_filler",
        "code",          "sigma",         "shift",          "marker_radii",     "window",         "priority_radius",
        "seed",          "samples",       "positions",      "gof_samples",      "exact_samples",  "marker_windows",
        "freeness_samples", "meshalkin_windows", "class_window", "scale", "criteria",     "threads",        "out"};
    return k;
  }

  /// Sets every key present in `j`; unknown keys and wrong types are errors.
  void apply(const io::json& j, const std::string& where = "config") {
    const auto bad = [&](const std::string& key, const std::string& what) {
      return Error(ErrorCode::InvalidConfig, where + ": \"" + key + "\" " + what);
    };
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, where + ": expected a JSON object");
    for (const auto& [key, v] : j.items()) {
      if (std::find(keys().begin(), keys().end(), key) == keys().end()) throw bad(key, "is not a known setting");
      const auto count = [&]() -> std::size_t {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 1) throw bad(key, "must be a positive integer");
        return v.get<std::size_t>();
      };
      const auto integer = [&]() -> std::int64_t {
        if (!v.is_number_integer()) throw bad(key, "must be an integer");
        return v.get<std::int64_t>();
      };
      const auto string = [&]() -> std::string {
        if (!v.is_string()) throw bad(key, "must be a string");
        return v.get<std::string>();
      };
      const auto strings = [&]() {
        if (!v.is_array()) throw bad(key, "must be an array of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
          if (!e.is_string()) throw bad(key, "must be an array of strings");
          out.push_back(e.get<std::string>());
        }
        return out;
      };
      const auto integers = [&]() {
        if (!v.is_array()) throw bad(key, "must be an array of integers");
        std::vector<int> out;
        for (const auto& e : v) {
          if (!e.is_number_integer()) throw bad(key, "must be an array of integers");
          out.push_back(e.get<int>());
        }
        return out;
      };
      const auto vector = [&]() {
        if (v.is_string()) return io::read_probvec(v.get<std::string>());
        return io::probvec_from_json(v, where + ": " + key);
      };

      if (key == "group") group = string();
      else if (key == "lambda") lambda = vector();
      else if (key == "kappa") kappa = vector();
      else if (key == "gamma_order") gamma_order = static_cast<int>(count());
      else if (key == "p_marked") p_marked = strings();
      else if (key == "p_filler") p_filler = strings();
      else if (key == "code") code = string();
      else if (key == "sigma") {
        if (!v.is_object()) throw bad(key, "must map labels to labels");
        sigma.clear();
        for (const auto& [from, to] : v.items()) {
          if (!to.is_string()) throw bad(key, "must map labels to labels");
          sigma[from] = to.get<std::string>();
        }
      } else if (key == "shift") shift = integer();
      else if (key == "marker_radii") marker_radii = integers();
      else if (key == "window") window = static_cast<int>(count());
      else if (key == "priority_radius") priority_radius = static_cast<int>(count());
      else if (key == "seed") seed = Seed128::parse(string());
      else if (key == "samples") samples = count();
      else if (key == "positions") positions = count();
      else if (key == "gof_samples") counts.gof_samples = count();
      else if (key == "exact_samples") counts.exact_samples = count();
      else if (key == "marker_windows") counts.marker_windows = count();
      else if (key == "freeness_samples") counts.freeness_samples = count();
      else if (key == "meshalkin_windows") counts.meshalkin_windows = count();
      else if (key == "class_window") counts.class_window = static_cast<int>(count());
      else if (key == "scale") scale = count();
      else if (key == "criteria") criteria = integers();
      else if (key == "threads") threads = static_cast<unsigned>(count());
      else if (key == "out") out = string();
    }
  }

  MarkerParams marker_params() const { return MarkerParams{marker_radii, priority_radius, window}; }

  /// Checks everything a run needs before it starts.
  void validate() const {
    const auto bad = [](const std::string& what) { return Error(ErrorCode::InvalidConfig, what); };
    const auto g = parse_group(group);
    if (!g.has_gamma() || g.gamma_order() != gamma_order)
      throw bad("group " + group + " has no subgroup of order gamma_order=" + std::to_string(gamma_order));
    if (gamma_order < 5) throw bad("gamma_order must be at least 5");
    if (code != "permutation" && code != "shift" && code != "identity")
      throw bad("code must be permutation, shift or identity, got \"" + code + "\"");
    if (code != "permutation" && !same_space(lambda, kappa))
      throw bad("code " + code + " is an automorphism and needs kappa equal to lambda");
    for (const int c : criteria)
      if (c < 1 || c > acceptance::kCriteria) throw bad("criteria: no criterion " + std::to_string(c));
    if (g.kind() == GroupKind::FreeProduct) {
      try {
        MarkerLevels(g, marker_params());
      } catch (const Error& e) {
        throw bad(std::string("marker_radii/window: ") + e.what());
      }
    }
  }

  acceptance::Config acceptance_config() const {
    auto c = counts;
    c.seed = seed;
    c.markers = marker_params();
    return scale > 1 ? c.scaled_down(scale) : c;
  }

  /// The isomorphism π described by the config, for the Γ-route commands.
  std::shared_ptr<const IsoSpec> iso() const {
    validate();
    const std::set<std::string> marked(p_marked.begin(), p_marked.end()), filler(p_filler.begin(), p_filler.end());
    const auto w = witness_from_common_atoms(lambda, kappa, marked, filler, gamma_order);
    const auto ab = ab_spaces(w);
    FinitaryCode zeta = identity_code(ab.a.space);
    if (code == "permutation") {
      std::map<Symbol, Symbol> s;
      for (const auto& [from, to] : sigma) s[intern(from)] = intern(to);
      zeta = lift_permutation(s, ab);
    } else if (code == "shift") {
      zeta = shift_code(ab.a.space, shift);
    }
    return make_iso(parse_group(group), w, marker_params(), zeta);
  }
};

}  // namespace bshift
