#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "bshift/error.hpp"
#include "bshift/probvec.hpp"
#include "bshift/symbol.hpp"

namespace bshift {

/// A Γ-invariant set of Γ-patterns for a cyclic Γ of the given order.
///
/// Patterns are indexed by the Γ elements in enumeration order, so the
/// Γ-action is a cyclic rotation of indices.
struct PatternSet {
  enum class Kind { OneMarkedCoordinate, ExactlyOnce, ExplicitList };

  Kind kind = Kind::ExplicitList;
  int gamma_order = 0;
  std::vector<Symbol> marked;   // "A" atoms, or ℓ₁ for ExactlyOnce
  std::vector<Symbol> filler;   // "B" atoms, or ℓ₀ for ExactlyOnce
  std::vector<Pattern> listed;  // ExplicitList only

  /// Γ·{x : x(1) ∈ A, x(γ) ∈ B for γ ≠ 1}.
  static PatternSet one_marked(std::vector<Symbol> a, std::vector<Symbol> b, int order) {
    return PatternSet{Kind::OneMarkedCoordinate, order, std::move(a), std::move(b), {}};
  }
  /// Patterns over {ℓ₀, ℓ₁} in which ℓ₁ occurs precisely once.
  static PatternSet exactly_once(Symbol l1, Symbol l0, int order) {
    return PatternSet{Kind::ExactlyOnce, order, {l1}, {l0}, {}};
  }
  static PatternSet explicit_list(std::vector<Pattern> patterns, int order) {
    std::sort(patterns.begin(), patterns.end());
    patterns.erase(std::unique(patterns.begin(), patterns.end()), patterns.end());
    return PatternSet{Kind::ExplicitList, order, {}, {}, std::move(patterns)};
  }

  bool contains(const Pattern& p) const {
    if (static_cast<int>(p.size()) != gamma_order)
      throw Error(ErrorCode::LengthMismatch, "pattern length " + std::to_string(p.size()) +
                                                 " != |Gamma| " + std::to_string(gamma_order));
    if (kind == Kind::ExplicitList) return std::binary_search(listed.begin(), listed.end(), p);
    int marks = 0;
    for (Symbol s : p) {
      if (std::find(marked.begin(), marked.end(), s) != marked.end()) {
        ++marks;
      } else if (std::find(filler.begin(), filler.end(), s) == filler.end()) {
        return false;
      }
    }
    return marks == 1;
  }

  /// Explicit member list, sorted.
  std::vector<Pattern> members() const {
    if (kind == Kind::ExplicitList) return listed;
    std::vector<Pattern> out;
    const int k = gamma_order;
    if (k < 1 || marked.empty() || (k > 1 && filler.empty())) return out;
    // positions of the filler coordinates enumerated as mixed-radix counters
    for (int pos = 0; pos < k; ++pos) {
      for (Symbol a : marked) {
        std::vector<std::size_t> idx(static_cast<std::size_t>(k - 1), 0);
        while (true) {
          Pattern p(static_cast<std::size_t>(k));
          std::size_t c = 0;
          for (int i = 0; i < k; ++i) p[i] = (i == pos) ? a : filler[idx[c++]];
          out.push_back(std::move(p));
          std::size_t d = 0;
          while (d < idx.size() && ++idx[d] == filler.size()) idx[d++] = 0;
          if (d == idx.size()) break;
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::set<Symbol> symbols() const {
    std::set<Symbol> out(marked.begin(), marked.end());
    out.insert(filler.begin(), filler.end());
    for (const auto& p : listed) out.insert(p.begin(), p.end());
    return out;
  }
};

/// Rotation by the j-th Γ element: (γ_j · x)(γ_i) = x(γ_{i-j}).
inline Pattern rotate(const Pattern& p, int j) {
  const int k = static_cast<int>(p.size());
  Pattern out(p.size());
  for (int i = 0; i < k; ++i) out[i] = p[((i - j) % k + k) % k];
  return out;
}

inline bool p_membership(const PatternSet& set, const Pattern& pattern) {
  return set.contains(pattern);
}

/// Product mass of one Γ-pattern under base^Γ.
inline double pattern_mass(const ProbVector& base, const Pattern& p) {
  double m = 1.0;
  for (Symbol s : p) {
    const auto ms = base.mass_of(s);
    if (!ms) throw Error(ErrorCode::SymbolNotInSupport, "symbol '" + label_of(s) + "'");
    m *= *ms;
  }
  return m;
}

/// base^Γ(P).
inline double p_measure(const ProbVector& base, const PatternSet& set) {
  double total = 0.0;
  for (const auto& p : set.members()) total += pattern_mass(base, p);
  return total;
}

}  // namespace bshift
