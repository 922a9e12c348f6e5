#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bshift/error.hpp"
#include "bshift/partial.hpp"
#include "bshift/probvec.hpp"
#include "bshift/symbol.hpp"

namespace bshift {

/// A ℤ-indexed symbol sequence, possibly unresolved outside some window.
using ZOracle = std::function<Partial<Symbol>(std::int64_t)>;

struct CodeOutput {
  Partial<Symbol> symbol;
  /// Largest |k - n| over the coordinates k read to produce coordinate n.
  std::int64_t lookahead = 0;
};

/// A finitary ℤ-equivariant code between two finite Bernoulli base spaces,
/// carried with its inverse. Codes are immutable values.
class FinitaryCode {
 public:
  using Eval = std::function<CodeOutput(const ZOracle&, std::int64_t)>;

  FinitaryCode(std::string name, ProbVector source, ProbVector target, Eval forward, Eval backward)
      : d_(std::make_shared<const Data>(Data{std::move(name), std::move(source), std::move(target),
                                             std::move(forward), std::move(backward)})) {}

  const std::string& name() const { return d_->name; }
  const ProbVector& source() const { return d_->source; }
  const ProbVector& target() const { return d_->target; }

  CodeOutput encode_at(const ZOracle& x, std::int64_t n) const { return d_->forward(x, n); }
  CodeOutput decode_at(const ZOracle& y, std::int64_t n) const { return d_->backward(y, n); }

  FinitaryCode inverse() const {
    return FinitaryCode(d_->name + "^-1", d_->target, d_->source, d_->backward, d_->forward);
  }

 private:
  struct Data {
    std::string name;
    ProbVector source;
    ProbVector target;
    Eval forward;
    Eval backward;
  };
  std::shared_ptr<const Data> d_;
};

inline FinitaryCode invert(const FinitaryCode& f) { return f.inverse(); }

inline FinitaryCode identity_code(const ProbVector& space) {
  const FinitaryCode::Eval id = [](const ZOracle& x, std::int64_t n) { return CodeOutput{x(n), 0}; };
  return FinitaryCode("identity", space, space, id, id);
}

/// encode_at(x, n) = x(n - m).
inline FinitaryCode shift_code(const ProbVector& space, std::int64_t m) {
  const auto by = [](std::int64_t s) -> FinitaryCode::Eval {
    return [s](const ZOracle& x, std::int64_t n) { return CodeOutput{x(n - s), std::abs(s)}; };
  };
  return FinitaryCode("shift(" + std::to_string(m) + ")", space, space, by(m), by(-m));
}

/// Coordinatewise relabelling by a bijection σ on the source labels.
inline FinitaryCode permutation_code(const std::map<Symbol, Symbol>& sigma, const ProbVector& source) {
  std::map<Symbol, Symbol> inv;
  std::vector<std::pair<std::string, double>> atoms;
  for (const auto& a : source.atoms()) {
    const auto it = sigma.find(a.symbol);
    if (it == sigma.end())
      throw Error(ErrorCode::SymbolNotInSupport, "permutation undefined on " + a.label);
    if (!inv.emplace(it->second, a.symbol).second)
      throw Error(ErrorCode::InvalidConfig, "permutation is not injective at " + a.label);
    atoms.emplace_back(label_of(it->second), a.mass);
  }
  const auto apply = [](std::map<Symbol, Symbol> m) -> FinitaryCode::Eval {
    return [m = std::move(m)](const ZOracle& x, std::int64_t n) {
      const auto s = x(n);
      if (!s) return CodeOutput{s, 0};
      const auto it = m.find(*s);
      if (it == m.end()) throw Error(ErrorCode::SymbolNotInSupport, "symbol outside the code's alphabet");
      return CodeOutput{it->second, 0};
    };
  };
  return FinitaryCode("permutation", source, ProbVector(atoms), apply(sigma), apply(inv));
}

/// g first, then f. Lookahead radii add along the coordinates read.
inline FinitaryCode compose(const FinitaryCode& f, const FinitaryCode& g) {
  if (!(g.target() == f.source()))
    throw Error(ErrorCode::SpecMismatch, "compose: target of " + g.name() + " is not the source of " + f.name());
  const auto chain = [](FinitaryCode outer, FinitaryCode inner, bool forward) -> FinitaryCode::Eval {
    return [outer, inner, forward](const ZOracle& x, std::int64_t n) {
      std::int64_t reach = 0;
      const ZOracle mid = [&](std::int64_t k) -> Partial<Symbol> {
        const auto r = forward ? inner.encode_at(x, k) : inner.decode_at(x, k);
        reach = std::max(reach, std::abs(k - n) + r.lookahead);
        return r.symbol;
      };
      auto out = forward ? outer.encode_at(mid, n) : outer.decode_at(mid, n);
      out.lookahead = std::max(out.lookahead, reach);
      return out;
    };
  };
  return FinitaryCode(f.name() + "∘" + g.name(), g.source(), f.target(), chain(f, g, true),
                      chain(g, f, false));
}

namespace meshalkin {

/// Uniform 4-symbol source: q<2m+p> carries marker bit m and payload bit p.
inline ProbVector source_space() {
  return ProbVector({{"q0", 0.25}, {"q1", 0.25}, {"q2", 0.25}, {"q3", 0.25}});
}

/// Target: h (the ½-symbol, marker 0) and e0..e3 (marker 1 plus two payload bits).
inline ProbVector target_space() {
  return ProbVector({{"h", 0.5}, {"e0", 0.125}, {"e1", 0.125}, {"e2", 0.125}, {"e3", 0.125}});
}

struct Alphabet {
  Symbol q[4];
  Symbol h;
  Symbol e[4];

  static const Alphabet& get() {
    static const Alphabet a{{intern("q0"), intern("q1"), intern("q2"), intern("q3")},
                            intern("h"),
                            {intern("e0"), intern("e1"), intern("e2"), intern("e3")}};
    return a;
  }

  int q_index(Symbol s) const {
    for (int i = 0; i < 4; ++i)
      if (q[i] == s) return i;
    throw Error(ErrorCode::SymbolNotInSupport, "not a Meshalkin source symbol");
  }
  int e_index(Symbol s) const {
    for (int i = 0; i < 4; ++i)
      if (e[i] == s) return i;
    return -1;
  }
};

}  // namespace meshalkin

/// Meshalkin's code from (¼,¼,¼,¼) to (½,⅛,⅛,⅛,⅛).
///
/// Marker bits are shared: marker 1 opens a bracket and marker 0 closes one.
/// Each opening position i is paired with its matching close j > i, and the
/// target symbol at i carries the payload bits (p_i, p_j); a close becomes h.
/// Matching scans at most `window` coordinates, else WindowExhausted.
inline FinitaryCode meshalkin_code(std::int64_t window = 512) {
  const FinitaryCode::Eval encode = [window](const ZOracle& x, std::int64_t n) -> CodeOutput {
    const auto& al = meshalkin::Alphabet::get();
    const auto s = x(n);
    if (!s) return {s, 0};
    const int v = al.q_index(*s);
    if ((v >> 1) == 0) return {al.h, 0};
    int depth = 1;
    for (std::int64_t k = 1; k <= window; ++k) {
      const auto t = x(n + k);
      if (!t) return {t, k};
      depth += (al.q_index(*t) >> 1) == 1 ? 1 : -1;
      if (depth == 0) return {al.e[2 * (v & 1) + (al.q_index(*t) & 1)], k};
    }
    return {Unresolved::WindowExhausted, window};
  };
  const FinitaryCode::Eval decode = [window](const ZOracle& y, std::int64_t n) -> CodeOutput {
    const auto& al = meshalkin::Alphabet::get();
    const auto s = y(n);
    if (!s) return {s, 0};
    const int e = al.e_index(*s);
    if (e >= 0) return {al.q[2 + (e >> 1)], 0};
    if (*s != al.h) throw Error(ErrorCode::SymbolNotInSupport, "not a Meshalkin target symbol");
    int depth = 1;
    for (std::int64_t k = 1; k <= window; ++k) {
      const auto t = y(n - k);
      if (!t) return {t, k};
      const int te = al.e_index(*t);
      depth += te >= 0 ? -1 : 1;
      if (depth == 0) return {al.q[te & 1], k};
    }
    return {Unresolved::WindowExhausted, window};
  };
  return FinitaryCode("meshalkin", meshalkin::source_space(), meshalkin::target_space(), encode, decode);
}

}  // namespace bshift
