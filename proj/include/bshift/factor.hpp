#pragma once

#include <memory>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "bshift/config.hpp"
#include "bshift/error.hpp"
#include "bshift/group.hpp"
#include "bshift/partial.hpp"
#include "bshift/pattern_set.hpp"

namespace bshift {

/// Pattern of a field on the coset gΓ read from base point g: (g⁻¹·x)↾Γ.
template <class Field>
Partial<Pattern> coset_pattern(const Field& x, const GroupSpec& spec, const GroupElement& g) {
  Pattern p;
  const auto gammas = spec.gamma_elements();
  p.reserve(gammas.size());
  for (const auto& gamma : gammas) {
    Partial<Symbol> s = x.at(spec.mul(g, gamma));
    if (!s) return s.reason();
    p.push_back(*s);
  }
  return p;
}

/// The factor map θ as a lazy view: copies x on cosets whose pattern lies in P
/// and writes * everywhere else. Verdicts are cached per coset representative,
/// so a view must not be shared between threads. A field that knows its coset
/// classes without reading them may answer through coset_in_p.
template <class Field>
class ThetaView {
 public:
  ThetaView(Field x, PatternSet p)
      : x_(std::move(x)), p_(std::make_shared<const PatternSet>(std::move(p))),
        gammas_(x_.spec().gamma_elements()) {
    if (static_cast<int>(gammas_.size()) != p_->gamma_order)
      throw Error(ErrorCode::LengthMismatch, "|Gamma| differs from the pattern set order");
  }

  const GroupSpec& spec() const { return x_.spec(); }
  const Field& source() const { return x_; }
  const PatternSet& pattern_set() const { return *p_; }

  /// Whether the coset gΓ carries a P-pattern.
  Partial<bool> in_p(const GroupElement& g) const {
    const auto rep = spec().coset_decompose(g).rep;
    return verdict(rep);
  }

  Partial<Symbol> at(const GroupElement& g) const {
    const auto split = spec().coset_decompose(g);
    const auto v = verdict(split.rep);
    if (!v) return v.reason();
    if (!*v) return kStar;
    return x_.at(g);
  }

  /// Reads at p·w for short w reuse the source's prefix state when it has one.
  struct Prefix {
    GroupElement p;
    typename Field::Prefix xp;
    mutable absl::flat_hash_map<GroupElement, Partial<bool>, GroupElementHash> verdicts;
  };

  Prefix prefix(const GroupElement& p) const
    requires requires(const Field& f) { f.prefix(p); }
  {
    return Prefix{p, x_.prefix(p), {}};
  }

  Partial<Symbol> at(const Prefix& pre, const GroupElement& w) const {
    const auto& spec = this->spec();
    const auto& word = pre.p.word;
    if (spec.kind() != GroupKind::FreeProduct || w.word.size() + 1 >= SmallWord::kCapacity)
      return at(spec.mul(pre.p, w));
    const std::size_t k = std::min(w.word.size() + 1, word.size());
    SmallWord t;
    for (std::size_t i = word.size() - k; i < word.size(); ++i) t.push_back(word[i]);
    for (auto c : w.word) spec.append_letter(t, c);
    // the coset rep of p·w drops a trailing Γ-letter
    std::optional<std::int32_t> last;
    if (!t.empty()) last = t.back();
    else if (word.size() > k) last = word[word.size() - k - 1];
    auto& rep = scratch_rep_;
    rep.word.assign(w.word.begin(), w.word.end());
    if (last && *last < spec.n1()) spec.append_letter(rep.word, spec.n1() - *last);
    auto it = pre.verdicts.find(rep);
    if (it == pre.verdicts.end()) {
      Partial<bool> v = true;
      if constexpr (requires { x_.coset_in_p(pre.xp, rep); }) {
        v = x_.coset_in_p(pre.xp, rep);
      } else {
        Pattern pat;
        auto& cell = scratch_cell_;
        for (const auto& gamma : gammas_) {
          cell.word.assign(rep.word.begin(), rep.word.end());
          for (auto c : gamma.word) spec.append_letter(cell.word, c);
          const auto s = x_.at(pre.xp, cell);
          if (!s) {
            v = s.reason();
            break;
          }
          pat.push_back(*s);
        }
        if (v) v = p_->contains(pat);
      }
      it = pre.verdicts.emplace(rep, v).first;
    }
    if (!it->second) return it->second.reason();
    if (!*it->second) return kStar;
    return x_.at(pre.xp, w);
  }

  /// θ(x) restricted to the coset gΓ from base point g.
  Partial<Pattern> pattern_at(const GroupElement& g) const { return coset_pattern(*this, spec(), g); }

 private:
  Partial<bool> verdict(const GroupElement& rep) const {
    auto it = cache_.find(rep);
    if (it != cache_.end()) return it->second;
    Partial<bool> v = false;
    if constexpr (requires { x_.coset_in_p(rep); }) {
      v = x_.coset_in_p(rep);
    } else {
      const auto pat = coset_pattern(x_, spec(), rep);
      if (!pat)
        v = pat.reason();
      else
        v = p_->contains(*pat);
    }
    cache_.emplace(rep, v);
    return v;
  }

  Field x_;
  std::shared_ptr<const PatternSet> p_;
  Shape gammas_;
  mutable std::unordered_map<GroupElement, Partial<bool>, GroupElementHash> cache_;
  mutable GroupElement scratch_rep_;
  mutable GroupElement scratch_cell_;
};

template <class Field>
ThetaView<Field> theta(Field x, const PatternSet& p) {
  return ThetaView<Field>(std::move(x), p);
}

/// Finite measure on M^Γ: the P-patterns with their product masses plus *^Γ.
struct PatternMeasure {
  std::vector<std::pair<Pattern, double>> cells;

  double total() const {
    double t = 0.0;
    for (const auto& c : cells) t += c.second;
    return t;
  }
  double mass_of(const Pattern& p) const {
    for (const auto& c : cells)
      if (c.first == p) return c.second;
    return 0.0;
  }
  /// Σ μ₀(r)², the chance that two independent draws coincide.
  double collision_mass() const {
    double s = 0.0;
    for (const auto& c : cells) s += c.second * c.second;
    return s;
  }
};

inline PatternMeasure mu0(const ProbVector& base, const PatternSet& p) {
  PatternMeasure m;
  double total = 0.0;
  for (auto& pattern : p.members()) {
    const double mass = pattern_mass(base, pattern);
    total += mass;
    m.cells.emplace_back(std::move(pattern), mass);
  }
  m.cells.emplace_back(Pattern(static_cast<std::size_t>(p.gamma_order), kStar), 1.0 - total);
  return m;
}

}  // namespace bshift
