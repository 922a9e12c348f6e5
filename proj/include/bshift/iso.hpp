#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "bshift/config.hpp"
#include "bshift/error.hpp"
#include "bshift/factor.hpp"
#include "bshift/group.hpp"
#include "bshift/marker.hpp"
#include "bshift/partial.hpp"
#include "bshift/pattern_set.hpp"
#include "bshift/probvec.hpp"
#include "bshift/rgamma.hpp"
#include "bshift/zcodes.hpp"

namespace bshift {

/// A finite alphabet of Γ-patterns, each interned under its label.
struct PatternAlphabet {
  ProbVector space;
  absl::flat_hash_map<Pattern, Symbol> symbol_of;
  absl::flat_hash_map<Symbol, Pattern> pattern_of;

  std::optional<Symbol> symbol(const Pattern& p) const {
    const auto it = symbol_of.find(p);
    if (it == symbol_of.end()) return std::nullopt;
    return it->second;
  }
  const Pattern& pattern(Symbol s) const {
    const auto it = pattern_of.find(s);
    if (it == pattern_of.end()) throw Error(ErrorCode::SymbolNotInSupport, "not a pattern of this alphabet");
    return it->second;
  }
};

/// The entropy bookkeeping behind (A, α) and (B, β), one side at a time.
struct AbSide {
  double p_mass = 0.0;
  double h_base = 0.0;
  /// H(L^Γ) summed over all patterns, and |Γ|·H(L).
  double h_product = 0.0;
  double h_product_formula = 0.0;
  /// H(A, α) summed directly, and through the conditional-entropy identity.
  double h_restricted = 0.0;
  double h_restricted_formula = 0.0;
};

struct AbSpaces {
  PatternAlphabet a;
  PatternAlphabet b;
  AbSide left;
  AbSide right;

  /// Largest residual of the identity chain H(A,α) = H(B,β).
  double max_residual() const {
    double r = std::abs(a_entropy() - b_entropy());
    for (const auto* s : {&left, &right}) {
      r = std::max(r, std::abs(s->h_product - s->h_product_formula));
      r = std::max(r, std::abs(s->h_restricted - s->h_restricted_formula));
    }
    return r;
  }
  double a_entropy() const { return left.h_restricted; }
  double b_entropy() const { return right.h_restricted; }
};

namespace detail {

inline double xlogx(double m) { return m > 0.0 ? m * std::log(m) : 0.0; }

inline std::pair<PatternAlphabet, AbSide> restricted_patterns(const ProbVector& base, const PatternSet& p,
                                                              std::size_t max_patterns) {
  if (base.has_tail()) throw Error(ErrorCode::InvalidConfig, "pattern alphabets need a finite base space");
  const auto& atoms = base.atoms();
  const std::size_t k = static_cast<std::size_t>(p.gamma_order);
  double count = 1.0;
  for (std::size_t i = 0; i < k; ++i) count *= double(atoms.size());
  if (count > double(max_patterns))
    throw Error(ErrorCode::InvalidConfig, "L^Gamma has " + std::to_string(count) + " patterns, above the cap");

  AbSide side;
  side.h_base = shannon_entropy(base);
  side.h_product_formula = double(k) * side.h_base;
  std::vector<std::pair<Pattern, double>> outside;
  double h_p = 0.0;
  Pattern pat(k);
  std::vector<std::size_t> digit(k, 0);
  for (std::size_t n = 0; n < static_cast<std::size_t>(count); ++n) {
    double m = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      pat[j] = atoms[digit[j]].symbol;
      m *= atoms[digit[j]].mass;
    }
    side.h_product -= xlogx(m);
    if (p.contains(pat)) {
      side.p_mass += m;
      h_p -= xlogx(m);
    } else {
      outside.emplace_back(pat, m);
    }
    for (std::size_t j = k; j-- > 0;) {
      if (++digit[j] < atoms.size()) break;
      digit[j] = 0;
    }
  }
  const double q = side.p_mass;
  if (q < 1e-12 || 1.0 - q < 1e-12)
    throw Error(ErrorCode::DegenerateWitness, "P has mass " + std::to_string(q) + " under the base space");

  PatternAlphabet alphabet;
  std::vector<std::pair<std::string, double>> labelled;
  for (const auto& [pt, m] : outside) {
    const auto label = pattern_label(pt);
    const Symbol s = intern(label);
    alphabet.symbol_of.emplace(pt, s);
    alphabet.pattern_of.emplace(s, pt);
    labelled.emplace_back(label, m / (1.0 - q));
    side.h_restricted -= xlogx(m / (1.0 - q));
  }
  alphabet.space = ProbVector(std::move(labelled));
  // H_P = -Σ_P (m/q) ln(m/q) = (h_p + q ln q) / q
  const double h_partition = -xlogx(q) - xlogx(1.0 - q);
  const double h_in_p = (h_p + xlogx(q)) / q;
  side.h_restricted_formula = (side.h_product - h_partition - q * h_in_p) / (1.0 - q);
  return {std::move(alphabet), side};
}

}  // namespace detail

/// (A, α) and (B, β): the patterns outside P with normalized product masses.
inline AbSpaces ab_spaces(const RGammaWitness& w, std::size_t max_patterns = std::size_t{1} << 20) {
  auto [a, left] = detail::restricted_patterns(w.left, w.p_set, max_patterns);
  auto [b, right] = detail::restricted_patterns(w.right, w.p_set, max_patterns);
  if (std::abs(left.p_mass - right.p_mass) > kPMassTolerance)
    throw Error(ErrorCode::MassMismatch, "P has different masses on the two sides");
  return AbSpaces{std::move(a), std::move(b), left, right};
}

/// Whether two finite spaces have the same labels and masses within `tol`.
inline bool same_space(const ProbVector& x, const ProbVector& y, double tol = 1e-12) {
  if (x.has_tail() || y.has_tail() || x.atoms().size() != y.atoms().size()) return false;
  for (std::size_t i = 0; i < x.atoms().size(); ++i)
    if (x.atoms()[i].label != y.atoms()[i].label || std::abs(x.atoms()[i].mass - y.atoms()[i].mass) > tol)
      return false;
  return true;
}

/// The permutation code on A induced coordinatewise by σ on L.
inline FinitaryCode lift_permutation(const std::map<Symbol, Symbol>& sigma, const AbSpaces& ab) {
  std::map<Symbol, Symbol> lifted;
  for (const auto& [s, pat] : ab.a.pattern_of) {
    Pattern image = pat;
    for (auto& c : image) {
      const auto it = sigma.find(c);
      if (it == sigma.end()) throw Error(ErrorCode::SymbolNotInSupport, "permutation undefined on " + label_of(c));
      c = it->second;
    }
    const auto t = ab.b.symbol(image);
    if (!t) throw Error(ErrorCode::SpecMismatch, "lifted permutation leaves B at " + pattern_label(image));
    lifted.emplace(s, *t);
  }
  return permutation_code(lifted, ab.a.space);
}

/// Everything π needs: the group, the witness, the marker levels for V and T,
/// the pattern spaces and the code ζ between them.
struct IsoSpec {
  GroupSpec spec;
  RGammaWitness witness;
  std::shared_ptr<const MarkerLevels> levels;
  AbSpaces ab;
  FinitaryCode zeta;
  Symbol star = kStar;
  Shape gammas;
  /// Index tables of Γ in enumeration order: product and inverse.
  std::vector<std::vector<int>> gamma_mul;
  std::vector<int> gamma_inv;

  int gamma_index(const GroupElement& g) const {
    for (std::size_t i = 0; i < gammas.size(); ++i)
      if (gammas[i] == g) return static_cast<int>(i);
    throw Error(ErrorCode::SpecMismatch, "element is not in Gamma");
  }
};

inline std::shared_ptr<const IsoSpec> make_iso(GroupSpec spec, RGammaWitness witness, MarkerParams params,
                                               FinitaryCode zeta) {
  if (!spec.has_gamma() || spec.gamma_order() != witness.gamma_order)
    throw Error(ErrorCode::SpecMismatch, "Gamma of the group differs from the witness order");
  auto ab = ab_spaces(witness);
  if (!same_space(zeta.source(), ab.a.space) || !same_space(zeta.target(), ab.b.space))
    throw Error(ErrorCode::SpecMismatch, "zeta " + zeta.name() + " does not map (A, alpha) to (B, beta)");
  if (std::abs(ab.a_entropy() - ab.b_entropy()) > kEntropyTolerance)
    throw Error(ErrorCode::EntropyMismatch, "H(A, alpha) differs from H(B, beta)");
  auto levels = std::make_shared<const MarkerLevels>(spec, std::move(params));
  auto iso = std::make_shared<IsoSpec>(IsoSpec{spec, std::move(witness), std::move(levels), std::move(ab),
                                               std::move(zeta), kStar, spec.gamma_elements(), {}, {}});
  const auto k = iso->gammas.size();
  iso->gamma_mul.assign(k, std::vector<int>(k));
  iso->gamma_inv.assign(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    iso->gamma_inv[i] = iso->gamma_index(spec.inv(iso->gammas[i]));
    for (std::size_t j = 0; j < k; ++j)
      iso->gamma_mul[i][j] = iso->gamma_index(spec.mul(iso->gammas[i], iso->gammas[j]));
  }
  return iso;
}

/// Which way π runs: L to K through ζ, or K to L through ζ⁻¹.
enum class PiDirection { Forward, Backward };

namespace detail {

inline const PatternAlphabet& source_alphabet(const IsoSpec& iso, PiDirection d) {
  return d == PiDirection::Forward ? iso.ab.a : iso.ab.b;
}
inline const PatternAlphabet& target_alphabet(const IsoSpec& iso, PiDirection d) {
  return d == PiDirection::Forward ? iso.ab.b : iso.ab.a;
}

}  // namespace detail

/// The T-orbit through a V-site v of θ(x), walked lazily in both directions.
/// f(v)(n) is the Γ-pattern of x at the site of T^{-n}(v).
template <class Field>
class Orbit {
 public:
  using Theta = ThetaView<Field>;

  Orbit(const IsoSpec& iso, const Field& x, const GroupElement& v, const PatternAlphabet& alphabet)
      : iso_(&iso), x_(x), alphabet_(&alphabet),
        engine_(*iso.levels, Theta(x, iso.witness.p_set), v) {
    offsets_.emplace(0, 0);
  }

  MarkerEngine<Theta>& engine() { return engine_; }

  /// Line offset of T^n(v).
  Partial<std::int64_t> offset(std::int64_t n) {
    if (auto it = offsets_.find(n); it != offsets_.end()) return it->second;
    const int dir = n > 0 ? 1 : -1;
    const auto prev = offset(n - dir);
    Partial<std::int64_t> here = prev ? engine_.step(*prev, dir) : prev;
    offsets_.emplace(n, here);
    return here;
  }

  /// The site of T^n(v).
  Partial<GroupElement> site(std::int64_t n) {
    return offset(n).map([&](std::int64_t j) { return engine_.site(j); });
  }

  /// f(v)(n) as a symbol of the pattern alphabet.
  Partial<Symbol> history(std::int64_t n) {
    const auto s = site(-n);
    if (!s) return s.reason();
    const auto pat = coset_pattern(x_, iso_->spec, *s);
    if (!pat) return pat.reason();
    const auto sym = alphabet_->symbol(*pat);
    if (!sym) throw Error(ErrorCode::SymbolNotInSupport, "V-site carries a pattern outside the alphabet");
    return *sym;
  }

 private:
  const IsoSpec* iso_;
  Field x_;
  const PatternAlphabet* alphabet_;
  MarkerEngine<Theta> engine_;
  std::map<std::int64_t, Partial<std::int64_t>> offsets_;
};

/// Whether g·x ∈ V_L, i.e. the site g is the marked site of a *-coset of θ(x).
template <class Field>
Partial<bool> v_lift(const IsoSpec& iso, const Field& x, const GroupElement& g) {
  const auto& p = iso.levels->params();
  return select_V(theta(x, iso.witness.p_set), g, p.priority_radius, p.window);
}

/// Cocycle t(n, θ(x)) at the V_L-site v, so T_L^n moves v to v·t⁻¹.
template <class Field>
Partial<GroupElement> t_lift(const IsoSpec& iso, const Field& x, const GroupElement& v, std::int64_t n) {
  return t_power(*iso.levels, theta(x, iso.witness.p_set), v, n);
}

/// f_L(v)(n) for n in [n0, n1]: the A-patterns along the T_L-orbit of v.
template <class Field>
Partial<std::vector<Symbol>> history(const IsoSpec& iso, const Field& x, const GroupElement& v, std::int64_t n0,
                                     std::int64_t n1, PiDirection dir = PiDirection::Forward) {
  const auto inv = v_lift(iso, x, v);
  if (!inv) return inv.reason();
  if (!*inv) throw Error(ErrorCode::NotInV, "history needs a V-site");
  Orbit<Field> orbit(iso, x, v, detail::source_alphabet(iso, dir));
  std::vector<Symbol> out;
  for (std::int64_t n = n0; n <= n1; ++n) {
    const auto s = orbit.history(n);
    if (!s) return s.reason();
    out.push_back(*s);
  }
  return out;
}

/// π on the coset of g, read from g.
struct CosetImage {
  /// Index i of the V-site g·γ_i, or nullopt on a P-coset.
  std::optional<int> marked;
  /// The symbol of the other alphabet written at the V-site.
  std::optional<Symbol> written;
  /// Entry i is π(x)(g·γ_i).
  Pattern values;
};

template <class Field>
Partial<CosetImage> image_coset(const IsoSpec& iso, PiDirection dir, const Field& x, const GroupElement& g) {
  const auto z = theta(x, iso.witness.p_set);
  const auto mark = coset_mark(z, iso.spec, g, iso.levels->priority_shape());
  if (!mark) return mark.reason();
  if (!mark->has_value()) {
    auto same = coset_pattern(x, iso.spec, g);
    if (!same) return same.reason();
    return CosetImage{std::nullopt, std::nullopt, std::move(*same)};
  }
  const int i0 = **mark;
  const auto v = iso.spec.mul(g, iso.gammas[static_cast<std::size_t>(i0)]);
  Orbit<Field> orbit(iso, x, v, detail::source_alphabet(iso, dir));
  const ZOracle h = [&](std::int64_t n) { return orbit.history(n); };
  const auto out = dir == PiDirection::Forward ? iso.zeta.encode_at(h, 0) : iso.zeta.decode_at(h, 0);
  if (!out.symbol) return out.symbol.reason();
  const auto& written = detail::target_alphabet(iso, dir).pattern(*out.symbol);
  // g·γ_i = v·(γ_{i0}⁻¹ γ_i)
  const auto& row = iso.gamma_mul[static_cast<std::size_t>(iso.gamma_inv[static_cast<std::size_t>(i0)])];
  Pattern values(iso.gammas.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = written[static_cast<std::size_t>(row[i])];
  return CosetImage{i0, *out.symbol, std::move(values)};
}

template <class Field>
Partial<Pattern> pi_coset(const IsoSpec& iso, PiDirection dir, const Field& x, const GroupElement& g) {
  return image_coset(iso, dir, x, g).map([](const CosetImage& c) { return c.values; });
}

template <class Field>
Partial<Symbol> apply_pi(const IsoSpec& iso, const Field& x, const GroupElement& g) {
  return pi_coset(iso, PiDirection::Forward, x, g).map([](const Pattern& p) { return p.front(); });
}

template <class Field>
Partial<Symbol> apply_pi_inverse(const IsoSpec& iso, const Field& y, const GroupElement& g) {
  return pi_coset(iso, PiDirection::Backward, y, g).map([](const Pattern& p) { return p.front(); });
}

/// The image π(x) as a lazy field, memoized per coset. A *-coset of θ(x)
/// becomes a pattern of the other alphabet, which never lies in P, so the
/// image answers θ-membership from θ(x) without computing ζ.
template <class Field>
class PiImage {
 public:
  using Theta = ThetaView<Field>;

  PiImage(std::shared_ptr<const IsoSpec> iso, Field x, PiDirection dir = PiDirection::Forward)
      : iso_(std::move(iso)), state_(std::make_shared<State>(State{Theta(x, iso_->witness.p_set), {}})),
        x_(std::move(x)), dir_(dir) {}

  const GroupSpec& spec() const { return iso_->spec; }
  const Field& source() const { return x_; }

  Partial<Symbol> at(const GroupElement& g) const {
    const auto split = spec().coset_decompose(g);
    auto& memo = state_->cosets;
    auto it = memo.find(split.rep);
    if (it == memo.end()) it = memo.emplace(split.rep, pi_coset(*iso_, dir_, x_, split.rep)).first;
    if (!it->second) return it->second.reason();
    return (*it->second)[static_cast<std::size_t>(iso_->gamma_index(split.gamma))];
  }

  Partial<bool> coset_in_p(const GroupElement& rep) const { return state_->theta.in_p(rep); }

  using Prefix = typename Theta::Prefix;

  Prefix prefix(const GroupElement& p) const
    requires requires(const Field& f) { f.prefix(p); }
  {
    return state_->theta.prefix(p);
  }

  Partial<Symbol> at(const Prefix& pre, const GroupElement& w) const {
    const auto s = state_->theta.at(pre, w);
    if (!s || *s != kStar) return s;
    return at(spec().mul(pre.p, w));
  }

  Partial<bool> coset_in_p(const Prefix& pre, const GroupElement& rep) const {
    return state_->theta.at(pre, rep).map([](Symbol s) { return s != kStar; });
  }

 private:
  struct State {
    Theta theta;
    std::unordered_map<GroupElement, Partial<Pattern>, GroupElementHash> cosets;
  };
  std::shared_ptr<const IsoSpec> iso_;
  std::shared_ptr<State> state_;
  Field x_;
  PiDirection dir_;
};

/// Torsion in a free product is conjugate into a factor, so u^{n1·n2} = 1 iff u has finite order.
inline bool has_infinite_order(const GroupSpec& spec, const GroupElement& u) {
  switch (spec.kind()) {
    case GroupKind::Integer: return !(u == spec.identity());
    case GroupKind::Cyclic: return false;
    case GroupKind::FreeProduct: return !(spec.pow(u, std::int64_t{spec.n1()} * spec.n2()) == spec.identity());
  }
  return false;
}

/// The ℤ-route: π(x)(g) = ψ(q(g⁻¹·x))(0) with q(x)(n) = x(uⁿ).
template <class Field>
CodeOutput stepin_pi(const GroupElement& u, const FinitaryCode& psi, const Field& x, const GroupElement& g) {
  const auto& spec = x.spec();
  if (!has_infinite_order(spec, u)) throw Error(ErrorCode::SpecMismatch, "u must have infinite order");
  const ZOracle line = [&](std::int64_t n) { return x.at(spec.mul(g, spec.pow(u, n))); };
  return psi.encode_at(line, 0);
}

}  // namespace bshift
