#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bshift/error.hpp"
#include "bshift/pattern_set.hpp"
#include "bshift/probvec.hpp"

namespace bshift {

struct Certificate {
  double entropy_left = 0.0;
  double entropy_right = 0.0;
  double p_mass_left = 0.0;
  double p_mass_right = 0.0;
  bool stabilizer_check = false;
};

/// Evidence that two base spaces are R_Γ-related for a cyclic Γ of order gamma_order.
struct RGammaWitness {
  int gamma_order = 0;
  ProbVector left;
  ProbVector right;
  PatternSet p_set;
  Certificate certificate;

  RGammaWitness reversed() const {
    RGammaWitness w{gamma_order, right, left, p_set, certificate};
    std::swap(w.certificate.entropy_left, w.certificate.entropy_right);
    std::swap(w.certificate.p_mass_left, w.certificate.p_mass_right);
    return w;
  }
};

struct ReductionChain {
  std::vector<ProbVector> spaces;
  std::vector<RGammaWitness> witnesses;
};

struct CheckEntry {
  std::string name;
  bool pass = false;
  double residual = 0.0;
};

struct CertificateReport {
  std::vector<CheckEntry> checks;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  }
  const CheckEntry* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline constexpr double kEntropyTolerance = 1e-9;
inline constexpr double kPMassTolerance = 1e-12;

namespace detail {

inline bool trivial_stabilizers(const std::vector<Pattern>& members, int order) {
  for (const auto& p : members)
    for (int j = 1; j < order; ++j)
      if (rotate(p, j) == p) return false;
  return true;
}

inline std::vector<Symbol> symbols_of(const ProbVector& v, const std::set<std::string>& labels) {
  std::vector<Symbol> out;
  for (const auto& a : v.atoms())
    if (labels.count(a.label)) out.push_back(a.symbol);
  return out;
}

inline RGammaWitness certify(int order, ProbVector left, ProbVector right, PatternSet p) {
  const auto members = p.members();
  Certificate c;
  c.entropy_left = shannon_entropy(left);
  c.entropy_right = shannon_entropy(right);
  c.p_mass_left = p_measure(left, p);
  c.p_mass_right = p_measure(right, p);
  c.stabilizer_check = trivial_stabilizers(members, order);
  return RGammaWitness{order, std::move(left), std::move(right), std::move(p), c};
}

}  // namespace detail

/// Witness for two spaces that agree atom-by-atom on disjoint label sets A and B.
/// P = Γ·{x : x(1) ∈ A and x(γ) ∈ B for every other γ}.
inline RGammaWitness witness_from_common_atoms(const ProbVector& lambda, const ProbVector& kappa,
                                               const std::set<std::string>& a,
                                               const std::set<std::string>& b,
                                               int gamma_order) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::NotDisjoint, "A and B must be nonempty");
  for (const auto& l : a)
    if (b.count(l)) throw Error(ErrorCode::NotDisjoint, "label '" + l + "' in both A and B");
  for (const auto* s : {&a, &b})
    for (const auto& l : *s) {
      const auto ml = lambda.mass_of(l);
      const auto mk = kappa.mass_of(l);
      if (!ml || !mk) throw Error(ErrorCode::MassMismatch, "label '" + l + "' missing");
      if (std::abs(*ml - *mk) > kPMassTolerance)
        throw Error(ErrorCode::MassMismatch, "masses differ on '" + l + "'");
    }
  const double hl = shannon_entropy(lambda);
  const double hk = shannon_entropy(kappa);
  if (std::abs(hl - hk) > kEntropyTolerance)
    throw Error(ErrorCode::EntropyMismatch,
                std::to_string(hl) + " vs " + std::to_string(hk) + " nats");
  auto p = PatternSet::one_marked(detail::symbols_of(lambda, a), detail::symbols_of(lambda, b),
                                  gamma_order);
  return detail::certify(gamma_order, lambda, kappa, std::move(p));
}

/// Re-derives every condition of the relation from scratch.
inline CertificateReport verify_witness(const RGammaWitness& w) {
  CertificateReport r;
  const auto add = [&](std::string name, bool pass, double residual = 0.0) {
    r.checks.push_back({std::move(name), pass, residual});
  };

  add("gamma_order", w.gamma_order >= 2, 0.0);

  const double hl = shannon_entropy(w.left);
  const double hr = shannon_entropy(w.right);
  add("entropy_equal", std::abs(hl - hr) <= kEntropyTolerance, std::abs(hl - hr));

  std::set<std::string> common;
  for (const auto& a : w.left.atoms())
    if (w.right.contains(a.label)) common.insert(a.label);
  add("alphabets_intersect", !common.empty());

  const auto members = w.p_set.members();
  bool shared = true;
  for (Symbol s : w.p_set.symbols())
    if (!w.left.mass_of(s) || !w.right.mass_of(s)) shared = false;
  bool lengths_ok = true;
  for (const auto& p : members)
    if (static_cast<int>(p.size()) != w.gamma_order) lengths_ok = false;
  add("p_symbols_shared", shared && lengths_ok);

  double ml = 0.0, mr = 0.0, per_pattern = 0.0;
  if (shared && lengths_ok) {
    for (const auto& p : members) {
      const double a = pattern_mass(w.left, p);
      const double b = pattern_mass(w.right, p);
      ml += a;
      mr += b;
      per_pattern = std::max(per_pattern, std::abs(a - b));
    }
  }
  add("p_mass_positive", ml > 0.0 && mr > 0.0, std::min(ml, mr));
  add("p_mass_agree", std::abs(ml - mr) <= kPMassTolerance, std::abs(ml - mr));
  add("pattern_masses_agree", shared && per_pattern <= kPMassTolerance, per_pattern);

  // Γ-invariance by explicit orbit closure.
  bool closed = lengths_ok;
  if (closed) {
    std::set<Pattern> set(members.begin(), members.end());
    for (const auto& p : members)
      for (int j = 1; j < w.gamma_order && closed; ++j)
        if (!set.count(rotate(p, j))) closed = false;
  }
  add("gamma_invariant", closed);
  add("trivial_stabilizers", lengths_ok && detail::trivial_stabilizers(members, w.gamma_order));

  const auto& c = w.certificate;
  const double drift = std::max({std::abs(c.entropy_left - hl), std::abs(c.entropy_right - hr),
                                 std::abs(c.p_mass_left - ml), std::abs(c.p_mass_right - mr)});
  add("certificate_consistent", drift <= kPMassTolerance, drift);
  return r;
}

/// Adds fresh atoms `a_label`, `b_label` with masses α, β by re-splitting the M part
/// of the default partition, keeping the X ∪ Y part and the entropy unchanged.
inline std::pair<ProbVector, RGammaWitness> extend_with_atoms(
    const ProbVector& lambda, double alpha, double beta, int gamma_order,
    const std::string& filler_prefix = "#m", const std::string& a_label = "#a",
    const std::string& b_label = "#b") {
  const auto part = default_partition(lambda);
  const double eps = epsilon_bound(lambda, part);
  if (!(alpha > 0.0) || !(beta > 0.0) || alpha >= eps || beta >= eps)
    throw Error(ErrorCode::AtomMassTooLarge, "alpha=" + std::to_string(alpha) + ", beta=" +
                                                 std::to_string(beta) + ", epsilon=" +
                                                 std::to_string(eps));
  const double mm = lambda.mass_of_set(part.m, part.m_tail);
  const double hm = shannon_entropy(lambda.restricted(part.m, part.m_tail));
  const std::vector<double> fixed{alpha / mm, beta / mm};
  const auto rest = entropy_match_fill(fixed, 1.0 - fixed[0] - fixed[1], hm, 3);

  std::vector<std::pair<std::string, double>> atoms;
  for (const auto& a : lambda.atoms())
    if (part.x.count(a.label) || part.y.count(a.label)) atoms.emplace_back(a.label, a.mass);
  atoms.emplace_back(a_label, alpha);
  atoms.emplace_back(b_label, beta);
  for (std::size_t i = 0; i < rest.atoms.size(); ++i)
    atoms.emplace_back(filler_prefix + std::to_string(i), mm * rest.atoms[i]);
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = i + 1; j < atoms.size(); ++j)
      if (atoms[i].first == atoms[j].first)
        throw Error(ErrorCode::LabelCollision, "label '" + atoms[i].first + "' reused");
  std::optional<GeometricTail> tail;
  if (rest.tail_log_decay)
    tail = GeometricTail{filler_prefix, mm * (1.0 - fixed[0] - fixed[1]), *rest.tail_log_decay};
  ProbVector kappa(std::move(atoms), std::move(tail), lambda.tolerance());
  auto w = witness_from_common_atoms(lambda, kappa, part.x, part.y, gamma_order);
  return {std::move(kappa), std::move(w)};
}

struct SmallSupportMasses {
  double r0;
  double r1;
  /// 1 - r0 - r1, evaluated as 2 p0^k - r1 so it survives when r0 rounds to 1.
  double residual;
};

inline SmallSupportMasses small_support_masses(double p0, double p1, int k) {
  const double kd = static_cast<double>(k);
  const double two_pk = 2.0 * std::pow(p0, kd);
  const double r0 = 1.0 - two_pk;
  const double r1 = std::pow(p0 / r0, kd) * p1;
  return {r0, r1, two_pk - r1};
}

/// For a 2- or 3-atom vector, builds a ≥4-atom vector of equal entropy sharing
/// atoms ℓ₀, ℓ₁ with r₀ = 1 - 2p₀^k and r₁ = (p₀/r₀)^k p₁, so r₀^k r₁ = p₀^k p₁.
/// The witness uses P = "ℓ₁ occurs precisely once" over |Γ| = k + 1 coordinates.
inline std::pair<ProbVector, RGammaWitness> resolve_small_support(
    const ProbVector& p, int k, const std::string& filler_prefix = "#s") {
  if (k < 4) throw Error(ErrorCode::KTooSmall, "k=" + std::to_string(k) + " < 4");
  if (p.size() < 2 || p.size() > 3 || p.has_tail())
    throw Error(ErrorCode::BadVector, "expected 2 or 3 atoms, got " + std::to_string(p.size()));
  // ℓ₀ = lightest atom (so p₀ ≤ 1/2), ℓ₁ = heaviest remaining atom.
  const auto sorted = p.by_mass_descending();
  const Atom& l0 = sorted.back();
  const Atom& l1 = sorted.front();
  const double p0 = l0.mass;
  const double p1 = l1.mass;
  if (!(p0 <= 0.5) || !(p0 * p1 > 0.0))
    throw Error(ErrorCode::BadVector, "no rearrangement with p0 <= 1/2 and p0 p1 > 0");

  const auto [r0, r1, residual] = small_support_masses(p0, p1, k);
  if (!(residual > 0.0) || !(r1 > 0.0))
    throw Error(ErrorCode::TargetUnreachable, "p0^k underflows double precision");
  const std::vector<double> fixed{r0, r1};
  const auto rest = entropy_match_fill(fixed, residual, shannon_entropy(p), 4);

  std::vector<std::pair<std::string, double>> atoms{{l0.label, r0}, {l1.label, r1}};
  for (std::size_t i = 0; i < rest.atoms.size(); ++i)
    atoms.emplace_back(filler_prefix + std::to_string(i), rest.atoms[i]);
  for (const auto& a : atoms)
    if (a.first != l0.label && a.first != l1.label && p.contains(a.first))
      throw Error(ErrorCode::LabelCollision, "label '" + a.first + "' already in input");
  std::optional<GeometricTail> tail;
  if (rest.tail_log_decay) {
    tail = GeometricTail{filler_prefix, residual, *rest.tail_log_decay};
    for (const auto& a : p.atoms())
      if (tail->index_of(a.label))
        throw Error(ErrorCode::LabelCollision, "label '" + a.label + "' already in input");
  }
  ProbVector m(std::move(atoms), std::move(tail), p.tolerance());
  auto set = PatternSet::exactly_once(l1.symbol, l0.symbol, k + 1);
  auto w = detail::certify(k + 1, p, m, std::move(set));
  return {std::move(m), std::move(w)};
}

/// Chain of R_Γ-related spaces from λ to κ (at most 6 spaces).
inline ReductionChain build_chain(const ProbVector& lambda, const ProbVector& kappa,
                                  int gamma_order) {
  if (lambda.support_size() < 2 || kappa.support_size() < 2)
    throw Error(ErrorCode::TrivialSpace, "single-atom space has zero entropy");
  const double hl = shannon_entropy(lambda);
  const double hk = shannon_entropy(kappa);
  if (std::abs(hl - hk) > kEntropyTolerance)
    throw Error(ErrorCode::EntropyMismatch,
                std::to_string(hl) + " vs " + std::to_string(hk) + " nats");

  ReductionChain chain;
  if (lambda == kappa) {
    const auto sorted = lambda.by_mass_descending();
    chain.spaces = {lambda, kappa};
    chain.witnesses.push_back(witness_from_common_atoms(lambda, kappa, {sorted[0].label},
                                                        {sorted[1].label}, gamma_order));
    return chain;
  }

  const int k = gamma_order - 1;
  std::vector<ProbVector> left{lambda};
  std::vector<RGammaWitness> left_w;
  if (lambda.support_size() < 4) {
    auto [m, w] = resolve_small_support(lambda, k, "#sl");
    left.push_back(m);
    left_w.push_back(w);
  }
  std::vector<ProbVector> right{kappa};
  std::vector<RGammaWitness> right_w;
  if (kappa.support_size() < 4) {
    auto [m, w] = resolve_small_support(kappa, k, "#sr");
    right.push_back(m);
    right_w.push_back(w);
  }
  const auto& ml = left.back();
  const auto& mk = right.back();
  const double eps = std::min(epsilon_bound(ml, default_partition(ml)),
                              epsilon_bound(mk, default_partition(mk)));
  const double alpha = 0.5 * eps;
  const double beta = 0.25 * eps;
  auto [l2, wl] = extend_with_atoms(ml, alpha, beta, gamma_order, "#ml");
  auto [k2, wk] = extend_with_atoms(mk, alpha, beta, gamma_order, "#mr");
  left.push_back(l2);
  left_w.push_back(wl);
  right.push_back(k2);
  right_w.push_back(wk);

  chain.spaces = left;
  chain.witnesses = left_w;
  chain.witnesses.push_back(witness_from_common_atoms(l2, k2, {"#a"}, {"#b"}, gamma_order));
  for (std::size_t i = right.size(); i-- > 0;) {
    chain.spaces.push_back(right[i]);
    if (i > 0) chain.witnesses.push_back(right_w[i - 1].reversed());
  }
  return chain;
}

}  // namespace bshift
