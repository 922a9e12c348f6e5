#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bshift/error.hpp"
#include "bshift/symbol.hpp"

namespace bshift {

struct Atom {
  std::string label;
  double mass = 0.0;
  Symbol symbol = 0;
};

/// Countable geometric tail: atom `prefix + i` (i = 0, 1, ...) has mass
/// mass · (1 - q) · q^i with q = exp(-exp(log_decay)). The decay is stored in log
/// form so that tails with astronomically many effective atoms stay representable.
struct GeometricTail {
  std::string prefix;
  double mass = 0.0;
  double log_decay = 0.0;

  friend bool operator==(const GeometricTail&, const GeometricTail&) = default;

  double decay() const { return std::exp(log_decay); }

  /// ln(1 - q).
  double log_one_minus_q() const {
    const double t = decay();
    if (log_decay < -30.0) return log_decay - 0.5 * t;
    return std::log(-std::expm1(-t));
  }

  /// t q / (1 - q), the mean index times the decay.
  double scaled_mean() const {
    const double t = decay();
    if (log_decay < -30.0) return 1.0 - 0.5 * t;
    return t * std::exp(-t) / -std::expm1(-t);
  }

  double atom_mass(std::uint64_t i) const {
    return mass * std::exp(log_one_minus_q() - decay() * static_cast<double>(i));
  }

  double entropy() const {
    if (!(mass > 0.0)) return 0.0;
    return -mass * std::log(mass) - mass * log_one_minus_q() + mass * scaled_mean();
  }

  /// Index encoded in a label, if the label belongs to this tail.
  std::optional<std::uint64_t> index_of(const std::string& label) const {
    if (label.size() <= prefix.size() || label.compare(0, prefix.size(), prefix) != 0)
      return std::nullopt;
    std::uint64_t i = 0;
    for (std::size_t k = prefix.size(); k < label.size(); ++k) {
      const char c = label[k];
      if (c < '0' || c > '9') return std::nullopt;
      if (k > prefix.size() && label[prefix.size()] == '0') return std::nullopt;
      i = i * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return i;
  }

  /// Index whose cumulative tail interval contains v ∈ [0, 1).
  std::uint64_t quantile(double v) const {
    const double i = std::floor(-std::log1p(-v) / decay());
    return i >= 1.8e19 ? UINT64_MAX : static_cast<std::uint64_t>(i);
  }
};

/// Probability vector over labelled atoms: finitely many explicit atoms, kept
/// sorted by label so that inverse-CDF sampling is stable, plus an optional
/// geometric tail ordered after them.
class ProbVector {
 public:
  static constexpr double kDefaultTolerance = 1e-9;

  ProbVector() = default;

  ProbVector(std::vector<std::pair<std::string, double>> atoms,
             double tolerance = kDefaultTolerance)
      : ProbVector(std::move(atoms), std::nullopt, tolerance) {}

  ProbVector(std::vector<std::pair<std::string, double>> atoms, std::optional<GeometricTail> tail,
             double tolerance = kDefaultTolerance)
      : tail_(std::move(tail)), tolerance_(tolerance) {
    if (atoms.empty() && !tail_) throw Error(ErrorCode::InvalidVector, "no atoms");
    std::sort(atoms.begin(), atoms.end());
    double total = 0.0;
    if (tail_) {
      if (!(tail_->mass > 0.0) || !std::isfinite(tail_->log_decay) || tail_->prefix.empty())
        throw Error(ErrorCode::InvalidVector, "bad geometric tail");
      total += tail_->mass;
    }
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const auto& [label, mass] = atoms[i];
      if (i > 0 && atoms[i - 1].first == label)
        throw Error(ErrorCode::InvalidVector, "duplicate label '" + label + "'");
      if (!(mass > 0.0) || mass > 1.0 + tolerance || !std::isfinite(mass))
        throw Error(ErrorCode::InvalidVector, "mass of '" + label + "' outside (0,1]");
      if (tail_ && tail_->index_of(label))
        throw Error(ErrorCode::LabelCollision, "label '" + label + "' clashes with the tail");
      total += mass;
      atoms_.push_back(Atom{label, mass, intern(label)});
    }
    if (std::abs(total - 1.0) > tolerance)
      throw Error(ErrorCode::InvalidVector,
                  "masses sum to " + std::to_string(total) + ", expected 1");
  }

  /// Explicit atoms only; see tail().
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::optional<GeometricTail>& tail() const { return tail_; }
  bool has_tail() const { return tail_.has_value(); }
  /// Number of explicit atoms.
  std::size_t size() const { return atoms_.size(); }
  /// Support size, saturating at SIZE_MAX for a tail.
  std::size_t support_size() const { return tail_ ? SIZE_MAX : atoms_.size(); }
  double tolerance() const { return tolerance_; }

  std::optional<double> mass_of(Symbol s) const {
    for (const auto& a : atoms_)
      if (a.symbol == s) return a.mass;
    if (tail_ && s != kStar) return mass_of(label_of(s));
    return std::nullopt;
  }
  std::optional<double> mass_of(const std::string& label) const {
    for (const auto& a : atoms_)
      if (a.label == label) return a.mass;
    if (tail_)
      if (const auto i = tail_->index_of(label)) return tail_->atom_mass(*i);
    return std::nullopt;
  }
  bool contains(const std::string& label) const { return mass_of(label).has_value(); }

  double mass_of_set(const std::set<std::string>& labels, bool with_tail = false) const {
    double m = 0.0;
    for (const auto& a : atoms_)
      if (labels.count(a.label)) m += a.mass;
    if (with_tail && tail_) m += tail_->mass;
    return m;
  }

  std::vector<double> masses() const {
    std::vector<double> out;
    out.reserve(atoms_.size());
    for (const auto& a : atoms_) out.push_back(a.mass);
    return out;
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& a : atoms_) out.push_back(a.label);
    return out;
  }

  /// Explicit atoms sorted by decreasing mass, ties broken by label.
  std::vector<Atom> by_mass_descending() const {
    auto out = atoms_;
    std::stable_sort(out.begin(), out.end(),
                     [](const Atom& a, const Atom& b) { return a.mass > b.mass; });
    return out;
  }

  /// Normalized restriction to a label subset, optionally keeping the tail.
  ProbVector restricted(const std::set<std::string>& labels, bool with_tail = false) const {
    const double total = mass_of_set(labels, with_tail);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& a : atoms_)
      if (labels.count(a.label)) out.emplace_back(a.label, a.mass / total);
    std::optional<GeometricTail> t;
    if (with_tail && tail_) {
      t = *tail_;
      t->mass /= total;
    }
    return ProbVector(std::move(out), std::move(t), tolerance_);
  }

  friend bool operator==(const ProbVector& a, const ProbVector& b) {
    if (a.atoms_.size() != b.atoms_.size() || a.tail_ != b.tail_) return false;
    for (std::size_t i = 0; i < a.atoms_.size(); ++i)
      if (a.atoms_[i].label != b.atoms_[i].label || a.atoms_[i].mass != b.atoms_[i].mass)
        return false;
    return true;
  }

 private:
  std::vector<Atom> atoms_;
  std::optional<GeometricTail> tail_;
  double tolerance_ = kDefaultTolerance;
};

/// -m ln m, with the convention 0 ln 0 = 0.
inline double entropy_term(double m) { return m > 0.0 ? -m * std::log(m) : 0.0; }

/// Shannon entropy in nats of an arbitrary non-negative mass list.
inline double entropy_of(std::span<const double> masses) {
  double h = 0.0;
  for (double m : masses) h += entropy_term(m);
  return h;
}

inline double entropy_of(std::initializer_list<double> masses) {
  return entropy_of(std::span<const double>(masses.begin(), masses.size()));
}

inline double shannon_entropy(const ProbVector& p) {
  const auto m = p.masses();
  return entropy_of(m) + (p.has_tail() ? p.tail()->entropy() : 0.0);
}

namespace detail {

// Contribution of one atom x plus (j-1) equal atoms sharing residual - x.
inline double skew_family_entropy(double residual, std::size_t j, double x) {
  if (j == 1) return entropy_term(residual);
  const double rest = (residual - x) / static_cast<double>(j - 1);
  return entropy_term(x) + static_cast<double>(j - 1) * entropy_term(rest);
}

}  // namespace detail

/// Splits `residual` into atoms so that fixed ∪ split has entropy `target`.
///
/// Uses the one-parameter family "one skewed atom + (j-1) equal atoms" with the
/// least admissible j, then bisects on the skewed mass. Entropy is monotone
/// decreasing in the skewed mass on [residual/j, residual).
inline std::vector<double> entropy_match_split(std::span<const double> fixed, double residual,
                                               double target, std::size_t min_total_atoms,
                                               std::size_t max_atoms = std::size_t{1} << 16) {
  if (!(residual > 0.0))
    throw Error(ErrorCode::InvalidVector, "residual mass must be positive");
  const double fixed_total = std::accumulate(fixed.begin(), fixed.end(), 0.0);
  if (std::abs(fixed_total + residual - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidVector, "fixed + residual must sum to 1");

  const double need = target - entropy_of(fixed);
  const double lowest = entropy_term(residual);  // everything in one atom
  std::size_t j_min = 1;
  if (min_total_atoms > fixed.size()) j_min = min_total_atoms - fixed.size();

  const auto max_for = [&](std::size_t j) {
    return residual * (std::log(static_cast<double>(j)) - std::log(residual));
  };
  if (need > max_for(max_atoms) + 1e-12)
    throw Error(ErrorCode::TargetUnreachable,
                "needs " + std::to_string(need) + " nats from the residual; at most " +
                    std::to_string(max_for(max_atoms)) + " with " +
                    std::to_string(max_atoms) + " atoms");
  if (need < lowest - 1e-12 || (j_min > 1 && need <= lowest + 1e-13))
    throw Error(ErrorCode::TargetBelowMinimum,
                "even a single residual atom overshoots the target by " +
                    std::to_string(lowest - need));

  if (j_min == 1 && need <= lowest + 1e-13) return {residual};

  std::size_t j = std::max<std::size_t>(j_min, 2);
  if (max_for(j) < need) {
    // least j with residual * (ln j - ln residual) >= need
    j = static_cast<std::size_t>(std::ceil(std::exp(need / residual + std::log(residual))));
    j = std::max(j, j_min);
    while (j > 2 && max_for(j - 1) >= need) --j;
    while (max_for(j) < need) ++j;
  }

  // Bisection on the skewed atom x in [residual/j, residual).
  double lo = residual / static_cast<double>(j);
  double hi = residual;
  if (detail::skew_family_entropy(residual, j, lo) - need <= 1e-15) {
    return std::vector<double>(j, lo);
  }
  double x = lo;
  for (int it = 0; it < 200; ++it) {
    x = 0.5 * (lo + hi);
    const double h = detail::skew_family_entropy(residual, j, x);
    if (std::abs(h - need) < 1e-13) break;
    if (h > need)
      lo = x;
    else
      hi = x;
  }
  std::vector<double> out;
  out.reserve(j);
  out.push_back(x);
  const double rest = (residual - x) / static_cast<double>(j - 1);
  for (std::size_t i = 1; i < j; ++i) out.push_back(rest);
  return out;
}

/// Residual masses of an entropy match: explicit atoms, or a geometric tail
/// when no explicit split within the atom cap reaches the target.
struct Fill {
  std::vector<double> atoms;
  std::optional<double> tail_log_decay;
};

/// Like entropy_match_split, but a residual that would need more than
/// `max_atoms` atoms is spread over a countable geometric tail instead.
inline Fill entropy_match_fill(std::span<const double> fixed, double residual, double target,
                               std::size_t min_total_atoms,
                               std::size_t max_atoms = std::size_t{1} << 16) {
  try {
    return Fill{entropy_match_split(fixed, residual, target, min_total_atoms, max_atoms), {}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TargetUnreachable) throw;
  }
  const double need = target - entropy_of(fixed);
  GeometricTail t{"", residual, 0.0};
  const auto h = [&](double ld) {
    t.log_decay = ld;
    return t.entropy();
  };
  // entropy is decreasing in log_decay
  double hi = 0.0;
  double lo = -std::max(1.0, 2.0 * need / residual);
  while (h(lo) < need) lo *= 2.0;
  while (h(hi) > need && hi < 700.0) hi += 1.0;
  for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (h(mid) > need)
      lo = mid;
    else
      hi = mid;
  }
  return Fill{{}, std::abs(h(lo) - need) < std::abs(h(hi) - need) ? lo : hi};
}

/// Three-way partition of a support, used for the small-atom extension.
/// A geometric tail, when present, belongs to M iff `m_tail`.
struct Partition {
  std::set<std::string> x;
  std::set<std::string> y;
  std::set<std::string> m;
  bool m_tail = false;
};

/// X = heaviest explicit atom, Y = second heaviest, M = everything else
/// (including any geometric tail).
inline Partition default_partition(const ProbVector& lambda) {
  if (lambda.support_size() < 4 || lambda.size() < 2)
    throw Error(ErrorCode::SupportTooSmall, "need at least 4 atoms, got " +
                                                std::to_string(lambda.size()));
  const auto sorted = lambda.by_mass_descending();
  Partition p;
  p.x.insert(sorted[0].label);
  p.y.insert(sorted[1].label);
  for (std::size_t i = 2; i < sorted.size(); ++i) p.m.insert(sorted[i].label);
  p.m_tail = lambda.has_tail();
  return p;
}

/// Largest ε ≤ λ(M)/2 (up to a 1e-6 relative safety margin) such that
/// H(α/λ(M), β/λ(M), 1-(α+β)/λ(M)) ≤ H(M, λ_M) for all 0 ≤ α, β < ε.
///
/// On the square [0, ε)² the three-point entropy peaks at α = β = min(ε, λ(M)/3),
/// so the predicate is checked there and is monotone in ε.
inline double epsilon_bound(const ProbVector& lambda, const Partition& part) {
  const double mx = lambda.mass_of_set(part.x);
  const double my = lambda.mass_of_set(part.y);
  const double mm = lambda.mass_of_set(part.m, part.m_tail);
  if (!(mx > 0.0) || !(my > 0.0) || !(mm > 0.0))
    throw Error(ErrorCode::DegeneratePartition, "every part needs positive mass");
  for (const auto& s : {part.x, part.y, part.m})
    for (const auto& l : s)
      if (!lambda.contains(l))
        throw Error(ErrorCode::DegeneratePartition, "label '" + l + "' not in support");
  const double hm = shannon_entropy(lambda.restricted(part.m, part.m_tail));
  if (!(hm > 0.0)) throw Error(ErrorCode::DegeneratePartition, "H(M, lambda_M) = 0");

  const auto worst = [&](double eps) {
    const double t = std::min(eps / mm, 1.0 / 3.0);
    return entropy_of({t, t, 1.0 - 2.0 * t});
  };
  const double cap = mm / 2.0;
  if (worst(cap) <= hm) return cap;
  double lo = 0.0, hi = cap;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (worst(mid) <= hm)
      lo = mid;
    else
      hi = mid;
  }
  return lo * (1.0 - 1e-6);
}

}  // namespace bshift
