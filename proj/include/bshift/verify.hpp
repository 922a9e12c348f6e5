#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "bshift/config.hpp"
#include "bshift/error.hpp"
#include "bshift/factor.hpp"
#include "bshift/partial.hpp"
#include "bshift/probvec.hpp"
#include "bshift/symbol.hpp"

namespace bshift {

inline constexpr double kGofThreshold = 1e-3;

/// Worker count for sample-parallel loops. Results never depend on it.
inline unsigned& thread_count() {
  static unsigned n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// out[i] = f(i) for i < n, spread over thread_count() workers.
template <class F>
auto parallel_map(std::size_t n, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) slots[i].emplace(f(i));
  };
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct GofReport {
  std::string name;
  std::size_t shape_size = 0;
  std::size_t samples = 0;
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> skip_reasons;
  /// Cells after pooling.
  std::vector<double> observed;
  std::vector<double> expected;
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
  double threshold = kGofThreshold;
  bool pass = false;
  int attempts = 1;

  std::size_t resolved() const { return samples - skipped; }
  double defined_fraction() const { return samples ? double(resolved()) / double(samples) : 0.0; }
};

/// Pearson chi-square of counts against cell probabilities. Cells with expected
/// count below `min_expected` are pooled, smallest first, into merged cells.
inline GofReport chi_square(const std::vector<double>& counts, const std::vector<double>& probs,
                            double threshold = kGofThreshold, double min_expected = 5.0) {
  if (counts.size() != probs.size() || counts.empty())
    throw Error(ErrorCode::LengthMismatch, "chi_square: counts and probabilities differ in length");
  const double total_p = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (std::abs(total_p - 1.0) > 1e-9) throw Error(ErrorCode::InvalidVector, "chi_square: cell masses do not sum to 1");
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);

  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return probs[a] < probs[b]; });

  GofReport r;
  r.threshold = threshold;
  double pool_o = 0.0, pool_e = 0.0;
  for (const auto i : order) {
    const double e = probs[i] / total_p * n;
    if (pool_e > 0.0 || e < min_expected) {
      pool_o += counts[i];
      pool_e += e;
      if (pool_e >= min_expected) {
        r.observed.push_back(pool_o);
        r.expected.push_back(pool_e);
        pool_o = pool_e = 0.0;
      }
      continue;
    }
    r.observed.push_back(counts[i]);
    r.expected.push_back(e);
  }
  if (pool_e > 0.0) {
    if (r.expected.empty()) {
      r.observed.push_back(pool_o);
      r.expected.push_back(pool_e);
    } else {
      // Leftover mass joins the smallest finished cell.
      r.observed.front() += pool_o;
      r.expected.front() += pool_e;
    }
  }
  for (std::size_t i = 0; i < r.observed.size(); ++i) {
    const double d = r.observed[i] - r.expected[i];
    if (r.expected[i] > 0.0) r.statistic += d * d / r.expected[i];
  }
  r.dof = static_cast<int>(r.observed.size()) - 1;
  r.samples = static_cast<std::size_t>(n);
  if (r.dof <= 0) {
    r.p_value = 1.0;
  } else {
    boost::math::chi_squared_distribution<double> dist(r.dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  }
  r.pass = r.p_value > threshold;
  return r;
}

/// Cell index of a symbol tuple under the product of `spaces`, in mixed radix.
class ProductCells {
 public:
  explicit ProductCells(std::vector<ProbVector> spaces) : spaces_(std::move(spaces)) {
    for (const auto& s : spaces_) {
      if (s.tail()) throw Error(ErrorCode::InvalidVector, "product cells need finite spaces");
      std::map<Symbol, std::size_t> idx;
      for (std::size_t i = 0; i < s.atoms().size(); ++i) idx.emplace(s.atoms()[i].symbol, i);
      index_.push_back(std::move(idx));
    }
    probs_ = {1.0};
    for (auto it = spaces_.rbegin(); it != spaces_.rend(); ++it) {
      std::vector<double> next;
      next.reserve(probs_.size() * it->atoms().size());
      for (const auto& a : it->atoms())
        for (const double p : probs_) next.push_back(a.mass * p);
      probs_ = std::move(next);
    }
  }

  std::size_t size() const { return probs_.size(); }
  const std::vector<double>& probabilities() const { return probs_; }

  std::optional<std::size_t> cell(const std::vector<Symbol>& tuple) const {
    if (tuple.size() != spaces_.size()) return std::nullopt;
    std::size_t c = 0;
    for (std::size_t i = 0; i < tuple.size(); ++i) {
      const auto it = index_[i].find(tuple[i]);
      if (it == index_[i].end()) return std::nullopt;
      c = c * spaces_[i].atoms().size() + it->second;
    }
    return c;
  }

 private:
  std::vector<ProbVector> spaces_;
  std::vector<std::map<Symbol, std::size_t>> index_;
  std::vector<double> probs_;
};

/// One sampled map evaluation on a shape: the symbols, or why it is unresolved.
using ShapeSampler = std::function<Partial<std::vector<Symbol>>(std::uint64_t sample)>;

/// Tests already drawn samples against the product of `target` over the shape.
/// Unresolved samples are skipped and counted by reason. A symbol outside the
/// target support fails the test outright.
inline GofReport gof_from_samples(const std::string& name, const std::vector<Partial<std::vector<Symbol>>>& results,
                                  const std::vector<ProbVector>& target, double min_defined = 0.5,
                                  double threshold = kGofThreshold) {
  const ProductCells cells(target);
  const std::size_t n = results.size();
  std::vector<double> counts(cells.size(), 0.0);
  double outside = 0.0;
  std::map<std::string, std::size_t> skips;
  std::size_t skipped = 0;
  for (const auto& r : results) {
    if (!r) {
      ++skipped;
      ++skips[std::string(to_string(r.reason()))];
      continue;
    }
    if (const auto c = cells.cell(*r))
      counts[*c] += 1.0;
    else
      outside += 1.0;
  }
  if (n == 0 || double(n - skipped) < min_defined * double(n))
    throw Error(ErrorCode::TooFewResolved, name + ": resolved fraction " +
                                               std::to_string(n ? double(n - skipped) / double(n) : 0.0) +
                                               " is below the minimum");
  GofReport rep = chi_square(counts, cells.probabilities(), threshold);
  if (outside > 0.0) {
    rep.p_value = 0.0;
    rep.statistic = INFINITY;
    rep.pass = false;
  }
  rep.name = name;
  rep.shape_size = target.size();
  rep.samples = n;
  rep.skipped = skipped;
  rep.skip_reasons = std::move(skips);
  return rep;
}

/// Tests sampled Γ-patterns against a finite pattern measure such as μ₀.
inline GofReport pattern_gof(const std::string& name, const std::vector<Partial<Pattern>>& results,
                             const PatternMeasure& target, double min_defined = 0.5,
                             double threshold = kGofThreshold) {
  std::map<Pattern, std::size_t> index;
  std::vector<double> probs;
  for (const auto& [p, m] : target.cells) {
    index.emplace(p, probs.size());
    probs.push_back(m);
  }
  std::vector<double> counts(probs.size(), 0.0);
  std::map<std::string, std::size_t> skips;
  std::size_t skipped = 0;
  bool outside = false;
  for (const auto& r : results) {
    if (!r) {
      ++skipped;
      ++skips[std::string(to_string(r.reason()))];
      continue;
    }
    const auto it = index.find(*r);
    if (it == index.end())
      outside = true;
    else
      counts[it->second] += 1.0;
  }
  const std::size_t n = results.size();
  if (n == 0 || double(n - skipped) < min_defined * double(n))
    throw Error(ErrorCode::TooFewResolved, name + ": resolved fraction is below the minimum");
  GofReport rep = chi_square(counts, probs, threshold);
  if (outside) {
    rep.p_value = 0.0;
    rep.statistic = INFINITY;
    rep.pass = false;
  }
  rep.name = name;
  rep.shape_size = target.cells.empty() ? 0 : target.cells.front().first.size();
  rep.samples = n;
  rep.skipped = skipped;
  rep.skip_reasons = std::move(skips);
  return rep;
}

/// Samples N evaluations of a map on a shape and tests them against the product
/// of `target`; see gof_from_samples.
inline GofReport pushforward_test(const std::string& name, const ShapeSampler& sample,
                                  const std::vector<ProbVector>& target, std::size_t n,
                                  std::uint64_t first_sample = 0, double min_defined = 0.5,
                                  double threshold = kGofThreshold) {
  const auto results = parallel_map(n, [&](std::size_t i) { return sample(first_sample + i); });
  return gof_from_samples(name, results, target, min_defined, threshold);
}

/// Reruns a statistical test on fresh seeds until it passes, at most `attempts` times.
inline GofReport with_retries(const std::function<GofReport(int attempt)>& run, int attempts = 3) {
  GofReport r;
  for (int a = 0; a < attempts; ++a) {
    r = run(a);
    r.attempts = a + 1;
    if (r.pass) break;
  }
  return r;
}

enum class CheckVerdict { Skip, Pass, Fail };

struct CheckOutcome {
  CheckVerdict verdict = CheckVerdict::Skip;
  std::string detail;
  Unresolved reason = Unresolved::WindowExhausted;

  static CheckOutcome pass() { return {CheckVerdict::Pass, {}, {}}; }
  static CheckOutcome fail(std::string what) { return {CheckVerdict::Fail, std::move(what), {}}; }
  static CheckOutcome skip(Unresolved why) { return {CheckVerdict::Skip, {}, why}; }
};

struct ExactReport {
  std::string name;
  std::size_t samples = 0;
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::map<std::string, std::size_t> skip_reasons;
  /// The first few offending samples, for reproduction.
  std::vector<std::string> offenders;

  bool pass() const { return violations == 0 && checked > 0; }
  double defined_fraction() const { return samples ? double(checked) / double(samples) : 0.0; }
};

/// Runs an exact property on N samples: any single violation fails the report.
inline ExactReport exact_test(const std::string& name, const std::function<CheckOutcome(std::uint64_t)>& check,
                              std::size_t n, std::uint64_t first_sample = 0) {
  const auto results = parallel_map(n, [&](std::size_t i) { return check(first_sample + i); });
  ExactReport r{name, n, 0, 0, {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    switch (results[i].verdict) {
      case CheckVerdict::Skip: ++r.skip_reasons[std::string(to_string(results[i].reason))]; break;
      case CheckVerdict::Pass: ++r.checked; break;
      case CheckVerdict::Fail:
        ++r.checked;
        ++r.violations;
        if (r.offenders.size() < 5)
          r.offenders.push_back("sample " + std::to_string(first_sample + i) + ": " + results[i].detail);
        break;
    }
  }
  return r;
}

/// Outcome of comparing two partial values: Skip unless both are Defined.
template <class T>
CheckOutcome compare_partial(const Partial<T>& a, const Partial<T>& b, const std::string& where) {
  if (!a) return CheckOutcome::skip(a.reason());
  if (!b) return CheckOutcome::skip(b.reason());
  if (*a == *b) return CheckOutcome::pass();
  return CheckOutcome::fail(where);
}

struct DefinedFractionRow {
  std::int64_t radius = 0;
  std::size_t samples = 0;
  std::size_t defined = 0;
  std::map<std::string, std::size_t> reasons;

  double fraction() const { return samples ? double(defined) / double(samples) : 0.0; }
};

/// Histogram of unresolved reasons per window radius. The evaluator returns
/// nullopt when it resolves and the blocking reason otherwise.
inline std::vector<DefinedFractionRow> defined_fraction_report(
    const std::function<std::optional<Unresolved>(std::int64_t radius, std::uint64_t sample)>& eval,
    const std::vector<std::int64_t>& radii, std::size_t n) {
  std::vector<DefinedFractionRow> rows;
  for (const auto radius : radii) {
    const auto res = parallel_map(n, [&](std::size_t i) { return eval(radius, i); });
    DefinedFractionRow row{radius, n, 0, {}};
    for (const auto& r : res) {
      if (!r)
        ++row.defined;
      else
        ++row.reasons[std::string(to_string(*r))];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Binomial proportion standard deviation sqrt(p(1-p)/n).
inline double binomial_sigma(double p, std::size_t n) {
  return n ? std::sqrt(std::max(0.0, p * (1.0 - p)) / double(n)) : INFINITY;
}

struct FreenessReport {
  std::string s;
  std::size_t samples = 0;
  std::size_t coincidences = 0;
  double bound = 0.0;
  double sigma = 0.0;

  double frequency() const { return samples ? double(coincidences) / double(samples) : 0.0; }
  bool pass() const { return frequency() <= bound + 3.0 * sigma; }
};

/// Frequency of (s·z)↾Γ = z↾Γ for z = θ(x), x drawn from base^G, against the
/// bound max(1 - base^Γ(P), Σ μ₀(r)²).
inline FreenessReport freeness_test(const GroupSpec& spec, const ProbVector& base, const PatternSet& p,
                                    const GroupElement& s, std::size_t n, const Seed128& seed) {
  if (s == spec.identity()) throw Error(ErrorCode::InvalidConfig, "freeness needs s != 1");
  const auto gammas = spec.gamma_elements();
  const auto s_inv = spec.inv(s);
  const auto hits = parallel_map(n, [&](std::size_t i) {
    const auto z = theta(LazyConfiguration(spec, base, seed.derive(i)), p);
    // (s·z)(γ) = z(s⁻¹γ)
    for (const auto& gamma : gammas)
      if (*z.at(gamma) != *z.at(spec.mul(s_inv, gamma))) return 0;
    return 1;
  });
  FreenessReport r;
  r.s = spec.to_string(s);
  r.samples = n;
  for (const int h : hits) r.coincidences += static_cast<std::size_t>(h);
  const auto m = mu0(base, p);
  r.bound = std::max(1.0 - p_measure(base, p), m.collision_mass());
  r.sigma = binomial_sigma(r.bound, n);
  return r;
}

}  // namespace bshift
