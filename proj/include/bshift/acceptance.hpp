#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "bshift/config.hpp"
#include "bshift/factor.hpp"
#include "bshift/iso.hpp"
#include "bshift/marker.hpp"
#include "bshift/pattern_set.hpp"
#include "bshift/probvec.hpp"
#include "bshift/rgamma.hpp"
#include "bshift/sampling.hpp"
#include "bshift/verify.hpp"
#include "bshift/zcodes.hpp"

namespace bshift::acceptance {

/// Sample counts and seeds of the acceptance suite. The defaults are the full run.
struct Config {
  Seed128 seed{0x0b5e55ed, 0xacce97};
  std::size_t small_support_vectors = 1000;
  int grid_points = 10000;
  std::size_t chain_pairs = 50;
  std::size_t gof_samples = 100000;
  std::size_t exact_samples = 1000;
  std::size_t marker_windows = 200;
  std::int64_t marker_inner = 200;
  /// Read window of the engine that enumerates whole E_n classes and B_n.
  int class_window = 4000;
  std::size_t meshalkin_windows = 10000;
  std::size_t trace_configs = 25;
  std::size_t freeness_samples = 100000;
  int retries = 3;
  /// Window for the Meshalkin distribution tests; see meshalkin_gof_code.
  std::int64_t meshalkin_gof_window = std::int64_t{1} << 20;
  MarkerParams markers{};

  /// Every count divided by `factor`, for smoke runs.
  Config scaled_down(std::size_t factor) const {
    Config c = *this;
    const auto div = [&](std::size_t n, std::size_t floor) { return std::max(floor, n / factor); };
    c.small_support_vectors = div(small_support_vectors, 10);
    c.grid_points = static_cast<int>(div(static_cast<std::size_t>(grid_points), 100));
    c.chain_pairs = div(chain_pairs, 5);
    c.gof_samples = div(gof_samples, 10000);
    c.exact_samples = div(exact_samples, 50);
    c.marker_windows = div(marker_windows, 4);
    c.meshalkin_windows = div(meshalkin_windows, 100);
    c.trace_configs = div(trace_configs, 5);
    c.freeness_samples = div(freeness_samples, 2000);
    return c;
  }
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  double seconds = 0.0;

  bool pass() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  void add(std::string name, bool ok, std::string detail) { checks.push_back({std::move(name), ok, std::move(detail)}); }
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string reasons(const std::map<std::string, std::size_t>& r) {
  std::string out;
  for (const auto& [k, v] : r) out += (out.empty() ? "" : ",") + k + "=" + std::to_string(v);
  return out.empty() ? "none" : out;
}

inline Check gof_check(const std::string& name, const GofReport& r) {
  return {name, r.pass,
          "p=" + fmt("%.4g", r.p_value) + " chi2=" + fmt("%.2f", r.statistic) + " dof=" + std::to_string(r.dof) +
              " N=" + std::to_string(r.samples) + " resolved=" + fmt("%.4f", r.defined_fraction()) +
              " attempts=" + std::to_string(r.attempts) + " skipped[" + reasons(r.skip_reasons) + "]"};
}

inline Check exact_check(const ExactReport& r) {
  std::string d = "checked=" + std::to_string(r.checked) + "/" + std::to_string(r.samples) +
                  " violations=" + std::to_string(r.violations) + " skipped[" + reasons(r.skip_reasons) + "]";
  for (const auto& o : r.offenders) d += "; " + o;
  return {r.name, r.pass(), d};
}

/// Runs a test that may throw TooFewResolved; the throw is a failed report.
inline GofReport guarded(const std::function<GofReport()>& run, const std::string& name) {
  try {
    return run();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooFewResolved) throw;
    GofReport r;
    r.name = name;
    r.skip_reasons["TooFewResolved"] = 1;
    return r;
  }
}

inline const ProbVector& running_lambda() {
  static const ProbVector v({{"a", 0.15}, {"b", 0.05}, {"c", 0.4}, {"d", 0.4}});
  return v;
}
inline const ProbVector& running_kappa() {
  static const ProbVector v({{"a", 0.05}, {"b", 0.15}, {"c", 0.4}, {"d", 0.4}});
  return v;
}
inline const PatternSet& running_p() {
  static const PatternSet p = PatternSet::one_marked({intern("c")}, {intern("d")}, 5);
  return p;
}
inline const GroupSpec& z5z5() {
  static const GroupSpec g = GroupSpec::free_product(5, 5);
  return g;
}

/// Uniform element of ball(radius), drawn from a per-sample generator.
inline GroupElement random_element(const GroupSpec& g, std::mt19937_64& rng, int radius = 6) {
  std::uniform_int_distribution<std::uint64_t> pick(0, g.ball_size(radius) - 1);
  return g.enumerate(pick(rng));
}

inline std::mt19937_64 sample_rng(const Seed128& seed, std::uint64_t salt, std::uint64_t i) {
  const auto s = seed.derive(salt * 0x100000000ull + i);
  std::seed_seq seq{s.hi, s.lo, salt};
  return std::mt19937_64(seq);
}

template <class F>
CriterionResult timed(int id, std::string title, F&& body) {
  CriterionResult r;
  r.id = id;
  r.title = std::move(title);
  const auto t0 = std::chrono::steady_clock::now();
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace detail

// ---- 1: small-support step -------------------------------------------------------

inline CriterionResult small_support(const Config& cfg) {
  return detail::timed(1, "small-support formulas", [&](CriterionResult& out) {
    std::mt19937_64 rng(cfg.seed.lo ^ 0x51);
    std::uniform_int_distribution<int> atoms(2, 3);
    std::vector<ProbVector> inputs;
    for (std::size_t i = 0; i < cfg.small_support_vectors; ++i)
      inputs.push_back(labelled(random_simplex(static_cast<std::size_t>(atoms(rng)), rng), "p"));

    struct Row {
      double product = 0, entropy = 0, residual = 1;
      bool sum_ok = true;
      std::string error;
    };
    const auto rows = parallel_map(inputs.size() * 7, [&](std::size_t idx) {
      const auto& p = inputs[idx / 7];
      const int k = 4 + static_cast<int>(idx % 7);
      Row row;
      try {
        const auto [m, w] = resolve_small_support(p, k);
        const auto sorted = p.by_mass_descending();
        const double p0 = sorted.back().mass, p1 = sorted.front().mass;
        const double r0 = *m.mass_of(sorted.back().label), r1 = *m.mass_of(sorted.front().label);
        row.product = std::abs(std::pow(r0, k) * r1 - std::pow(p0, k) * p1);
        row.entropy = std::abs(shannon_entropy(m) - shannon_entropy(p));
        row.residual = small_support_masses(p0, p1, k).residual;
        row.sum_ok = r0 + r1 <= 1.0;
      } catch (const Error& e) {
        row.error = e.what();
      }
      return row;
    });
    double worst_product = 0, worst_entropy = 0, least_residual = 1;
    std::size_t errors = 0, sums = 0;
    std::string first_error;
    for (const auto& r : rows) {
      if (!r.error.empty()) {
        if (!errors++) first_error = r.error;
        continue;
      }
      worst_product = std::max(worst_product, r.product);
      worst_entropy = std::max(worst_entropy, r.entropy);
      least_residual = std::min(least_residual, r.residual);
      sums += r.sum_ok ? 0 : 1;
    }
    const std::string n = std::to_string(rows.size()) + " (vector, k) pairs";
    out.add("builds", errors == 0, n + ", errors=" + std::to_string(errors) + (errors ? " first: " + first_error : ""));
    out.add("r0^k r1 = p0^k p1", worst_product <= 1e-12, "max error " + detail::fmt("%.3g", worst_product));
    out.add("r0 + r1 < 1", least_residual > 0.0 && sums == 0,
            "min 1-r0-r1 " + detail::fmt("%.3g", least_residual) + ", float sums above 1: " + std::to_string(sums));
    out.add("entropy preserved", worst_entropy <= 1e-9, "max error " + detail::fmt("%.3g", worst_entropy));

    std::size_t grid_bad = 0, k_bad = 0;
    double min_gap = INFINITY;
    for (int k = 4; k <= 10; ++k) {
      const double kd = k;
      if (!(std::pow(2.0, -1.0 / kd) + std::pow(2.0, -kd + 1.0) < 1.0)) ++k_bad;
      for (int i = 1; i <= cfg.grid_points; ++i) {
        const double p0 = 0.5 * i / cfg.grid_points;
        const double q = 2.0 * std::pow(p0, kd);
        const double gap = entropy_of({p0, 1.0 - p0}) - (entropy_of({1.0 - q, q}) + q * std::log(2.0));
        min_gap = std::min(min_gap, gap);
        if (!(gap > 0.0)) ++grid_bad;
      }
    }
    out.add("entropy inequality on grid", grid_bad == 0,
            std::to_string(7 * cfg.grid_points) + " points, violations=" + std::to_string(grid_bad) +
                ", min gap " + detail::fmt("%.3g", min_gap));
    out.add("2^(-1/k) + 2^(1-k) < 1", k_bad == 0, "k=4..10, violations=" + std::to_string(k_bad));
  });
}

// ---- 2: reduction chains ---------------------------------------------------------

inline CriterionResult chains(const Config& cfg) {
  return detail::timed(2, "chain construction", [&](CriterionResult& out) {
    std::mt19937_64 rng(cfg.seed.lo ^ 0xC4);
    std::uniform_int_distribution<int> atoms(2, 6);
    std::vector<std::pair<ProbVector, ProbVector>> pairs;
    while (pairs.size() < cfg.chain_pairs) {
      const auto n1 = static_cast<std::size_t>(atoms(rng)), n2 = static_cast<std::size_t>(atoms(rng));
      auto lambda = labelled(random_simplex(n1, rng), "l");
      const double h = shannon_entropy(lambda);
      if (h >= std::log(static_cast<double>(n2))) continue;
      pairs.emplace_back(std::move(lambda), labelled(random_masses_with_entropy(n2, h, rng), "k"));
    }
    std::size_t built = 0, too_long = 0, bad_links = 0, links = 0, max_len = 0;
    double worst_h = 0, worst_p = 0;
    std::string first_problem;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [lambda, kappa] = pairs[i];
      try {
        const auto chain = build_chain(lambda, kappa, 5);
        ++built;
        max_len = std::max(max_len, chain.spaces.size());
        if (chain.spaces.size() > 6) ++too_long;
        const bool ends = chain.spaces.front() == lambda && chain.spaces.back() == kappa &&
                          chain.witnesses.size() + 1 == chain.spaces.size();
        for (std::size_t j = 0; j < chain.witnesses.size(); ++j) {
          const auto& w = chain.witnesses[j];
          const auto rep = verify_witness(w);
          ++links;
          const double rh = rep.find("entropy_equal")->residual, rp = rep.find("p_mass_agree")->residual;
          worst_h = std::max(worst_h, rh);
          worst_p = std::max(worst_p, rp);
          const bool joined = w.left == chain.spaces[j] && w.right == chain.spaces[j + 1];
          if (!rep.pass() || rh >= 1e-9 || rp >= 1e-12 || !joined || !ends) {
            ++bad_links;
            if (first_problem.empty()) first_problem = "pair " + std::to_string(i) + " link " + std::to_string(j);
          }
        }
      } catch (const Error& e) {
        if (first_problem.empty()) first_problem = "pair " + std::to_string(i) + ": " + e.what();
      }
    }
    out.add("build_chain succeeds", built == pairs.size(),
            std::to_string(built) + "/" + std::to_string(pairs.size()) + (first_problem.empty() ? "" : " " + first_problem));
    out.add("length <= 6", built > 0 && too_long == 0, "longest " + std::to_string(max_len));
    out.add("links verify", links > 0 && bad_links == 0,
            std::to_string(links) + " links, failing=" + std::to_string(bad_links) + ", max entropy residual " +
                detail::fmt("%.3g", worst_h) + ", max P-mass residual " + detail::fmt("%.3g", worst_p));
  });
}

// ---- 3: the factor θ ---------------------------------------------------------------

inline CriterionResult factor(const Config& cfg) {
  return detail::timed(3, "factor layer", [&](CriterionResult& out) {
    const auto& g = detail::z5z5();
    const auto& p = detail::running_p();
    const auto target = mu0(detail::running_lambda(), p);
    const auto patterns = [&](const ProbVector& base, std::uint64_t first) {
      return parallel_map(cfg.gof_samples, [&](std::size_t i) -> Partial<Pattern> {
        return theta(LazyConfiguration(g, base, cfg.seed.derive(first + i)), p).pattern_at(g.identity());
      });
    };
    const auto gof = with_retries(
        [&](int a) {
          return detail::guarded(
              [&] { return pattern_gof("theta vs mu0", patterns(detail::running_lambda(), std::uint64_t(a) << 32), target); },
              "theta vs mu0");
        },
        cfg.retries);
    out.checks.push_back(detail::gof_check("theta pushes lambda^G to mu0", gof));

    // empirical μ₀ from both sides, cell by cell
    const auto freq = [&](const ProbVector& base, std::uint64_t first) {
      std::map<Pattern, double> f;
      for (const auto& pat : patterns(base, first)) f[*pat] += 1.0 / double(cfg.gof_samples);
      return f;
    };
    const auto fl = freq(detail::running_lambda(), 7ull << 32), fk = freq(detail::running_kappa(), 9ull << 32);
    double worst = 0.0;
    bool agree = true;
    for (const auto& [pat, mass] : target.cells) {
      const double a = fl.count(pat) ? fl.at(pat) : 0.0, b = fk.count(pat) ? fk.at(pat) : 0.0;
      const double pooled = 0.5 * (a + b);
      const double sigma = std::sqrt(std::max(pooled * (1 - pooled), 1e-300) * 2.0 / double(cfg.gof_samples));
      worst = std::max(worst, std::abs(a - b) / sigma);
      if (std::abs(a - b) > 3.0 * sigma) agree = false;
    }
    agree = agree && fl.size() <= target.cells.size() && fk.size() <= target.cells.size();
    out.add("lambda and kappa give the same mu0", agree,
            std::to_string(target.cells.size()) + " cells, largest |difference| " + detail::fmt("%.2f", worst) + " sigma");

    const auto eq = exact_test(
        "theta equivariance",
        [&](std::uint64_t i) {
          auto rng = detail::sample_rng(cfg.seed, 3, i);
          const LazyConfiguration x(g, detail::running_lambda(), cfg.seed.derive(i));
          const auto at = detail::random_element(g, rng), h = detail::random_element(g, rng);
          // θ(h·x)(h·g) = θ(x)(g)
          const auto a = theta(x.shifted(h), p).at(g.mul(h, at));
          const auto b = theta(x, p).at(at);
          return compare_partial(a, b, "g=" + g.to_string(at) + " h=" + g.to_string(h));
        },
        cfg.exact_samples);
    out.checks.push_back(detail::exact_check(eq));
  });
}

// ---- 4 and 5: markers and T -----------------------------------------------------

struct MarkerTally {
  std::size_t v_cosets = 0, v_violations = 0;
  std::size_t sep_checked = 0, sep_violations = 0;
  std::vector<std::size_t> cover_resolved, cover_hit, class_checked, class_small, class_open, b_resolved, b_hit, b_open;
  std::size_t v_points = 0, t_defined = 0, inverse_violations = 0;
  std::size_t cocycle_checked = 0, cocycle_violations = 0;
  std::map<std::string, std::size_t> t_reasons;
  std::string first_problem;

  explicit MarkerTally(int levels = 0)
      : cover_resolved(levels + 1), cover_hit(levels + 1), class_checked(levels + 1), class_small(levels + 1),
        class_open(levels + 1), b_resolved(levels + 1), b_hit(levels + 1), b_open(levels + 1) {}

  void merge(const MarkerTally& o) {
    v_cosets += o.v_cosets, v_violations += o.v_violations;
    sep_checked += o.sep_checked, sep_violations += o.sep_violations;
    for (std::size_t n = 0; n < cover_resolved.size(); ++n) {
      cover_resolved[n] += o.cover_resolved[n], cover_hit[n] += o.cover_hit[n];
      class_checked[n] += o.class_checked[n], class_small[n] += o.class_small[n], class_open[n] += o.class_open[n];
      b_resolved[n] += o.b_resolved[n], b_hit[n] += o.b_hit[n], b_open[n] += o.b_open[n];
    }
    v_points += o.v_points, t_defined += o.t_defined, inverse_violations += o.inverse_violations;
    cocycle_checked += o.cocycle_checked, cocycle_violations += o.cocycle_violations;
    for (const auto& [k, v] : o.t_reasons) t_reasons[k] += v;
    if (first_problem.empty()) first_problem = o.first_problem;
  }
};

/// Every check of the two marker criteria on one window centred at a random site.
/// `wide` has the same radii and a larger read window; it enumerates E_n classes and B_n.
inline MarkerTally marker_window(const MarkerLevels& levels, const MarkerLevels& wide, const Config& cfg,
                                 std::uint64_t w) {
  using View = ThetaView<LazyConfiguration>;
  const auto& g = levels.spec();
  const int top = levels.levels();
  auto rng = detail::sample_rng(cfg.seed, 4, w);
  const auto view = theta(LazyConfiguration(g, detail::running_lambda(), cfg.seed.derive(w)), detail::running_p());
  const auto centre = detail::random_element(g, rng);
  MarkerEngine<View> e(levels, view, centre);
  MarkerEngine<View> ew(wide, view, centre);
  MarkerTally t(top);
  const auto note = [&](const std::string& what, std::int64_t j) {
    if (t.first_problem.empty()) t.first_problem = "window " + std::to_string(w) + " offset " + std::to_string(j) + ": " + what;
  };
  const auto& prm = levels.params();
  const std::int64_t inner = cfg.marker_inner;

  for (std::int64_t j = -inner; j <= inner; ++j) {
    // V: one marked rotation per resolved *-coset, none on P-cosets
    const auto& s = e.site(j);
    const auto star = view.at(s);
    int marked = 0;
    bool resolved = static_cast<bool>(star);
    for (const auto& gamma : g.gamma_elements()) {
      const auto v = select_V(view, g.mul(s, gamma), prm.priority_radius, prm.window);
      if (!v) resolved = false;
      else marked += *v ? 1 : 0;
    }
    const auto in_v = e.in_v(j);
    if (resolved) {
      ++t.v_cosets;
      const int want = *star == kStar ? 1 : 0;
      const auto direct = select_V(view, s, prm.priority_radius, prm.window);
      if (marked != want || !in_v || *in_v != *direct) {
        ++t.v_violations;
        note("V marks " + std::to_string(marked) + " rotations", j);
      }
    }

    for (int n = 0; n <= top; ++n) {
      const auto d = e.in_d(n, j);
      if (!d || !*d) continue;
      ++t.sep_checked;
      for (std::int64_t k = 1; k <= 2 * levels.radius(n); ++k) {
        const auto o = e.in_d(n, j + k);
        if (o && *o) {
          ++t.sep_violations;
          note("D_" + std::to_string(n) + " points " + std::to_string(k) + " apart", j);
        }
      }
      const auto cls = ew.e_class(n, j);
      if (!cls) ++t.class_open[static_cast<std::size_t>(n)];
      if (cls) {
        ++t.class_checked[static_cast<std::size_t>(n)];
        if (cls->size() < (std::size_t{1} << n)) {
          ++t.class_small[static_cast<std::size_t>(n)];
          note("E_" + std::to_string(n) + " class of size " + std::to_string(cls->size()), j);
        }
      }
    }

    if (!in_v || !*in_v) continue;
    for (int n = 1; n <= top; ++n) {
      const auto c = e.covered(n, j);
      if (c) {
        ++t.cover_resolved[static_cast<std::size_t>(n)];
        t.cover_hit[static_cast<std::size_t>(n)] += *c ? 1 : 0;
      }
      const auto b = ew.in_b(n, j);
      if (!b) ++t.b_open[static_cast<std::size_t>(n)];
      if (b) {
        ++t.b_resolved[static_cast<std::size_t>(n)];
        t.b_hit[static_cast<std::size_t>(n)] += *b ? 1 : 0;
      }
    }

    ++t.v_points;
    const auto t1 = e.step(j, 1);
    if (!t1) {
      ++t.t_reasons[std::string(to_string(t1.reason()))];
      continue;
    }
    ++t.t_defined;
    const auto back = e.step(*t1, -1);
    if (!back || *back != j) {
      ++t.inverse_violations;
      note("T^-1 T is not the identity", j);
    }
    // t(m+n, v) = t(m, T^n v) t(n, v)
    for (const auto& [m, n] : std::vector<std::pair<int, int>>{{1, 1}, {2, -1}, {-1, 2}, {1, -2}, {-2, -1}, {3, 2}}) {
      const auto tn = e.t_power(j, n);
      const auto tv = e.power(j, n);
      if (!tn || !tv) continue;
      const auto tm = e.t_power(*tv, m);
      const auto tmn = e.t_power(j, m + n);
      if (!tm || !tmn) continue;
      ++t.cocycle_checked;
      if (!(*tmn == g.mul(*tm, *tn))) {
        ++t.cocycle_violations;
        note("cocycle identity fails for m=" + std::to_string(m) + " n=" + std::to_string(n), j);
      }
    }
  }
  return t;
}

inline MarkerTally marker_tally(const Config& cfg) {
  const MarkerLevels levels(detail::z5z5(), cfg.markers);
  auto wide_params = cfg.markers;
  wide_params.window = std::max(cfg.class_window, wide_params.window);
  const MarkerLevels wide(detail::z5z5(), wide_params);
  const auto parts =
      parallel_map(cfg.marker_windows, [&](std::size_t w) { return marker_window(levels, wide, cfg, w); });
  MarkerTally total(levels.levels());
  for (const auto& p : parts) total.merge(p);
  return total;
}

inline CriterionResult markers(const Config& cfg, const MarkerTally& t, double seconds) {
  CriterionResult out;
  out.id = 4;
  out.title = "marker levels";
  out.seconds = seconds;
  const auto where = t.first_problem.empty() ? std::string() : " first: " + t.first_problem;
  out.add("V exactness", t.v_cosets > 0 && t.v_violations == 0,
          std::to_string(t.v_cosets) + " resolved cosets, violations=" + std::to_string(t.v_violations) + where);
  out.add("D_n separation", t.sep_checked > 0 && t.sep_violations == 0,
          std::to_string(t.sep_checked) + " points, violations=" + std::to_string(t.sep_violations));
  const int top = static_cast<int>(t.cover_resolved.size()) - 1;
  for (int n = 1; n <= top; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const double f = t.cover_resolved[i] ? double(t.cover_hit[i]) / double(t.cover_resolved[i]) : 0.0;
    out.add("covering level " + std::to_string(n), f >= 0.99,
            detail::fmt("%.4f", f) + " of " + std::to_string(t.cover_resolved[i]) + " V-points");
  }
  for (int n = 0; n <= top; ++n) {
    const auto i = static_cast<std::size_t>(n);
    out.add("E_" + std::to_string(n) + " classes >= " + std::to_string(1 << n), t.class_checked[i] > 0 && t.class_small[i] == 0,
            std::to_string(t.class_checked[i]) + " classes, too small=" + std::to_string(t.class_small[i]) +
                ", unresolved=" + std::to_string(t.class_open[i]));
  }
  for (int n = 1; n <= top; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const double bound = std::ldexp(1.0, -n);
    const double f = t.b_resolved[i] ? double(t.b_hit[i]) / double(t.b_resolved[i]) : 1.0;
    const double sigma = binomial_sigma(bound, t.b_resolved[i]);
    out.add("B_" + std::to_string(n) + " frequency", t.b_resolved[i] > 0 && f <= bound + 3 * sigma,
            detail::fmt("%.4f", f) + " <= " + detail::fmt("%.4f", bound) + " + 3*" + detail::fmt("%.4f", sigma) + " over " +
                std::to_string(t.b_resolved[i]) + ", unresolved=" + std::to_string(t.b_open[i]));
  }
  (void)cfg;
  return out;
}

inline CriterionResult transformation(const MarkerTally& t, double seconds) {
  CriterionResult out;
  out.id = 5;
  out.title = "transformation T";
  out.seconds = seconds;
  const double f = t.v_points ? double(t.t_defined) / double(t.v_points) : 0.0;
  out.add("T^-1 T = id", t.t_defined >= 1000 && t.inverse_violations == 0,
          std::to_string(t.t_defined) + " defined V-points, violations=" + std::to_string(t.inverse_violations));
  out.add("defined fraction >= 0.9", f >= 0.9,
          detail::fmt("%.4f", f) + " of " + std::to_string(t.v_points) + " V-points, undefined[" + detail::reasons(t.t_reasons) + "]");
  out.add("cocycle identity", t.cocycle_checked > 0 && t.cocycle_violations == 0,
          std::to_string(t.cocycle_checked) + " triples, violations=" + std::to_string(t.cocycle_violations));
  return out;
}

// ---- 6 and 7: the isomorphism π -------------------------------------------------

struct PiSamples {
  /// π(x) on e, a, a², a³, b, ba.
  std::vector<Partial<std::vector<Symbol>>> shape;
  /// The B-symbol written on each resolved *-coset among those of e and b.
  std::vector<Partial<std::vector<Symbol>>> written;
  std::size_t star_cosets = 0, moved = 0;
};

inline PiSamples pi_samples(const IsoSpec& iso, const ProbVector& lambda, const Config& cfg, std::uint64_t first) {
  const auto& g = iso.spec;
  struct One {
    Partial<std::vector<Symbol>> shape = Unresolved::WindowExhausted;
    std::vector<Symbol> written;
    std::size_t star = 0, moved = 0;
  };
  const auto rows = parallel_map(cfg.gof_samples, [&](std::size_t i) {
    const LazyConfiguration x(g, lambda, cfg.seed.derive(first + i));
    One r;
    const auto e = image_coset(iso, PiDirection::Forward, x, g.identity());
    const auto b = image_coset(iso, PiDirection::Forward, x, g.b(1));
    for (const auto* c : {&e, &b}) {
      if (!*c || !(*c)->written) continue;
      r.written.push_back(*(*c)->written);
      ++r.star;
      if ((*c)->values != *coset_pattern(x, g, c == &e ? g.identity() : g.b(1))) ++r.moved;
    }
    if (!e) r.shape = e.reason();
    else if (!b) r.shape = b.reason();
    else r.shape = std::vector<Symbol>{e->values[0], e->values[1], e->values[2], e->values[3], b->values[0], b->values[1]};
    return r;
  });
  PiSamples out;
  for (const auto& r : rows) {
    out.shape.push_back(r.shape);
    for (const Symbol w : r.written) out.written.push_back(std::vector<Symbol>{w});
    out.star_cosets += r.star;
    out.moved += r.moved;
  }
  return out;
}

namespace detail {

inline Pattern theta_of(const PatternSet& p, const Pattern& pattern) {
  return p.contains(pattern) ? pattern : Pattern(pattern.size(), kStar);
}

/// Eq. (w_n · π(x))↾Γ = ζ(f(w_0 · x))(-n) along the orbit of a V-site, and
/// the orbit of π(x) carrying ζ(f) as its own history.
inline Check orbit_trace(const std::shared_ptr<const IsoSpec>& iso, const ProbVector& lambda, const Config& cfg) {
  struct Tally {
    std::size_t checked = 0, violations = 0, skipped = 0;
    std::string problem;
  };
  const auto& g = iso->spec;
  const auto parts = parallel_map(cfg.trace_configs, [&](std::size_t c) {
    Tally t;
    auto rng = sample_rng(cfg.seed, 7, c);
    const LazyConfiguration x(g, lambda, cfg.seed.derive((11ull << 32) + c));
    GroupElement v;
    bool found = false;
    for (int k = 0; k < 500 && !found; ++k) {
      v = random_element(g, rng);
      const auto in = v_lift(*iso, x, v);
      found = in && *in;
    }
    if (!found) {
      ++t.skipped;
      return t;
    }
    Orbit<LazyConfiguration> orbit(*iso, x, v, iso->ab.a);
    const ZOracle f = [&](std::int64_t n) { return orbit.history(n); };
    const auto fail = [&](const std::string& what) {
      ++t.violations;
      if (t.problem.empty()) t.problem = "config " + std::to_string(c) + ": " + what;
    };
    for (std::int64_t n = -3; n <= 3; ++n) {
      const auto w = orbit.site(n);
      const auto want = iso->zeta.encode_at(f, -n).symbol;
      if (!w || !want) {
        ++t.skipped;
        continue;
      }
      const auto got = pi_coset(*iso, PiDirection::Forward, x, *w);
      if (!got) {
        ++t.skipped;
        continue;
      }
      ++t.checked;
      if (*got != iso->ab.b.pattern(*want)) fail("written pattern at T^" + std::to_string(n) + " differs");
    }
    const PiImage<LazyConfiguration> y(iso, x);
    Orbit<PiImage<LazyConfiguration>> image(*iso, y, v, iso->ab.b);
    for (std::int64_t m = -2; m <= 2; ++m) {
      const auto lhs = image.history(m);
      const auto rhs = iso->zeta.encode_at(f, m).symbol;
      if (!lhs || !rhs) {
        ++t.skipped;
        continue;
      }
      ++t.checked;
      if (*lhs != *rhs) fail("history of pi(x) differs at m=" + std::to_string(m));
    }
    return t;
  });
  Tally total;
  for (const auto& t : parts) {
    total.checked += t.checked, total.violations += t.violations, total.skipped += t.skipped;
    if (total.problem.empty()) total.problem = t.problem;
  }
  return {"orbit trace", total.checked >= 100 && total.violations == 0,
          std::to_string(total.checked) + " orbit points, violations=" + std::to_string(total.violations) +
              ", skipped=" + std::to_string(total.skipped) + (total.problem.empty() ? "" : " first: " + total.problem)};
}

}  // namespace detail

inline CriterionResult pi_route(int id, std::string title, const std::shared_ptr<const IsoSpec>& iso,
                                const ProbVector& lambda, const ProbVector& kappa, const Config& cfg, bool automorphism) {
  return detail::timed(id, std::move(title), [&](CriterionResult& out) {
    const auto& g = iso->spec;
    const auto& p = iso->witness.p_set;
    const auto salt = static_cast<std::uint64_t>(id) * 100;
    const auto draw = [&](std::uint64_t i, std::uint64_t which) {
      auto rng = detail::sample_rng(cfg.seed, salt + which, i);
      const LazyConfiguration x(g, lambda, cfg.seed.derive((salt + which) * (1ull << 32) + i));
      const auto at = detail::random_element(g, rng), h = detail::random_element(g, rng);
      return std::make_tuple(x, at, h);
    };

    out.checks.push_back(detail::exact_check(exact_test(
        "pi equivariance",
        [&](std::uint64_t i) {
          const auto [x, at, h] = draw(i, 1);
          const auto a = apply_pi(*iso, x, at);
          const auto b = apply_pi(*iso, x.shifted(h), g.mul(h, at));
          if (a.defined() != b.defined()) return CheckOutcome::fail("definedness differs at g=" + g.to_string(at));
          return compare_partial(a, b, "g=" + g.to_string(at) + " h=" + g.to_string(h));
        },
        cfg.exact_samples)));

    out.checks.push_back(detail::exact_check(exact_test(
        "theta_K o pi = theta_L",
        [&](std::uint64_t i) {
          const auto [x, at, h] = draw(i, 2);
          (void)h;
          const auto img = pi_coset(*iso, PiDirection::Forward, x, at);
          if (!img) return CheckOutcome::skip(img.reason());
          const auto src = *coset_pattern(x, g, at);
          if (detail::theta_of(p, *img) == detail::theta_of(p, src)) return CheckOutcome::pass();
          return CheckOutcome::fail("g=" + g.to_string(at) + " image " + pattern_label(*img));
        },
        cfg.exact_samples)));

    out.checks.push_back(detail::exact_check(exact_test(
        "pi_K o pi_L = id",
        [&](std::uint64_t i) {
          const auto [x, at, h] = draw(i, 3);
          (void)h;
          const PiImage<LazyConfiguration> y(iso, x);
          const auto back = apply_pi_inverse(*iso, y, at);
          if (!back) return CheckOutcome::skip(back.reason());
          if (*back == x.value_at(at)) return CheckOutcome::pass();
          return CheckOutcome::fail("g=" + g.to_string(at));
        },
        cfg.exact_samples)));

    std::map<int, PiSamples> cache;
    const auto samples = [&](int a) -> const PiSamples& {
      auto it = cache.find(a);
      if (it == cache.end()) it = cache.emplace(a, pi_samples(*iso, lambda, cfg, (salt + 4 + std::uint64_t(a)) << 32)).first;
      return it->second;
    };
    const std::vector<ProbVector> six(6, kappa);
    const auto shape = with_retries(
        [&](int a) {
          return detail::guarded([&] { return gof_from_samples("pi shape", samples(a).shape, six); }, "pi shape");
        },
        cfg.retries);
    out.checks.push_back(detail::gof_check("pi pushes lambda^G to kappa^G on {e,a,a2,a3,b,ba}", shape));
    const auto written = with_retries(
        [&](int a) {
          return detail::guarded([&] { return gof_from_samples("written", samples(a).written, {iso->ab.b.space}); },
                                 "written");
        },
        cfg.retries);
    out.checks.push_back(detail::gof_check("B-patterns on *-cosets follow beta", written));

    if (automorphism) {
      const auto& s0 = samples(0);
      const double moved = s0.star_cosets ? double(s0.moved) / double(s0.star_cosets) : 0.0;
      out.add("nontrivial", moved > 0.5,
              detail::fmt("%.4f", moved) + " of " + std::to_string(s0.star_cosets) + " *-cosets change");
      out.checks.push_back(detail::orbit_trace(iso, lambda, cfg));
    }
  });
}

inline std::shared_ptr<const IsoSpec> permutation_iso(const Config& cfg) {
  const auto w = witness_from_common_atoms(detail::running_lambda(), detail::running_kappa(), {"c"}, {"d"}, 5);
  const std::map<Symbol, Symbol> swap{
      {intern("a"), intern("b")}, {intern("b"), intern("a")}, {intern("c"), intern("c")}, {intern("d"), intern("d")}};
  return make_iso(detail::z5z5(), w, cfg.markers, lift_permutation(swap, ab_spaces(w)));
}

inline std::shared_ptr<const IsoSpec> shift_iso(const Config& cfg) {
  const auto w = witness_from_common_atoms(detail::running_lambda(), detail::running_lambda(), {"c"}, {"d"}, 5);
  return make_iso(detail::z5z5(), w, cfg.markers, shift_code(ab_spaces(w).a.space, 1));
}

// ---- 8 and 9: ℤ-codes ---------------------------------------------------------------

/// Meshalkin's code with a window wide enough for distribution tests. Every
/// coordinate left unresolved by a window is an opening bracket, so skipping
/// them biases the rest toward h; at 2^20 the unresolved share is about 0.1%.
inline FinitaryCode meshalkin_gof_code(const Config& cfg) { return meshalkin_code(cfg.meshalkin_gof_window); }

inline CriterionResult meshalkin(const Config& cfg) {
  return detail::timed(8, "Meshalkin code", [&](CriterionResult& out) {
    const auto z = GroupSpec::integers();
    const auto m = meshalkin_code();
    const auto line = [&](std::uint64_t s) {
      return [x = LazyConfiguration(z, m.source(), cfg.seed.derive(s)), z](std::int64_t n) -> Partial<Symbol> {
        return x.value_at(z.integer(n));
      };
    };

    const auto rt = exact_test(
        "decode o encode = id",
        [&](std::uint64_t i) {
          const ZOracle x = line((8ull << 32) + i);
          const ZOracle y = [&](std::int64_t k) { return m.encode_at(x, k).symbol; };
          bool any = false;
          for (std::int64_t n = -4; n <= 4; ++n) {
            const auto back = m.decode_at(y, n).symbol;
            if (!back) continue;
            any = true;
            if (*back != *x(n)) return CheckOutcome::fail("coordinate " + std::to_string(n));
          }
          return any ? CheckOutcome::pass() : CheckOutcome::skip(Unresolved::WindowExhausted);
        },
        cfg.meshalkin_windows);
    out.checks.push_back(detail::exact_check(rt));

    const auto wide = meshalkin_gof_code(cfg);
    const auto gof = with_retries(
        [&](int a) {
          return detail::guarded(
              [&] {
                const ShapeSampler s = [&](std::uint64_t i) -> Partial<std::vector<Symbol>> {
                  const ZOracle x = line(i);
                  std::vector<Symbol> v;
                  for (std::int64_t n = 0; n < 3; ++n) {
                    const auto o = wide.encode_at(x, n).symbol;
                    if (!o) return o.reason();
                    v.push_back(*o);
                  }
                  return v;
                };
                return pushforward_test("meshalkin", s, std::vector<ProbVector>(3, m.target()), cfg.gof_samples,
                                        (9ull + std::uint64_t(a)) << 32);
              },
              "meshalkin");
        },
        cfg.retries);
    out.checks.push_back(detail::gof_check("target distribution on 3 positions", gof));

    auto looks = parallel_map(cfg.gof_samples, [&](std::size_t i) {
      const ZOracle x = line((13ull << 32) + i);
      return m.encode_at(x, 0).lookahead;
    });
    std::sort(looks.begin(), looks.end());
    const auto median = looks[looks.size() / 2];
    const auto p99 = looks[looks.size() * 99 / 100];
    out.add("median lookahead <= 20", median <= 20,
            "median " + std::to_string(median) + ", p99 " + std::to_string(p99) + " at window 512");
  });
}

inline CriterionResult stepin(const Config& cfg) {
  return detail::timed(9, "stepin route on Z", [&](CriterionResult& out) {
    const auto z = GroupSpec::integers();
    const auto u = z.integer(1);
    const auto psi = meshalkin_code();
    const auto base = psi.source();
    const auto config = [&](std::uint64_t s) { return LazyConfiguration(z, base, cfg.seed.derive(s)); };

    const auto wide = meshalkin_gof_code(cfg);
    const auto gof = with_retries(
        [&](int a) {
          return detail::guarded(
              [&] {
                const ShapeSampler s = [&](std::uint64_t i) -> Partial<std::vector<Symbol>> {
                  const auto x = config(i);
                  std::vector<Symbol> v;
                  for (std::int64_t n = 0; n < 3; ++n) {
                    const auto o = stepin_pi(u, wide, x, z.integer(n)).symbol;
                    if (!o) return o.reason();
                    v.push_back(*o);
                  }
                  return v;
                };
                return pushforward_test("stepin", s, std::vector<ProbVector>(3, psi.target()), cfg.gof_samples,
                                        (21ull + std::uint64_t(a)) << 32);
              },
              "stepin");
        },
        cfg.retries);
    out.checks.push_back(detail::gof_check("push-forward on 3 positions", gof));

    const auto pick = [&](std::uint64_t i, std::uint64_t salt) {
      auto rng = detail::sample_rng(cfg.seed, salt, i);
      std::uniform_int_distribution<std::int64_t> pos(-1000, 1000), m(-20, 20);
      return std::make_tuple(z.integer(pos(rng)), z.integer(pos(rng)), m(rng));
    };
    out.checks.push_back(detail::exact_check(exact_test(
        "equivariance",
        [&](std::uint64_t i) {
          const auto [g, h, m] = pick(i, 91);
          (void)m;
          const auto x = config((25ull << 32) + i);
          const auto a = stepin_pi(u, psi, x, g).symbol;
          const auto b = stepin_pi(u, psi, x.shifted(h), z.mul(h, g)).symbol;
          if (a.defined() != b.defined()) return CheckOutcome::fail("definedness differs");
          return compare_partial(a, b, "g=" + z.to_string(g) + " h=" + z.to_string(h));
        },
        cfg.exact_samples)));
    out.checks.push_back(detail::exact_check(exact_test(
        "pi(x)(w u^m) = psi(q(w^-1 x))(m)",
        [&](std::uint64_t i) {
          const auto [w, unused, m] = pick(i, 92);
          (void)unused;
          const auto x = config((26ull << 32) + i);
          const auto lhs = stepin_pi(u, psi, x, z.mul(w, z.pow(u, m))).symbol;
          const ZOracle q = [&](std::int64_t n) -> Partial<Symbol> { return x.value_at(z.mul(w, z.pow(u, n))); };
          const auto rhs = psi.encode_at(q, m).symbol;
          if (lhs.defined() != rhs.defined()) return CheckOutcome::fail("definedness differs");
          return compare_partial(lhs, rhs, "w=" + z.to_string(w) + " m=" + std::to_string(m));
        },
        cfg.exact_samples)));
  });
}

// ---- 10: freeness ----------------------------------------------------------------

inline CriterionResult freeness(const Config& cfg) {
  return detail::timed(10, "essential freeness", [&](CriterionResult& out) {
    const auto& g = detail::z5z5();
    const std::vector<GroupElement> choices{g.a(1), g.b(1), g.mul(g.a(1), g.b(1)), g.mul(g.mul(g.a(2), g.b(3)), g.a(1)),
                                            g.mul(g.mul(g.b(4), g.a(2)), g.mul(g.b(1), g.a(3)))};
    for (std::size_t i = 0; i < choices.size(); ++i) {
      const auto r = freeness_test(g, detail::running_lambda(), detail::running_p(), choices[i], cfg.freeness_samples,
                                   cfg.seed.derive((31ull << 32) + (i << 24)));
      out.add("s=" + r.s, r.pass(),
              detail::fmt("%.5f", r.frequency()) + " <= " + detail::fmt("%.5f", r.bound) + " + 3*" +
                  detail::fmt("%.5f", r.sigma) + " over " + std::to_string(r.samples));
    }
  });
}

// ---- runner -----------------------------------------------------------------------

inline constexpr int kCriteria = 10;

/// Runs the criteria in `which` (all when empty) and reports each as it finishes.
inline std::vector<CriterionResult> run(const Config& cfg, const std::vector<int>& which = {},
                                        const std::function<void(const CriterionResult&)>& done = {}) {
  const auto wanted = [&](int id) { return which.empty() || std::find(which.begin(), which.end(), id) != which.end(); };
  std::vector<CriterionResult> out;
  const auto emit = [&](CriterionResult r) {
    if (done) done(r);
    out.push_back(std::move(r));
  };
  if (wanted(1)) emit(small_support(cfg));
  if (wanted(2)) emit(chains(cfg));
  if (wanted(3)) emit(factor(cfg));
  if (wanted(4) || wanted(5)) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto tally = marker_tally(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (wanted(4)) emit(markers(cfg, tally, secs));
    if (wanted(5)) emit(transformation(tally, wanted(4) ? 0.0 : secs));
  }
  if (wanted(6))
    emit(pi_route(6, "pi with a permutation code", permutation_iso(cfg), detail::running_lambda(), detail::running_kappa(),
                  cfg, false));
  if (wanted(7))
    emit(pi_route(7, "pi with the shift code", shift_iso(cfg), detail::running_lambda(), detail::running_lambda(), cfg,
                  true));
  if (wanted(8)) emit(meshalkin(cfg));
  if (wanted(9)) emit(stepin(cfg));
  if (wanted(10)) emit(freeness(cfg));
  return out;
}

}  // namespace bshift::acceptance
