#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include "bshift/config.hpp"
#include "bshift/factor.hpp"
#include "bshift/marker.hpp"
#include "bshift/pattern_set.hpp"

using namespace bshift;

namespace {

// Brute-force oracle: maximal separated set by scanning in priority order.
std::set<int> scan_oracle(const std::vector<int>& word, int radius) {
  std::set<int> d;
  for (int i = 0; i < static_cast<int>(word.size()); ++i) {
    if (word[static_cast<std::size_t>(i)] != 1) continue;
    bool blocked = false;
    for (int e : d)
      if (std::abs(e - i) <= radius) blocked = true;
    if (!blocked) d.insert(i);
  }
  return d;
}

std::set<int> greedy_on_word(const std::vector<int>& word, int radius) {
  const int n = static_cast<int>(word.size());
  GreedyMarker<int> m(
      [&](const int& i) -> Partial<bool> {
        if (i < 0 || i >= n) return false;
        return word[static_cast<std::size_t>(i)] == 1;
      },
      [&](const int& i) -> Partial<std::vector<int>> {
        std::vector<int> out;
        for (int k = -radius; k <= radius; ++k)
          if (k != 0) out.push_back(i + k);
        return out;
      },
      [](const int& a, const int& b) -> Partial<int> { return a - b; });
  std::set<int> d;
  for (int i = 0; i < n; ++i)
    if (*m.contains(i)) d.insert(i);
  return d;
}

struct ConstField {
  GroupSpec g;
  Symbol s;
  const GroupSpec& spec() const { return g; }
  Partial<Symbol> at(const GroupElement&) const { return s; }
};

const ProbVector& running_base() {
  static const ProbVector base({{"a", 0.15}, {"b", 0.05}, {"c", 0.4}, {"d", 0.4}});
  return base;
}

using View = ThetaView<LazyConfiguration>;

View running_view(std::uint64_t seed) {
  const auto g = GroupSpec::free_product(5, 5);
  const auto p = PatternSet::one_marked({intern("c")}, {intern("d")}, 5);
  return theta(LazyConfiguration(g, running_base(), Seed128{seed, 77}), p);
}

const MarkerLevels& default_levels() {
  static const MarkerLevels levels(GroupSpec::free_product(5, 5), MarkerLevels::default_params());
  return levels;
}

}  // namespace

TEST(GreedyMarker, ToyWord) {
  const std::vector<int> word{1, 1, 0, 1, 0, 0, 1, 1, 1};
  EXPECT_EQ(greedy_on_word(word, 1), (std::set<int>{0, 3, 6, 8}));
}

TEST(GreedyMarker, EmptyAndSingle) {
  EXPECT_TRUE(greedy_on_word(std::vector<int>(12, 0), 2).empty());
  std::vector<int> one(12, 0);
  one[6] = 1;
  EXPECT_EQ(greedy_on_word(one, 2), (std::set<int>{6}));
}

TEST(GreedyMarker, MatchesScanOracleOnRandomWords) {
  std::mt19937_64 rng(11);
  std::bernoulli_distribution coin(0.6);
  for (int t = 0; t < 300; ++t) {
    std::vector<int> word(40);
    for (auto& w : word) w = coin(rng) ? 1 : 0;
    const int r = 1 + t % 3;
    const auto d = greedy_on_word(word, r);
    EXPECT_EQ(d, scan_oracle(word, r));
    for (int i = 0; i < 40; ++i) {
      if (word[static_cast<std::size_t>(i)] != 1) continue;
      bool covered = false;
      for (int e : d)
        if (std::abs(e - i) <= r) covered = true;
      EXPECT_TRUE(covered);
    }
  }
}

TEST(GreedyMarker, RoundsFollowRemovals) {
  // 0 and 3 admitted first; 1 removed in round 1; 2 depends on 1 only
  const std::vector<int> word{1, 1, 1};
  GreedyMarker<int> m(
      [&](const int& i) -> Partial<bool> { return i >= 0 && i < 3; },
      [](const int& i) -> Partial<std::vector<int>> { return std::vector<int>{i - 1, i + 1}; },
      [](const int& a, const int& b) -> Partial<int> { return a - b; });
  EXPECT_EQ(m.verdict(0)->round, 1);
  EXPECT_FALSE(m.verdict(1)->in_d);
  EXPECT_EQ(m.verdict(1)->round, 1);
  EXPECT_TRUE(m.verdict(2)->in_d);
  EXPECT_EQ(m.verdict(2)->round, 2);
}

TEST(GreedyMarker, TiesAndUnresolvedPropagate) {
  GreedyMarker<int> tie(
      [](const int&) -> Partial<bool> { return true; },
      [](const int& i) -> Partial<std::vector<int>> { return std::vector<int>{i - 1, i + 1}; },
      [](const int&, const int&) -> Partial<int> { return 0; });
  EXPECT_EQ(tie.contains(0).reason(), Unresolved::TieUnresolved);
  GreedyMarker<int> edge(
      [](const int& i) -> Partial<bool> {
        if (std::abs(i) > 3) return Unresolved::WindowExhausted;
        return true;
      },
      [](const int& i) -> Partial<std::vector<int>> { return std::vector<int>{i - 1, i + 1}; },
      [](const int& a, const int& b) -> Partial<int> { return b - a; });
  // priority increases towards -inf, so the chain reaches the window edge
  EXPECT_EQ(edge.contains(0).reason(), Unresolved::WindowExhausted);
}

TEST(GreedyMarker, OnConfigurationIsSeparatedAndEquivariant) {
  const auto z = GroupSpec::integers();
  const ProbVector coin({{"0", 0.5}, {"1", 0.5}});
  const LazyConfiguration x(z, coin, Seed128{9, 9});
  const Symbol one = intern("1");
  const auto y_test = [one](const LazyConfiguration& f, const GroupElement& q) -> Partial<bool> {
    return f.value_at(q) == one;
  };
  Shape f;
  for (int i = -2; i <= 2; ++i) f.push_back(z.integer(i));
  const Shape prio = z.ball(12);
  std::vector<int> d;
  int resolved = 0;
  for (int i = -100; i <= 100; ++i) {
    const auto v = greedy_marker(y_test, f, x, z.integer(i), 200, prio, 12);
    if (!v) continue;
    ++resolved;
    if (*v) d.push_back(i);
    const auto h = z.integer(37);
    EXPECT_EQ(*greedy_marker(y_test, f, x.shifted(h), z.integer(i + 37), 200, prio, 12), *v);
  }
  EXPECT_GT(resolved, 190);
  for (std::size_t k = 1; k < d.size(); ++k) EXPECT_GT(d[k] - d[k - 1], 2);
}

TEST(SelectV, NonStarCosetIsRejected) {
  const auto view = running_view(1);
  const auto& g = view.spec();
  int checked = 0;
  for (const auto& h : g.ball(3)) {
    if (*view.at(h) == kStar) continue;
    EXPECT_FALSE(*select_V(view, h, 5, 12));
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(SelectV, ExactlyOneRotationPerStarCoset) {
  const auto& g = GroupSpec::free_product(5, 5);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint64_t> pick(0, g.ball_size(5) - 1);
  int cosets = 0;
  for (int w = 0; w < 1000; ++w) {
    const auto view = running_view(100 + static_cast<std::uint64_t>(w));
    const auto rep = g.coset_decompose(g.enumerate(pick(rng))).rep;
    if (*view.at(rep) != kStar) continue;
    int selected = 0;
    bool all_defined = true;
    for (const auto& gamma : g.gamma_elements()) {
      const auto v = select_V(view, g.mul(rep, gamma), 5, 12);
      if (!v) {
        all_defined = false;
        continue;
      }
      selected += *v ? 1 : 0;
    }
    if (!all_defined) continue;
    ++cosets;
    EXPECT_EQ(selected, 1);
  }
  EXPECT_GT(cosets, 900);
}

TEST(SelectV, ConstantFieldTies) {
  const ConstField z{GroupSpec::free_product(5, 5), kStar};
  EXPECT_EQ(select_V(z, z.g.identity(), 3, 10).reason(), Unresolved::TieUnresolved);
  EXPECT_EQ(select_V(z, z.g.identity(), 5, 5).reason(), Unresolved::WindowExhausted);
}

TEST(MarkerLevels, DefaultsPassTranslateCheck) {
  const auto& levels = default_levels();
  EXPECT_EQ(levels.levels(), 3);
  const auto& g = levels.spec();
  EXPECT_EQ(g.length(g.pow(levels.axis(), 7)), 14);
  for (int n = 0; n <= levels.levels(); ++n) {
    const auto seg = levels.segment(n);
    EXPECT_EQ(seg.size(), static_cast<std::size_t>(2 * levels.radius(n) + 1));
    EXPECT_EQ(seg.front(), g.identity());
  }
}

TEST(MarkerLevels, RejectsBadRadii) {
  const auto g = GroupSpec::free_product(5, 5);
  EXPECT_THROW(MarkerLevels(g, MarkerParams{{3, 12}, 5, 400}), Error);
  EXPECT_THROW(MarkerLevels(g, MarkerParams{{}, 5, 400}), Error);
  EXPECT_THROW(MarkerLevels(g, MarkerParams{{2, 9, 40}, 5, 60}), Error);
  EXPECT_THROW(MarkerLevels(GroupSpec::integers(), MarkerParams{}), Error);
  EXPECT_NO_THROW(MarkerLevels(g, MarkerParams{{2, 9, 37}, 5, 400}));
}

class MarkerEngineTest : public ::testing::Test {
 protected:
  static constexpr int kWindows = 12;
  static constexpr std::int64_t kInner = 200;
};

TEST_F(MarkerEngineTest, LevelsAreSeparatedAndClassesGrow) {
  const auto& levels = default_levels();
  std::int64_t separation_violations = 0, class_violations = 0, classes = 0;
  for (int w = 0; w < kWindows; ++w) {
    MarkerEngine<View> e(levels, running_view(500 + static_cast<std::uint64_t>(w)),
                         levels.spec().identity());
    for (int n = 0; n <= levels.levels(); ++n) {
      const std::int64_t sep = 2 * levels.radius(n);
      for (std::int64_t j = -kInner; j <= kInner; ++j) {
        const auto d = e.in_d(n, j);
        if (!d || !*d) continue;
        for (std::int64_t k = 1; k <= sep; ++k) {
          const auto o = e.in_d(n, j + k);
          if (o && *o) ++separation_violations;
        }
        const auto cls = e.e_class(n, j);
        if (!cls) continue;
        ++classes;
        if (cls->size() < (std::size_t{1} << n)) ++class_violations;
        if (n > 0) {
          const auto w2 = e.members(n, j);
          EXPECT_EQ(w2->front(), j);
        }
      }
    }
  }
  EXPECT_EQ(separation_violations, 0);
  EXPECT_EQ(class_violations, 0);
  EXPECT_GT(classes, 0);
}

// A top-level class spans a whole gap between D_3 points, wider than the default window reaches.
TEST_F(MarkerEngineTest, TopLevelClassesResolveInWideWindow) {
  MarkerParams wide;
  wide.window = 4000;
  const MarkerLevels levels(GroupSpec::free_product(5, 5), wide);
  const int top = levels.levels();
  std::size_t classes = 0, smallest = SIZE_MAX, b_resolved = 0, b_open = 0;
  for (int w = 0; w < kWindows; ++w) {
    MarkerEngine<View> e(levels, running_view(500 + static_cast<std::uint64_t>(w)), levels.spec().identity());
    for (std::int64_t j = -kInner; j <= kInner; ++j) {
      const auto d = e.in_d(top, j);
      if (d && *d) {
        const auto cls = e.e_class(top, j);
        if (cls) {
          ++classes;
          smallest = std::min(smallest, cls->size());
        }
      }
      const auto v = e.in_v(j);
      if (v && *v) {
        const auto b = e.in_b(top, j);
        (b ? b_resolved : b_open) += 1;
      }
    }
  }
  EXPECT_GT(classes, 0u);
  EXPECT_GE(smallest, std::size_t{1} << top);
  EXPECT_GT(b_resolved, 20 * b_open);
}

TEST_F(MarkerEngineTest, TInverseAndCocycle) {
  const auto& levels = default_levels();
  const auto& g = levels.spec();
  int defined = 0, total = 0;
  for (int w = 0; w < kWindows; ++w) {
    MarkerEngine<View> e(levels, running_view(900 + static_cast<std::uint64_t>(w)), g.identity());
    for (std::int64_t j = -kInner; j <= kInner; ++j) {
      const auto v = e.in_v(j);
      if (!v || !*v) continue;
      ++total;
      const auto t1 = e.step(j, 1);
      if (!t1) continue;
      ++defined;
      EXPECT_TRUE(*e.in_v(*t1));
      EXPECT_EQ(*e.step(*t1, -1), j);
      // T(v·z) = t·(v·z), with the point of site q being q⁻¹·z
      const auto t = *e.t_power(j, 1);
      EXPECT_EQ(g.mul(t, g.inv(e.site(j))), g.inv(e.site(*t1)));
      EXPECT_EQ(*e.t_power(j, 0), g.identity());
      const auto back = e.t_power(*t1, -1);
      if (back) { EXPECT_EQ(g.mul(*back, t), g.identity()); }
      const auto t2 = e.t_power(j, 2);
      const auto t1b = e.t_power(*t1, 1);
      if (t2 && t1b) { EXPECT_EQ(*t2, g.mul(*t1b, t)); }
    }
  }
  EXPECT_GT(total, 0);
  EXPECT_GT(static_cast<double>(defined) / total, 0.85);
}

TEST_F(MarkerEngineTest, VerdictsAreEquivariant) {
  const auto& levels = default_levels();
  const auto& g = levels.spec();
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::uint64_t> pick(1, g.ball_size(6) - 1);
  for (int w = 0; w < 4; ++w) {
    const auto x = LazyConfiguration(g, running_base(), Seed128{1300 + static_cast<std::uint64_t>(w), 77});
    const auto p = PatternSet::one_marked({intern("c")}, {intern("d")}, 5);
    const auto h = g.enumerate(pick(rng));
    const GroupElement c = g.enumerate(pick(rng));
    MarkerEngine<View> e(levels, theta(x, p), c);
    MarkerEngine<View> s(levels, theta(x.shifted(h), p), g.mul(h, c));
    for (std::int64_t j = -60; j <= 60; ++j) {
      for (int n = 0; n <= levels.levels(); ++n) {
        const auto a = e.in_d(n, j), b = s.in_d(n, j);
        ASSERT_EQ(a.defined(), b.defined());
        if (a) { EXPECT_EQ(*a, *b); }
        else { EXPECT_EQ(a.reason(), b.reason()); }
      }
      const auto a = e.in_v(j);
      if (a && *a) {
        const auto ta = e.t_power(j, 1), tb = s.t_power(j, 1);
        ASSERT_EQ(ta.defined(), tb.defined());
        if (ta) { EXPECT_EQ(*ta, *tb); }
      }
    }
  }
}

TEST_F(MarkerEngineTest, EngineVMatchesSelectV) {
  const auto& levels = default_levels();
  const auto view = running_view(44);
  MarkerEngine<View> e(levels, view, levels.spec().identity());
  int in_v = 0;
  for (std::int64_t j = -40; j <= 40; ++j) {
    const auto a = e.in_v(j);
    const auto b = select_V(view, e.site(j), 5, 2 * 40 + 6);
    ASSERT_EQ(a.defined(), b.defined());
    if (a) { EXPECT_EQ(*a, *b); }
    in_v += a && *a ? 1 : 0;
  }
  EXPECT_GT(in_v, 0);
}

TEST_F(MarkerEngineTest, StepRequiresV) {
  const auto& levels = default_levels();
  MarkerEngine<View> e(levels, running_view(42), levels.spec().identity());
  for (std::int64_t j = 0; j < 50; ++j) {
    const auto v = e.in_v(j);
    if (v && !*v) {
      EXPECT_THROW(e.step(j, 1), Error);
      return;
    }
  }
  FAIL() << "no non-V site found";
}

TEST_F(MarkerEngineTest, OutsideWindowIsExhausted) {
  const auto& levels = default_levels();
  MarkerEngine<View> e(levels, running_view(43), levels.spec().identity());
  EXPECT_EQ(e.in_v(levels.reach() + 1).reason(), Unresolved::WindowExhausted);
}
