#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_set>

#include "bshift/config.hpp"
#include "bshift/factor.hpp"
#include "bshift/group.hpp"
#include "bshift/pattern_set.hpp"

using namespace bshift;

namespace {

GroupElement random_element(const GroupSpec& g, std::mt19937_64& rng, int max_len = 6) {
  std::uniform_int_distribution<std::uint64_t> d(0, g.ball_size(max_len) - 1);
  return g.enumerate(d(rng));
}

}  // namespace

TEST(Group, IntegerEnumerationOrder) {
  const auto z = GroupSpec::integers();
  const std::vector<std::int64_t> expect{0, 1, -1, 2, -2, 3, -3};
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_EQ(z.value(z.enumerate(i)), expect[i]);
    EXPECT_EQ(z.enumeration_index(z.integer(expect[i])), i);
  }
}

TEST(Group, CyclicEnumerationOrder) {
  const auto c = GroupSpec::cyclic(5);
  const std::vector<std::int64_t> expect{0, 1, 4, 2, 3};
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(c.value(c.enumerate(i)), expect[i]);
  const auto c4 = GroupSpec::cyclic(4);
  EXPECT_EQ(c4.value(c4.enumerate(3)), 2);
}

TEST(Group, FreeProductBallSizes) {
  const auto g = GroupSpec::free_product(5, 5);
  EXPECT_EQ(g.ball_size(0), 1u);
  EXPECT_EQ(g.ball_size(1), 9u);
  EXPECT_EQ(g.ball(1).size(), 9u);
  EXPECT_EQ(g.ball_size(3), 169u);
  EXPECT_EQ(g.ball(3).size(), 169u);
  EXPECT_THROW(g.ball(18), Error);
}

TEST(Group, FreeProductLaw) {
  const auto g = GroupSpec::free_product(5, 5);
  EXPECT_EQ(g.pow(g.a(1), 5), g.identity());
  EXPECT_EQ(g.mul(g.a(2), g.a(3)), g.identity());
  EXPECT_EQ(g.mul(g.a(2), g.a(4)), g.a(1));
  EXPECT_EQ(g.to_string(g.mul(g.a(1), g.b(2))), "a^1 b^2");
  EXPECT_EQ(g.length(g.mul(g.mul(g.a(1), g.b(2)), g.a(3))), 3);
}

TEST(Group, AxiomsOnRandomTriples) {
  std::mt19937_64 rng(1);
  for (const auto& g : {GroupSpec::free_product(5, 5), GroupSpec::free_product(2, 3),
                        GroupSpec::cyclic(7)}) {
    for (int t = 0; t < 2000; ++t) {
      const auto x = random_element(g, rng), y = random_element(g, rng), z = random_element(g, rng);
      EXPECT_EQ(g.mul(g.mul(x, y), z), g.mul(x, g.mul(y, z)));
      EXPECT_EQ(g.mul(x, g.inv(x)), g.identity());
      EXPECT_EQ(g.mul(g.identity(), x), x);
      EXPECT_NO_THROW(g.validate(g.mul(x, y)));
      EXPECT_EQ(g.distance(g.mul(z, x), g.mul(z, y)), g.distance(x, y));
    }
  }
  const auto z = GroupSpec::integers();
  for (int t = 0; t < 2000; ++t) {
    const auto x = random_element(z, rng, 1000), y = random_element(z, rng, 1000);
    EXPECT_EQ(z.value(z.mul(x, y)), z.value(x) + z.value(y));
    EXPECT_EQ(z.mul(x, z.inv(x)), z.identity());
  }
}

TEST(Group, EnumerationBijectiveOnBall) {
  for (const auto& g : {GroupSpec::free_product(5, 5), GroupSpec::free_product(2, 2)}) {
    const auto ball = g.ball(4);
    ASSERT_EQ(ball.size(), g.ball_size(4));
    for (std::size_t i = 0; i < ball.size(); ++i) {
      EXPECT_EQ(g.enumeration_index(ball[i]), i);
      EXPECT_EQ(g.enumerate(i), ball[i]);
      if (i > 0) {
        EXPECT_TRUE(g.enum_less(ball[i - 1], ball[i]));
      }
    }
  }
}

TEST(Group, CanonicalKeyInjective) {
  const auto g = GroupSpec::free_product(5, 5);
  std::set<std::string> keys;
  for (const auto& x : g.ball(4)) EXPECT_TRUE(keys.insert(g.canonical_key(x)).second);
  EXPECT_NE(GroupSpec::integers().canonical_key(GroupSpec::integers().integer(3)),
            GroupSpec::cyclic(5).canonical_key(GroupSpec::cyclic(5).residue(3)));
}

TEST(Group, CosetDecomposition) {
  const auto g = GroupSpec::free_product(5, 5);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 1000; ++t) {
    const auto x = random_element(g, rng);
    const auto split = g.coset_decompose(x);
    EXPECT_EQ(g.mul(split.rep, split.gamma), x);
    EXPECT_TRUE(g.gamma_index(split.gamma).has_value());
    for (const auto& gamma : g.gamma_elements())
      EXPECT_EQ(g.coset_decompose(g.mul(x, gamma)).rep, split.rep);
  }
  EXPECT_THROW(GroupSpec::integers().coset_decompose(GroupSpec::integers().integer(1)), Error);
}

TEST(Group, GammaIndexing) {
  const auto g = GroupSpec::free_product(5, 5);
  const auto gammas = g.gamma_elements();
  ASSERT_EQ(gammas.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(*g.gamma_index(gammas[static_cast<std::size_t>(i)]), i);
    EXPECT_EQ(gammas[static_cast<std::size_t>(i)], g.pow(g.a(1), i));
  }
}

TEST(Group, DisjointTranslatesOnIntegers) {
  const auto z = GroupSpec::integers();
  Shape small, large;
  for (int i = -2; i <= 2; ++i) small.push_back(z.integer(i));
  for (int i = -10; i <= 10; ++i) large.push_back(z.integer(i));
  const auto r = verify_disjoint_translates(z, small, large);
  ASSERT_TRUE(r.found);
  EXPECT_EQ(z.value(r.h1), -5);
  EXPECT_EQ(z.value(r.h2), 5);

  Shape tight;
  for (int i = -5; i <= 5; ++i) tight.push_back(z.integer(i));
  EXPECT_FALSE(verify_disjoint_translates(z, small, tight).found);
}

TEST(Group, DisjointTranslatesOnFreeProduct) {
  const auto g = GroupSpec::free_product(5, 5);
  const auto r = verify_disjoint_translates(g, g.ball(1), g.ball(5));
  ASSERT_TRUE(r.found);
  const auto diff = product_set(g, inverse_set(g, g.ball(1)), g.ball(1));
  std::unordered_set<GroupElement, GroupElementHash> first;
  for (const auto& d : diff) first.insert(g.mul(r.h1, d));
  for (const auto& d : diff) EXPECT_FALSE(first.count(g.mul(r.h2, d)));
}

TEST(Config, SeedRoundTrip) {
  const auto s = Seed128::parse("0x0123456789abcdef00112233445566ff");
  EXPECT_EQ(s.hex(), "0123456789abcdef00112233445566ff");
  EXPECT_THROW(Seed128::parse("xyz"), Error);
  EXPECT_NE(s.derive(1), s.derive(2));
}

TEST(Config, DeterministicAndShiftCompatible) {
  const auto g = GroupSpec::free_product(5, 5);
  const ProbVector base({{"a", 0.15}, {"b", 0.05}, {"c", 0.4}, {"d", 0.4}});
  const LazyConfiguration x(g, base, Seed128{1, 2});
  const LazyConfiguration y(g, base, Seed128{1, 2});
  std::mt19937_64 rng(9);
  for (int t = 0; t < 500; ++t) {
    const auto p = random_element(g, rng), h1 = random_element(g, rng), h2 = random_element(g, rng);
    EXPECT_EQ(x.value_at(p), y.value_at(p));
    EXPECT_EQ(x.shifted(h1).value_at(g.mul(h1, p)), x.value_at(p));
    EXPECT_EQ(x.shifted(h1).shifted(h2).value_at(p), x.shifted(g.mul(h2, h1)).value_at(p));
    const AnyField f(x);
    EXPECT_EQ(*f.shifted(h1).at(p), x.shifted(h1).value_at(p));
  }
}

TEST(Config, PrefixedReadsMatchPlainReads) {
  const auto g = GroupSpec::free_product(5, 5);
  const ProbVector base({{"a", 0.15}, {"b", 0.05}, {"c", 0.4}, {"d", 0.4}});
  const auto p = PatternSet::one_marked({intern("c")}, {intern("d")}, 5);
  std::mt19937_64 rng(21);
  const auto u = g.mul(g.a(1), g.b(1));
  for (int t = 0; t < 300; ++t) {
    const auto h = random_element(g, rng, 4);
    const LazyConfiguration x = LazyConfiguration(g, base, Seed128{7, 8}).shifted(h);
    const auto view = theta(x, p);
    // long prefix along the axis, short and cancelling suffixes
    const auto pos = g.mul(random_element(g, rng, 3), g.pow(u, t % 40 - 20));
    const auto xp = x.prefix(pos, 6);
    const auto vp = view.prefix(pos);
    for (int k = 0; k < 30; ++k) {
      const auto w = k % 3 == 0 ? g.mul(g.inv(pos), random_element(g, rng, 2))
                                : random_element(g, rng, 5);
      EXPECT_EQ(x.value_at(xp, w), x.value_at(g.mul(pos, w)));
      EXPECT_EQ(*view.at(vp, w), *view.at(g.mul(pos, w)));
    }
  }
}

TEST(Config, MarginalFrequencies) {
  const auto g = GroupSpec::free_product(5, 5);
  const ProbVector base({{"a", 0.15}, {"b", 0.05}, {"c", 0.4}, {"d", 0.4}});
  const LazyConfiguration x(g, base, Seed128{3, 4});
  std::map<Symbol, int> counts;
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[x.value_at(g.enumerate(static_cast<std::uint64_t>(i)))];
  for (const auto& a : base.atoms()) {
    const double f = static_cast<double>(counts[a.symbol]) / n;
    EXPECT_NEAR(f, a.mass, 5.0 * std::sqrt(a.mass * (1 - a.mass) / n)) << a.label;
  }
}

TEST(Factor, ThetaCopiesOnlyPCosets) {
  const auto g = GroupSpec::free_product(5, 5);
  const ProbVector base({{"a", 0.15}, {"b", 0.05}, {"c", 0.4}, {"d", 0.4}});
  const auto p = PatternSet::one_marked({intern("c")}, {intern("d")}, 5);
  const LazyConfiguration x(g, base, Seed128{5, 6});
  const auto view = theta(x, p);
  int p_cosets = 0, total = 0;
  for (const auto& h : g.ball(4)) {
    if (g.coset_decompose(h).rep != h) continue;
    ++total;
    const auto pat = *coset_pattern(x, g, h);
    const auto out = *view.pattern_at(h);
    if (p.contains(pat)) {
      ++p_cosets;
      EXPECT_EQ(out, pat);
    } else {
      EXPECT_EQ(out, Pattern(5, kStar));
    }
    // equivariance: θ(h·x) = h·θ(x)
    EXPECT_EQ(*theta(x.shifted(h), p).at(h), *view.at(g.identity()));
  }
  EXPECT_GT(p_cosets, 0);
  EXPECT_LT(p_cosets, total);
}

TEST(Factor, Mu0OfRunningExample) {
  const ProbVector base({{"a", 0.15}, {"b", 0.05}, {"c", 0.4}, {"d", 0.4}});
  const auto p = PatternSet::one_marked({intern("c")}, {intern("d")}, 5);
  const auto m = mu0(base, p);
  EXPECT_NEAR(p_measure(base, p), 0.0512, 1e-15);
  EXPECT_NEAR(m.mass_of(Pattern(5, kStar)), 0.9488, 1e-15);
  EXPECT_NEAR(m.total(), 1.0, 1e-15);
  EXPECT_EQ(m.cells.size(), 6u);
}

TEST(PatternSet, ExactlyOnceMass) {
  const ProbVector half({{"x", 0.5}, {"y", 0.5}});
  const auto p = PatternSet::exactly_once(intern("x"), intern("y"), 5);
  EXPECT_NEAR(p_measure(half, p), 5 * std::pow(0.5, 5), 1e-15);
  EXPECT_THROW(p.contains(Pattern(4, intern("x"))), Error);
  for (const auto& m : p.members())
    for (int j = 0; j < 5; ++j) EXPECT_TRUE(p.contains(rotate(m, j)));
}
