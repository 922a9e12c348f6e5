#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <tuple>

#include "bshift/verify.hpp"

using namespace bshift;

namespace {

ProbVector running_lambda() { return ProbVector({{"a", 0.15}, {"b", 0.05}, {"c", 0.4}, {"d", 0.4}}); }

std::vector<Symbol> draw(const ProbVector& space, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> w;
  for (const auto& a : space.atoms()) w.push_back(a.mass);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::vector<Symbol> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(space.atoms()[pick(rng)].symbol);
  return out;
}

}  // namespace

TEST(ChiSquare, TwoCellBinomialClosedForm) {
  // (o - np)^2 / (np(1-p)) for two cells
  for (const auto& [o, n, p] : std::vector<std::tuple<double, double, double>>{{30, 100, 0.25}, {512, 1000, 0.5}, {7, 40, 0.3}}) {
    const auto r = chi_square({o, n - o}, {p, 1 - p});
    const double want = (o - n * p) * (o - n * p) / (n * p * (1 - p));
    EXPECT_NEAR(r.statistic, want, 1e-10);
    EXPECT_EQ(r.dof, 1);
    EXPECT_NEAR(r.p_value, std::erfc(std::sqrt(want / 2)), 1e-10);
  }
}

TEST(ChiSquare, PoolsSmallCells) {
  // expected 2, 2, 2 pool into 6; then 4 pools with 490
  const auto r = chi_square({490, 3, 2, 1, 4, 500}, {0.49, 0.002, 0.002, 0.002, 0.004, 0.5});
  EXPECT_EQ(r.observed.size(), 3u);
  double e = 0, o = 0;
  for (const double x : r.expected) e += x;
  for (const double x : r.observed) o += x;
  EXPECT_NEAR(e, 1000.0, 1e-9);
  EXPECT_EQ(o, 1000.0);
  for (const double x : r.expected) EXPECT_GE(x, 5.0);
  EXPECT_THROW(chi_square({1, 2}, {0.5, 0.6}), Error);
  EXPECT_THROW(chi_square({1, 2}, {1.0}), Error);
}

TEST(PushForward, IdentityPassesAndConstantFails) {
  const auto lam = running_lambda();
  const ShapeSampler iid = [&](std::uint64_t s) -> Partial<std::vector<Symbol>> { return draw(lam, 3, s + 99); };
  const auto r = pushforward_test("iid", iid, {lam, lam, lam}, 100000);
  EXPECT_TRUE(r.pass) << r.p_value;
  EXPECT_EQ(r.skipped, 0u);
  EXPECT_EQ(r.shape_size, 3u);

  const ShapeSampler constant = [](std::uint64_t) -> Partial<std::vector<Symbol>> {
    return std::vector<Symbol>{intern("c"), intern("c"), intern("c")};
  };
  EXPECT_LT(pushforward_test("constant", constant, {lam, lam, lam}, 10000).p_value, 1e-6);

  const ShapeSampler stranger = [](std::uint64_t) -> Partial<std::vector<Symbol>> {
    return std::vector<Symbol>{intern("not-in-lambda")};
  };
  EXPECT_FALSE(pushforward_test("stranger", stranger, {lam}, 10000).pass);
}

TEST(PushForward, SkipsAreCountedAndTooFewResolvedThrows) {
  const auto lam = running_lambda();
  const ShapeSampler half = [&](std::uint64_t s) -> Partial<std::vector<Symbol>> {
    if (s % 4 == 0) return Unresolved::WindowExhausted;
    return draw(lam, 1, s);
  };
  const auto r = pushforward_test("partial", half, {lam}, 20000);
  EXPECT_EQ(r.skipped, 5000u);
  EXPECT_EQ(r.skip_reasons.at("WindowExhausted"), 5000u);
  EXPECT_NEAR(r.defined_fraction(), 0.75, 1e-12);

  const ShapeSampler never = [](std::uint64_t) -> Partial<std::vector<Symbol>> { return Unresolved::TieUnresolved; };
  try {
    pushforward_test("never", never, {lam}, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewResolved);
  }
}

TEST(Retries, StopAtFirstPass) {
  int calls = 0;
  const auto r = with_retries([&](int a) {
    ++calls;
    GofReport g;
    g.pass = a == 1;
    return g;
  });
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.attempts, 2);
  EXPECT_EQ(calls, 2);
  const auto never = with_retries([](int) { return GofReport{}; });
  EXPECT_FALSE(never.pass);
  EXPECT_EQ(never.attempts, 3);
}

TEST(ExactTest, AnyViolationFails) {
  const auto ok = exact_test("ok", [](std::uint64_t s) {
    return s % 3 ? CheckOutcome::pass() : CheckOutcome::skip(Unresolved::TopLevelBoundary);
  }, 300);
  EXPECT_TRUE(ok.pass());
  EXPECT_EQ(ok.checked, 200u);
  EXPECT_EQ(ok.skip_reasons.at("TopLevelBoundary"), 100u);

  const auto bad = exact_test("bad", [](std::uint64_t s) {
    return s == 123 ? CheckOutcome::fail("x") : CheckOutcome::pass();
  }, 300);
  EXPECT_FALSE(bad.pass());
  EXPECT_EQ(bad.violations, 1u);
  ASSERT_EQ(bad.offenders.size(), 1u);
  EXPECT_EQ(bad.offenders.front(), "sample 123: x");

  EXPECT_FALSE(exact_test("empty", [](std::uint64_t) { return CheckOutcome::skip(Unresolved::TieUnresolved); }, 10).pass());
}

TEST(ParallelMap, ResultsDoNotDependOnThreadCount) {
  const auto saved = thread_count();
  const auto f = [](std::size_t i) { return i * i % 97; };
  thread_count() = 1;
  const auto one = parallel_map(5000, f);
  thread_count() = 7;
  const auto seven = parallel_map(5000, f);
  thread_count() = saved;
  EXPECT_EQ(one, seven);
}

TEST(DefinedFraction, MonotoneInRadius) {
  // a walk must stay within the radius to resolve
  const auto rows = defined_fraction_report(
      [](std::int64_t radius, std::uint64_t s) -> std::optional<Unresolved> {
        std::mt19937_64 rng(s);
        std::int64_t pos = 0;
        for (int t = 0; t < 50; ++t) {
          pos += rng() % 2 ? 1 : -1;
          if (std::abs(pos) > radius) return Unresolved::WindowExhausted;
        }
        return std::nullopt;
      },
      {0, 5, 10, 30}, 2000);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].fraction(), 0.0);
  EXPECT_EQ(rows[0].reasons.at("WindowExhausted"), 2000u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i].fraction(), rows[i - 1].fraction());
  EXPECT_GT(rows[3].fraction(), 0.99);
}

TEST(Freeness, RunningWitnessRespectsTheBound) {
  const auto g = GroupSpec::free_product(5, 5);
  const auto p = PatternSet::one_marked({intern("c")}, {intern("d")}, 5);
  const auto lam = running_lambda();
  for (const auto& s : {g.a(1), g.b(1), g.mul(g.a(2), g.b(3))}) {
    const auto r = freeness_test(g, lam, p, s, 20000, Seed128{3, 4});
    EXPECT_TRUE(r.pass()) << r.s << " " << r.frequency() << " vs " << r.bound;
    EXPECT_NEAR(r.bound, 1 - 5 * std::pow(0.4, 5), 1e-12);
  }
  // inside Γ only *-cosets coincide with their rotation
  const auto in_gamma = freeness_test(g, lam, p, g.a(1), 20000, Seed128{5, 6});
  EXPECT_NEAR(in_gamma.frequency(), 0.9488, 4 * in_gamma.sigma);
  EXPECT_THROW(freeness_test(g, lam, p, g.identity(), 10, Seed128{}), Error);
}
