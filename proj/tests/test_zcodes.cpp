#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "bshift/verify.hpp"
#include "bshift/zcodes.hpp"

using namespace bshift;

namespace {

/// i.i.d. symbols on [lo, hi]; WindowExhausted elsewhere.
struct Window {
  std::int64_t lo = 0;
  std::vector<Symbol> cells;

  Window(const ProbVector& space, std::int64_t lo_, std::int64_t hi, std::mt19937_64& rng) : lo(lo_) {
    std::vector<double> w;
    for (const auto& a : space.atoms()) w.push_back(a.mass);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    for (std::int64_t k = lo; k <= hi; ++k) cells.push_back(space.atoms()[pick(rng)].symbol);
  }

  Partial<Symbol> operator()(std::int64_t k) const {
    if (k < lo || k >= lo + static_cast<std::int64_t>(cells.size())) return Unresolved::WindowExhausted;
    return cells[static_cast<std::size_t>(k - lo)];
  }
};

ZOracle shifted(const ZOracle& x, std::int64_t m) {
  return [x, m](std::int64_t k) { return x(k - m); };
}

ZOracle encoded(const FinitaryCode& f, const ZOracle& x) {
  return [f, x](std::int64_t k) { return f.encode_at(x, k).symbol; };
}

ProbVector running_lambda() { return ProbVector({{"a", 0.15}, {"b", 0.05}, {"c", 0.4}, {"d", 0.4}}); }

std::map<Symbol, Symbol> swap_ab() {
  return {{intern("a"), intern("b")}, {intern("b"), intern("a")}, {intern("c"), intern("c")}, {intern("d"), intern("d")}};
}

std::vector<FinitaryCode> instances() {
  const auto lam = running_lambda();
  const auto p = permutation_code(swap_ab(), lam);
  return {identity_code(lam),   shift_code(lam, 3),  shift_code(lam, -2), p, meshalkin_code(),
          compose(p.inverse(), p), compose(shift_code(lam, 1), p.inverse().inverse().inverse())};
}

}  // namespace

TEST(ZCodes, IdentityAndShift) {
  std::mt19937_64 rng(1);
  const auto lam = running_lambda();
  const Window w(lam, -50, 50, rng);
  const ZOracle x = w;
  const auto id = identity_code(lam);
  const auto s2 = shift_code(lam, 2);
  const auto s0 = shift_code(lam, 0);
  for (std::int64_t n = -40; n <= 40; ++n) {
    EXPECT_EQ(*id.encode_at(x, n).symbol, *x(n));
    EXPECT_EQ(id.encode_at(x, n).lookahead, 0);
    EXPECT_EQ(*s0.encode_at(x, n).symbol, *x(n));
    EXPECT_EQ(*s2.encode_at(x, n).symbol, *x(n - 2));
    EXPECT_EQ(s2.encode_at(x, n).lookahead, 2);
    EXPECT_EQ(*s2.inverse().encode_at(x, n).symbol, *x(n + 2));
    EXPECT_EQ(*id.inverse().encode_at(x, n).symbol, *x(n));
  }
  EXPECT_FALSE(s2.encode_at(x, -49).symbol);
  EXPECT_TRUE(s2.source() == lam && s2.target() == lam);
}

TEST(ZCodes, PermutationRelabelsMasses) {
  const auto lam = running_lambda();
  const auto p = permutation_code(swap_ab(), lam);
  EXPECT_TRUE(p.target() == ProbVector({{"a", 0.05}, {"b", 0.15}, {"c", 0.4}, {"d", 0.4}}));
  const ZOracle x = [](std::int64_t k) -> Partial<Symbol> { return intern(k % 2 ? "a" : "c"); };
  EXPECT_EQ(*p.encode_at(x, 1).symbol, intern("b"));
  EXPECT_EQ(*p.encode_at(x, 2).symbol, intern("c"));

  std::map<Symbol, Symbol> id;
  for (const auto& a : lam.atoms()) id[a.symbol] = a.symbol;
  EXPECT_TRUE(permutation_code(id, lam).target() == lam);

  auto partial = swap_ab();
  partial.erase(intern("d"));
  EXPECT_THROW(permutation_code(partial, lam), Error);
  auto clash = swap_ab();
  clash[intern("d")] = intern("c");
  EXPECT_THROW(permutation_code(clash, lam), Error);
}

TEST(ZCodes, ComposeChecksAlphabetsAndAddsLookahead) {
  const auto lam = running_lambda();
  EXPECT_THROW(compose(meshalkin_code(), identity_code(lam)), Error);
  const auto c = compose(shift_code(lam, 2), shift_code(lam, -5));
  std::mt19937_64 rng(2);
  const Window w(lam, -30, 30, rng);
  const ZOracle x = w;
  for (std::int64_t n = -20; n <= 20; ++n) {
    const auto out = c.encode_at(x, n);
    EXPECT_EQ(*out.symbol, *x(n + 3));
    EXPECT_EQ(out.lookahead, 7);
    EXPECT_EQ(*c.inverse().encode_at(x, n).symbol, *x(n - 3));
  }
  const auto p = permutation_code(swap_ab(), lam);
  const auto a = compose(compose(shift_code(lam, 1), p.inverse()), p);
  const auto b = compose(shift_code(lam, 1), compose(p.inverse(), p));
  const auto i = compose(p, identity_code(lam));
  for (std::int64_t n = -20; n <= 20; ++n) {
    EXPECT_EQ(*a.encode_at(x, n).symbol, *b.encode_at(x, n).symbol);
    EXPECT_EQ(*i.encode_at(x, n).symbol, *p.encode_at(x, n).symbol);
  }
}

TEST(ZCodes, MeshalkinSmallWords) {
  const auto& al = meshalkin::Alphabet::get();
  // markers 1 1 0 0 1 0 with payloads 1 0 1 1 0 0, then the window ends
  const std::vector<int> src = {3, 2, 1, 1, 2, 0};
  const ZOracle x = [&](std::int64_t k) -> Partial<Symbol> {
    if (k < 0 || k >= 6) return Unresolved::WindowExhausted;
    return al.q[src[static_cast<std::size_t>(k)]];
  };
  const auto m = meshalkin_code();
  // 0 matches 3, 1 matches 2, 4 matches 5
  EXPECT_EQ(*m.encode_at(x, 0).symbol, al.e[2 * 1 + 1]);
  EXPECT_EQ(m.encode_at(x, 0).lookahead, 3);
  EXPECT_EQ(*m.encode_at(x, 1).symbol, al.e[2 * 0 + 1]);
  EXPECT_EQ(*m.encode_at(x, 2).symbol, al.h);
  EXPECT_EQ(m.encode_at(x, 2).lookahead, 0);
  EXPECT_EQ(*m.encode_at(x, 4).symbol, al.e[0]);
  const ZOracle y = encoded(m, x);
  for (std::int64_t n = 0; n < 6; ++n) EXPECT_EQ(*m.decode_at(y, n).symbol, *x(n)) << n;

  const ZOracle open = [&](std::int64_t) -> Partial<Symbol> { return al.q[2]; };
  const auto r = meshalkin_code(64).encode_at(open, 0);
  EXPECT_FALSE(r.symbol);
  EXPECT_EQ(r.symbol.reason(), Unresolved::WindowExhausted);
  EXPECT_EQ(r.lookahead, 64);
}

TEST(ZCodes, EveryInstanceIsShiftEquivariant) {
  std::mt19937_64 rng(3);
  for (const auto& code : instances()) {
    std::uniform_int_distribution<std::int64_t> pos(-100, 100), by(-500, 500);
    const Window w(code.source(), -1200, 1200, rng);
    const ZOracle x = w;
    std::size_t defined = 0;
    for (int t = 0; t < 1000; ++t) {
      const auto n = pos(rng), m = by(rng);
      const auto a = code.encode_at(x, n);
      const auto b = code.encode_at(shifted(x, m), n + m);
      ASSERT_EQ(bool(a.symbol), bool(b.symbol)) << code.name();
      EXPECT_EQ(a.lookahead, b.lookahead);
      if (a.symbol) {
        ++defined;
        ASSERT_EQ(*a.symbol, *b.symbol) << code.name() << " n=" << n << " m=" << m;
      }
    }
    EXPECT_GT(defined, 900u) << code.name();
  }
}

TEST(ZCodes, EveryInstanceRoundTrips) {
  std::mt19937_64 rng(4);
  for (const auto& code : instances()) {
    std::size_t defined = 0;
    for (int t = 0; t < 200; ++t) {
      const Window w(code.source(), -300, 300, rng);
      const ZOracle x = w;
      const ZOracle y = encoded(code, x);
      for (std::int64_t n = -50; n <= 50; n += 10) {
        const auto back = code.decode_at(y, n).symbol;
        if (!back) continue;
        ++defined;
        ASSERT_EQ(*back, *x(n)) << code.name();
      }
    }
    EXPECT_GT(defined, 1500u) << code.name();
  }
}

TEST(ZCodes, PushForwardMatchesTargets) {
  for (const auto& code : instances()) {
    if (code.name() == "meshalkin") continue;  // its own test below
    const ShapeSampler sample = [&](std::uint64_t s) -> Partial<std::vector<Symbol>> {
      std::mt19937_64 rng(s * 7919 + 17);
      const Window w(code.source(), -8, 8, rng);
      const auto out = code.encode_at(ZOracle(w), 0).symbol;
      if (!out) return out.reason();
      return std::vector<Symbol>{*out};
    };
    const auto r = with_retries([&](int a) {
      return pushforward_test(code.name(), sample, {code.target()}, 100000, std::uint64_t(a) * 1000000);
    });
    EXPECT_TRUE(r.pass) << code.name() << " p=" << r.p_value;
  }
}

TEST(Meshalkin, RoundTripOnTenThousandWindows) {
  const auto m = meshalkin_code();
  const auto res = parallel_map(10000, [&](std::size_t t) {
    std::mt19937_64 rng(1000 + t);
    const Window w(m.source(), -600, 600, rng);
    const ZOracle x = w;
    const ZOracle y = encoded(m, x);
    std::pair<int, int> dv{0, 0};
    for (std::int64_t n = -4; n <= 4; ++n) {
      const auto back = m.decode_at(y, n).symbol;
      if (!back) continue;
      ++dv.first;
      if (*back != *x(n)) ++dv.second;
    }
    return dv;
  });
  int defined = 0, bad = 0;
  for (const auto& [d, v] : res) defined += d, bad += v;
  EXPECT_EQ(bad, 0);
  EXPECT_GT(defined, 9 * 10000 * 9 / 10);
}

TEST(Meshalkin, TargetDistributionAndLookahead) {
  const auto z = GroupSpec::integers();
  const auto run = [&](const FinitaryCode& m, std::uint64_t s) {
    const LazyConfiguration x(z, m.source(), Seed128{0x3e5, s});
    return m.encode_at([&](std::int64_t n) -> Partial<Symbol> { return x.value_at(z.integer(n)); }, 0);
  };
  // skipped coordinates are all openings, so a short window biases the rest toward h
  const auto wide = meshalkin_code(1 << 20);
  const ShapeSampler sample = [&](std::uint64_t s) -> Partial<std::vector<Symbol>> {
    const auto out = run(wide, s).symbol;
    if (!out) return out.reason();
    return std::vector<Symbol>{*out};
  };
  const auto r = with_retries([&](int a) {
    return pushforward_test("meshalkin", sample, {wide.target()}, 100000, std::uint64_t(a) * 1000000);
  });
  EXPECT_TRUE(r.pass) << r.p_value;
  EXPECT_GT(r.defined_fraction(), 0.99);

  const auto m = meshalkin_code();
  auto looks = parallel_map(100000, [&](std::size_t s) { return run(m, s).lookahead; });
  std::nth_element(looks.begin(), looks.begin() + 50000, looks.end());
  EXPECT_LE(looks[50000], 20);
  std::nth_element(looks.begin(), looks.begin() + 99000, looks.end());
  EXPECT_LE(looks[99000], 512);
}
