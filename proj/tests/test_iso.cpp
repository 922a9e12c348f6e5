#include <gtest/gtest.h>

#include <random>

#include "bshift/iso.hpp"
#include "bshift/verify.hpp"

using namespace bshift;

namespace {

ProbVector running_lambda() { return ProbVector({{"a", 0.15}, {"b", 0.05}, {"c", 0.4}, {"d", 0.4}}); }
ProbVector running_kappa() { return ProbVector({{"a", 0.05}, {"b", 0.15}, {"c", 0.4}, {"d", 0.4}}); }

RGammaWitness running_witness() {
  return witness_from_common_atoms(running_lambda(), running_kappa(), {"c"}, {"d"}, 5);
}

std::map<Symbol, Symbol> swap_ab() {
  return {{intern("a"), intern("b")}, {intern("b"), intern("a")}, {intern("c"), intern("c")}, {intern("d"), intern("d")}};
}

const GroupSpec& group() {
  static const GroupSpec g = GroupSpec::free_product(5, 5);
  return g;
}

const IsoSpec& permutation_iso() {
  static const auto iso = [] {
    const auto w = running_witness();
    return make_iso(group(), w, MarkerParams{}, lift_permutation(swap_ab(), ab_spaces(w)));
  }();
  return *iso;
}

const IsoSpec& shift_iso() {
  static const auto iso = [] {
    const auto w = witness_from_common_atoms(running_lambda(), running_lambda(), {"c"}, {"d"}, 5);
    return make_iso(group(), w, MarkerParams{}, shift_code(ab_spaces(w).a.space, 1));
  }();
  return *iso;
}

LazyConfiguration sample(const ProbVector& base, std::uint64_t i) {
  return LazyConfiguration(group(), base, Seed128{0xA11CE, 1000 + i});
}

GroupElement random_site(std::mt19937_64& rng, int radius = 6) {
  std::uniform_int_distribution<std::uint64_t> pick(0, group().ball_size(radius) - 1);
  return group().enumerate(pick(rng));
}

}  // namespace

TEST(AbSpaces, RunningWitness) {
  const auto ab = ab_spaces(running_witness());
  EXPECT_EQ(ab.a.space.atoms().size(), 1019u);
  EXPECT_EQ(ab.b.space.atoms().size(), 1019u);
  EXPECT_NEAR(ab.left.p_mass, 5 * std::pow(0.4, 5), 1e-15);
  EXPECT_NEAR(ab.a_entropy(), ab.b_entropy(), 1e-9);
  EXPECT_LT(ab.max_residual(), 1e-9);
  EXPECT_NEAR(ab.left.h_product, 5 * shannon_entropy(running_lambda()), 1e-12);
  EXPECT_NEAR(shannon_entropy(ab.a.space), ab.a_entropy(), 1e-12);
  for (const auto& [pat, s] : ab.a.symbol_of) {
    EXPECT_FALSE(running_witness().p_set.contains(pat));
    EXPECT_EQ(ab.a.pattern(s), pat);
  }
}

TEST(AbSpaces, DegenerateWitnessIsRejected) {
  const ProbVector cd({{"c", 0.5}, {"d", 0.5}});
  std::vector<Pattern> all;
  for (int m = 0; m < 32; ++m) {
    Pattern p;
    for (int j = 0; j < 5; ++j) p.push_back(intern((m >> j) & 1 ? "c" : "d"));
    all.push_back(p);
  }
  RGammaWitness w{5, cd, cd, PatternSet::explicit_list(all, 5), {}};
  try {
    ab_spaces(w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateWitness);
  }
}

TEST(IsoSpec, CodeMustMatchThePatternSpaces) {
  const auto w = running_witness();
  const auto ab = ab_spaces(w);
  EXPECT_THROW(make_iso(group(), w, MarkerParams{}, identity_code(ab.a.space)), Error);
  EXPECT_THROW(make_iso(GroupSpec::free_product(3, 5), w, MarkerParams{}, lift_permutation(swap_ab(), ab)), Error);
  const auto& iso = permutation_iso();
  EXPECT_TRUE(same_space(iso.zeta.target(), iso.ab.b.space));
  for (std::size_t i = 0; i < iso.gammas.size(); ++i)
    EXPECT_EQ(iso.gamma_mul[i][static_cast<std::size_t>(iso.gamma_inv[i])], 0);
}

TEST(Iso, PCosetsAreUntouchedAndStarCosetsGetBPatterns) {
  const auto& iso = permutation_iso();
  std::mt19937_64 rng(5);
  int p_cosets = 0, star_cosets = 0;
  for (std::uint64_t i = 0; i < 300; ++i) {
    const auto x = sample(running_lambda(), i);
    const auto g = random_site(rng);
    const auto in_p = theta(x, iso.witness.p_set).in_p(g);
    const auto img = pi_coset(iso, PiDirection::Forward, x, g);
    if (!in_p || !img) continue;
    const auto before = coset_pattern(x, iso.spec, g);
    if (*in_p) {
      ++p_cosets;
      EXPECT_EQ(*img, *before);
      EXPECT_EQ(*apply_pi(iso, x, g), x.value_at(g));
    } else {
      ++star_cosets;
      EXPECT_FALSE(iso.witness.p_set.contains(*img));
      // the lifted swap acts cellwise, so the image is the relabelled pattern
      Pattern want = *before;
      for (auto& c : want) c = swap_ab().at(c);
      EXPECT_EQ(*img, want);
    }
  }
  EXPECT_GT(p_cosets, 3);
  EXPECT_GT(star_cosets, 200);
}

TEST(Iso, IdentityCodeIsTheIdentity) {
  const auto w = witness_from_common_atoms(running_lambda(), running_lambda(), {"c"}, {"d"}, 5);
  const auto iso = make_iso(group(), w, MarkerParams{}, identity_code(ab_spaces(w).a.space));
  std::mt19937_64 rng(6);
  int defined = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto x = sample(running_lambda(), i);
    const auto g = random_site(rng);
    const auto y = apply_pi(*iso, x, g);
    if (!y) continue;
    ++defined;
    EXPECT_EQ(*y, x.value_at(g));
  }
  EXPECT_GT(defined, 190);
}

TEST(Iso, PermutationRouteIsEquivariantCompatibleAndInvertible) {
  const auto& iso = permutation_iso();
  std::mt19937_64 rng(7);
  int checked = 0;
  for (std::uint64_t i = 0; i < 150; ++i) {
    const auto x = sample(running_lambda(), i);
    const auto g = random_site(rng), h = random_site(rng);
    const auto a = apply_pi(iso, x, g);
    const auto b = apply_pi(iso, x.shifted(h), iso.spec.mul(h, g));
    ASSERT_EQ(a.defined(), b.defined());
    if (!a) continue;
    ++checked;
    EXPECT_EQ(*a, *b);

    // θ_K(π x) = θ_L(x) on the coset of g
    const auto img = *pi_coset(iso, PiDirection::Forward, x, g);
    const auto src = *coset_pattern(x, iso.spec, g);
    EXPECT_EQ(iso.witness.p_set.contains(img), iso.witness.p_set.contains(src));
    if (iso.witness.p_set.contains(src)) { EXPECT_EQ(img, src); }

    const PiImage<LazyConfiguration> y(std::shared_ptr<const IsoSpec>(&iso, [](const IsoSpec*) {}), x);
    const auto back = apply_pi_inverse(iso, y, g);
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, x.value_at(g));
  }
  EXPECT_GT(checked, 140);
}

TEST(Iso, HistoryFollowsTheOrbit) {
  const auto& iso = permutation_iso();
  std::mt19937_64 rng(8);
  int shifted = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto x = sample(running_lambda(), 500 + i);
    // find a V-site near a random point
    GroupElement v;
    bool found = false;
    for (int t = 0; t < 50 && !found; ++t) {
      v = random_site(rng);
      const auto in = v_lift(iso, x, v);
      found = in && *in;
    }
    ASSERT_TRUE(found);
    const auto h0 = history(iso, x, v, 0, 0);
    ASSERT_TRUE(h0);
    EXPECT_EQ(iso.ab.a.pattern(h0->front()), *coset_pattern(x, iso.spec, v));

    const auto t = t_lift(iso, x, v, 1);
    if (!t) continue;
    // T_L moves the point v⁻¹·x to t·v⁻¹·x, whose site is v·t⁻¹
    const auto tv = iso.spec.mul(v, iso.spec.inv(*t));
    ASSERT_TRUE(*v_lift(iso, x, tv));
    const auto a = history(iso, x, v, -3, 2);
    const auto b = history(iso, x, tv, -2, 3);
    if (!a || !b) continue;
    ++shifted;
    EXPECT_EQ(*a, *b);  // f(Tv)(n) = f(v)(n-1)
    for (const Symbol s : *a) EXPECT_FALSE(iso.witness.p_set.contains(iso.ab.a.pattern(s)));
  }
  EXPECT_GT(shifted, 12);
}

TEST(Iso, ShiftCodeWritesTheNextPatternOnTheOrbit) {
  const auto& iso = shift_iso();
  std::mt19937_64 rng(9);
  int traced = 0;
  for (std::uint64_t i = 0; i < 6; ++i) {
    const auto x = sample(running_lambda(), 900 + i);
    GroupElement v;
    for (;;) {
      v = random_site(rng);
      const auto in = v_lift(iso, x, v);
      if (in && *in) break;
    }
    Orbit<LazyConfiguration> orbit(iso, x, v, iso.ab.a);
    for (std::int64_t n = -1; n <= 1; ++n) {
      const auto wn = orbit.site(n);
      const auto f = orbit.history(-n - 1);  // ζ(f)(-n) = f(-n-1)
      if (!wn || !f) continue;
      const auto written = pi_coset(iso, PiDirection::Forward, x, *wn);
      if (!written) continue;
      ++traced;
      EXPECT_EQ(*written, iso.ab.a.pattern(*f)) << "n=" << n;
    }
  }
  EXPECT_GT(traced, 10);
}

TEST(Stepin, IdentityAndDisplayedIdentity) {
  const auto z = GroupSpec::integers();
  const auto base = meshalkin::source_space();
  const auto u = z.integer(1);
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<std::int64_t> pos(-1000, 1000), m(-20, 20);
  const auto psi = meshalkin_code();
  for (std::uint64_t i = 0; i < 100; ++i) {
    const LazyConfiguration x(z, base, Seed128{77, i});
    const auto g = z.integer(pos(rng));
    EXPECT_EQ(*stepin_pi(u, identity_code(base), x, g).symbol, x.value_at(g));
    const auto w = z.integer(pos(rng));
    const auto k = m(rng);
    const auto lhs = stepin_pi(u, psi, x, z.mul(w, z.pow(u, k))).symbol;
    const ZOracle q = [&](std::int64_t n) -> Partial<Symbol> { return x.value_at(z.mul(w, z.integer(n))); };
    const auto rhs = psi.encode_at(q, k).symbol;
    ASSERT_EQ(lhs.defined(), rhs.defined());
    if (lhs) { EXPECT_EQ(*lhs, *rhs); }
  }
  EXPECT_THROW(stepin_pi(z.integer(0), psi, LazyConfiguration(z, base, Seed128{1, 1}), u), Error);
  EXPECT_FALSE(has_infinite_order(group(), group().a(1)));
  EXPECT_TRUE(has_infinite_order(group(), group().mul(group().a(1), group().b(1))));
}
