#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bshift/error.hpp"

namespace bshift {

/// Canonical normal form of a group element.
///
/// Integer: {n} (empty for 0). Cyclic(n): {r}, 0 < r < n (empty for 0).
/// FreeProduct(n1, n2): reduced word of letter ranks; rank r in [1, n1) is a^r,
/// rank n1 - 1 + r for r in [1, n2) is b^r. Ranks give the generator order.
struct GroupElement {
  std::vector<std::int32_t> word;

  friend bool operator==(const GroupElement&, const GroupElement&) = default;
};

struct GroupElementHash {
  std::size_t operator()(const GroupElement& g) const noexcept {
    std::uint64_t h = 0xCBF29CE484222325ull ^ g.word.size();
    for (auto c : g.word) {
      h ^= static_cast<std::uint32_t>(c);
      h *= 0x100000001B3ull;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

using Shape = std::vector<GroupElement>;

enum class GroupKind { Integer, Cyclic, FreeProduct };

class GroupSpec {
 public:
  static constexpr std::size_t kDefaultBallCap = 1'000'000;

  static GroupSpec integers() { return GroupSpec(GroupKind::Integer, 0, 0); }
  static GroupSpec cyclic(int n) {
    if (n < 1) throw Error(ErrorCode::SpecMismatch, "cyclic order must be positive");
    return GroupSpec(GroupKind::Cyclic, n, 0);
  }
  /// Free product Z_n1 * Z_n2 with Γ = the first factor.
  static GroupSpec free_product(int n1, int n2) {
    if (n1 < 2 || n2 < 2) throw Error(ErrorCode::SpecMismatch, "factor orders must be >= 2");
    return GroupSpec(GroupKind::FreeProduct, n1, n2);
  }

  GroupKind kind() const { return kind_; }
  int n1() const { return n1_; }
  int n2() const { return n2_; }
  bool has_gamma() const { return kind_ != GroupKind::Integer; }
  int gamma_order() const {
    if (!has_gamma()) throw Error(ErrorCode::NoDesignatedSubgroup, "integer group");
    return n1_;
  }
  std::size_t ball_cap() const { return ball_cap_; }
  void set_ball_cap(std::size_t cap) { ball_cap_ = cap; }

  std::string name() const {
    switch (kind_) {
      case GroupKind::Integer: return "Z";
      case GroupKind::Cyclic: return "Z" + std::to_string(n1_);
      case GroupKind::FreeProduct:
        return "Z" + std::to_string(n1_) + "*Z" + std::to_string(n2_);
    }
    return "?";
  }

  // ---- constructors of elements -------------------------------------------

  GroupElement identity() const { return {}; }

  GroupElement integer(std::int64_t n) const {
    require(GroupKind::Integer);
    if (n == 0) return {};
    return GroupElement{{static_cast<std::int32_t>(n)}};
  }
  GroupElement residue(int r) const {
    require(GroupKind::Cyclic);
    r = ((r % n1_) + n1_) % n1_;
    if (r == 0) return {};
    return GroupElement{{r}};
  }
  /// a^p in the first free factor.
  GroupElement a(int p) const {
    require(GroupKind::FreeProduct);
    p = ((p % n1_) + n1_) % n1_;
    if (p == 0) return {};
    return GroupElement{{p}};
  }
  /// b^p in the second free factor.
  GroupElement b(int p) const {
    require(GroupKind::FreeProduct);
    p = ((p % n2_) + n2_) % n2_;
    if (p == 0) return {};
    return GroupElement{{n1_ - 1 + p}};
  }

  /// Generators of Γ raised to 0..|Γ|-1; for the free product this is also
  /// enumeration order.
  Shape gamma_elements() const {
    Shape out;
    const int k = gamma_order();
    for (int i = 0; i < k; ++i) out.push_back(kind_ == GroupKind::Cyclic ? residue(i) : a(i));
    return out;
  }

  /// Index j with g = γ_j, if g ∈ Γ.
  std::optional<int> gamma_index(const GroupElement& g) const {
    if (!has_gamma()) return std::nullopt;
    if (g.word.empty()) return 0;
    if (g.word.size() == 1 && (kind_ == GroupKind::Cyclic || g.word[0] < n1_))
      return g.word[0];
    return std::nullopt;
  }

  // ---- group law ------------------------------------------------------------

  GroupElement mul(const GroupElement& x, const GroupElement& y) const {
    switch (kind_) {
      case GroupKind::Integer: {
        const std::int64_t s = value(x) + value(y);
        return integer(s);
      }
      case GroupKind::Cyclic: return residue(static_cast<int>(value(x) + value(y)));
      case GroupKind::FreeProduct: {
        GroupElement out;
        out.word.reserve(x.word.size() + y.word.size());
        out.word = x.word;
        for (auto c : y.word) push_letter(out.word, c);
        return out;
      }
    }
    return {};
  }

  /// Free-product reduction of w·c in place, for any vector-like word buffer.
  template <class Word>
  void append_letter(Word& w, std::int32_t c) const {
    push_letter(w, c);
  }

  GroupElement inv(const GroupElement& x) const {
    switch (kind_) {
      case GroupKind::Integer: return integer(-value(x));
      case GroupKind::Cyclic: return residue(static_cast<int>(-value(x)));
      case GroupKind::FreeProduct: {
        GroupElement out;
        out.word.reserve(x.word.size());
        for (auto it = x.word.rbegin(); it != x.word.rend(); ++it) {
          const int f = factor(*it);
          const int n = f == 0 ? n1_ : n2_;
          out.word.push_back(make_letter(f, n - power(*it)));
        }
        return out;
      }
    }
    return {};
  }

  GroupElement pow(const GroupElement& g, std::int64_t n) const {
    GroupElement base = n < 0 ? inv(g) : g;
    std::uint64_t e = n < 0 ? static_cast<std::uint64_t>(-n) : static_cast<std::uint64_t>(n);
    GroupElement out;
    while (e) {
      if (e & 1u) out = mul(out, base);
      base = mul(base, base);
      e >>= 1u;
    }
    return out;
  }

  /// Word length with respect to the generating set of all non-identity
  /// factor letters (free product) or {±1} (integers, cyclic).
  std::int64_t length(const GroupElement& g) const {
    switch (kind_) {
      case GroupKind::Integer: return std::abs(value(g));
      case GroupKind::Cyclic: {
        const auto r = value(g);
        return std::min<std::int64_t>(r, n1_ - r);
      }
      case GroupKind::FreeProduct: return static_cast<std::int64_t>(g.word.size());
    }
    return 0;
  }

  /// Left-invariant distance |x⁻¹ y|.
  std::int64_t distance(const GroupElement& x, const GroupElement& y) const {
    if (kind_ == GroupKind::Integer) return std::abs(value(y) - value(x));
    return length(mul(inv(x), y));
  }

  /// Throws SpecMismatch if g is not a normal form of this spec.
  void validate(const GroupElement& g) const {
    switch (kind_) {
      case GroupKind::Integer:
        if (g.word.size() > 1 || (g.word.size() == 1 && g.word[0] == 0))
          throw Error(ErrorCode::SpecMismatch, "not an integer normal form");
        return;
      case GroupKind::Cyclic:
        if (g.word.size() > 1 || (g.word.size() == 1 && (g.word[0] <= 0 || g.word[0] >= n1_)))
          throw Error(ErrorCode::SpecMismatch, "not a residue normal form");
        return;
      case GroupKind::FreeProduct:
        for (std::size_t i = 0; i < g.word.size(); ++i) {
          const auto c = g.word[i];
          if (c < 1 || c > n1_ + n2_ - 2)
            throw Error(ErrorCode::SpecMismatch, "letter out of range");
          if (i > 0 && factor(c) == factor(g.word[i - 1]))
            throw Error(ErrorCode::SpecMismatch, "adjacent letters from one factor");
        }
        return;
    }
  }

  // ---- enumeration ------------------------------------------------------------

  /// Length-lexicographic order (length first, then generator order).
  bool enum_less(const GroupElement& x, const GroupElement& y) const {
    const auto lx = length(x), ly = length(y);
    if (lx != ly) return lx < ly;
    switch (kind_) {
      case GroupKind::Integer: return value(x) > value(y);  // +n before -n
      case GroupKind::Cyclic: return value(x) < value(y);
      case GroupKind::FreeProduct: return x.word < y.word;
    }
    return false;
  }

  std::uint64_t enumeration_index(const GroupElement& g) const {
    switch (kind_) {
      case GroupKind::Integer: {
        const auto v = value(g);
        return v > 0 ? static_cast<std::uint64_t>(2 * v - 1) : static_cast<std::uint64_t>(-2 * v);
      }
      case GroupKind::Cyclic: {
        const auto v = value(g);
        if (v == 0) return 0;
        const auto len = std::min<std::int64_t>(v, n1_ - v);
        if (2 * len == n1_) return static_cast<std::uint64_t>(n1_ - 1);
        return static_cast<std::uint64_t>(2 * len - (v == len ? 1 : 0));
      }
      case GroupKind::FreeProduct: {
        const std::size_t len = g.word.size();
        Count idx = 0;
        for (std::size_t l = 0; l < len; ++l) idx = add(idx, total_words(l));
        for (std::size_t i = 0; i < len; ++i) {
          const int prev = i == 0 ? -1 : factor(g.word[i - 1]);
          for (int c = 1; c < g.word[i]; ++c) {
            if (factor(c) == prev) continue;
            idx = add(idx, completions(len - i - 1, factor(c)));
          }
        }
        if (idx > static_cast<Count>(UINT64_MAX))
          throw std::overflow_error("enumeration index exceeds 64 bits");
        return static_cast<std::uint64_t>(idx);
      }
    }
    return 0;
  }

  GroupElement enumerate(std::uint64_t n) const {
    switch (kind_) {
      case GroupKind::Integer: {
        if (n == 0) return {};
        const auto k = static_cast<std::int64_t>((n + 1) / 2);
        return integer(n % 2 == 1 ? k : -k);
      }
      case GroupKind::Cyclic: {
        if (n >= static_cast<std::uint64_t>(n1_))
          throw std::out_of_range("index beyond cyclic group order");
        if (n == 0) return {};
        const auto k = static_cast<int>((n + 1) / 2);
        if (2 * k == n1_) return residue(k);
        return residue(n % 2 == 1 ? k : n1_ - k);
      }
      case GroupKind::FreeProduct: {
        Count rem = n;
        std::size_t len = 0;
        while (rem >= total_words(len)) rem -= total_words(len++);
        GroupElement out;
        for (std::size_t i = 0; i < len; ++i) {
          const int prev = i == 0 ? -1 : factor(out.word.back());
          for (int c = 1; c <= n1_ + n2_ - 2; ++c) {
            if (factor(c) == prev) continue;
            const Count block = completions(len - i - 1, factor(c));
            if (rem < block) {
              out.word.push_back(c);
              break;
            }
            rem -= block;
          }
        }
        return out;
      }
    }
    return {};
  }

  std::uint64_t ball_size(int r) const {
    switch (kind_) {
      case GroupKind::Integer: return 2 * static_cast<std::uint64_t>(r) + 1;
      case GroupKind::Cyclic:
        return std::min<std::uint64_t>(2 * static_cast<std::uint64_t>(r) + 1,
                                       static_cast<std::uint64_t>(n1_));
      case GroupKind::FreeProduct: {
        Count total = 0;
        for (int l = 0; l <= r; ++l) total = add(total, total_words(static_cast<std::size_t>(l)));
        return total > static_cast<Count>(UINT64_MAX) ? UINT64_MAX
                                                      : static_cast<std::uint64_t>(total);
      }
    }
    return 0;
  }

  /// All elements of word length ≤ r in enumeration order.
  Shape ball(int r) const {
    if (r < 0) return {};
    if (ball_size(r) > ball_cap_)
      throw Error(ErrorCode::BallTooLarge, "ball(" + std::to_string(r) + ") has " +
                                               std::to_string(ball_size(r)) + " elements");
    Shape out;
    if (kind_ != GroupKind::FreeProduct) {
      const auto n = ball_size(r);
      for (std::uint64_t i = 0; i < n; ++i) out.push_back(enumerate(i));
      return out;
    }
    out.push_back({});
    std::size_t layer_begin = 0;
    for (int l = 1; l <= r; ++l) {
      const std::size_t layer_end = out.size();
      for (std::size_t i = layer_begin; i < layer_end; ++i) {
        const int prev = out[i].word.empty() ? -1 : factor(out[i].word.back());
        for (int c = 1; c <= n1_ + n2_ - 2; ++c) {
          if (factor(c) == prev) continue;
          GroupElement g = out[i];
          g.word.push_back(c);
          out.push_back(std::move(g));
        }
      }
      layer_begin = layer_end;
    }
    return out;
  }

  // ---- cosets -----------------------------------------------------------------

  struct CosetSplit {
    GroupElement rep;
    GroupElement gamma;
  };

  /// g = rep · gamma with gamma ∈ Γ and rep the enumeration-least element of gΓ.
  CosetSplit coset_decompose(const GroupElement& g) const {
    switch (kind_) {
      case GroupKind::Integer:
        throw Error(ErrorCode::NoDesignatedSubgroup, "integer group has no finite Γ");
      case GroupKind::Cyclic: return {identity(), g};
      case GroupKind::FreeProduct: {
        if (!g.word.empty() && factor(g.word.back()) == 0) {
          GroupElement rep{{g.word.begin(), g.word.end() - 1}};
          return {std::move(rep), GroupElement{{g.word.back()}}};
        }
        return {g, identity()};
      }
    }
    return {};
  }

  // ---- serialization ------------------------------------------------------------

  /// Length-prefixed bytes of factor-tagged residues; injective per spec.
  std::string canonical_key(const GroupElement& g) const {
    std::string key;
    key.reserve(5 + 4 * g.word.size());
    key.push_back(static_cast<char>(kind_));
    append_u32(key, static_cast<std::uint32_t>(g.word.size()));
    for (auto c : g.word) append_u32(key, static_cast<std::uint32_t>(c));
    return key;
  }

  std::string to_string(const GroupElement& g) const {
    switch (kind_) {
      case GroupKind::Integer:
      case GroupKind::Cyclic: return std::to_string(value(g));
      case GroupKind::FreeProduct: {
        if (g.word.empty()) return "1";
        std::string s;
        for (auto c : g.word) {
          if (!s.empty()) s += ' ';
          s += factor(c) == 0 ? 'a' : 'b';
          s += '^' + std::to_string(power(c));
        }
        return s;
      }
    }
    return "?";
  }

  friend bool operator==(const GroupSpec& x, const GroupSpec& y) {
    return x.kind_ == y.kind_ && x.n1_ == y.n1_ && x.n2_ == y.n2_;
  }

  std::int64_t value(const GroupElement& g) const { return g.word.empty() ? 0 : g.word[0]; }

 private:
  using Count = unsigned __int128;

  GroupSpec(GroupKind k, int n1, int n2) : kind_(k), n1_(n1), n2_(n2) {}

  void require(GroupKind k) const {
    if (kind_ != k) throw Error(ErrorCode::SpecMismatch, "element constructor for " + name());
  }

  int factor(std::int32_t c) const { return c < n1_ ? 0 : 1; }
  int power(std::int32_t c) const { return c < n1_ ? c : c - (n1_ - 1); }
  std::int32_t make_letter(int f, int p) const { return f == 0 ? p : n1_ - 1 + p; }

  template <class Word>
  void push_letter(Word& w, std::int32_t c) const {
    if (!w.empty() && factor(w.back()) == factor(c)) {
      const int f = factor(c);
      const int n = f == 0 ? n1_ : n2_;
      const int p = (power(w.back()) + power(c)) % n;
      if (p == 0)
        w.pop_back();
      else
        w.back() = make_letter(f, p);
    } else {
      w.push_back(c);
    }
  }

  static Count add(Count a, Count b) {
    const Count s = a + b;
    return s < a ? ~Count{0} : s;
  }
  static Count mul_sat(Count a, Count b) {
    if (a != 0 && b > ~Count{0} / a) return ~Count{0};
    return a * b;
  }

  // Reduced words of length len whose first letter lies in factor f.
  Count words_starting(std::size_t len, int f) const {
    Count c = 1;
    int cur = f;
    for (std::size_t i = 0; i < len; ++i) {
      c = mul_sat(c, static_cast<Count>((cur == 0 ? n1_ : n2_) - 1));
      cur = 1 - cur;
    }
    return c;
  }
  // Completions of `remaining` letters after a letter of factor f.
  Count completions(std::size_t remaining, int f) const {
    return remaining == 0 ? Count{1} : words_starting(remaining, 1 - f);
  }
  Count total_words(std::size_t len) const {
    if (len == 0) return 1;
    return add(words_starting(len, 0), words_starting(len, 1));
  }

  static void append_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }

  GroupKind kind_;
  int n1_;
  int n2_;
  std::size_t ball_cap_ = kDefaultBallCap;
};

/// Elementwise product set {x y : x ∈ xs, y ∈ ys}, deduplicated, enumeration order.
inline Shape product_set(const GroupSpec& spec, const Shape& xs, const Shape& ys) {
  std::unordered_set<GroupElement, GroupElementHash> seen;
  Shape out;
  for (const auto& x : xs)
    for (const auto& y : ys) {
      auto p = spec.mul(x, y);
      if (seen.insert(p).second) out.push_back(std::move(p));
    }
  std::sort(out.begin(), out.end(),
            [&](const auto& p, const auto& q) { return spec.enum_less(p, q); });
  return out;
}

inline Shape inverse_set(const GroupSpec& spec, const Shape& xs) {
  Shape out;
  for (const auto& x : xs) out.push_back(spec.inv(x));
  std::sort(out.begin(), out.end(),
            [&](const auto& p, const auto& q) { return spec.enum_less(p, q); });
  return out;
}

struct TranslatePair {
  bool found = false;
  GroupElement h1;
  GroupElement h2;
};

/// Searches h1, h2 ∈ large with h_i · small⁻¹small ⊆ large and the two translates disjoint.
/// Pairs of the form (h⁻¹, h) are tried first, then all pairs in enumeration order.
inline TranslatePair verify_disjoint_translates(const GroupSpec& spec, const Shape& small,
                                                const Shape& large) {
  const Shape diff = product_set(spec, inverse_set(spec, small), small);
  const std::unordered_set<GroupElement, GroupElementHash> big(large.begin(), large.end());
  Shape ordered = large;
  std::sort(ordered.begin(), ordered.end(),
            [&](const auto& p, const auto& q) { return spec.enum_less(p, q); });
  std::vector<std::vector<GroupElement>> translates;
  Shape candidates;
  for (const auto& h : ordered) {
    std::vector<GroupElement> t;
    bool inside = true;
    for (const auto& d : diff) {
      auto p = spec.mul(h, d);
      if (!big.count(p)) {
        inside = false;
        break;
      }
      t.push_back(std::move(p));
    }
    if (inside) {
      candidates.push_back(h);
      translates.push_back(std::move(t));
    }
  }
  const auto disjoint = [&](std::size_t i, std::size_t j) {
    std::unordered_set<GroupElement, GroupElementHash> s(translates[i].begin(),
                                                         translates[i].end());
    for (const auto& p : translates[j])
      if (s.count(p)) return false;
    return true;
  };
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto hinv = spec.inv(candidates[i]);
    for (std::size_t j = 0; j < candidates.size(); ++j)
      if (candidates[j] == hinv && i != j && disjoint(j, i))
        return {true, candidates[j], candidates[i]};
  }
  for (std::size_t i = 0; i < candidates.size(); ++i)
    for (std::size_t j = i + 1; j < candidates.size(); ++j)
      if (disjoint(i, j)) return {true, candidates[i], candidates[j]};
  return {};
}

}  // namespace bshift
