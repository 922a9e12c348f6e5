#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bshift/error.hpp"
#include "bshift/group.hpp"
#include "bshift/partial.hpp"
#include "bshift/probvec.hpp"
#include "bshift/symbol.hpp"

namespace bshift {

struct Seed128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  friend bool operator==(const Seed128&, const Seed128&) = default;

  /// The i-th member of a seed family; distinct i give distinct seeds.
  Seed128 derive(std::uint64_t i) const { return Seed128{hi ^ (i * 0x9E3779B97F4A7C15ull), lo + i}; }

  static Seed128 parse(std::string_view hex) {
    if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
    if (hex.empty() || hex.size() > 32) throw Error(ErrorCode::InvalidConfig, "seed must be 1-32 hex digits");
    Seed128 s;
    for (char c : hex) {
      int d;
      if (c >= '0' && c <= '9') d = c - '0';
      else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
      else throw Error(ErrorCode::InvalidConfig, "bad hex digit in seed");
      s.hi = (s.hi << 4) | (s.lo >> 60);
      s.lo = (s.lo << 4) | static_cast<std::uint64_t>(d);
    }
    return s;
  }

  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(32, '0');
    for (int i = 0; i < 16; ++i) {
      out[15 - i] = digits[(hi >> (4 * i)) & 0xFu];
      out[31 - i] = digits[(lo >> (4 * i)) & 0xFu];
    }
    return out;
  }
};

namespace prf {

inline std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xFF51AFD7ED558CCDull;
  k ^= k >> 33;
  k *= 0xC4CEB9FE1A85EC53ull;
  k ^= k >> 33;
  return k;
}

inline std::uint64_t rotl(std::uint64_t x, int r) { return (x << r) | (x >> (64 - r)); }

/// Keyed 128-bit mixing state. Blocks are absorbed in order; finish() is const
/// so a state can be reused as the common prefix of many keys.
class Absorber {
 public:
  explicit Absorber(const Seed128& seed)
      : h1_(seed.hi ^ 0x243F6A8885A308D3ull), h2_(seed.lo ^ 0x13198A2E03707344ull) {}

  void absorb(std::uint64_t block) {
    h1_ = fmix64(h1_ ^ block) + h2_;
    h2_ = fmix64(h2_ + rotl(block, 31)) ^ rotl(h1_, 17);
  }

  std::uint64_t finish(std::uint64_t last) const {
    Absorber a = *this;
    a.absorb(last ^ 0x8000000000000000ull);
    return fmix64(a.h1_ ^ fmix64(a.h2_ + 0xA4093822299F31D0ull));
  }

 private:
  std::uint64_t h1_;
  std::uint64_t h2_;
};

/// Bytes of a canonical key ahead of its 4-byte units: kind tag and word length.
inline constexpr std::size_t kKeyHeader = 5;

inline std::uint64_t header_block(std::uint64_t header_bytes, std::size_t key_size) {
  return header_bytes | (static_cast<std::uint64_t>(key_size) << 40);
}

/// Keyed mixing function over a byte key. The 4-byte units after the header are
/// absorbed first and the header last, so keys of words sharing a prefix share
/// the absorbed state of that prefix.
inline std::uint64_t evaluate(const Seed128& seed, std::string_view key) {
  Absorber a(seed);
  std::size_t i = std::min(kKeyHeader, key.size());
  for (; i + 4 <= key.size(); i += 4) {
    std::uint32_t unit;
    std::memcpy(&unit, key.data() + i, 4);
    a.absorb(unit);
  }
  std::uint64_t rest = 0;
  for (std::size_t j = 0; i + j < key.size(); ++j)
    rest |= static_cast<std::uint64_t>(static_cast<unsigned char>(key[i + j])) << (8 * j);
  if (i < key.size()) a.absorb(rest | (std::uint64_t{1} << 32));
  std::uint64_t header = 0;
  for (std::size_t j = 0; j < std::min(kKeyHeader, key.size()); ++j)
    header |= static_cast<std::uint64_t>(static_cast<unsigned char>(key[j])) << (8 * j);
  return a.finish(header_block(header, key.size()));
}

inline double to_uniform(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

/// Uniform deviate in [0, 1) from the top 53 bits.
inline double uniform(const Seed128& seed, std::string_view key) { return to_uniform(evaluate(seed, key)); }

}  // namespace prf

/// Fixed-capacity word buffer for short products.
class SmallWord {
 public:
  static constexpr std::size_t kCapacity = 48;
  bool empty() const { return n_ == 0; }
  std::size_t size() const { return n_; }
  std::int32_t& back() { return data_[n_ - 1]; }
  const std::int32_t& back() const { return data_[n_ - 1]; }
  std::int32_t operator[](std::size_t i) const { return data_[i]; }
  void push_back(std::int32_t c) { data_[n_++] = c; }
  void pop_back() { --n_; }

 private:
  std::int32_t data_[kCapacity];
  std::size_t n_ = 0;
};

/// A point of L^G realized lazily: the value at g is an inverse-CDF sample of the
/// base at PRF(seed, key(offset⁻¹ g)), so the view represents offset · x₀.
class LazyConfiguration {
 public:
  LazyConfiguration(GroupSpec spec, std::shared_ptr<const ProbVector> base, Seed128 seed)
      : spec_(std::move(spec)), base_(std::move(base)), seed_(seed) {
    double c = 0.0;
    for (const auto& a : base_->atoms()) {
      c += a.mass;
      cumulative_.push_back(c);
    }
  }
  LazyConfiguration(GroupSpec spec, const ProbVector& base, Seed128 seed)
      : LazyConfiguration(std::move(spec), std::make_shared<const ProbVector>(base), seed) {}

  const GroupSpec& spec() const { return spec_; }
  const ProbVector& base() const { return *base_; }
  const std::shared_ptr<const ProbVector>& base_ptr() const { return base_; }
  const Seed128& seed() const { return seed_; }
  const GroupElement& offset() const { return offset_; }

  Symbol value_at(const GroupElement& g) const {
    const auto root = offset_.word.empty() ? g : spec_.mul(spec_.inv(offset_), g);
    return symbol_for(prf::uniform(seed_, spec_.canonical_key(root)));
  }

  /// A position p with the PRF state of its key prefix, for fast reads at p·w
  /// with short w. Only the last `depth` prefix states are kept.
  struct Prefix {
    GroupElement root;
    std::size_t first = 0;
    std::vector<prf::Absorber> states;
  };

  Prefix prefix(const GroupElement& p, std::size_t depth = 16) const {
    Prefix out;
    out.root = offset_.word.empty() ? p : spec_.mul(spec_.inv(offset_), p);
    const auto& w = out.root.word;
    out.first = w.size() > depth ? w.size() - depth : 0;
    prf::Absorber a(seed_);
    for (std::size_t i = 0; i < out.first; ++i) a.absorb(static_cast<std::uint32_t>(w[i]));
    out.states.push_back(a);
    for (std::size_t i = out.first; i < w.size(); ++i) {
      a.absorb(static_cast<std::uint32_t>(w[i]));
      out.states.push_back(a);
    }
    return out;
  }

  /// The value at p·w; equal to value_at(p·w).
  Symbol value_at(const Prefix& pre, const GroupElement& w) const {
    const auto& word = pre.root.word;
    const std::size_t k = std::min(w.word.size() + 1, word.size());
    if (spec_.kind() != GroupKind::FreeProduct || word.size() - k < pre.first ||
        k + w.word.size() > SmallWord::kCapacity)
      return symbol_for(prf::uniform(seed_, spec_.canonical_key(spec_.mul(pre.root, w))));
    // reduction of p·w consumes at most |w| letters of p and merges one more
    SmallWord t;
    for (std::size_t i = word.size() - k; i < word.size(); ++i) t.push_back(word[i]);
    for (auto c : w.word) spec_.append_letter(t, c);
    prf::Absorber a = pre.states[word.size() - k - pre.first];
    for (std::size_t i = 0; i < t.size(); ++i) a.absorb(static_cast<std::uint32_t>(t[i]));
    const auto len = static_cast<std::uint32_t>(word.size() - k + t.size());
    const std::uint64_t header = static_cast<std::uint64_t>(static_cast<unsigned char>(spec_.kind())) |
                                 (static_cast<std::uint64_t>(len) << 8);
    return symbol_for(prf::to_uniform(a.finish(prf::header_block(header, prf::kKeyHeader + 4 * len))));
  }

  Partial<Symbol> at(const Prefix& pre, const GroupElement& w) const { return value_at(pre, w); }

  Partial<Symbol> at(const GroupElement& g) const { return value_at(g); }

  /// The view h · x; composition is shift(shift(x, h1), h2) = shift(x, h2 h1).
  LazyConfiguration shifted(const GroupElement& h) const {
    LazyConfiguration out = *this;
    out.offset_ = spec_.mul(h, offset_);
    return out;
  }

  Pattern window(const Shape& shape) const {
    Pattern out;
    out.reserve(shape.size());
    for (const auto& g : shape) out.push_back(value_at(g));
    return out;
  }

 private:
  Symbol symbol_for(double u) const {
    const auto& atoms = base_->atoms();
    // half-open intervals [c_{i-1}, c_i); rounding slack goes to the last atom
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                           atoms.size() - 1);
    return atoms[idx].symbol;
  }

  GroupSpec spec_;
  std::shared_ptr<const ProbVector> base_;
  Seed128 seed_;
  GroupElement offset_;
  std::vector<double> cumulative_;
};

inline LazyConfiguration shift(const LazyConfiguration& x, const GroupElement& h) {
  return x.shifted(h);
}

inline Pattern window(const LazyConfiguration& x, const Shape& shape) { return x.window(shape); }

/// Type-erased, possibly partial symbol field on G.
class AnyField {
 public:
  using Fn = std::function<Partial<Symbol>(const GroupElement&)>;

  AnyField(GroupSpec spec, Fn fn) : spec_(std::move(spec)), fn_(std::move(fn)) {}
  explicit AnyField(const LazyConfiguration& x)
      : spec_(x.spec()), fn_([x](const GroupElement& g) { return Partial<Symbol>(x.value_at(g)); }) {}

  const GroupSpec& spec() const { return spec_; }
  Partial<Symbol> at(const GroupElement& g) const { return fn_(g); }

  /// Pattern on the shape, or the first reason some cell is unresolved.
  Partial<Pattern> window(const Shape& shape) const {
    Pattern out;
    out.reserve(shape.size());
    for (const auto& g : shape) {
      auto s = fn_(g);
      if (!s) return s.reason();
      out.push_back(*s);
    }
    return out;
  }

  AnyField shifted(const GroupElement& h) const {
    auto fn = fn_;
    auto spec = spec_;
    const auto hinv = spec_.inv(h);
    return AnyField(spec_, [fn, spec, hinv](const GroupElement& g) { return fn(spec.mul(hinv, g)); });
  }

 private:
  GroupSpec spec_;
  Fn fn_;
};

}  // namespace bshift
