#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>
#include <absl/container/node_hash_map.h>

#include "bshift/error.hpp"
#include "bshift/group.hpp"
#include "bshift/partial.hpp"
#include "bshift/symbol.hpp"

// Site convention: the point g·z of the orbit of z is identified with the site
// q = g⁻¹, so (g·z)(1) = z(q). Acting by h moves a site q to q·h⁻¹; the
// F-neighbourhood of a site q is q·F⁻¹ and its Γ-orbit is the coset qΓ.

namespace bshift {

// ---- generic greedy marker ---------------------------------------------------

struct MarkerVerdict {
  bool in_d = false;
  /// Round in which the site was admitted or removed; 0 for sites outside Y.
  int round = 0;
};

/// Round-based greedy selection of a maximal F-separated subset D of Y.
///
/// Round 1 admits the Y-sites that are priority-minimal among the live Y-sites
/// of their neighbourhood; admitted sites remove their neighbourhoods, and the
/// scan repeats. A site's fate is computed recursively from its lower-priority
/// neighbours, so only the part of Y it depends on is ever examined.
template <class Site, class Hash = std::hash<Site>>
class GreedyMarker {
 public:
  using InY = std::function<Partial<bool>(const Site&)>;
  using Neighbors = std::function<Partial<std::vector<Site>>(const Site&)>;
  /// Negative, zero or positive like a three-way comparison; zero is a tie.
  using Compare = std::function<Partial<int>(const Site&, const Site&)>;

  GreedyMarker(InY in_y, Neighbors neighbors, Compare compare)
      : in_y_(std::move(in_y)), neighbors_(std::move(neighbors)), compare_(std::move(compare)) {}

  Partial<MarkerVerdict> verdict(const Site& p) {
    if (auto it = memo_.find(p); it != memo_.end()) return it->second;
    auto v = compute(p);
    memo_.emplace(p, v);
    return v;
  }

  Partial<bool> contains(const Site& p) {
    return verdict(p).map([](const MarkerVerdict& v) { return v.in_d; });
  }

 private:
  Partial<MarkerVerdict> compute(const Site& p) {
    const auto y = in_y_(p);
    if (!y) return y.reason();
    if (!*y) return MarkerVerdict{false, 0};
    const auto nb = neighbors_(p);
    if (!nb) return nb.reason();
    int admitted_round = 0;
    int removed_max = 0;
    std::optional<Unresolved> pending;
    for (const auto& q : *nb) {
      const auto qy = in_y_(q);
      if (!qy) {
        pending = qy.reason();
        continue;
      }
      if (!*qy) continue;
      const auto c = compare_(q, p);
      if (!c) {
        pending = c.reason();
        continue;
      }
      if (*c == 0) {
        pending = Unresolved::TieUnresolved;
        continue;
      }
      if (*c > 0) continue;
      const auto v = verdict(q);
      if (!v) {
        pending = v.reason();
        continue;
      }
      if (v->in_d) {
        admitted_round = admitted_round == 0 ? v->round : std::min(admitted_round, v->round);
      } else {
        removed_max = std::max(removed_max, v->round);
      }
    }
    if (pending) return *pending;
    if (admitted_round > 0) return MarkerVerdict{false, admitted_round};
    return MarkerVerdict{true, removed_max + 1};
  }

  InY in_y_;
  Neighbors neighbors_;
  Compare compare_;
  std::unordered_map<Site, Partial<MarkerVerdict>, Hash> memo_;
};

namespace detail {

/// Symbol order for priorities: label symbols by id, * last.
inline int compare_symbols(Symbol a, Symbol b) { return a < b ? -1 : (a > b ? 1 : 0); }

/// Lexicographic comparison of the patterns z(p·s) and z(q·s), s running over
/// `shape` in order. Zero means the patterns agree on the whole shape.
template <class Field>
Partial<int> compare_site_patterns(const Field& z, const GroupSpec& spec, const GroupElement& p,
                                   const GroupElement& q, const Shape& shape) {
  for (const auto& s : shape) {
    const auto a = z.at(spec.mul(p, s));
    if (!a) return a.reason();
    const auto b = z.at(spec.mul(q, s));
    if (!b) return b.reason();
    if (const int c = compare_symbols(*a, *b); c != 0) return c;
  }
  return 0;
}

template <class Field, bool Prefixed>
struct PrefixOf {
  struct type {};
};

template <class Field>
struct PrefixOf<Field, true> {
  using type = decltype(std::declval<const Field&>().prefix(std::declval<const GroupElement&>()));
};

}  // namespace detail

/// Greedy marker on the sites of G: decides whether the site g belongs to the
/// maximal F-separated subset of {q : y_test(z, q)}, with priority given by the
/// lexicographic order of the patterns z(q·s), s ∈ priority_shape.
///
/// Sites farther than `window - priority_radius` from g are out of the window.
template <class Field, class YTest>
Partial<bool> greedy_marker(YTest y_test, const Shape& f, const Field& z, const GroupElement& g,
                            int window, const Shape& priority_shape, int priority_radius) {
  const GroupSpec& spec = z.spec();
  const auto f_inv = inverse_set(spec, f);
  const auto in_window = [&](const GroupElement& q) {
    return spec.distance(g, q) + priority_radius <= window;
  };
  GreedyMarker<GroupElement, GroupElementHash> marker(
      [&](const GroupElement& q) -> Partial<bool> {
        if (!in_window(q)) return Unresolved::WindowExhausted;
        return y_test(z, q);
      },
      [&](const GroupElement& q) -> Partial<std::vector<GroupElement>> {
        std::vector<GroupElement> out;
        for (const auto& h : f_inv) {
          auto n = spec.mul(q, h);
          if (n != q) out.push_back(std::move(n));
        }
        return out;
      },
      [&](const GroupElement& a, const GroupElement& b) {
        return detail::compare_site_patterns(z, spec, a, b, priority_shape);
      });
  return marker.contains(g);
}

// ---- Γ-orbit selector V --------------------------------------------------------

/// For the coset gΓ: nullopt if it is not labelled *, otherwise the index i of
/// the site g·γ_i that is marked (lexicographically least pattern over
/// `shape`). The comparison is lazy and stops at the first distinguishing cell.
template <class Field>
Partial<std::optional<int>> coset_mark(const Field& z, const GroupSpec& spec, const GroupElement& g,
                                       const Shape& shape) {
  const auto s = z.at(g);
  if (!s) return s.reason();
  if (*s != kStar) return std::optional<int>{};
  const auto gammas = spec.gamma_elements();
  std::vector<GroupElement> sites;
  for (const auto& gamma : gammas) sites.push_back(spec.mul(g, gamma));
  std::vector<int> alive(gammas.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = static_cast<int>(i);
  std::vector<Symbol> vals(gammas.size());
  for (const auto& cell : shape) {
    Symbol best = kStar;
    bool first = true;
    for (int i : alive) {
      const auto v = z.at(spec.mul(sites[static_cast<std::size_t>(i)], cell));
      if (!v) return v.reason();
      vals[static_cast<std::size_t>(i)] = *v;
      if (first || *v < best) best = *v;
      first = false;
    }
    std::vector<int> next;
    for (int i : alive)
      if (vals[static_cast<std::size_t>(i)] == best) next.push_back(i);
    alive = std::move(next);
    if (alive.size() == 1) break;
  }
  if (alive.size() > 1) return Unresolved::TieUnresolved;
  // the coset rep of g is not g itself in general; report relative to g
  return std::optional<int>{alive.front()};
}

/// Whether the site g is the marked site of its coset, i.e. g⁻¹·z ∈ V.
template <class Field>
Partial<bool> select_V(const Field& z, const GroupElement& g, int priority_radius, int window) {
  if (1 + priority_radius > window) return Unresolved::WindowExhausted;
  const auto& spec = z.spec();
  const auto mark = coset_mark(z, spec, g, spec.ball(priority_radius));
  if (!mark) return mark.reason();
  return mark->has_value() && **mark == 0;
}

// ---- nested levels and T -------------------------------------------------------

struct MarkerParams {
  /// Half-lengths r_1 < r_2 < ... of the segments F_n = {u^j : |j| ≤ r_n}.
  std::vector<int> radii{10, 55, 250};
  /// Radius of the ball whose pattern orders sites.
  int priority_radius = 5;
  /// Reads of z stay within this word distance of the engine's centre.
  int window = 1800;
};

/// Level structure on FreeProduct groups along the axis u = ab.
///
/// F_0 = {1} and F_n = {u^j : |j| ≤ r_n}; every F_{n+1} must contain two disjoint
/// translates of F_n⁻¹F_n = {u^j : |j| ≤ 2 r_n}, which is checked at construction.
class MarkerLevels {
 public:
  MarkerLevels(GroupSpec spec, MarkerParams params)
      : spec_(std::move(spec)), params_(std::move(params)) {
    if (spec_.kind() != GroupKind::FreeProduct)
      throw Error(ErrorCode::SpecMismatch, "marker levels need a free product");
    if (params_.radii.empty()) throw Error(ErrorCode::InvalidConfig, "no marker levels");
    if (params_.priority_radius < 1)
      throw Error(ErrorCode::InvalidConfig, "priority radius must be positive");
    axis_ = spec_.mul(spec_.a(1), spec_.b(1));
    axis_inv_ = spec_.inv(axis_);
    priority_shape_ = spec_.ball(params_.priority_radius);
    build_cell_table();
    Shape prev{spec_.identity()};
    for (std::size_t n = 0; n < params_.radii.size(); ++n) {
      const auto seg = segment(static_cast<int>(n) + 1);
      if (!verify_disjoint_translates(spec_, prev, seg).found)
        throw Error(ErrorCode::InvalidConfig,
                    "F_" + std::to_string(n + 1) + " (r=" + std::to_string(params_.radii[n]) +
                        ") lacks two disjoint translates of F_" + std::to_string(n) +
                        "^-1 F_" + std::to_string(n));
      prev = seg;
    }
    if (reach() < 2 * radius(levels()))
      throw Error(ErrorCode::InvalidConfig,
                  "window " + std::to_string(params_.window) + " too small for r_N=" +
                      std::to_string(radius(levels())));
  }

  static MarkerParams default_params() { return MarkerParams{}; }

  const GroupSpec& spec() const { return spec_; }
  const MarkerParams& params() const { return params_; }
  int levels() const { return static_cast<int>(params_.radii.size()); }
  /// r_n, with r_0 = 0.
  int radius(int n) const { return n == 0 ? 0 : params_.radii[static_cast<std::size_t>(n - 1)]; }
  const GroupElement& axis() const { return axis_; }
  const GroupElement& axis_inverse() const { return axis_inv_; }
  const Shape& priority_shape() const { return priority_shape_; }

  /// F_n in enumeration order.
  Shape segment(int n) const {
    Shape out;
    for (int j = -radius(n); j <= radius(n); ++j) out.push_back(spec_.pow(axis_, j));
    std::sort(out.begin(), out.end(),
              [&](const auto& p, const auto& q) { return spec_.enum_less(p, q); });
    return out;
  }

  /// The position c·u^j·γ_r·s_k written as c·u^{j+shift}·rest, with u-prefixes
  /// pulled into the line offset so that equal positions share one key.
  struct LineCell {
    std::int64_t shift;
    std::uint32_t rest;
  };
  const LineCell& line_cell(int r, std::size_t k) const {
    return cells_[static_cast<std::size_t>(r) * priority_shape_.size() + k];
  }
  const GroupElement& rest(std::uint32_t id) const { return rests_[id]; }
  std::size_t rest_count() const { return rests_.size(); }

  /// Largest |j| with c·u^j usable from a centre c: every read of z made on
  /// behalf of that site, including the coset marking, stays inside the window.
  std::int64_t reach() const { return (params_.window - 1 - params_.priority_radius) / 2; }

 private:
  void build_cell_table() {
    std::unordered_map<GroupElement, std::uint32_t, GroupElementHash> ids;
    for (const auto& gamma : spec_.gamma_elements()) {
      for (const auto& cell : priority_shape_) {
        auto w = spec_.mul(gamma, cell);
        std::int64_t shift = 0;
        for (bool moved = true; moved;) {
          moved = false;
          for (const int dir : {1, -1}) {
            auto t = spec_.mul(dir > 0 ? axis_inv_ : axis_, w);
            if (spec_.length(t) + 2 == spec_.length(w)) {
              w = std::move(t);
              shift += dir;
              moved = true;
            }
          }
        }
        const auto [it, fresh] = ids.emplace(w, static_cast<std::uint32_t>(rests_.size()));
        if (fresh) rests_.push_back(w);
        cells_.push_back({shift, it->second});
      }
    }
  }

  GroupSpec spec_;
  MarkerParams params_;
  GroupElement axis_;
  GroupElement axis_inv_;
  Shape priority_shape_;
  std::vector<LineCell> cells_;
  Shape rests_;
};

/// Windowed evaluation of V, the levels D_n, the link maps and T along the axis
/// line through a centre site c. Line offsets j stand for the sites c·u^j.
///
/// D_0 = V. D_{n+1} is the greedy maximal {u^j : |j| ≤ 2 r_{n+1}}-separated subset
/// of Y_{n+1} = {d ∈ D_n : another D_n point lies within r_{n+1} of d}. Every
/// d ∈ D_{n+1} therefore keeps itself and one more D_n point in F_{n+1}-range,
/// so the link maps are at least two-to-one. A D_n point links to the D_{n+1}
/// point in F_{n+1}-range if there is one, else to the first D_{n+1} point in
/// the enumeration of F_{n+1}⁻¹F_{n+1}, else (off the covered set) to the first
/// one along the axis in the same order.
///
/// Memo tables make an engine single-threaded; engines are cheap to create.
template <class Field>
class MarkerEngine {
 public:
  using Offset = std::int64_t;

  MarkerEngine(const MarkerLevels& levels, Field z, GroupElement center)
      : levels_(&levels), z_(std::move(z)), center_(std::move(center)),
        d_memo_(static_cast<std::size_t>(levels.levels()) + 1),
        link_memo_(static_cast<std::size_t>(levels.levels())),
        members_memo_(static_cast<std::size_t>(levels.levels()) + 1),
        gammas_(levels.spec().gamma_elements()) {
    if (gammas_.size() > 64) throw Error(ErrorCode::InvalidConfig, "|Gamma| above 64");
  }

  const MarkerLevels& levels() const { return *levels_; }
  const Field& field() const { return z_; }
  const GroupElement& center() const { return center_; }
  bool in_window(Offset j) const { return std::abs(j) <= levels_->reach(); }

  /// The site c·u^j.
  const GroupElement& site(Offset j) {
    if (auto it = sites_.find(j); it != sites_.end()) return it->second;
    const auto& spec = levels_->spec();
    GroupElement s;
    if (j == 0) {
      s = center_;
    } else {
      const Offset step = j > 0 ? 1 : -1;
      s = spec.mul(site(j - step), j > 0 ? levels_->axis() : levels_->axis_inverse());
    }
    return sites_.emplace(j, std::move(s)).first->second;
  }

  /// Group element t with T^n(point of v) = t · (point of v) when w = T^n v.
  GroupElement cocycle(Offset v, Offset w) const {
    return levels_->spec().pow(levels_->axis(), v - w);
  }

  Partial<bool> in_v(Offset j) { return in_d(0, j); }

  Partial<bool> in_d(int n, Offset j) {
    if (!in_window(j)) return Unresolved::WindowExhausted;
    auto& memo = d_memo_[static_cast<std::size_t>(n)];
    if (auto it = memo.find(j); it != memo.end()) return it->second;
    const auto v = n == 0 ? compute_v(j) : compute_d(n, j);
    memo.emplace(j, v);
    return v;
  }

  /// Whether the D_{n-1} point j has another D_{n-1} point within r_n.
  Partial<bool> in_y(int n, Offset j) {
    const auto base = in_d(n - 1, j);
    if (!base || !*base) return base;
    const int r = levels_->radius(n);
    std::optional<Unresolved> pending;
    for (int k = 1; k <= r; ++k)
      for (const Offset q : {j - k, j + k}) {
        const auto d = in_d(n - 1, q);
        if (!d) {
          pending = d.reason();
        } else if (*d) {
          return true;
        }
      }
    if (pending) return *pending;
    return false;
  }

  /// ℓ_n^{n+1}(j) for j ∈ D_n: the nearest D_{n+1} point, ties to the site behind.
  Partial<Offset> link(int n, Offset j) {
    auto& memo = link_memo_[static_cast<std::size_t>(n)];
    if (auto it = memo.find(j); it != memo.end()) return it->second;
    const auto v = compute_link(n, j);
    memo.emplace(j, v);
    return v;
  }

  /// W_n(d) for d ∈ D_n (n ≥ 1): the D_{n-1} points linking to d, ordered by the
  /// enumeration of the group elements g with g·d = e, i.e. g = u^{d-e}.
  Partial<std::vector<Offset>> members(int n, Offset d) {
    auto& memo = members_memo_[static_cast<std::size_t>(n)];
    if (auto it = memo.find(d); it != memo.end()) return it->second;
    const auto v = compute_members(n, d);
    memo.emplace(d, v);
    return v;
  }

  /// ℓ_0^n(v).
  Partial<Offset> representative(int n, Offset v) {
    Offset cur = v;
    for (int k = 0; k < n; ++k) {
      const auto l = link(k, cur);
      if (!l) return l.reason();
      cur = *l;
    }
    return cur;
  }

  /// v ∈ B_n: v is the last point of its E_n-class.
  Partial<bool> in_b(int n, Offset v) {
    Offset cur = v;
    for (int k = 1; k <= n; ++k) {
      const auto d = link(k - 1, cur);
      if (!d) return d.reason();
      const auto w = members(k, *d);
      if (!w) return w.reason();
      if (w->back() != cur) return false;
      cur = *d;
    }
    return true;
  }

  /// One step of T (dir = +1) or T⁻¹ (dir = -1) from the V point v.
  Partial<Offset> step(Offset v, int dir) {
    const auto inv = in_v(v);
    if (!inv) return inv.reason();
    if (!*inv) throw Error(ErrorCode::NotInV, "site is not in V");
    Offset cur = v;
    for (int n = 1; n <= levels_->levels(); ++n) {
      const auto d = link(n - 1, cur);
      if (!d) return d.reason();
      const auto w = members(n, *d);
      if (!w) return w.reason();
      const auto pos = static_cast<std::size_t>(std::find(w->begin(), w->end(), cur) - w->begin());
      if (dir > 0 && pos + 1 < w->size()) return (*w)[pos + 1];  // a_{n-1}^0 is the identity
      if (dir < 0 && pos > 0) {
        Offset e = (*w)[pos - 1];
        for (int k = n - 1; k >= 1; --k) {
          const auto lower = members(k, e);
          if (!lower) return lower.reason();
          e = lower->back();
        }
        return e;
      }
      cur = *d;
    }
    return Unresolved::TopLevelBoundary;
  }

  /// T^n(v) as a line offset.
  Partial<Offset> power(Offset v, std::int64_t n) {
    Offset cur = v;
    const int dir = n >= 0 ? 1 : -1;
    for (std::int64_t i = 0; i < std::abs(n); ++i) {
      const auto next = step(cur, dir);
      if (!next) return next.reason();
      cur = *next;
    }
    return cur;
  }

  /// t(n, v).
  Partial<GroupElement> t_power(Offset v, std::int64_t n) {
    return power(v, n).map([&](Offset w) { return cocycle(v, w); });
  }

  /// The E_n-class of d ∈ D_n, as line offsets in T-order.
  Partial<std::vector<Offset>> e_class(int n, Offset d) {
    if (n == 0) return std::vector<Offset>{d};
    const auto w = members(n, d);
    if (!w) return w.reason();
    std::vector<Offset> out;
    for (const Offset e : *w) {
      const auto sub = e_class(n - 1, e);
      if (!sub) return sub.reason();
      out.insert(out.end(), sub->begin(), sub->end());
    }
    return out;
  }

  struct Stats {
    std::size_t sites = 0;
    std::size_t reads = 0;
  };
  /// Sites whose V-membership was evaluated and distinct field reads so far.
  Stats stats() const { return {d_memo_[0].size(), reads_.size()}; }

  /// Whether some D_n point lies in F_n⁻¹F_n-range of j.
  Partial<bool> covered(int n, Offset j) {
    const int r = 2 * levels_->radius(n);
    std::optional<Unresolved> pending;
    for (Offset k = -r; k <= r; ++k) {
      const auto d = in_d(n, j + k);
      if (!d) {
        pending = d.reason();
      } else if (*d) {
        return true;
      }
    }
    if (pending) return *pending;
    return false;
  }

 private:
  /// z(c·u^j·γ_r·s_k) for the k-th cell s_k of the priority shape, read once.
  Partial<Symbol> read(Offset j, int r, std::size_t k) {
    const auto& lc = levels_->line_cell(r, k);
    const Offset at = j + lc.shift;
    const auto key = at * static_cast<Offset>(levels_->rest_count()) + lc.rest;
    if (auto it = reads_.find(key); it != reads_.end()) return it->second;
    Partial<Symbol> v = kStar;
    if constexpr (kPrefixed) {
      auto pit = prefixes_.find(at);
      if (pit == prefixes_.end()) pit = prefixes_.emplace(at, z_.prefix(site(at))).first;
      v = z_.at(pit->second, levels_->rest(lc.rest));
    } else {
      v = z_.at(levels_->spec().mul(site(at), levels_->rest(lc.rest)));
    }
    reads_.emplace(key, v);
    return v;
  }

  // Same rule as coset_mark, through the read cache.
  Partial<bool> compute_v(Offset j) {
    const auto s = read(j, 0, 0);
    if (!s) return s.reason();
    if (*s != kStar) return false;
    const int order = static_cast<int>(gammas_.size());
    std::uint64_t alive = order == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << order) - 1;
    const auto cells = levels_->priority_shape().size();
    for (std::size_t k = 0; k < cells && (alive & (alive - 1)) != 0; ++k) {
      Symbol best = kStar;
      std::uint64_t winners = 0;
      for (int r = 0; r < order; ++r) {
        if (!(alive >> r & 1)) continue;
        const auto v = read(j, r, k);
        if (!v) return v.reason();
        if (*v < best || winners == 0) {
          best = *v;
          winners = 0;
        }
        if (*v == best) winners |= std::uint64_t{1} << r;
      }
      alive = winners;
      if (!(alive & 1)) return false;
    }
    if ((alive & (alive - 1)) != 0) return Unresolved::TieUnresolved;
    return (alive & 1) != 0;
  }

  Partial<int> compare(Offset p, Offset q) {
    const auto cells = levels_->priority_shape().size();
    for (std::size_t k = 0; k < cells; ++k) {
      const auto a = read(p, 0, k);
      if (!a) return a.reason();
      const auto b = read(q, 0, k);
      if (!b) return b.reason();
      if (const int c = detail::compare_symbols(*a, *b); c != 0) return c;
    }
    return 0;
  }

  Partial<bool> compute_d(int n, Offset j) {
    const auto y = in_y(n, j);
    if (!y || !*y) return y;
    const int r = 2 * levels_->radius(n);
    std::optional<Unresolved> pending;
    // nearest neighbours first so that an admitted neighbour is found early
    for (int k = 1; k <= r; ++k)
      for (const Offset q : {j - k, j + k}) {
        const auto base = in_d(n - 1, q);
        if (!base) {
          pending = base.reason();
          continue;
        }
        if (!*base) continue;
        const auto c = compare(q, j);
        if (!c) {
          pending = c.reason();
          continue;
        }
        if (*c == 0) {
          pending = Unresolved::TieUnresolved;
          continue;
        }
        if (*c > 0) continue;
        const auto qy = in_y(n, q);
        if (!qy) {
          pending = qy.reason();
          continue;
        }
        if (!*qy) continue;
        const auto qd = in_d(n, q);
        if (!qd) {
          pending = qd.reason();
          continue;
        }
        if (*qd) return false;
      }
    if (pending) return *pending;
    return true;
  }

  Partial<Offset> compute_link(int n, Offset j) {
    for (Offset k = 0;; ++k) {
      for (const Offset q : {j - k, j + k}) {
        if (k == 0 && q != j) continue;
        const auto d = in_d(n + 1, q);
        if (!d) return d.reason();
        if (*d) return q;
        if (k == 0) break;
      }
    }
  }

  Partial<std::vector<Offset>> compute_members(int n, Offset d) {
    std::vector<Offset> out{d};
    for (const int dir : {-1, 1}) {
      for (Offset k = 1;; ++k) {
        const Offset q = d + dir * k;
        const auto top = in_d(n, q);
        if (!top) return top.reason();
        if (*top) break;
        const auto low = in_d(n - 1, q);
        if (!low) return low.reason();
        if (!*low) continue;
        const auto l = link(n - 1, q);
        if (!l) return l.reason();
        if (*l == d) out.push_back(q);
      }
    }
    // enumeration order of g = u^{d-e}: shorter first, u^m before u^-m
    std::sort(out.begin(), out.end(), [&](Offset a, Offset b) {
      const Offset ka = a - d, kb = b - d;
      if (std::abs(ka) != std::abs(kb)) return std::abs(ka) < std::abs(kb);
      return ka < kb;
    });
    return out;
  }

  static constexpr bool kPrefixed = requires(const Field& f, const GroupElement& g) {
    f.at(f.prefix(g), g);
  };
  using PrefixType = typename detail::PrefixOf<Field, kPrefixed>::type;

  const MarkerLevels* levels_;
  Field z_;
  GroupElement center_;
  absl::node_hash_map<Offset, GroupElement> sites_;
  std::vector<absl::flat_hash_map<Offset, Partial<bool>>> d_memo_;
  std::vector<absl::flat_hash_map<Offset, Partial<Offset>>> link_memo_;
  std::vector<absl::flat_hash_map<Offset, Partial<std::vector<Offset>>>> members_memo_;
  Shape gammas_;
  absl::flat_hash_map<Offset, Partial<Symbol>> reads_;
  absl::node_hash_map<Offset, PrefixType> prefixes_;
};

/// Cocycle of T at the V-site v: the t with T(v⁻¹·z) = t·(v⁻¹·z).
template <class Field>
Partial<GroupElement> build_T(const MarkerLevels& levels, const Field& z, const GroupElement& v) {
  MarkerEngine<Field> engine(levels, z, v);
  return engine.t_power(0, 1);
}

/// Cocycle t(n, ·) of T^n at the V-site v.
template <class Field>
Partial<GroupElement> t_power(const MarkerLevels& levels, const Field& z, const GroupElement& v,
                              std::int64_t n) {
  MarkerEngine<Field> engine(levels, z, v);
  return engine.t_power(0, n);
}

}  // namespace bshift
