#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bshift/probvec.hpp"

namespace bshift {

/// Dirichlet(1,...,1) masses.
template <class Rng>
std::vector<double> random_simplex(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> m(n);
  double s = 0.0;
  for (auto& x : m) s += (x = e(rng) + 1e-12);
  for (auto& x : m) x /= s;
  return m;
}

inline ProbVector labelled(const std::vector<double>& masses, const std::string& prefix = "s") {
  std::vector<std::pair<std::string, double>> atoms;
  for (std::size_t i = 0; i < masses.size(); ++i)
    atoms.emplace_back(prefix + std::to_string(i), masses[i]);
  return ProbVector(std::move(atoms));
}

/// Random n-atom masses with entropy `target` (requires 0 < target < ln n).
/// Moves a random vector along a segment toward the uniform vector (entropy
/// increasing) or toward its heaviest vertex (a single down-crossing by
/// concavity), then bisects.
template <class Rng>
std::vector<double> random_masses_with_entropy(std::size_t n, double target, Rng& rng) {
  const auto start = random_simplex(n, rng);
  std::vector<double> end(n, 1.0 / static_cast<double>(n));
  const double h0 = entropy_of(start);
  if (h0 > target) {
    std::fill(end.begin(), end.end(), 0.0);
    end[static_cast<std::size_t>(std::max_element(start.begin(), start.end()) - start.begin())] = 1.0;
  }
  const auto at = [&](double t) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = (1.0 - t) * start[i] + t * end[i];
    return v;
  };
  double lo = 0.0, hi = 1.0;
  const bool rising = h0 <= target;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double h = entropy_of(at(mid));
    if ((h < target) == rising)
      lo = mid;
    else
      hi = mid;
  }
  auto v = at(0.5 * (lo + hi));
  double s = 0.0;
  for (double x : v) s += x;
  for (auto& x : v) x /= s;
  return v;
}

}  // namespace bshift
