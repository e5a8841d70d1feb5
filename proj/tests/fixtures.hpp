#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mot/integrals.hpp"
#include "mot/measures.hpp"
#include "mot/transport.hpp"

namespace fixtures {

using mot::Mode;
using mot::Scalar;
using mot::measures::Atom;
using mot::measures::DiscreteMeasure;

inline Scalar q(long num, long den = 1) { return Scalar::exact(num, den); }
inline Scalar s(const std::string& text) { return Scalar::parse(text); }

inline DiscreteMeasure measure(const std::vector<std::pair<std::string, std::string>>& atoms,
                               Mode mode = Mode::exact) {
  std::vector<Atom> raw;
  for (const auto& [x, w] : atoms) raw.push_back({Scalar::parse(x, mode), Scalar::parse(w, mode)});
  return DiscreteMeasure::make(std::move(raw), mode);
}

/// delta_0 against the symmetric two-point law on {-1, 1}.
inline std::pair<DiscreteMeasure, DiscreteMeasure> two_point() {
  return {measure({{"0", "1"}}), measure({{"-1", "1/2"}, {"1", "1/2"}})};
}

/// Components (-2, 0) and (0, 2) sharing the nu-atom at 0.
inline std::pair<DiscreteMeasure, DiscreteMeasure> two_component() {
  return {measure({{"-1", "1/2"}, {"1", "1/2"}}), measure({{"-2", "1/4"}, {"0", "1/2"}, {"2", "1/4"}})};
}

inline DiscreteMeasure uniform_grid(long n) {
  std::vector<Atom> raw;
  for (long k = 0; k <= n; ++k) raw.push_back({q(k, n), q(1, n + 1)});
  return DiscreteMeasure::make(std::move(raw));
}

using Rng = std::mt19937_64;

inline long uniform_int(Rng& rng, long lo, long hi) {
  return std::uniform_int_distribution<long>(lo, hi)(rng);
}

inline Scalar random_rational(Rng& rng, long max_num, long max_den) {
  return q(uniform_int(rng, 0, max_num), uniform_int(rng, 1, max_den));
}

struct Instance {
  DiscreteMeasure mu;
  DiscreteMeasure nu;
};

/**
 * Random convex-ordered pair on the integer grid [-5, 6]: mu has random
 * rational weights, nu = mu times a kernel that keeps part of each atom in
 * place and splits the rest between two grid points around it.
 */
inline Instance random_instance(Rng& rng, int max_atoms = 6) {
  const long lo = -5, hi = 6;
  std::vector<long> grid;
  for (long v = lo; v <= hi; ++v) grid.push_back(v);
  std::shuffle(grid.begin(), grid.end(), rng);
  int count = static_cast<int>(uniform_int(rng, 1, max_atoms));
  std::vector<Atom> mu_raw, nu_raw;
  for (int i = 0; i < count; ++i) {
    Scalar x(grid[i]);
    Scalar w = q(uniform_int(rng, 1, 9), uniform_int(rng, 1, 4));
    mu_raw.push_back({x, w});
    long xi = grid[i];
    Scalar stay = uniform_int(rng, 0, 3) == 0 ? w : w * q(uniform_int(rng, 0, 2), 4);
    if (xi == lo || xi == hi) stay = w;
    if (stay.sign() > 0) nu_raw.push_back({x, stay});
    Scalar moving = w - stay;
    if (moving.sign() > 0) {
      long a = uniform_int(rng, lo, xi - 1);
      long b = uniform_int(rng, xi + 1, hi);
      Scalar to_b = moving * q(xi - a, b - a);
      nu_raw.push_back({Scalar(a), moving - to_b});
      nu_raw.push_back({Scalar(b), to_b});
    }
  }
  auto mu = DiscreteMeasure::make(std::move(mu_raw));
  auto nu = DiscreteMeasure::make(std::move(nu_raw));
  // normalize to probabilities
  Scalar total = mu.mass();
  return {mu.scaled(Scalar(1) / total), nu.scaled(Scalar(1) / total)};
}

inline mot::transport::RewardSpec random_table(Rng& rng, const DiscreteMeasure& mu,
                                               const DiscreteMeasure& nu) {
  std::map<mot::transport::SupportPair, mot::Extended> entries;
  for (const auto& a : mu.atoms())
    for (const auto& b : nu.atoms()) entries[{a.x, b.x}] = mot::Extended(random_rational(rng, 20, 5));
  return mot::transport::RewardSpec::table(std::move(entries));
}

/// Random concave piecewise-linear function with breakpoints inside [lo, hi].
inline mot::integrals::ConcaveFunction random_concave(Rng& rng, const Scalar& lo, const Scalar& hi,
                                                      int max_breakpoints = 8) {
  int n = static_cast<int>(uniform_int(rng, 1, max_breakpoints));
  std::vector<Scalar> xs;
  for (int i = 0; i < n; ++i) {
    Scalar t = q(uniform_int(rng, 0, 24), 24);
    xs.push_back(lo + (hi - lo) * t);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  // slopes: left_slope, one per segment, right_slope; nonincreasing
  std::vector<Scalar> slopes;
  Scalar slope = q(uniform_int(rng, -6, 6), uniform_int(rng, 1, 3));
  slopes.push_back(slope);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    slope -= q(uniform_int(rng, 0, 6), uniform_int(rng, 1, 3));
    slopes.push_back(slope);
  }
  std::vector<mot::integrals::Breakpoint> bps;
  Scalar value = q(uniform_int(rng, -5, 5), uniform_int(rng, 1, 3));
  bps.push_back({xs[0], value});
  for (std::size_t i = 1; i < xs.size(); ++i) {
    value += slopes[i] * (xs[i] - xs[i - 1]);
    bps.push_back({xs[i], value});
  }
  return mot::integrals::ConcaveFunction(std::move(bps), slopes.front(), slopes.back());
}

}  // namespace fixtures
