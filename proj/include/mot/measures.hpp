#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mot/scalar.hpp"

namespace mot::measures {

class NegativeMass : public Error {
 public:
  using Error::Error;
};

class EmptyMeasure : public Error {
 public:
  using Error::Error;
};

class SplitInfeasible : public Error {
 public:
  using Error::Error;
};

class InfiniteEndpoint : public Error {
 public:
  using Error::Error;
};

struct Atom {
  Scalar x;
  Scalar w;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/**
 * @brief Finitely supported nonnegative measure on the real line.
 *
 * Atoms are sorted by position, positions are distinct and every mass is
 * strictly positive. The measure is not required to be a probability.
 */
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  /// Merges duplicate positions, drops zero masses and sorts.
  /// Throws NegativeMass if any mass is negative.
  static DiscreteMeasure make(std::vector<Atom> raw, Mode mode = Mode::exact);
  /// Like make, but throws EmptyMeasure when the total mass is zero.
  static DiscreteMeasure make_probability_input(std::vector<Atom> raw, Mode mode = Mode::exact);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  Mode mode() const { return mode_; }

  const Scalar& mass() const { return mass_; }
  /// Sum of w * x.
  const Scalar& first_moment() const { return first_moment_; }
  /// Barycenter; throws EmptyMeasure on the zero measure.
  Scalar mean() const;
  Scalar second_moment() const;

  /// Mass at x (zero if x is not an atom).
  Scalar mass_at(const Scalar& x) const;
  std::optional<std::size_t> index_of(const Scalar& x) const;
  bool has_atom(const Scalar& x) const { return index_of(x).has_value(); }

  /// Restriction to the open interval (lo, hi); nullopt bounds are infinite.
  DiscreteMeasure restrict_open(const std::optional<Scalar>& lo, const std::optional<Scalar>& hi) const;
  DiscreteMeasure plus(const DiscreteMeasure& other) const;
  /// this - other atomwise; throws NegativeMass if the result is negative.
  DiscreteMeasure minus(const DiscreteMeasure& other, double tol = kDefaultTolerance) const;
  DiscreteMeasure scaled(const Scalar& factor) const;
  DiscreteMeasure shifted(const Scalar& offset) const;

  friend bool operator==(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    return a.atoms_ == b.atoms_;
  }

 private:
  std::vector<Atom> atoms_;
  Scalar mass_;
  Scalar first_moment_;
  Mode mode_ = Mode::exact;
};

DiscreteMeasure make_measure(std::vector<Atom> raw, Mode mode = Mode::exact);

struct Kink {
  Scalar x;
  Scalar value;
};

/**
 * @brief The potential function u(x) = sum_t w_t |t - x| of a discrete measure.
 *
 * Piecewise linear and convex with a kink at each atom; the slope jumps by
 * twice the atom mass there and equals -mass / +mass outside the support.
 */
class PotentialFunction {
 public:
  explicit PotentialFunction(const DiscreteMeasure& mu);

  const std::vector<Kink>& kinks() const { return kinks_; }
  const Scalar& left_slope() const { return left_slope_; }
  const Scalar& right_slope() const { return right_slope_; }

  Scalar operator()(const Scalar& x) const;
  /// One-sided derivatives.
  Scalar left_derivative(const Scalar& x) const;
  Scalar right_derivative(const Scalar& x) const;

 private:
  // Slope on the segment right of kinks_[i].
  std::vector<Scalar> right_slopes_;
  std::vector<Kink> kinks_;
  Scalar left_slope_;
  Scalar right_slope_;
};

PotentialFunction potential(const DiscreteMeasure& mu);

struct OrderReport {
  bool ordered = false;
  std::string reason;
  /// Kinks strictly inside conv(supp nu) where the potentials coincide.
  std::vector<Scalar> touch_points;
};

OrderReport check_convex_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               double tol = kDefaultTolerance);

/// Sorted union of both supports.
std::vector<Scalar> joint_support(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// An open interval with possibly infinite ends (nullopt).
struct Interval {
  std::optional<Scalar> lo;
  std::optional<Scalar> hi;

  bool contains(const Scalar& x) const {
    return (!lo || *lo < x) && (!hi || x < *hi);
  }
};

struct IrreducibleComponent {
  std::size_t index = 0;  // 1-based
  Interval interval;      // I = (l, r)
  bool left_closed = false;   // J contains l
  bool right_closed = false;  // J contains r
  DiscreteMeasure mu;
  DiscreteMeasure nu;

  bool in_domain(const Scalar& y) const;  // y in J
  bool in_interval(const Scalar& x) const { return interval.contains(x); }
};

struct Decomposition {
  DiscreteMeasure mu;
  DiscreteMeasure nu;
  std::vector<IrreducibleComponent> components;
  DiscreteMeasure stationary;  // mu_0 = nu_0
  Scalar identity_coupling_mass;

  /// Index into components of the component whose I contains x.
  std::optional<std::size_t> component_of(const Scalar& x) const;
};

/// Irreducible decomposition of a convex-ordered pair. Throws Error when the
/// pair is not in convex order and SplitInfeasible if an endpoint share would
/// be negative.
Decomposition decompose(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        double tol = kDefaultTolerance);

enum class Side { left, right };

/// One-sided slope gap of the component potentials at a finite endpoint of I;
/// equals 2 * nu_k({endpoint}).
Scalar endpoint_slope_gap(const IrreducibleComponent& component, Side side);

}  // namespace mot::measures
