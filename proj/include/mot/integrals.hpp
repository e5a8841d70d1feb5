#pragma once

#include <map>
#include <optional>
#include <vector>

#include "mot/coupling.hpp"
#include "mot/measures.hpp"

namespace mot::integrals {

class DomainMismatch : public Error {
 public:
  using Error::Error;
};

class AllInfinite : public Error {
 public:
  using Error::Error;
};

class ModeratorFailure : public Error {
 public:
  using Error::Error;
};

class NoAtom : public Error {
 public:
  using Error::Error;
};

class NotConcave : public Error {
 public:
  using Error::Error;
};

using transport::Coupling;
using transport::NotMartingale;

/// Function values on the atoms of a support; entries may be infinite.
using SupportMap = std::map<Scalar, Extended>;

struct Breakpoint {
  Scalar x;
  Scalar value;
};

struct BoundaryJump {
  Scalar x;
  Scalar magnitude;  // >= 0; the function drops by this much at x
};

/**
 * @brief Piecewise-linear concave function with optional downward jumps.
 *
 * Between breakpoints the function is linear; outside them it continues with
 * left_slope / right_slope. At a jump point the value is the continuous
 * value minus the jump magnitude.
 */
class ConcaveFunction {
 public:
  /// Throws NotConcave unless the slopes, left_slope first, are nonincreasing.
  ConcaveFunction(std::vector<Breakpoint> breakpoints, Scalar left_slope, Scalar right_slope,
                  std::vector<BoundaryJump> jumps = {});

  static ConcaveFunction zero(Mode mode = Mode::exact);
  /// y -> a + b y
  static ConcaveFunction affine(const Scalar& a, const Scalar& b);
  /// y -> -|y - center|
  static ConcaveFunction negative_abs(const Scalar& center = Scalar(0));

  const std::vector<Breakpoint>& breakpoints() const { return breakpoints_; }
  const std::vector<BoundaryJump>& jumps() const { return jumps_; }
  const Scalar& left_slope() const { return left_slope_; }
  const Scalar& right_slope() const { return right_slope_; }

  /// Value without the jumps.
  Scalar continuous_value(const Scalar& y) const;
  Scalar operator()(const Scalar& y) const;
  Scalar jump_at(const Scalar& y) const;
  Scalar left_derivative(const Scalar& y) const;
  Scalar right_derivative(const Scalar& y) const;

  /// (position, slope drop) for each breakpoint with a strictly positive drop.
  std::vector<std::pair<Scalar, Scalar>> second_derivative() const;

  ConcaveFunction plus(const ConcaveFunction& other) const;
  ConcaveFunction scaled(const Scalar& factor) const;  // factor >= 0

 private:
  std::vector<Breakpoint> breakpoints_;
  std::vector<Scalar> segment_slopes_;  // between consecutive breakpoints
  Scalar left_slope_;
  Scalar right_slope_;
  std::vector<BoundaryJump> jumps_;
};

/// Half the integral of (u_nu - u_mu) against the slope drops, plus the jump
/// terms. Exact for any convex-ordered pair. Throws DomainMismatch when a
/// kink lies outside [min supp nu, max supp nu] or a jump is not at an end of
/// that interval.
Scalar concave_integral_i2(const ConcaveFunction& chi, const measures::DiscreteMeasure& mu,
                           const measures::DiscreteMeasure& nu);
Scalar concave_integral_i2(const ConcaveFunction& chi, const measures::IrreducibleComponent& c);

/// Row-by-row Jensen gaps along a martingale coupling of (mu, nu).
Scalar concave_integral_i3(const ConcaveFunction& chi, const measures::DiscreteMeasure& mu,
                           const measures::DiscreteMeasure& nu, const Coupling& coupling,
                           double tol = kDefaultTolerance);

struct ModeratorCondition {
  bool holds = false;
  std::optional<Scalar> c_star;
  /// Where the maximum is attained (an endpoint when the slope ratio wins).
  std::optional<Scalar> argmax;
};

/// Smallest C with u_nu - u_{delta_m} <= C (u_nu - u_mu) for an irreducible pair.
ModeratorCondition moderator_condition(const measures::DiscreteMeasure& mu,
                                       const measures::DiscreteMeasure& nu);

/// Lower envelope of y -> phi(x) + h(x)(y - x) over the atoms where phi is
/// finite, on the hull of nu_support and those atoms.
ConcaveFunction extract_moderator(const SupportMap& phi, const std::map<Scalar, Scalar>& h,
                                  const std::vector<Scalar>& nu_support);

struct PairIntegralValue {
  Scalar value;
  ConcaveFunction moderator_used = ConcaveFunction::zero();
  bool finite = true;
};

/// mu(phi - chi) + nu(psi + chi) + (mu - nu)(chi), the last term via I2.
PairIntegralValue pair_integral(const SupportMap& phi, const SupportMap& psi,
                                const ConcaveFunction& chi, const measures::DiscreteMeasure& mu,
                                const measures::DiscreteMeasure& nu);

struct EndpointEstimate {
  Scalar bound;
  bool satisfied = false;
  Scalar constant;  // the C used
  Scalar chi_at_endpoint;
};

/// Checks chi(r) >= -(C / nu({r})) * sum over [a, inf) of chi d(mu - nu), where
/// a is the barycenter and r = max supp nu. chi must vanish at a with left
/// derivative 0 there.
EndpointEstimate endpoint_atom_estimate(const ConcaveFunction& chi,
                                        const measures::DiscreteMeasure& mu,
                                        const measures::DiscreteMeasure& nu);

}  // namespace mot::integrals
