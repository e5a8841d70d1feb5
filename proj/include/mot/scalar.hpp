#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include <gmpxx.h>

namespace mot {

/// Arithmetic mode of a Scalar: exact rationals or IEEE doubles.
enum class Mode { exact, approx };

/// Default absolute tolerance used for approx-mode comparisons.
inline constexpr double kDefaultTolerance = 1e-9;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/**
 * @brief A number that is either an arbitrary-precision rational or a double.
 *
 * Mixing modes promotes to approx. Exact values are always kept in canonical
 * form (gcd(p, q) = 1, q > 0).
 */
class Scalar {
 public:
  Scalar() : value_(mpq_class(0)) {}
  Scalar(int v) : value_(mpq_class(v)) {}  // NOLINT(google-explicit-constructor)
  Scalar(long v) : value_(mpq_class(v)) {}  // NOLINT(google-explicit-constructor)
  Scalar(long long v);                      // NOLINT(google-explicit-constructor)
  explicit Scalar(mpq_class q);

  static Scalar exact(long num, long den = 1);
  static Scalar approx(double v) { return Scalar(Approx{v}); }
  /// Parses "p", "p/q", or a decimal such as "-1.25e-3".
  static Scalar parse(std::string_view text, Mode mode = Mode::exact);

  Mode mode() const { return value_.index() == 0 ? Mode::exact : Mode::approx; }
  bool is_exact() const { return value_.index() == 0; }

  /// Exact value; throws if this is an approx scalar.
  const mpq_class& rational() const;
  double to_double() const;
  /// Same value in the requested mode (exact conversion of a double is exact).
  Scalar as(Mode mode) const;

  int sign() const;
  Scalar abs() const { return sign() < 0 ? -*this : *this; }

  /// Canonical text: "p/q" or "p" in exact mode, shortest round-trip in approx.
  std::string str() const;

  Scalar& operator+=(const Scalar& o);
  Scalar& operator-=(const Scalar& o);
  Scalar& operator*=(const Scalar& o);
  Scalar& operator/=(const Scalar& o);

  friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
  friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
  friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
  friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }
  Scalar operator-() const;

  friend bool operator==(const Scalar& a, const Scalar& b) { return compare(a, b) == 0; }
  friend std::strong_ordering operator<=>(const Scalar& a, const Scalar& b) {
    int c = compare(a, b);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  struct Approx {
    double v;
  };
  explicit Scalar(Approx a) : value_(a.v) {}
  static int compare(const Scalar& a, const Scalar& b);

  std::variant<mpq_class, double> value_;
};

std::ostream& operator<<(std::ostream& os, const Scalar& s);

/// Tolerance-aware sign: exact scalars ignore `tol`.
int sign(const Scalar& s, double tol = kDefaultTolerance);
inline bool is_zero(const Scalar& s, double tol = kDefaultTolerance) { return sign(s, tol) == 0; }
inline bool approx_equal(const Scalar& a, const Scalar& b, double tol = kDefaultTolerance) {
  return is_zero(a - b, tol);
}

Scalar min(const Scalar& a, const Scalar& b);
Scalar max(const Scalar& a, const Scalar& b);

/**
 * @brief Scalar extended by +inf and -inf.
 *
 * Used for rewards and for dual potentials that are allowed to be infinite on
 * null atoms.
 */
class Extended {
 public:
  enum class Kind { finite, pos_inf, neg_inf };

  Extended() = default;
  Extended(Scalar v) : kind_(Kind::finite), value_(std::move(v)) {}  // NOLINT
  Extended(int v) : Extended(Scalar(v)) {}                           // NOLINT
  static Extended pos_inf() { return Extended(Kind::pos_inf); }
  static Extended neg_inf() { return Extended(Kind::neg_inf); }
  /// Accepts everything Scalar::parse does plus "inf", "+inf", "-inf".
  static Extended parse(std::string_view text, Mode mode = Mode::exact);

  Kind kind() const { return kind_; }
  bool finite() const { return kind_ == Kind::finite; }
  bool is_pos_inf() const { return kind_ == Kind::pos_inf; }
  bool is_neg_inf() const { return kind_ == Kind::neg_inf; }
  /// Finite value; throws on infinities.
  const Scalar& value() const;
  std::string str() const;

  friend bool operator==(const Extended& a, const Extended& b);

 private:
  explicit Extended(Kind k) : kind_(k) {}
  Kind kind_ = Kind::finite;
  Scalar value_;
};

/// Square root of a nonnegative scalar. Exact when numerator and denominator
/// are perfect squares; otherwise rounded down to a multiple of 2^-bits.
/// Approx scalars use std::sqrt.
Scalar sqrt_floor(const Scalar& q, unsigned bits = 40);

}  // namespace mot
