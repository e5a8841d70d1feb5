#include "mot/scalar.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace mot {

namespace {

mpq_class canonical(mpq_class q) {
  q.canonicalize();
  return q;
}

// Parses an optionally signed decimal with optional exponent exactly.
mpq_class parse_decimal(std::string_view text) {
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    negative = text[pos] == '-';
    ++pos;
  }
  std::string digits;
  long frac_digits = 0;
  bool seen_dot = false;
  bool any_digit = false;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      any_digit = true;
      if (seen_dot) ++frac_digits;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else {
      break;
    }
  }
  if (!any_digit) throw ParseError("malformed number '" + std::string(text) + "'");
  long exponent = 0;
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    ++pos;
    auto rest = text.substr(pos);
    if (!rest.empty() && rest.front() == '+') rest.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), exponent);
    if (ec != std::errc() || ptr != rest.data() + rest.size())
      throw ParseError("malformed exponent in '" + std::string(text) + "'");
    pos = text.size();
  }
  if (pos != text.size()) throw ParseError("trailing characters in '" + std::string(text) + "'");
  mpz_class num(digits, 10);
  long shift = exponent - frac_digits;
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
  mpq_class q = shift >= 0 ? mpq_class(num * scale) : mpq_class(num, scale);
  q.canonicalize();
  return negative ? mpq_class(-q) : q;
}

}  // namespace

Scalar::Scalar(long long v) : value_(mpq_class(mpz_class(std::to_string(v), 10))) {}

Scalar::Scalar(mpq_class q) : value_(canonical(std::move(q))) {}

Scalar Scalar::exact(long num, long den) {
  if (den == 0) throw Error("zero denominator");
  return Scalar(mpq_class(num, den));
}

Scalar Scalar::parse(std::string_view text, Mode mode) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw ParseError("empty number");
  mpq_class q;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    mpq_class num = parse_decimal(text.substr(0, slash));
    mpq_class den = parse_decimal(text.substr(slash + 1));
    if (den == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
    q = num / den;
  } else {
    q = parse_decimal(text);
  }
  Scalar s(std::move(q));
  return mode == Mode::exact ? s : Scalar::approx(s.to_double());
}

const mpq_class& Scalar::rational() const {
  if (!is_exact()) throw Error("exact value requested from an approx scalar");
  return std::get<0>(value_);
}

double Scalar::to_double() const {
  return is_exact() ? std::get<0>(value_).get_d() : std::get<1>(value_);
}

Scalar Scalar::as(Mode mode) const {
  if (mode == this->mode()) return *this;
  if (mode == Mode::approx) return approx(to_double());
  double v = std::get<1>(value_);
  if (!std::isfinite(v)) throw Error("cannot convert non-finite double to a rational");
  mpq_class q(v);
  return Scalar(std::move(q));
}

int Scalar::sign() const {
  if (is_exact()) return sgn(std::get<0>(value_));
  double v = std::get<1>(value_);
  return (v > 0) - (v < 0);
}

std::string Scalar::str() const {
  if (is_exact()) return std::get<0>(value_).get_str();
  double v = std::get<1>(value_);
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Scalar& Scalar::operator+=(const Scalar& o) {
  if (is_exact() && o.is_exact()) {
    std::get<0>(value_) += std::get<0>(o.value_);
  } else {
    value_ = to_double() + o.to_double();
  }
  return *this;
}

Scalar& Scalar::operator-=(const Scalar& o) {
  if (is_exact() && o.is_exact()) {
    std::get<0>(value_) -= std::get<0>(o.value_);
  } else {
    value_ = to_double() - o.to_double();
  }
  return *this;
}

Scalar& Scalar::operator*=(const Scalar& o) {
  if (is_exact() && o.is_exact()) {
    std::get<0>(value_) *= std::get<0>(o.value_);
  } else {
    value_ = to_double() * o.to_double();
  }
  return *this;
}

Scalar& Scalar::operator/=(const Scalar& o) {
  if (o.sign() == 0) throw Error("division by zero");
  if (is_exact() && o.is_exact()) {
    std::get<0>(value_) /= std::get<0>(o.value_);
  } else {
    value_ = to_double() / o.to_double();
  }
  return *this;
}

Scalar Scalar::operator-() const {
  if (is_exact()) return Scalar(mpq_class(-std::get<0>(value_)));
  return approx(-std::get<1>(value_));
}

int Scalar::compare(const Scalar& a, const Scalar& b) {
  if (a.is_exact() && b.is_exact()) return cmp(std::get<0>(a.value_), std::get<0>(b.value_));
  double x = a.to_double();
  double y = b.to_double();
  return (x > y) - (x < y);
}

std::ostream& operator<<(std::ostream& os, const Scalar& s) { return os << s.str(); }

int sign(const Scalar& s, double tol) {
  if (s.is_exact()) return s.sign();
  double v = s.to_double();
  if (std::abs(v) <= tol) return 0;
  return v > 0 ? 1 : -1;
}

Scalar min(const Scalar& a, const Scalar& b) { return b < a ? b : a; }
Scalar max(const Scalar& a, const Scalar& b) { return a < b ? b : a; }

Extended Extended::parse(std::string_view text, Mode mode) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text == "inf" || text == "+inf") return pos_inf();
  if (text == "-inf") return neg_inf();
  return Extended(Scalar::parse(text, mode));
}

const Scalar& Extended::value() const {
  if (!finite()) throw Error("finite value requested from an infinite extended scalar");
  return value_;
}

std::string Extended::str() const {
  switch (kind_) {
    case Kind::pos_inf:
      return "inf";
    case Kind::neg_inf:
      return "-inf";
    default:
      return value_.str();
  }
}

bool operator==(const Extended& a, const Extended& b) {
  if (a.kind_ != b.kind_) return false;
  return !a.finite() || a.value_ == b.value_;
}

Scalar sqrt_floor(const Scalar& q, unsigned bits) {
  if (q.sign() < 0) throw Error("square root of a negative number");
  if (!q.is_exact()) return Scalar::approx(std::sqrt(q.to_double()));
  const mpq_class& r = q.rational();
  mpz_class num = r.get_num();
  mpz_class den = r.get_den();
  if (mpz_perfect_square_p(num.get_mpz_t()) && mpz_perfect_square_p(den.get_mpz_t())) {
    mpz_class a, b;
    mpz_sqrt(a.get_mpz_t(), num.get_mpz_t());
    mpz_sqrt(b.get_mpz_t(), den.get_mpz_t());
    return Scalar(mpq_class(a, b));
  }
  // floor(sqrt(num * 4^bits / den)) / 2^bits
  mpz_class scaled = num << (2 * bits);
  mpz_class quotient;
  mpz_fdiv_q(quotient.get_mpz_t(), scaled.get_mpz_t(), den.get_mpz_t());
  mpz_class root;
  mpz_sqrt(root.get_mpz_t(), quotient.get_mpz_t());
  mpz_class scale = mpz_class(1) << bits;
  return Scalar(mpq_class(root, scale));
}

}  // namespace mot
