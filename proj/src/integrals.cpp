#include "mot/integrals.hpp"

#include <algorithm>

namespace mot::integrals {

using measures::DiscreteMeasure;
using measures::PotentialFunction;

namespace {

Mode mode_of(const Scalar& s) { return s.mode(); }

bool nonincreasing(const Scalar& a, const Scalar& b) {
  // a >= b up to the tolerance of approx scalars
  return sign(a - b) >= 0;
}

}  // namespace

ConcaveFunction::ConcaveFunction(std::vector<Breakpoint> breakpoints, Scalar left_slope,
                                 Scalar right_slope, std::vector<BoundaryJump> jumps)
    : left_slope_(std::move(left_slope)), right_slope_(std::move(right_slope)) {
  if (breakpoints.empty()) throw Error("concave function needs at least one breakpoint");
  std::sort(breakpoints.begin(), breakpoints.end(),
            [](const Breakpoint& a, const Breakpoint& b) { return a.x < b.x; });
  for (auto& bp : breakpoints) {
    if (!breakpoints_.empty() && breakpoints_.back().x == bp.x) {
      if (!approx_equal(breakpoints_.back().value, bp.value))
        throw Error("conflicting values at breakpoint " + bp.x.str());
      continue;
    }
    breakpoints_.push_back(std::move(bp));
  }
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
    const auto& p = breakpoints_[i];
    const auto& q = breakpoints_[i + 1];
    segment_slopes_.push_back((q.value - p.value) / (q.x - p.x));
  }
  Scalar prev = left_slope_;
  for (const auto& s : segment_slopes_) {
    if (!nonincreasing(prev, s)) throw NotConcave("slope increases near " + s.str());
    prev = s;
  }
  if (!nonincreasing(prev, right_slope_)) throw NotConcave("right slope exceeds the last segment slope");

  std::sort(jumps.begin(), jumps.end(),
            [](const BoundaryJump& a, const BoundaryJump& b) { return a.x < b.x; });
  for (auto& j : jumps) {
    if (j.magnitude.sign() < 0) throw NotConcave("negative jump at " + j.x.str());
    if (j.magnitude.sign() == 0) continue;
    if (!jumps_.empty() && jumps_.back().x == j.x) {
      jumps_.back().magnitude += j.magnitude;
    } else {
      jumps_.push_back(std::move(j));
    }
  }
}

ConcaveFunction ConcaveFunction::zero(Mode mode) {
  Scalar z = Scalar(0).as(mode);
  return ConcaveFunction({{z, z}}, z, z);
}

ConcaveFunction ConcaveFunction::affine(const Scalar& a, const Scalar& b) {
  Scalar z = Scalar(0).as(mode_of(a));
  return ConcaveFunction({{z, a}}, b, b);
}

ConcaveFunction ConcaveFunction::negative_abs(const Scalar& center) {
  Scalar z = Scalar(0).as(mode_of(center));
  return ConcaveFunction({{center, z}}, Scalar(1).as(center.mode()), Scalar(-1).as(center.mode()));
}

Scalar ConcaveFunction::continuous_value(const Scalar& y) const {
  const auto& first = breakpoints_.front();
  const auto& last = breakpoints_.back();
  if (y <= first.x) return first.value + left_slope_ * (y - first.x);
  if (y >= last.x) return last.value + right_slope_ * (y - last.x);
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), y,
                             [](const Scalar& v, const Breakpoint& b) { return v < b.x; });
  std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  return breakpoints_[i].value + segment_slopes_[i] * (y - breakpoints_[i].x);
}

Scalar ConcaveFunction::jump_at(const Scalar& y) const {
  for (const auto& j : jumps_)
    if (j.x == y) return j.magnitude;
  return Scalar(0).as(y.mode());
}

Scalar ConcaveFunction::operator()(const Scalar& y) const { return continuous_value(y) - jump_at(y); }

Scalar ConcaveFunction::left_derivative(const Scalar& y) const {
  if (y <= breakpoints_.front().x) return left_slope_;
  // largest i with x_i < y
  auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), y,
                             [](const Breakpoint& b, const Scalar& v) { return b.x < v; });
  std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  return i < segment_slopes_.size() ? segment_slopes_[i] : right_slope_;
}

Scalar ConcaveFunction::right_derivative(const Scalar& y) const {
  // smallest i with x_i > y
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), y,
                             [](const Scalar& v, const Breakpoint& b) { return v < b.x; });
  if (it == breakpoints_.end()) return right_slope_;
  std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin());
  return i == 0 ? left_slope_ : segment_slopes_[i - 1];
}

std::vector<std::pair<Scalar, Scalar>> ConcaveFunction::second_derivative() const {
  std::vector<std::pair<Scalar, Scalar>> out;
  for (const auto& bp : breakpoints_) {
    Scalar drop = left_derivative(bp.x) - right_derivative(bp.x);
    if (drop.sign() > 0) out.emplace_back(bp.x, drop);
  }
  return out;
}

ConcaveFunction ConcaveFunction::plus(const ConcaveFunction& other) const {
  std::vector<Scalar> xs;
  for (const auto& b : breakpoints_) xs.push_back(b.x);
  for (const auto& b : other.breakpoints_) xs.push_back(b.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<Breakpoint> bps;
  for (const auto& x : xs) bps.push_back({x, continuous_value(x) + other.continuous_value(x)});
  std::vector<BoundaryJump> jumps = jumps_;
  jumps.insert(jumps.end(), other.jumps_.begin(), other.jumps_.end());
  return ConcaveFunction(std::move(bps), left_slope_ + other.left_slope_,
                         right_slope_ + other.right_slope_, std::move(jumps));
}

ConcaveFunction ConcaveFunction::scaled(const Scalar& factor) const {
  if (factor.sign() < 0) throw NotConcave("negative multiple of a concave function");
  std::vector<Breakpoint> bps;
  for (const auto& b : breakpoints_) bps.push_back({b.x, b.value * factor});
  std::vector<BoundaryJump> jumps;
  for (const auto& j : jumps_) jumps.push_back({j.x, j.magnitude * factor});
  return ConcaveFunction(std::move(bps), left_slope_ * factor, right_slope_ * factor,
                         std::move(jumps));
}

Scalar concave_integral_i2(const ConcaveFunction& chi, const DiscreteMeasure& mu,
                           const DiscreteMeasure& nu) {
  if (nu.empty()) throw DomainMismatch("second measure is empty");
  const Scalar& lo = nu.atoms().front().x;
  const Scalar& hi = nu.atoms().back().x;
  const auto kinks = chi.second_derivative();
  for (const auto& [t, drop] : kinks)
    if (t < lo || t > hi)
      throw DomainMismatch("kink " + t.str() + " outside [" + lo.str() + ", " + hi.str() + "]");
  for (const auto& j : chi.jumps())
    if (j.x != lo && j.x != hi)
      throw DomainMismatch("jump at " + j.x.str() + " is not an end of [" + lo.str() + ", " +
                           hi.str() + "]");

  PotentialFunction u_mu(mu);
  PotentialFunction u_nu(nu);
  Scalar total = Scalar(0).as(nu.mode());
  for (const auto& [t, drop] : kinks) total += (u_nu(t) - u_mu(t)) * drop;
  total /= Scalar(2);
  for (const auto& j : chi.jumps()) total += j.magnitude * (nu.mass_at(j.x) - mu.mass_at(j.x));
  return total;
}

Scalar concave_integral_i2(const ConcaveFunction& chi, const measures::IrreducibleComponent& c) {
  return concave_integral_i2(chi, c.mu, c.nu);
}

Scalar concave_integral_i3(const ConcaveFunction& chi, const DiscreteMeasure& mu,
                           const DiscreteMeasure& nu, const Coupling& coupling, double tol) {
  transport::require_martingale_coupling(coupling, mu, nu, tol);
  Scalar total = Scalar(0).as(mu.mode());
  for (const auto& a : mu.atoms()) total += a.w * chi(a.x);
  for (const auto& [xy, w] : coupling.entries()) total -= w * chi(xy.second);
  return total;
}

ModeratorCondition moderator_condition(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  ModeratorCondition out;
  if (mu.empty() || nu.size() < 2) return out;
  const Scalar& lo = nu.atoms().front().x;
  const Scalar& hi = nu.atoms().back().x;
  Scalar m = mu.mean();
  Scalar mass = mu.mass();
  PotentialFunction u_mu(mu);
  PotentialFunction u_nu(nu);

  auto consider = [&](const Scalar& ratio, const Scalar& at) {
    if (!out.c_star || ratio > *out.c_star) {
      out.c_star = ratio;
      out.argmax = at;
    }
  };

  auto kinks = measures::joint_support(mu, nu);
  kinks.push_back(m);
  std::sort(kinks.begin(), kinks.end());
  kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());
  for (const auto& x : kinks) {
    if (x <= lo || x >= hi) continue;
    Scalar den = u_nu(x) - u_mu(x);
    if (sign(den) <= 0) return ModeratorCondition{};
    Scalar num = u_nu(x) - mass * (x - m).abs();
    consider(num / den, x);
  }

  // Near an endpoint both sides vanish; compare one-sided slopes instead.
  if (m > lo) {
    Scalar num = u_nu.right_derivative(lo) + mass;
    Scalar den = u_nu.right_derivative(lo) - u_mu.right_derivative(lo);
    if (sign(den) <= 0) return ModeratorCondition{};
    consider(num / den, lo);
  }
  if (m < hi) {
    Scalar num = mass - u_nu.left_derivative(hi);
    Scalar den = u_mu.left_derivative(hi) - u_nu.left_derivative(hi);
    if (sign(den) <= 0) return ModeratorCondition{};
    consider(num / den, hi);
  }
  out.holds = out.c_star.has_value();
  return out;
}

ConcaveFunction extract_moderator(const SupportMap& phi, const std::map<Scalar, Scalar>& h,
                                  const std::vector<Scalar>& nu_support) {
  struct Line {
    Scalar slope;
    Scalar intercept;
    Scalar value_at(const Scalar& y) const { return intercept + slope * y; }
  };
  std::vector<Line> lines;
  std::vector<Scalar> domain = nu_support;
  for (const auto& [x, v] : phi) {
    if (v.is_pos_inf()) continue;
    if (v.is_neg_inf()) throw ModeratorFailure("phi is -inf at " + x.str());
    auto it = h.find(x);
    if (it == h.end()) throw ModeratorFailure("h undefined at " + x.str());
    lines.push_back({it->second, v.value() - it->second * x});
    domain.push_back(x);
  }
  if (lines.empty()) throw AllInfinite("phi is +inf on every atom");

  // Lower envelope: slopes decreasing left to right.
  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    if (a.slope != b.slope) return a.slope > b.slope;
    return a.intercept < b.intercept;
  });
  auto cross = [](const Line& a, const Line& b) {
    return (b.intercept - a.intercept) / (a.slope - b.slope);
  };
  std::vector<Line> hull;
  for (auto& l : lines) {
    if (!hull.empty() && hull.back().slope == l.slope) continue;
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back()) >= cross(hull.back(), l))
      hull.pop_back();
    hull.push_back(std::move(l));
  }
  std::vector<Scalar> transitions;
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) transitions.push_back(cross(hull[k], hull[k + 1]));

  const Scalar a = *std::min_element(domain.begin(), domain.end());
  const Scalar b = *std::max_element(domain.begin(), domain.end());
  auto envelope = [&](const Scalar& y) {
    Scalar best = hull.front().value_at(y);
    for (const auto& l : hull) best = min(best, l.value_at(y));
    return best;
  };

  std::vector<Breakpoint> bps{{a, envelope(a)}};
  for (const auto& t : transitions)
    if (a < t && t < b) bps.push_back({t, envelope(t)});
  if (b != a) bps.push_back({b, envelope(b)});

  std::size_t left = 0;
  while (left < transitions.size() && transitions[left] < a) ++left;
  std::size_t right = 0;
  while (right < transitions.size() && transitions[right] <= b) ++right;
  return ConcaveFunction(std::move(bps), hull[left].slope, hull[right].slope);
}

PairIntegralValue pair_integral(const SupportMap& phi, const SupportMap& psi,
                                const ConcaveFunction& chi, const DiscreteMeasure& mu,
                                const DiscreteMeasure& nu) {
  auto finite_at = [](const SupportMap& f, const Scalar& x, const char* name) {
    auto it = f.find(x);
    if (it == f.end()) throw ModeratorFailure(std::string(name) + " undefined at atom " + x.str());
    if (!it->second.finite())
      throw ModeratorFailure(std::string(name) + " is " + it->second.str() + " at charged atom " + x.str());
    return it->second.value();
  };
  Scalar value = concave_integral_i2(chi, mu, nu);
  for (const auto& a : mu.atoms()) value += a.w * (finite_at(phi, a.x, "phi") - chi(a.x));
  for (const auto& a : nu.atoms()) value += a.w * (finite_at(psi, a.x, "psi") + chi(a.x));
  return {value, chi, true};
}

EndpointEstimate endpoint_atom_estimate(const ConcaveFunction& chi, const DiscreteMeasure& mu,
                                        const DiscreteMeasure& nu) {
  if (mu.empty() || nu.empty()) throw NoAtom("empty measure");
  const Scalar r = nu.atoms().back().x;
  const Scalar nu_r = nu.mass_at(r);
  if (nu_r.sign() <= 0) throw NoAtom("second measure has no atom at " + r.str());
  const Scalar a = mu.mean();
  if (!is_zero(chi(a)) || !is_zero(chi.left_derivative(a)))
    throw DomainMismatch("moderator must vanish with zero left slope at " + a.str());

  const Scalar mass = mu.mass();
  PotentialFunction u_mu(mu);
  PotentialFunction u_nu(nu);
  std::optional<Scalar> c;
  auto kinks = measures::joint_support(mu, nu);
  kinks.push_back(a);
  for (const auto& x : kinks) {
    if (x < a || x >= r) continue;
    Scalar den = u_nu(x) - u_mu(x);
    if (sign(den) <= 0) throw DomainMismatch("pair is not irreducible at " + x.str());
    Scalar ratio = (u_nu(x) - mass * (x - a)) / den;
    if (!c || ratio > *c) c = ratio;
  }
  if (a < r) {
    Scalar den = u_mu.left_derivative(r) - u_nu.left_derivative(r);
    if (sign(den) <= 0) throw NoAtom("no slope gap at " + r.str());
    Scalar ratio = (mass - u_nu.left_derivative(r)) / den;
    if (!c || ratio > *c) c = ratio;
  }
  Scalar constant = c.value_or(Scalar(1).as(mu.mode()));

  Scalar tail = Scalar(0).as(mu.mode());
  for (const auto& at : mu.atoms())
    if (at.x >= a) tail += at.w * chi(at.x);
  for (const auto& at : nu.atoms())
    if (at.x >= a) tail -= at.w * chi(at.x);

  EndpointEstimate out;
  out.constant = constant;
  out.bound = -(constant / nu_r) * tail;
  out.chi_at_endpoint = chi(r);
  out.satisfied = sign(out.chi_at_endpoint - out.bound) >= 0;
  return out;
}

}  // namespace mot::integrals
