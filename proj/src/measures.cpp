#include "mot/measures.hpp"

#include <algorithm>
#include <map>

namespace mot::measures {

namespace {

// |a| scaled tolerance used for potential comparisons in approx mode.
double scaled_tol(const Scalar& reference, double tol) {
  return tol * (1.0 + std::abs(reference.to_double()));
}

}  // namespace

DiscreteMeasure DiscreteMeasure::make(std::vector<Atom> raw, Mode mode) {
  DiscreteMeasure m;
  m.mode_ = mode;
  for (auto& a : raw) {
    a.x = a.x.as(mode);
    a.w = a.w.as(mode);
    if (a.w.sign() < 0) throw NegativeMass("negative mass " + a.w.str() + " at " + a.x.str());
  }
  std::stable_sort(raw.begin(), raw.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
  for (auto& a : raw) {
    if (!m.atoms_.empty() && m.atoms_.back().x == a.x) {
      m.atoms_.back().w += a.w;
    } else {
      m.atoms_.push_back(std::move(a));
    }
  }
  std::erase_if(m.atoms_, [](const Atom& a) { return a.w.sign() == 0; });
  m.mass_ = Scalar(0).as(mode);
  m.first_moment_ = Scalar(0).as(mode);
  for (const auto& a : m.atoms_) {
    m.mass_ += a.w;
    m.first_moment_ += a.w * a.x;
  }
  return m;
}

DiscreteMeasure DiscreteMeasure::make_probability_input(std::vector<Atom> raw, Mode mode) {
  auto m = make(std::move(raw), mode);
  if (m.empty()) throw EmptyMeasure("measure has zero total mass");
  return m;
}

DiscreteMeasure make_measure(std::vector<Atom> raw, Mode mode) {
  return DiscreteMeasure::make(std::move(raw), mode);
}

Scalar DiscreteMeasure::mean() const {
  if (mass_.sign() == 0) throw EmptyMeasure("mean of the zero measure");
  return first_moment_ / mass_;
}

Scalar DiscreteMeasure::second_moment() const {
  Scalar s = Scalar(0).as(mode_);
  for (const auto& a : atoms_) s += a.w * a.x * a.x;
  return s;
}

std::optional<std::size_t> DiscreteMeasure::index_of(const Scalar& x) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                             [](const Atom& a, const Scalar& v) { return a.x < v; });
  if (it == atoms_.end() || it->x != x) return std::nullopt;
  return static_cast<std::size_t>(it - atoms_.begin());
}

Scalar DiscreteMeasure::mass_at(const Scalar& x) const {
  auto i = index_of(x);
  return i ? atoms_[*i].w : Scalar(0).as(mode_);
}

DiscreteMeasure DiscreteMeasure::restrict_open(const std::optional<Scalar>& lo,
                                               const std::optional<Scalar>& hi) const {
  std::vector<Atom> kept;
  for (const auto& a : atoms_) {
    if ((!lo || *lo < a.x) && (!hi || a.x < *hi)) kept.push_back(a);
  }
  return make(std::move(kept), mode_);
}

DiscreteMeasure DiscreteMeasure::plus(const DiscreteMeasure& other) const {
  std::vector<Atom> all = atoms_;
  all.insert(all.end(), other.atoms_.begin(), other.atoms_.end());
  return make(std::move(all), mode_);
}

DiscreteMeasure DiscreteMeasure::minus(const DiscreteMeasure& other, double tol) const {
  std::map<Scalar, Scalar> acc;
  for (const auto& a : atoms_) acc[a.x] += a.w;
  for (const auto& a : other.atoms_) acc[a.x] -= a.w;
  std::vector<Atom> out;
  for (auto& [x, w] : acc) {
    int s = sign(w, tol);
    if (s < 0) throw NegativeMass("difference is negative at " + x.str());
    if (s > 0) out.push_back({x, w});
  }
  return make(std::move(out), mode_);
}

DiscreteMeasure DiscreteMeasure::scaled(const Scalar& factor) const {
  std::vector<Atom> out;
  for (const auto& a : atoms_) out.push_back({a.x, a.w * factor});
  return make(std::move(out), mode_);
}

DiscreteMeasure DiscreteMeasure::shifted(const Scalar& offset) const {
  std::vector<Atom> out;
  for (const auto& a : atoms_) out.push_back({a.x + offset, a.w});
  return make(std::move(out), mode_);
}

PotentialFunction::PotentialFunction(const DiscreteMeasure& mu) {
  const Mode mode = mu.mode();
  left_slope_ = -mu.mass();
  right_slope_ = mu.mass();
  Scalar slope = left_slope_;
  for (const auto& a : mu.atoms()) {
    Scalar value = Scalar(0).as(mode);
    for (const auto& b : mu.atoms()) value += b.w * (b.x - a.x).abs();
    kinks_.push_back({a.x, std::move(value)});
    slope += a.w + a.w;
    right_slopes_.push_back(slope);
  }
}

PotentialFunction potential(const DiscreteMeasure& mu) { return PotentialFunction(mu); }

Scalar PotentialFunction::operator()(const Scalar& x) const {
  if (kinks_.empty()) return Scalar(0).as(x.mode());
  auto it = std::upper_bound(kinks_.begin(), kinks_.end(), x,
                             [](const Scalar& v, const Kink& k) { return v < k.x; });
  if (it == kinks_.begin()) return kinks_.front().value + left_slope_ * (x - kinks_.front().x);
  auto i = static_cast<std::size_t>(it - kinks_.begin()) - 1;
  return kinks_[i].value + right_slopes_[i] * (x - kinks_[i].x);
}

Scalar PotentialFunction::left_derivative(const Scalar& x) const {
  auto it = std::lower_bound(kinks_.begin(), kinks_.end(), x,
                             [](const Kink& k, const Scalar& v) { return k.x < v; });
  if (it == kinks_.begin()) return left_slope_;
  return right_slopes_[static_cast<std::size_t>(it - kinks_.begin()) - 1];
}

Scalar PotentialFunction::right_derivative(const Scalar& x) const {
  auto it = std::upper_bound(kinks_.begin(), kinks_.end(), x,
                             [](const Scalar& v, const Kink& k) { return v < k.x; });
  if (it == kinks_.begin()) return left_slope_;
  return right_slopes_[static_cast<std::size_t>(it - kinks_.begin()) - 1];
}

std::vector<Scalar> joint_support(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<Scalar> xs;
  for (const auto& a : mu.atoms()) xs.push_back(a.x);
  for (const auto& a : nu.atoms()) xs.push_back(a.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

OrderReport check_convex_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tol) {
  OrderReport report;
  if (mu.empty() || nu.empty()) {
    report.reason = "empty measure";
    return report;
  }
  if (sign(mu.mass() - nu.mass(), scaled_tol(nu.mass(), tol)) != 0) {
    report.reason = "mass mismatch";
    return report;
  }
  if (sign(mu.first_moment() - nu.first_moment(), scaled_tol(nu.first_moment(), tol)) != 0) {
    report.reason = "mean mismatch";
    return report;
  }
  const PotentialFunction u_mu(mu);
  const PotentialFunction u_nu(nu);
  const Scalar& lo = nu.atoms().front().x;
  const Scalar& hi = nu.atoms().back().x;
  for (const auto& x : joint_support(mu, nu)) {
    Scalar a = u_mu(x);
    Scalar b = u_nu(x);
    int s = sign(a - b, scaled_tol(b, tol));
    if (s > 0) {
      report.reason = "potential order fails at " + x.str();
      report.touch_points.clear();
      return report;
    }
    if (s == 0 && lo < x && x < hi) report.touch_points.push_back(x);
  }
  report.ordered = true;
  report.reason = "ordered";
  return report;
}

bool IrreducibleComponent::in_domain(const Scalar& y) const {
  if (interval.contains(y)) return true;
  if (left_closed && interval.lo && y == *interval.lo) return true;
  if (right_closed && interval.hi && y == *interval.hi) return true;
  return false;
}

std::optional<std::size_t> Decomposition::component_of(const Scalar& x) const {
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (components[k].in_interval(x)) return k;
  }
  return std::nullopt;
}

Decomposition decompose(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tol) {
  auto order = check_convex_order(mu, nu, tol);
  if (!order.ordered) throw Error("marginals are not in convex order: " + order.reason);

  const Mode mode = mu.mode();
  const PotentialFunction u_mu(mu);
  const PotentialFunction u_nu(nu);
  const auto zs = joint_support(mu, nu);
  std::vector<bool> positive(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) {
    Scalar b = u_nu(zs[i]);
    positive[i] = sign(b - u_mu(zs[i]), scaled_tol(b, tol)) > 0;
  }
  if (positive.front() || positive.back())
    throw SplitInfeasible("potential difference does not vanish at the support boundary");

  Decomposition d;
  d.mu = mu;
  d.nu = nu;
  std::vector<Atom> stationary;
  DiscreteMeasure nu_components = DiscreteMeasure::make({}, mode);

  std::size_t a = 0;
  while (a + 1 < zs.size()) {
    std::size_t b = a + 1;
    while (positive[b]) ++b;
    if (b > a + 1) {
      const Scalar& l = zs[a];
      const Scalar& r = zs[b];
      IrreducibleComponent c;
      c.index = d.components.size() + 1;
      c.interval = {l, r};
      c.mu = mu.restrict_open(l, r);
      DiscreteMeasure nu_inner = nu.restrict_open(l, r);
      Scalar m0 = c.mu.mass() - nu_inner.mass();
      Scalar m1 = c.mu.first_moment() - nu_inner.first_moment();
      Scalar right_share = (m1 - l * m0) / (r - l);
      Scalar left_share = m0 - right_share;
      for (Scalar* share : {&left_share, &right_share}) {
        int s = sign(*share, scaled_tol(m0, tol));
        if (s < 0)
          throw SplitInfeasible("negative endpoint share " + share->str() + " for component (" +
                                l.str() + ", " + r.str() + ")");
        if (s == 0) *share = Scalar(0).as(mode);
      }
      std::vector<Atom> nu_atoms = nu_inner.atoms();
      if (left_share.sign() > 0) nu_atoms.push_back({l, left_share});
      if (right_share.sign() > 0) nu_atoms.push_back({r, right_share});
      c.nu = DiscreteMeasure::make(std::move(nu_atoms), mode);
      c.left_closed = left_share.sign() > 0;
      c.right_closed = right_share.sign() > 0;
      nu_components = nu_components.plus(c.nu);
      d.components.push_back(std::move(c));
    }
    a = b;
  }

  for (const auto& atom : mu.atoms()) {
    if (!d.component_of(atom.x)) stationary.push_back(atom);
  }
  d.stationary = DiscreteMeasure::make(std::move(stationary), mode);
  d.identity_coupling_mass = d.stationary.mass();

  DiscreteMeasure nu_rest;
  try {
    nu_rest = nu.minus(nu_components, tol);
  } catch (const NegativeMass& e) {
    throw SplitInfeasible(std::string("endpoint shares exceed the atoms of nu: ") + e.what());
  }
  // nu_0 must coincide with mu_0.
  bool same = nu_rest.size() == d.stationary.size();
  for (std::size_t i = 0; same && i < nu_rest.size(); ++i) {
    same = nu_rest.atoms()[i].x == d.stationary.atoms()[i].x &&
           approx_equal(nu_rest.atoms()[i].w, d.stationary.atoms()[i].w, tol);
  }
  if (!same) throw SplitInfeasible("residual of nu does not match the stationary part of mu");
  return d;
}

Scalar endpoint_slope_gap(const IrreducibleComponent& component, Side side) {
  const auto& end = side == Side::left ? component.interval.lo : component.interval.hi;
  if (!end) throw InfiniteEndpoint("endpoint is infinite");
  const PotentialFunction u_mu(component.mu);
  const PotentialFunction u_nu(component.nu);
  if (side == Side::right) return u_mu.left_derivative(*end) - u_nu.left_derivative(*end);
  return u_nu.right_derivative(*end) - u_mu.right_derivative(*end);
}

}  // namespace mot::measures
