#include "mot/coupling.hpp"

namespace mot::transport {

using measures::Atom;
using measures::DiscreteMeasure;

void Coupling::add(const Scalar& x, const Scalar& y, const Scalar& mass) {
  if (mass.sign() == 0) return;
  if (mass.sign() < 0) throw Error("negative coupling mass at (" + x.str() + ", " + y.str() + ")");
  auto key = SupportPair{x.as(mode_), y.as(mode_)};
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    entries_.emplace(std::move(key), mass.as(mode_));
  } else {
    it->second += mass.as(mode_);
  }
}

Scalar Coupling::at(const Scalar& x, const Scalar& y) const {
  auto it = entries_.find({x, y});
  return it == entries_.end() ? Scalar(0).as(mode_) : it->second;
}

Scalar Coupling::mass() const {
  Scalar m = Scalar(0).as(mode_);
  for (const auto& [xy, w] : entries_) m += w;
  return m;
}

DiscreteMeasure Coupling::first_marginal() const {
  std::vector<Atom> atoms;
  for (const auto& [xy, w] : entries_) atoms.push_back({xy.first, w});
  return DiscreteMeasure::make(std::move(atoms), mode_);
}

DiscreteMeasure Coupling::second_marginal() const {
  std::vector<Atom> atoms;
  for (const auto& [xy, w] : entries_) atoms.push_back({xy.second, w});
  return DiscreteMeasure::make(std::move(atoms), mode_);
}

Coupling Coupling::restrict_rows(const std::function<bool(const Scalar&)>& keep) const {
  Coupling out(mode_);
  for (const auto& [xy, w] : entries_)
    if (keep(xy.first)) out.entries_.emplace(xy, w);
  return out;
}

Coupling Coupling::scaled(const Scalar& factor) const {
  Coupling out(mode_);
  for (const auto& [xy, w] : entries_) out.add(xy.first, xy.second, w * factor);
  return out;
}

Coupling Coupling::plus(const Coupling& other) const {
  Coupling out = *this;
  for (const auto& [xy, w] : other.entries_) out.add(xy.first, xy.second, w);
  return out;
}

Scalar Coupling::expectation(const std::function<Scalar(const Scalar&, const Scalar&)>& g) const {
  Scalar s = Scalar(0).as(mode_);
  for (const auto& [xy, w] : entries_) s += w * g(xy.first, xy.second);
  return s;
}

CouplingResiduals residuals(const Coupling& p, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  CouplingResiduals r;
  for (const auto& a : mu.atoms()) {
    r.mu_residual[a.x] = -a.w;
    r.martingale_residual[a.x] = Scalar(0).as(mu.mode());
  }
  for (const auto& a : nu.atoms()) r.nu_residual[a.x] = -a.w;
  for (const auto& [xy, w] : p.entries()) {
    const auto& [x, y] = xy;
    r.mu_residual[x] += w;
    r.nu_residual[y] += w;
    r.martingale_residual[x] += w * (y - x);
  }
  return r;
}

bool CouplingResiduals::is_martingale_coupling(double tol) const {
  return first_violation(tol).empty();
}

std::string CouplingResiduals::first_violation(double tol) const {
  for (const auto& [x, v] : mu_residual)
    if (!is_zero(v, tol)) return "first marginal differs at " + x.str() + " by " + v.str();
  for (const auto& [y, v] : nu_residual)
    if (!is_zero(v, tol)) return "second marginal differs at " + y.str() + " by " + v.str();
  for (const auto& [x, v] : martingale_residual)
    if (!is_zero(v, tol)) return "conditional mean residual " + v.str() + " at " + x.str();
  return {};
}

void require_martingale_coupling(const Coupling& p, const DiscreteMeasure& mu,
                                 const DiscreteMeasure& nu, double tol) {
  auto msg = residuals(p, mu, nu).first_violation(tol);
  if (!msg.empty()) throw NotMartingale(msg);
}

}  // namespace mot::transport
