#pragma once

#include <functional>
#include <map>
#include <utility>

#include "mot/measures.hpp"

namespace mot::transport {

using SupportPair = std::pair<Scalar, Scalar>;

class NotMartingale : public Error {
 public:
  using Error::Error;
};

/// Sparse joint measure on pairs of support points.
class Coupling {
 public:
  explicit Coupling(Mode mode = Mode::exact) : mode_(mode) {}

  /// Adds mass at (x, y); zero masses are ignored.
  void add(const Scalar& x, const Scalar& y, const Scalar& mass);
  Scalar at(const Scalar& x, const Scalar& y) const;
  const std::map<SupportPair, Scalar>& entries() const { return entries_; }
  Mode mode() const { return mode_; }

  Scalar mass() const;
  measures::DiscreteMeasure first_marginal() const;
  measures::DiscreteMeasure second_marginal() const;
  /// Entries whose first coordinate satisfies `keep`.
  Coupling restrict_rows(const std::function<bool(const Scalar&)>& keep) const;
  Coupling scaled(const Scalar& factor) const;
  Coupling plus(const Coupling& other) const;
  /// Sum of p(x, y) * g(x, y).
  Scalar expectation(const std::function<Scalar(const Scalar&, const Scalar&)>& g) const;

  friend bool operator==(const Coupling& a, const Coupling& b) { return a.entries_ == b.entries_; }

 private:
  Mode mode_;
  std::map<SupportPair, Scalar> entries_;
};

struct CouplingResiduals {
  std::map<Scalar, Scalar> mu_residual;          // row sum - mu(x)
  std::map<Scalar, Scalar> nu_residual;          // column sum - nu(y)
  std::map<Scalar, Scalar> martingale_residual;  // sum_y p(x, y)(y - x)

  /// All residuals zero (exact) or within `tol` (approx).
  bool is_martingale_coupling(double tol = kDefaultTolerance) const;
  std::string first_violation(double tol = kDefaultTolerance) const;
};

CouplingResiduals residuals(const Coupling& p, const measures::DiscreteMeasure& mu,
                            const measures::DiscreteMeasure& nu);

/// Throws NotMartingale unless p is a martingale coupling of (mu, nu).
void require_martingale_coupling(const Coupling& p, const measures::DiscreteMeasure& mu,
                                 const measures::DiscreteMeasure& nu,
                                 double tol = kDefaultTolerance);

}  // namespace mot::transport
