#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mot/coupling.hpp"
#include "mot/lp.hpp"
#include "mot/measures.hpp"

namespace mot::transport {

class NotInOrder : public Error {
 public:
  using Error::Error;
};

/// f = +inf at a pair that some martingale coupling charges.
class UnboundedReward : public Error {
 public:
  UnboundedReward(const SupportPair& pair, const std::string& what)
      : Error(what), pair_(pair) {}
  const SupportPair& pair() const { return pair_; }

 private:
  SupportPair pair_;
};

/// f = +inf at a polar pair: no certificate satisfies every pointwise constraint.
class PointwiseInfeasible : public Error {
 public:
  using Error::Error;
};

enum class Formulation { pointwise, quasisure, componentwise };
std::string to_string(Formulation f);
Formulation parse_formulation(const std::string& text);

enum class RewardKind { square_diff, abs_diff, indicator_offdiag, table, penalized_band, offblock_sqrt };
std::string to_string(RewardKind k);

/**
 * @brief A reward f(x, y), either a built-in formula or a table.
 *
 * Tables list values per pair and fall back to `table_default` for other
 * pairs; evaluating a missing pair without a default throws.
 */
class RewardSpec {
 public:
  static RewardSpec square_diff();
  static RewardSpec abs_diff();
  static RewardSpec indicator_offdiag();
  static RewardSpec table(std::map<SupportPair, Extended> entries,
                          std::optional<Extended> fallback = std::nullopt);
  /// 0 inside the band |x - y| < delta, -1 on its edge, -penalty outside
  /// (-inf when penalty is absent).
  static RewardSpec penalized_band(Scalar delta, std::optional<Scalar> penalty = std::nullopt);
  /// sqrt(|xy|) for x in (-1, 0) and y in (0, 1), else 0.
  static RewardSpec offblock_sqrt();

  RewardKind kind() const { return kind_; }
  const std::map<SupportPair, Extended>& entries() const { return entries_; }
  const std::optional<Extended>& table_default() const { return default_; }
  const std::optional<Scalar>& delta() const { return delta_; }
  const std::optional<Scalar>& penalty() const { return penalty_; }

  Extended operator()(const Scalar& x, const Scalar& y) const;

 private:
  RewardKind kind_ = RewardKind::square_diff;
  std::map<SupportPair, Extended> entries_;
  std::optional<Extended> default_;
  std::optional<Scalar> delta_;
  std::optional<Scalar> penalty_;
};

struct DualCertificate {
  std::map<Scalar, Extended> phi;  // on supp mu
  std::map<Scalar, Extended> psi;  // on supp nu
  std::map<Scalar, Scalar> h;      // on supp mu
  Formulation formulation = Formulation::quasisure;
  Extended value;

  /// phi(x) + psi(y) + h(x)(y - x); throws if x or y is not covered.
  Extended evaluate(const Scalar& x, const Scalar& y) const;
};

/// mu(phi) + nu(psi); +inf if an infinite entry carries mass.
Extended certificate_value(const DualCertificate& cert, const measures::DiscreteMeasure& mu,
                           const measures::DiscreteMeasure& nu);

/// Pairs of `pairs` where the certificate falls below f (empty when feasible).
std::vector<SupportPair> certificate_violations(const DualCertificate& cert, const RewardSpec& f,
                                                const std::vector<SupportPair>& pairs,
                                                double tol = kDefaultTolerance);

/// (phi + c1 + c2 x, psi - c1 - c2 y, h + c2); the value is recomputed.
DualCertificate gauge_transform(const DualCertificate& cert, const Scalar& c1, const Scalar& c2,
                                const measures::DiscreteMeasure& mu,
                                const measures::DiscreteMeasure& nu);

/// Pairs carrying dual constraints, sorted. Componentwise returns the union of
/// the groups from component_pairs.
std::vector<SupportPair> constraint_pairs(const measures::Decomposition& d, Formulation formulation);

/// Group 0 is the stationary diagonal, group k the pairs of component k.
std::vector<std::vector<SupportPair>> component_pairs(const measures::Decomposition& d);

struct MotLp {
  lp::LinearProgram program;
  std::vector<SupportPair> pairs;  // one column per pair, same order
  std::vector<Scalar> mu_atoms;    // mu row i and martingale row i
  std::vector<Scalar> nu_atoms;
  std::size_t mu_row0 = 0;
  std::size_t nu_row0 = 0;
  std::size_t martingale_row0 = 0;
  /// Columns whose reward was -inf and replaced by -big_m.
  std::vector<bool> penalized;
  std::optional<Scalar> big_m;
  /// The finite reward actually used, on `pairs`.
  RewardSpec effective_reward = RewardSpec::table({});
};

/// Big-M constant for the finite values of f on `pairs`.
Scalar big_m_constant(const RewardSpec& f, const std::vector<SupportPair>& pairs,
                      const measures::DiscreteMeasure& mu, const measures::DiscreteMeasure& nu);

/// LP over couplings restricted to `pairs`. Rewards must be finite or -inf there.
MotLp build_lp_on_pairs(const measures::DiscreteMeasure& mu, const measures::DiscreteMeasure& nu,
                        const RewardSpec& f, std::vector<SupportPair> pairs,
                        std::optional<Scalar> big_m = std::nullopt);

/// Throws NotInOrder, UnboundedReward (chargeable +inf) and, for the pointwise
/// formulation, PointwiseInfeasible (+inf at a polar pair).
MotLp build_mot_lp(const measures::DiscreteMeasure& mu, const measures::DiscreteMeasure& nu,
                   const RewardSpec& f, Formulation formulation);

struct MotSolution {
  Extended primal_value;
  Coupling coupling;
  DualCertificate certificate;
  measures::Decomposition decomposition;
  std::optional<std::vector<SupportPair>> gamma;
  /// Set when f = +inf at a chargeable pair; no LP is solved then.
  std::optional<SupportPair> unbounded_pair;
  /// Largest penalty used. Starts at big_m_constant and is quadrupled while the
  /// optimizer charges a penalized cell that some martingale coupling avoids.
  std::optional<Scalar> big_m;
  /// The optimizer charges a penalized (-inf) cell: the true value is -inf.
  bool effectively_neg_inf = false;
  RewardSpec effective_reward = RewardSpec::table({});
  /// One report per LP solved (one per component for componentwise).
  std::vector<lp::VerificationReport> verification;
  /// Value of each component (index k-1) and of the stationary part.
  std::vector<Scalar> component_values;
  Scalar stationary_value;
  std::size_t redundant_rows = 0;

  bool verified() const;
};

struct SolveConfig {
  lp::SolveOptions lp;
  lp::VerifyTolerances verify;
  bool compute_gamma = true;
};

MotSolution solve_primal_dual(const measures::DiscreteMeasure& mu,
                              const measures::DiscreteMeasure& nu, const RewardSpec& f,
                              Formulation formulation, Mode mode = Mode::exact,
                              const SolveConfig& config = {});

/// Solves max p(f) over martingale couplings of (mu, nu) supported on `pairs`.
/// Returns nullopt when no such coupling exists.
struct RestrictedSolve {
  Scalar value;
  Coupling coupling;
};
std::optional<RestrictedSolve> solve_on_pairs(const measures::DiscreteMeasure& mu,
                                              const measures::DiscreteMeasure& nu,
                                              const RewardSpec& f,
                                              const std::vector<SupportPair>& pairs);

enum class PolarReason { mu_null, nu_null, crosses_barrier, charged };
std::string to_string(PolarReason r);

struct PolarVerdict {
  SupportPair point;
  bool polar = false;
  PolarReason reason = PolarReason::charged;
};

std::vector<PolarVerdict> is_polar(const measures::Decomposition& d,
                                   const std::vector<SupportPair>& points);

/// Maximizes p(point) over martingale couplings; nullopt when the maximum is 0.
std::optional<Coupling> charging_witness(const measures::DiscreteMeasure& mu,
                                         const measures::DiscreteMeasure& nu,
                                         const SupportPair& point);

/// Quasi-sure pairs where the certificate is tight for f.
std::vector<SupportPair> monotonicity_set(const DualCertificate& cert, const RewardSpec& f,
                                          const measures::Decomposition& d,
                                          double tol = kDefaultTolerance);

struct OptimalityCheck {
  bool concentrated = false;
  bool optimal = false;
  Scalar coupling_value;
  Extended own_value;  // optimum for the coupling's own marginals
};

/// Throws NotMartingale if `coupling` is not a martingale coupling of its marginals.
OptimalityCheck check_optimality_via_gamma(const Coupling& coupling,
                                           const std::vector<SupportPair>& gamma,
                                           const RewardSpec& f, double tol = kDefaultTolerance);

struct Minorant {
  std::map<Scalar, Scalar> phi;
  std::map<Scalar, Scalar> psi;
  std::map<Scalar, Scalar> h;
};

struct RelaxedReward {
  RewardSpec reward = RewardSpec::table({});  // table on supp phi x supp psi, >= 0
  Scalar offset;                              // mu(phi0) + nu(psi0)
};

/// [f - phi0 - psi0 - h0 (y - x)]^+ on the minorant's supports.
RelaxedReward relax_lower_bound(const RewardSpec& f, const Minorant& minorant,
                                const measures::DiscreteMeasure& mu,
                                const measures::DiscreteMeasure& nu);

}  // namespace mot::transport
