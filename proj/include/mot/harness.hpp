#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mot/measures.hpp"
#include "mot/transport.hpp"

namespace mot::harness {

class BadParams : public Error {
 public:
  using Error::Error;
};

class AssertionFailure : public Error {
 public:
  using Error::Error;
};

enum class ScenarioName {
  pointwise_gap,
  nonsmooth_two_component,
  integrability_failure,
  integrability_gap,
  no_lower_bound
};
std::string to_string(ScenarioName name);
/// Accepts the dashed names, e.g. "pointwise-gap". Throws BadParams.
ScenarioName parse_scenario(const std::string& text);
std::vector<ScenarioName> all_scenarios();

struct ScenarioParams {
  /// Grid size; nullopt picks the scenario default (8 for no-lower-bound, else 4).
  std::optional<long> n;
  /// Truncation of the integrability scenarios.
  long N = 10;
  Scalar delta = Scalar::exact(1, 4);
  /// Finite penalty for the no-lower-bound band; nullopt keeps -inf.
  std::optional<Scalar> penalty;
};

struct Scenario {
  ScenarioName name = ScenarioName::pointwise_gap;
  long n = 0;  // resolved grid size (0 for the integrability scenarios)
  ScenarioParams params;
  measures::DiscreteMeasure mu;
  measures::DiscreteMeasure nu;
  transport::RewardSpec reward = transport::RewardSpec::square_diff();
};

/**
 * @brief Builds a finite instance of one of the five scenarios.
 *
 * pointwise-gap: mu = nu uniform on {k/n : 0 <= k <= n}, f = 1{x != y}.
 * nonsmooth-two-component: mu uniform on the midpoints +-(2k-1)/(2n), nu on the
 * grid {k/n} of [-1, 1]; components (-1, 0) and (0, 1); f = sqrt(|xy|) on (-1,0)x(0,1).
 * integrability-*: weights proportional to i^-3 on 1..N, nu spreads each atom
 * over i-1, i, i+1; f = 1{x != y} (failure) or (x - y)^2 (gap).
 * no-lower-bound: mu uniform on {k/n}, nu = average of mu shifted by -delta and
 * +delta, band reward. delta * n must be a positive integer.
 */
Scenario build_example(ScenarioName name, const ScenarioParams& params = {});

struct Check {
  std::string clause;
  bool passed = false;
  std::string detail;
};

struct PropertyReport {
  ScenarioName scenario = ScenarioName::pointwise_gap;
  std::vector<Check> checks;
  /// Named observables in canonical text form.
  std::map<std::string, std::string> values;

  bool passed() const;
  const Check* first_failure() const;
};

PropertyReport verify_example_properties(const Scenario& scenario);
/// Throws AssertionFailure naming the first failed clause.
void require_properties(const PropertyReport& report);

struct IntegrabilityFit {
  /// Atoms i with i - 1 and i + 1 also in supp mu whose banded pairs all carry mass.
  std::vector<Scalar> interior;
  bool diagonal_balanced = true;     // phi(i) + psi(i) = 0 on the interior
  bool second_difference_two = true;  // 2 phi(i) - phi(i-1) - phi(i+1) = 2
  std::optional<Scalar> b, c;        // phi(i) = -i^2 + b i + c, fitted from two atoms
  bool quadratic_fit = false;
  std::vector<std::string> failures;
};

/// Equality-system analysis of an exact solution of the integrability-failure scenario.
IntegrabilityFit analyze_integrability(const transport::MotSolution& solution);

/**
 * @brief Smallest osc(phi) + osc(psi) over certificates of the formulation
 * whose value is at most `value`.
 *
 * Solved through its LP dual: maximize p(f) - value * t over nonnegative p on
 * the formulation's pairs, with the row sums of p within mu t (resp. nu t) up
 * to the difference of two probability vectors, and p martingale. -inf entries
 * of f are replaced by the big-M penalty used by the transport LP.
 */
Scalar min_oscillation(const measures::DiscreteMeasure& mu, const measures::DiscreteMeasure& nu,
                       const transport::RewardSpec& f, transport::Formulation formulation,
                       const Scalar& value);

struct RefinementRecord {
  long level = 0;
  Scalar primal_value;
  Scalar quasisure_min_osc;
  Scalar pointwise_min_osc;
  bool penalized_cell_used = false;
};

struct RefinementReport {
  ScenarioName scenario = ScenarioName::pointwise_gap;
  std::vector<RefinementRecord> records;  // in level order
  std::vector<Check> verdicts;

  bool passed() const;
};

/// Levels are grid sizes n. Only pointwise-gap, nonsmooth-two-component and
/// no-lower-bound are refinable; others throw BadParams. Levels run concurrently.
RefinementReport run_refinement_study(ScenarioName name, const std::vector<long>& levels,
                                      const ScenarioParams& base = {});

}  // namespace mot::harness
