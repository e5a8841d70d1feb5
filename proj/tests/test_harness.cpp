#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mot/harness.hpp"
#include "mot/lp.hpp"

using namespace fixtures;
using namespace mot::harness;
using mot::Extended;
using mot::transport::Formulation;
using mot::transport::RewardSpec;
using mot::transport::SupportPair;

namespace {

// sum_t w |t - x| evaluated directly
Scalar potential_at(const DiscreteMeasure& m, const Scalar& x) {
  Scalar out;
  for (const auto& a : m.atoms()) out += a.w * (a.x - x).abs();
  return out;
}

// Convex order for equal mass and mean: u_mu <= u_nu at every joint atom.
bool ordered_by_potentials(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.mass() != nu.mass() || mu.first_moment() != nu.first_moment()) return false;
  for (const auto* m : {&mu, &nu})
    for (const auto& a : m->atoms())
      if (potential_at(mu, a.x) > potential_at(nu, a.x)) return false;
  return true;
}

Scalar variance(const DiscreteMeasure& m) {
  Scalar mean, second;
  for (const auto& a : m.atoms()) {
    mean += a.w * a.x;
    second += a.w * a.x * a.x;
  }
  return second - mean * mean;
}

// Minimizes osc(phi) + osc(psi) directly: free variables are split into
// positive and negative parts and the program is stated as a maximization of
// the negated oscillation.
Scalar min_oscillation_primal(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const RewardSpec& f,
                              const std::vector<SupportPair>& pairs, const Scalar& value) {
  using namespace mot::lp;
  LinearProgram lp;
  struct Free {
    std::size_t plus, minus;
  };
  auto free_var = [&](const std::string& name, const Scalar& objective) {
    return Free{lp.add_column(name + "+", objective), lp.add_column(name + "-", -objective)};
  };
  std::map<Scalar, Free> phi, psi, h;
  for (const auto& a : mu.atoms()) {
    phi.emplace(a.x, free_var("phi" + a.x.str(), Scalar(0)));
    h.emplace(a.x, free_var("h" + a.x.str(), Scalar(0)));
  }
  for (const auto& b : nu.atoms()) psi.emplace(b.x, free_var("psi" + b.x.str(), Scalar(0)));
  Free phi_hi = free_var("phi_hi", Scalar(-1)), phi_lo = free_var("phi_lo", Scalar(1));
  Free psi_hi = free_var("psi_hi", Scalar(-1)), psi_lo = free_var("psi_lo", Scalar(1));
  using Terms = std::vector<std::pair<std::size_t, Scalar>>;
  auto add = [](Terms& t, const Free& v, const Scalar& c) {
    t.emplace_back(v.plus, c);
    t.emplace_back(v.minus, -c);
  };
  int k = 0;
  auto bound_rows = [&](const std::map<Scalar, Free>& vars, const Free& hi, const Free& lo) {
    for (const auto& [x, v] : vars) {
      Terms below_hi, above_lo;
      add(below_hi, v, Scalar(1));
      add(below_hi, hi, Scalar(-1));
      add(above_lo, lo, Scalar(1));
      add(above_lo, v, Scalar(-1));
      lp.add_row("b" + std::to_string(k++), RowSense::less_equal, Scalar(0), below_hi);
      lp.add_row("b" + std::to_string(k++), RowSense::less_equal, Scalar(0), above_lo);
    }
  };
  bound_rows(phi, phi_hi, phi_lo);
  bound_rows(psi, psi_hi, psi_lo);
  for (const auto& [x, y] : pairs) {
    Terms t;
    add(t, phi.at(x), Scalar(-1));
    add(t, psi.at(y), Scalar(-1));
    if ((y - x).sign() != 0) add(t, h.at(x), -(y - x));
    lp.add_row("c" + std::to_string(k++), RowSense::less_equal, -f(x, y).value(), t);
  }
  Terms budget;
  for (const auto& a : mu.atoms()) add(budget, phi.at(a.x), a.w);
  for (const auto& b : nu.atoms()) add(budget, psi.at(b.x), b.w);
  lp.add_row("value", RowSense::less_equal, value, budget);
  auto sol = solve_lp(lp);
  EXPECT_EQ(sol.status, Status::optimal);
  return -sol.objective;
}

std::vector<SupportPair> every_pair(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<SupportPair> out;
  for (const auto& a : mu.atoms())
    for (const auto& b : nu.atoms()) out.emplace_back(a.x, b.x);
  return out;
}

ScenarioParams with_n(long n) {
  ScenarioParams p;
  p.n = n;
  return p;
}

}  // namespace

TEST(Scenario, NamesRoundTrip) {
  for (auto name : all_scenarios()) EXPECT_EQ(parse_scenario(to_string(name)), name);
  EXPECT_THROW(parse_scenario("gap"), BadParams);
}

TEST(BuildExample, PointwiseGapIsStationary) {
  auto s = build_example(ScenarioName::pointwise_gap, with_n(4));
  EXPECT_EQ(s.mu.size(), 5u);
  EXPECT_EQ(s.mu, s.nu);
  auto d = mot::measures::decompose(s.mu, s.nu);
  EXPECT_TRUE(d.components.empty());
  EXPECT_EQ(d.stationary.mass(), Scalar(1));
}

TEST(BuildExample, IntegrabilityWeights) {
  ScenarioParams p;
  p.N = 3;
  auto s = build_example(ScenarioName::integrability_failure, p);
  ASSERT_EQ(s.mu.size(), 3u);
  EXPECT_EQ(s.mu.mass_at(Scalar(2)) / s.mu.mass_at(Scalar(1)), q(1, 8));
  EXPECT_EQ(s.mu.mass_at(Scalar(3)) / s.mu.mass_at(Scalar(1)), q(1, 27));
  EXPECT_EQ(s.mu.mass(), Scalar(1));
  EXPECT_TRUE(ordered_by_potentials(s.mu, s.nu));
  EXPECT_EQ(s.nu.atoms().front().x, Scalar(0));
  EXPECT_EQ(s.nu.atoms().back().x, Scalar(4));
}

TEST(BuildExample, NoLowerBoundVarianceGap) {
  auto s = build_example(ScenarioName::no_lower_bound, with_n(8));
  EXPECT_EQ(s.mu.size(), 9u);
  EXPECT_EQ(variance(s.nu) - variance(s.mu), q(1, 16));
  EXPECT_TRUE(ordered_by_potentials(s.mu, s.nu));
}

TEST(BuildExample, NonsmoothPotentialsTouchOnlyAtBarriers) {
  for (long n : {2, 3, 5}) {
    auto s = build_example(ScenarioName::nonsmooth_two_component, with_n(n));
    EXPECT_TRUE(ordered_by_potentials(s.mu, s.nu));
    for (long k = -4 * n; k <= 4 * n; ++k) {
      Scalar x = q(k, 4 * n);
      Scalar gap = potential_at(s.nu, x) - potential_at(s.mu, x);
      if (k == 0 || k == -4 * n || k == 4 * n)
        EXPECT_EQ(gap, Scalar(0)) << "n=" << n << " x=" << x;
      else
        EXPECT_GT(gap, Scalar(0)) << "n=" << n << " x=" << x;
    }
  }
}

TEST(BuildExample, RejectsBadParams) {
  EXPECT_THROW(build_example(ScenarioName::pointwise_gap, with_n(1)), BadParams);
  ScenarioParams short_truncation;
  short_truncation.N = 2;
  EXPECT_THROW(build_example(ScenarioName::integrability_gap, short_truncation), BadParams);
  ScenarioParams misaligned = with_n(8);
  misaligned.delta = q(1, 3);
  EXPECT_THROW(build_example(ScenarioName::no_lower_bound, misaligned), BadParams);
  ScenarioParams bad_penalty = with_n(8);
  bad_penalty.penalty = Scalar(0);
  EXPECT_THROW(build_example(ScenarioName::no_lower_bound, bad_penalty), BadParams);
}

TEST(VerifyExampleProperties, AllScenariosPass) {
  for (auto name : all_scenarios()) {
    auto report = verify_example_properties(build_example(name));
    EXPECT_TRUE(report.passed()) << to_string(name) << ": "
                                 << (report.first_failure() ? report.first_failure()->clause : "");
    EXPECT_NO_THROW(require_properties(report));
  }
}

TEST(VerifyExampleProperties, PointwiseGapZeroCertificate) {
  auto s = build_example(ScenarioName::pointwise_gap, with_n(8));
  auto qs = mot::transport::solve_primal_dual(s.mu, s.nu, s.reward, Formulation::quasisure);
  for (const auto& [x, v] : qs.certificate.phi) EXPECT_EQ(v, Extended(0));
  for (const auto& [y, v] : qs.certificate.psi) EXPECT_EQ(v, Extended(0));
  for (const auto& [x, v] : qs.certificate.h) EXPECT_EQ(v, Scalar(0));
  EXPECT_TRUE(verify_example_properties(s).passed());
}

TEST(VerifyExampleProperties, NoLowerBoundMatchesBandRestrictedSolve) {
  auto s = build_example(ScenarioName::no_lower_bound, with_n(8));
  auto sol = mot::transport::solve_primal_dual(s.mu, s.nu, s.reward, Formulation::quasisure);
  EXPECT_EQ(sol.primal_value, Extended(-1));
  EXPECT_FALSE(sol.effectively_neg_inf);
  // re-solve over the finite cells only
  std::vector<SupportPair> band;
  for (const auto& p : every_pair(s.mu, s.nu))
    if ((p.second - p.first).abs() <= q(1, 4)) band.push_back(p);
  auto restricted = mot::transport::solve_on_pairs(s.mu, s.nu, s.reward, band);
  ASSERT_TRUE(restricted.has_value());
  EXPECT_EQ(restricted->value, Scalar(-1));
  EXPECT_EQ(restricted->coupling, sol.coupling);
}

TEST(VerifyExampleProperties, IntegrabilitySecondDifferences) {
  auto s = build_example(ScenarioName::integrability_failure);
  auto sol = mot::transport::solve_primal_dual(s.mu, s.nu, s.reward, Formulation::quasisure);
  auto fit = analyze_integrability(sol);
  // the banded coupling is the only optimizer, so every i in 2..N-1 qualifies
  ASSERT_EQ(fit.interior.size(), 8u);
  for (const auto& i : fit.interior) {
    Scalar phi_prev = sol.certificate.phi.at(i - Scalar(1)).value();
    Scalar phi_i = sol.certificate.phi.at(i).value();
    Scalar phi_next = sol.certificate.phi.at(i + Scalar(1)).value();
    EXPECT_EQ(Scalar(2) * phi_i - phi_prev - phi_next, Scalar(2)) << i;
    EXPECT_EQ(phi_i + sol.certificate.psi.at(i).value(), Scalar(0)) << i;
  }
  EXPECT_TRUE(fit.quadratic_fit);
  // -x^2 itself is a dual optimizer, so any fit must reproduce the value
  EXPECT_EQ(sol.primal_value, Extended(q(2, 3)));
}

TEST(VerifyExampleProperties, IntegrabilityGapSingleComponent) {
  ScenarioParams p;
  p.N = 6;
  auto s = build_example(ScenarioName::integrability_gap, p);
  auto d = mot::measures::decompose(s.mu, s.nu);
  ASSERT_EQ(d.components.size(), 1u);
  EXPECT_EQ(d.components[0].interval.lo, Scalar(0));
  EXPECT_EQ(d.components[0].interval.hi, Scalar(7));
  EXPECT_TRUE(verify_example_properties(s).passed());
}

TEST(MinOscillation, PointwiseGapMatchesPrimalForm) {
  for (long n : {2, 3, 4}) {
    auto s = build_example(ScenarioName::pointwise_gap, with_n(n));
    Scalar dual_form = min_oscillation(s.mu, s.nu, s.reward, Formulation::pointwise, Scalar(0));
    Scalar primal_form = min_oscillation_primal(s.mu, s.nu, s.reward, every_pair(s.mu, s.nu), Scalar(0));
    EXPECT_EQ(dual_form, primal_form) << "n=" << n;
    EXPECT_GE(dual_form, q(n * n, 8));
    EXPECT_EQ(min_oscillation(s.mu, s.nu, s.reward, Formulation::quasisure, Scalar(0)), Scalar(0));
  }
}

TEST(MinOscillationProperty, DualFormMatchesPrimalForm) {
  Rng rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    auto inst = random_instance(rng, 4);
    auto f = random_table(rng, inst.mu, inst.nu);
    for (auto form : {Formulation::pointwise, Formulation::quasisure}) {
      auto sol = mot::transport::solve_primal_dual(inst.mu, inst.nu, f, form);
      Scalar value = sol.primal_value.value();
      auto d = mot::measures::decompose(inst.mu, inst.nu);
      auto pairs = mot::transport::constraint_pairs(d, form);
      Scalar dual_form = min_oscillation(inst.mu, inst.nu, f, form, value);
      Scalar primal_form = min_oscillation_primal(inst.mu, inst.nu, f, pairs, value);
      EXPECT_EQ(dual_form, primal_form) << "trial " << trial << " " << to_string(form);
      // the solver's own certificate is feasible, so it bounds the minimum
      auto osc = [](const std::map<Scalar, Extended>& v) {
        Scalar lo = v.begin()->second.value(), hi = lo;
        for (const auto& [x, e] : v) {
          lo = mot::min(lo, e.value());
          hi = mot::max(hi, e.value());
        }
        return hi - lo;
      };
      EXPECT_LE(dual_form, osc(sol.certificate.phi) + osc(sol.certificate.psi)) << "trial " << trial;
    }
  }
}

TEST(RefinementStudy, PointwiseGapGrowth) {
  auto report = run_refinement_study(ScenarioName::pointwise_gap, {4, 8, 16});
  ASSERT_EQ(report.records.size(), 3u);
  for (const auto& r : report.records) {
    EXPECT_EQ(r.quasisure_min_osc, Scalar(0));
    EXPECT_GE(r.pointwise_min_osc, q(r.level * r.level, 8));
    EXPECT_EQ(r.primal_value, Scalar(0));
  }
  EXPECT_LT(report.records[0].pointwise_min_osc, report.records[1].pointwise_min_osc);
  EXPECT_LT(report.records[1].pointwise_min_osc, report.records[2].pointwise_min_osc);
  EXPECT_TRUE(report.passed());
}

TEST(RefinementStudy, NoLowerBoundTrend) {
  auto report = run_refinement_study(ScenarioName::no_lower_bound, {8, 16});
  ASSERT_EQ(report.records.size(), 2u);
  for (const auto& r : report.records) {
    EXPECT_EQ(r.primal_value, Scalar(-1));
    EXPECT_FALSE(r.penalized_cell_used);
  }
  EXPECT_LE(report.records[0].pointwise_min_osc, report.records[1].pointwise_min_osc);
  EXPECT_TRUE(report.passed());
}

TEST(RefinementStudy, NonsmoothQuasisureStaysZero) {
  auto report = run_refinement_study(ScenarioName::nonsmooth_two_component, {2, 4});
  for (const auto& r : report.records) EXPECT_EQ(r.quasisure_min_osc, Scalar(0));
  EXPECT_TRUE(report.passed());
}

TEST(RefinementStudy, DeterministicAcrossRuns) {
  auto a = run_refinement_study(ScenarioName::pointwise_gap, {3, 5, 6});
  auto b = run_refinement_study(ScenarioName::pointwise_gap, {3, 5, 6});
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].level, b.records[i].level);
    EXPECT_EQ(a.records[i].pointwise_min_osc, b.records[i].pointwise_min_osc);
  }
}

TEST(RefinementStudy, RejectsBadInput) {
  EXPECT_THROW(run_refinement_study(ScenarioName::integrability_gap, {4}), BadParams);
  EXPECT_THROW(run_refinement_study(ScenarioName::pointwise_gap, {}), BadParams);
  EXPECT_THROW(run_refinement_study(ScenarioName::pointwise_gap, {8, 4}), BadParams);
  EXPECT_THROW(run_refinement_study(ScenarioName::pointwise_gap, {1, 4}), BadParams);
}
