#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace fixtures;
using namespace mot::integrals;
using mot::Extended;
using mot::measures::decompose;
using mot::measures::potential;
using mot::transport::RewardSpec;
using mot::transport::SupportPair;

namespace {

// The unique martingale coupling of the two-point pair.
Coupling two_point_coupling() {
  Coupling p;
  p.add(Scalar(0), Scalar(-1), q(1, 2));
  p.add(Scalar(0), Scalar(1), q(1, 2));
  return p;
}

// Plain finite-sum value of (mu - nu)(g).
Scalar plain_difference(const ConcaveFunction& g, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  Scalar total;
  for (const auto& a : mu.atoms()) total += a.w * g(a.x);
  for (const auto& a : nu.atoms()) total -= a.w * g(a.x);
  return total;
}

// chi on [a, b], continued by its tangent lines outside.
ConcaveFunction tangent_truncation(const ConcaveFunction& chi, const Scalar& a, const Scalar& b) {
  if (a == b) return ConcaveFunction({{a, chi(a)}}, chi.right_derivative(a), chi.right_derivative(a));
  std::vector<Breakpoint> bps{{a, chi(a)}};
  for (const auto& bp : chi.breakpoints())
    if (a < bp.x && bp.x < b) bps.push_back(bp);
  bps.push_back({b, chi(b)});
  return ConcaveFunction(std::move(bps), chi.right_derivative(a), chi.left_derivative(b));
}

struct IrreduciblePair {
  DiscreteMeasure mu, nu;
};

// Component of a random instance; retries until one exists.
IrreduciblePair random_irreducible(Rng& rng) {
  for (;;) {
    auto inst = random_instance(rng);
    auto d = decompose(inst.mu, inst.nu);
    if (d.components.empty()) continue;
    const auto& c = d.components[static_cast<std::size_t>(uniform_int(rng, 0, (long)d.components.size() - 1))];
    return {c.mu, c.nu};
  }
}

std::vector<SupportPair> all_pairs(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<SupportPair> out;
  for (const auto& a : mu.atoms())
    for (const auto& b : nu.atoms()) out.emplace_back(a.x, b.x);
  return out;
}

// Martingale coupling maximizing a random objective.
Coupling random_coupling(Rng& rng, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  auto solved = mot::transport::solve_on_pairs(mu, nu, random_table(rng, mu, nu), all_pairs(mu, nu));
  EXPECT_TRUE(solved.has_value());
  return solved->coupling;
}

}  // namespace

TEST(ConcaveFunction, RejectsConvexShape) {
  EXPECT_THROW(ConcaveFunction({{Scalar(0), Scalar(0)}}, Scalar(-1), Scalar(1)), NotConcave);
  EXPECT_THROW(ConcaveFunction({{Scalar(0), Scalar(0)}, {Scalar(1), Scalar(0)}, {Scalar(2), Scalar(1)}},
                               Scalar(0), Scalar(1)),
               NotConcave);
}

TEST(ConcaveFunction, EvaluatesWithExtensionsAndJumps) {
  ConcaveFunction chi({{Scalar(0), Scalar(0)}, {Scalar(2), Scalar(1)}}, Scalar(1), Scalar(-1),
                      {{Scalar(2), q(1, 2)}});
  EXPECT_EQ(chi(Scalar(-1)), Scalar(-1));
  EXPECT_EQ(chi(Scalar(1)), q(1, 2));
  EXPECT_EQ(chi.continuous_value(Scalar(2)), Scalar(1));
  EXPECT_EQ(chi(Scalar(2)), q(1, 2));
  EXPECT_EQ(chi(Scalar(3)), Scalar(0));
  auto second = chi.second_derivative();
  ASSERT_EQ(second.size(), 2u);
  EXPECT_EQ(second[0].second, q(1, 2));
  EXPECT_EQ(second[1].second, q(3, 2));
}

TEST(IntegralI2, NegativeAbsOnTwoPoint) {
  auto [mu, nu] = two_point();
  EXPECT_EQ(concave_integral_i2(ConcaveFunction::negative_abs(), mu, nu), Scalar(1));
  EXPECT_EQ(concave_integral_i3(ConcaveFunction::negative_abs(), mu, nu, two_point_coupling()), Scalar(1));
}

TEST(IntegralI2, AffineVanishes) {
  auto [mu, nu] = two_point();
  EXPECT_EQ(concave_integral_i2(ConcaveFunction::affine(q(3), q(-2, 7)), mu, nu), Scalar(0));
}

TEST(IntegralI2, BoundaryJump) {
  auto [mu, nu] = two_point();
  ConcaveFunction chi({{Scalar(0), Scalar(0)}}, Scalar(0), Scalar(0), {{Scalar(1), Scalar(1)}});
  EXPECT_EQ(concave_integral_i2(chi, mu, nu), q(1, 2));
  EXPECT_EQ(concave_integral_i3(chi, mu, nu, two_point_coupling()), q(1, 2));
}

TEST(IntegralI2, DomainMismatch) {
  auto [mu, nu] = two_point();
  ConcaveFunction outside({{Scalar(5), Scalar(0)}}, Scalar(0), Scalar(-1));
  EXPECT_THROW(concave_integral_i2(outside, mu, nu), DomainMismatch);
  ConcaveFunction inner_jump({{Scalar(0), Scalar(0)}}, Scalar(0), Scalar(0), {{Scalar(0), Scalar(1)}});
  EXPECT_THROW(concave_integral_i2(inner_jump, mu, nu), DomainMismatch);
}

TEST(IntegralI3, RequiresMartingaleCoupling) {
  auto [mu, nu] = two_point();
  Coupling bad;
  bad.add(Scalar(0), Scalar(-1), q(1, 4));
  bad.add(Scalar(0), Scalar(1), q(3, 4));
  EXPECT_THROW(concave_integral_i3(ConcaveFunction::negative_abs(), mu, nu, bad), NotMartingale);
}

TEST(IntegralI3, TwoComponentNegativeAbs) {
  // Rows: x = -1 sends 1/4 to -2 and 1/4 to 0; x = 1 mirrors it. Each row's
  // gap is chi(x) - mean of chi over its targets = -1 - (-1) = 0.
  auto [mu, nu] = two_component();
  Coupling p;
  p.add(Scalar(-1), Scalar(-2), q(1, 4));
  p.add(Scalar(-1), Scalar(0), q(1, 4));
  p.add(Scalar(1), Scalar(0), q(1, 4));
  p.add(Scalar(1), Scalar(2), q(1, 4));
  auto chi = ConcaveFunction::negative_abs();
  EXPECT_EQ(concave_integral_i3(chi, mu, nu, p), Scalar(0));
  auto d = decompose(mu, nu);
  Scalar per_component;
  for (const auto& c : d.components) per_component += concave_integral_i2(chi, c);
  EXPECT_EQ(per_component, Scalar(0));
  EXPECT_EQ(concave_integral_i2(chi, mu, nu), Scalar(0));
}

TEST(ModeratorCondition, PointMassGivesOne) {
  auto [mu, nu] = two_point();
  auto r = moderator_condition(mu, nu);
  ASSERT_TRUE(r.holds);
  EXPECT_EQ(*r.c_star, Scalar(1));
}

TEST(ModeratorCondition, SpreadPairGivesTwoAtZero) {
  auto mu = measure({{"-1", "1/2"}, {"1", "1/2"}});
  auto nu = measure({{"-2", "1/2"}, {"2", "1/2"}});
  auto r = moderator_condition(mu, nu);
  ASSERT_TRUE(r.holds);
  EXPECT_EQ(*r.c_star, Scalar(2));
  EXPECT_EQ(*r.argmax, Scalar(0));

  // dense grid: the ratio never exceeds the kink maximum
  auto u_mu = potential(mu);
  auto u_nu = potential(nu);
  Scalar best;
  for (long k = -399; k <= 399; ++k) {
    Scalar x = q(k, 200);
    Scalar ratio = (u_nu(x) - x.abs()) / (u_nu(x) - u_mu(x));
    EXPECT_LE(ratio, *r.c_star);
    best = mot::max(best, ratio);
  }
  EXPECT_EQ(best, Scalar(2));
}

TEST(ModeratorCondition, AtomsAtBothEndpoints) {
  auto mu = measure({{"0", "1/2"}, {"1", "1/2"}});
  auto nu = measure({{"-1", "1/4"}, {"1/2", "1/2"}, {"2", "1/4"}});
  ASSERT_TRUE(mot::measures::check_convex_order(mu, nu).ordered);
  auto r = moderator_condition(mu, nu);
  EXPECT_TRUE(r.holds);
  EXPECT_GE(*r.c_star, Scalar(1));
}

TEST(ExtractModerator, ConstantLine) {
  SupportMap phi{{Scalar(0), Extended(1)}, {Scalar(2), Extended(1)}};
  std::map<Scalar, Scalar> h{{Scalar(0), Scalar(0)}, {Scalar(2), Scalar(0)}};
  auto chi = extract_moderator(phi, h, {Scalar(-1), Scalar(3)});
  for (long k = -2; k <= 4; ++k) EXPECT_EQ(chi(Scalar(k)), Scalar(1));
}

TEST(ExtractModerator, TangentEnvelopeOfParabola) {
  SupportMap phi;
  std::map<Scalar, Scalar> h;
  std::vector<Scalar> support;
  for (long i = 1; i <= 10; ++i) {
    phi[Scalar(i)] = Extended(Scalar(-i * i));
    h[Scalar(i)] = Scalar(-2 * i);
    support.push_back(Scalar(i));
  }
  auto chi = extract_moderator(phi, h, support);
  for (long i = 1; i <= 10; ++i) EXPECT_EQ(chi(Scalar(i)), Scalar(-i * i));
}

TEST(ExtractModerator, SingleLine) {
  SupportMap phi{{Scalar(0), Extended(1)}};
  std::map<Scalar, Scalar> h{{Scalar(0), Scalar(5)}};
  auto chi = extract_moderator(phi, h, {Scalar(-1), Scalar(1)});
  for (long k = -3; k <= 3; ++k) EXPECT_EQ(chi(Scalar(k)), Scalar(1 + 5 * k));
}

TEST(ExtractModerator, AllInfinite) {
  SupportMap phi{{Scalar(0), Extended::pos_inf()}};
  std::map<Scalar, Scalar> h{{Scalar(0), Scalar(0)}};
  EXPECT_THROW(extract_moderator(phi, h, {Scalar(0)}), AllInfinite);
}

TEST(PairIntegral, PlainIntegral) {
  auto [mu, nu] = two_point();
  SupportMap phi{{Scalar(0), Extended(0)}};
  SupportMap psi{{Scalar(-1), Extended(1)}, {Scalar(1), Extended(1)}};
  EXPECT_EQ(pair_integral(phi, psi, ConcaveFunction::zero(), mu, nu).value, Scalar(1));
  EXPECT_EQ(pair_integral(phi, psi, ConcaveFunction::negative_abs(), mu, nu).value, Scalar(1));
}

TEST(PairIntegral, MassWeightedSum) {
  auto mu = measure({{"-1", "1/2"}});
  auto nu = measure({{"-2", "1/4"}, {"0", "1/4"}});
  SupportMap phi{{Scalar(-1), Extended(1)}};
  SupportMap psi{{Scalar(-2), Extended(0)}, {Scalar(0), Extended(0)}};
  EXPECT_EQ(pair_integral(phi, psi, ConcaveFunction::zero(), mu, nu).value, q(1, 2));
}

TEST(PairIntegral, InfiniteAtChargedAtom) {
  auto [mu, nu] = two_point();
  SupportMap phi{{Scalar(0), Extended::pos_inf()}};
  SupportMap psi{{Scalar(-1), Extended(0)}, {Scalar(1), Extended(0)}};
  EXPECT_THROW(pair_integral(phi, psi, ConcaveFunction::zero(), mu, nu), ModeratorFailure);
}

TEST(EndpointEstimate, ZeroFunction) {
  auto [mu, nu] = two_point();
  auto r = endpoint_atom_estimate(ConcaveFunction::zero(), mu, nu);
  EXPECT_EQ(r.bound, Scalar(0));
  EXPECT_TRUE(r.satisfied);
}

TEST(EndpointEstimate, NegativePositivePart) {
  auto [mu, nu] = two_point();
  ConcaveFunction chi({{Scalar(0), Scalar(0)}, {Scalar(1), Scalar(-1)}}, Scalar(0), Scalar(-1));
  auto r = endpoint_atom_estimate(chi, mu, nu);
  // C = 1; tail integral = 0 - (1/2)(-1) = 1/2; bound = -(1 / (1/2)) * 1/2
  EXPECT_EQ(r.constant, Scalar(1));
  EXPECT_EQ(r.bound, Scalar(-1));
  EXPECT_EQ(r.chi_at_endpoint, Scalar(-1));
  EXPECT_TRUE(r.satisfied);
}

TEST(EndpointEstimate, SpreadPairIsTight) {
  auto mu = measure({{"-1", "1/2"}, {"1", "1/2"}});
  auto nu = measure({{"-2", "1/2"}, {"2", "1/2"}});
  ConcaveFunction chi({{Scalar(0), Scalar(0)}}, Scalar(0), Scalar(-1));
  auto r = endpoint_atom_estimate(chi, mu, nu);
  // kink ratios on [0, 2): 2 at 0, 1 at 1; tail = (1/2)(-1) - (1/2)(-2) = 1/2
  EXPECT_EQ(r.constant, Scalar(2));
  EXPECT_EQ(r.bound, Scalar(-2));
  EXPECT_EQ(r.chi_at_endpoint, Scalar(-2));
  EXPECT_TRUE(r.satisfied);
}

TEST(EndpointEstimate, RequiresNormalization) {
  auto [mu, nu] = two_point();
  EXPECT_THROW(endpoint_atom_estimate(ConcaveFunction::affine(Scalar(1), Scalar(0)), mu, nu), DomainMismatch);
}

// Properties over random irreducible pairs and random concave functions.

TEST(IntegralProperty, I2EqualsI3ForTwoCouplings) {
  Rng rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    auto pair = random_irreducible(rng);
    const auto& lo = pair.nu.atoms().front().x;
    const auto& hi = pair.nu.atoms().back().x;
    auto chi = random_concave(rng, lo, hi);
    Scalar i2 = concave_integral_i2(chi, pair.mu, pair.nu);
    EXPECT_GE(i2.sign(), 0);
    for (int k = 0; k < 2; ++k) {
      auto p = random_coupling(rng, pair.mu, pair.nu);
      EXPECT_EQ(concave_integral_i3(chi, pair.mu, pair.nu, p), i2) << "trial " << trial;
    }
  }
}

TEST(IntegralProperty, AdditiveAndAffineBlind) {
  Rng rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    auto pair = random_irreducible(rng);
    const auto& lo = pair.nu.atoms().front().x;
    const auto& hi = pair.nu.atoms().back().x;
    auto a = random_concave(rng, lo, hi);
    auto b = random_concave(rng, lo, hi);
    EXPECT_EQ(concave_integral_i2(a.plus(b), pair.mu, pair.nu),
              concave_integral_i2(a, pair.mu, pair.nu) + concave_integral_i2(b, pair.mu, pair.nu));
    auto affine = ConcaveFunction::affine(random_rational(rng, 9, 4), q(uniform_int(rng, -5, 5), 3));
    EXPECT_EQ(concave_integral_i2(affine, pair.mu, pair.nu), Scalar(0));
    EXPECT_EQ(concave_integral_i2(a.plus(affine), pair.mu, pair.nu), concave_integral_i2(a, pair.mu, pair.nu));
  }
}

TEST(IntegralProperty, TruncationIncreasesToI2) {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    auto pair = random_irreducible(rng);
    const auto& lo = pair.nu.atoms().front().x;
    const auto& hi = pair.nu.atoms().back().x;
    auto chi = random_concave(rng, lo, hi);
    Scalar mid = pair.mu.mean();
    Scalar previous;
    bool first = true;
    for (long step = 0; step <= 8; ++step) {
      Scalar t = q(step, 8);
      auto truncated = tangent_truncation(chi, mid + (lo - mid) * t, mid + (hi - mid) * t);
      Scalar value = plain_difference(truncated, pair.mu, pair.nu);
      if (!first) {
        EXPECT_GE(value, previous);
      }
      previous = value;
      first = false;
    }
    EXPECT_EQ(previous, concave_integral_i2(chi, pair.mu, pair.nu));
  }
}

TEST(IntegralProperty, ExtractedModeratorBounds) {
  Rng rng(37);
  for (int trial = 0; trial < 30; ++trial) {
    auto pair = random_irreducible(rng);
    auto f = random_table(rng, pair.mu, pair.nu);
    auto sol = mot::transport::solve_primal_dual(pair.mu, pair.nu, f, mot::transport::Formulation::pointwise);
    std::vector<Scalar> support;
    for (const auto& a : pair.nu.atoms()) support.push_back(a.x);
    auto chi = extract_moderator(sol.certificate.phi, sol.certificate.h, support);
    for (const auto& a : pair.mu.atoms()) EXPECT_LE(chi(a.x), sol.certificate.phi.at(a.x).value());
    for (const auto& b : pair.nu.atoms()) EXPECT_LE(-chi(b.x), sol.certificate.psi.at(b.x).value());
  }
}

TEST(IntegralProperty, PairIntegralInvariantAndHedgingIdentity) {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    auto pair = random_irreducible(rng);
    auto f = random_table(rng, pair.mu, pair.nu);
    auto sol = mot::transport::solve_primal_dual(pair.mu, pair.nu, f, mot::transport::Formulation::quasisure);
    const auto& cert = sol.certificate;
    std::vector<Scalar> support;
    for (const auto& a : pair.nu.atoms()) support.push_back(a.x);
    const auto& lo = pair.nu.atoms().front().x;
    const auto& hi = pair.nu.atoms().back().x;
    auto extracted = extract_moderator(cert.phi, cert.h, support);
    auto reference = pair_integral(cert.phi, cert.psi, ConcaveFunction::zero(), pair.mu, pair.nu).value;
    EXPECT_EQ(pair_integral(cert.phi, cert.psi, extracted, pair.mu, pair.nu).value, reference);
    EXPECT_EQ(pair_integral(cert.phi, cert.psi, random_concave(rng, lo, hi), pair.mu, pair.nu).value, reference);
    EXPECT_EQ(Extended(reference), sol.primal_value);
    for (int k = 0; k < 2; ++k) {
      auto p = random_coupling(rng, pair.mu, pair.nu);
      Scalar expectation = p.expectation([&](const Scalar& x, const Scalar& y) {
        return cert.evaluate(x, y).value();
      });
      EXPECT_EQ(expectation, reference);
    }
    // gauge transform leaves the pair integral unchanged
    auto moved = mot::transport::gauge_transform(cert, q(3, 2), q(-5, 7), pair.mu, pair.nu);
    EXPECT_EQ(pair_integral(moved.phi, moved.psi, extracted, pair.mu, pair.nu).value, reference);
  }
}
