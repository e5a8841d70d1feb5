#include "mot/transport.hpp"

#include <algorithm>
#include <set>

namespace mot::transport {

using measures::Atom;
using measures::Decomposition;
using measures::DiscreteMeasure;

namespace {

DiscreteMeasure in_mode(const DiscreteMeasure& m, Mode mode) {
  if (m.mode() == mode) return m;
  std::vector<Atom> atoms;
  for (const auto& a : m.atoms()) atoms.push_back({a.x.as(mode), a.w.as(mode)});
  return DiscreteMeasure::make(std::move(atoms), mode);
}

std::string pair_label(const SupportPair& p) {
  return "(" + p.first.str() + ", " + p.second.str() + ")";
}

Scalar zero_like(const Scalar& s) { return Scalar(0).as(s.mode()); }

Extended add(const Extended& a, const Extended& b) {
  if (a.finite() && b.finite()) return Extended(a.value() + b.value());
  if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf()))
    throw Error("undefined sum +inf + -inf");
  return a.finite() ? b : a;
}

// a >= b, tolerance-aware on finite values
bool geq(const Extended& a, const Extended& b, double tol) {
  if (b.is_neg_inf() || a.is_pos_inf()) return true;
  if (a.is_neg_inf() || b.is_pos_inf()) return false;
  return sign(a.value() - b.value(), tol) >= 0;
}

bool tight(const Extended& a, const Extended& b, double tol) {
  return a.finite() && b.finite() && is_zero(a.value() - b.value(), tol);
}

struct SolvedLp {
  lp::LpSolution solution;
  lp::VerificationReport verification;
  Coupling coupling;
  std::map<Scalar, Scalar> phi, psi, h;
  Scalar value;
};

SolvedLp solve_mot_lp(const MotLp& m, const SolveConfig& config) {
  SolvedLp out;
  out.solution = lp::solve_lp(m.program, config.lp);
  if (out.solution.status != lp::Status::optimal)
    throw Error("transport LP is " + lp::to_string(out.solution.status));
  out.verification = lp::verify_solution(m.program, out.solution, config.verify);
  out.coupling = Coupling(m.program.mode());
  for (std::size_t j = 0; j < m.pairs.size(); ++j)
    out.coupling.add(m.pairs[j].first, m.pairs[j].second, out.solution.primal[j]);
  for (std::size_t i = 0; i < m.mu_atoms.size(); ++i) {
    out.phi[m.mu_atoms[i]] = out.solution.dual[m.mu_row0 + i];
    out.h[m.mu_atoms[i]] = out.solution.dual[m.martingale_row0 + i];
  }
  for (std::size_t j = 0; j < m.nu_atoms.size(); ++j)
    out.psi[m.nu_atoms[j]] = out.solution.dual[m.nu_row0 + j];
  out.value = out.solution.objective;
  return out;
}

bool charges_penalized(const MotLp& m, const SolvedLp& s) {
  for (std::size_t j = 0; j < m.pairs.size(); ++j)
    if (m.penalized[j] && !is_zero(s.solution.primal[j])) return true;
  return false;
}

constexpr int kMaxBigMEscalations = 64;

struct PenalizedSolve {
  MotLp lp;
  SolvedLp solved;
  bool charged = false;
};

// Solves with the big-M rule; if the optimizer charges a penalized cell while
// some martingale coupling avoids them all, M is quadrupled and the LP re-solved.
PenalizedSolve solve_with_penalty(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const RewardSpec& f,
                                  const std::vector<SupportPair>& pairs, std::optional<Scalar> big_m,
                                  const SolveConfig& config) {
  MotLp first = build_lp_on_pairs(mu, nu, f, pairs, big_m);
  SolvedLp solved = solve_mot_lp(first, config);
  bool charged = charges_penalized(first, solved);
  PenalizedSolve out{std::move(first), std::move(solved), charged};
  if (!out.charged) return out;

  std::vector<SupportPair> allowed;
  for (std::size_t j = 0; j < out.lp.pairs.size(); ++j)
    if (!out.lp.penalized[j]) allowed.push_back(out.lp.pairs[j]);
  if (!solve_on_pairs(mu, nu, out.lp.effective_reward, allowed)) return out;

  Scalar m = *out.lp.big_m;
  for (int round = 0; round < kMaxBigMEscalations && out.charged; ++round) {
    m *= Scalar(4);
    out.lp = build_lp_on_pairs(mu, nu, f, pairs, m);
    out.solved = solve_mot_lp(out.lp, config);
    out.charged = charges_penalized(out.lp, out.solved);
  }
  return out;
}

std::vector<SupportPair> all_pairs(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<SupportPair> pairs;
  for (const auto& a : mu.atoms())
    for (const auto& b : nu.atoms()) pairs.emplace_back(a.x, b.x);
  return pairs;
}

void require_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  auto report = measures::check_convex_order(mu, nu);
  if (!report.ordered) throw NotInOrder("marginals are not in convex order: " + report.reason);
}

}  // namespace

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::pointwise: return "pointwise";
    case Formulation::quasisure: return "quasisure";
    case Formulation::componentwise: return "componentwise";
  }
  return "?";
}

Formulation parse_formulation(const std::string& text) {
  if (text == "pointwise") return Formulation::pointwise;
  if (text == "quasisure") return Formulation::quasisure;
  if (text == "componentwise") return Formulation::componentwise;
  throw ParseError("unknown formulation '" + text + "'");
}

std::string to_string(RewardKind k) {
  switch (k) {
    case RewardKind::square_diff: return "square_diff";
    case RewardKind::abs_diff: return "abs_diff";
    case RewardKind::indicator_offdiag: return "indicator_offdiag";
    case RewardKind::table: return "table";
    case RewardKind::penalized_band: return "penalized_band";
    case RewardKind::offblock_sqrt: return "offblock_sqrt";
  }
  return "?";
}

std::string to_string(PolarReason r) {
  switch (r) {
    case PolarReason::mu_null: return "mu_null";
    case PolarReason::nu_null: return "nu_null";
    case PolarReason::crosses_barrier: return "crosses_barrier";
    case PolarReason::charged: return "charged";
  }
  return "?";
}

RewardSpec RewardSpec::square_diff() {
  RewardSpec r;
  r.kind_ = RewardKind::square_diff;
  return r;
}

RewardSpec RewardSpec::abs_diff() {
  RewardSpec r;
  r.kind_ = RewardKind::abs_diff;
  return r;
}

RewardSpec RewardSpec::indicator_offdiag() {
  RewardSpec r;
  r.kind_ = RewardKind::indicator_offdiag;
  return r;
}

RewardSpec RewardSpec::table(std::map<SupportPair, Extended> entries, std::optional<Extended> fallback) {
  RewardSpec r;
  r.kind_ = RewardKind::table;
  r.entries_ = std::move(entries);
  r.default_ = std::move(fallback);
  return r;
}

RewardSpec RewardSpec::penalized_band(Scalar delta, std::optional<Scalar> penalty) {
  if (delta.sign() <= 0) throw Error("band width must be positive");
  RewardSpec r;
  r.kind_ = RewardKind::penalized_band;
  r.delta_ = std::move(delta);
  r.penalty_ = std::move(penalty);
  return r;
}

RewardSpec RewardSpec::offblock_sqrt() {
  RewardSpec r;
  r.kind_ = RewardKind::offblock_sqrt;
  return r;
}

Extended RewardSpec::operator()(const Scalar& x, const Scalar& y) const {
  switch (kind_) {
    case RewardKind::square_diff: return Extended((x - y) * (x - y));
    case RewardKind::abs_diff: return Extended((x - y).abs());
    case RewardKind::indicator_offdiag: return Extended(Scalar(x == y ? 0 : 1).as(x.mode()));
    case RewardKind::table: {
      auto it = entries_.find({x, y});
      if (it != entries_.end()) return it->second;
      if (default_) return *default_;
      throw Error("reward table has no entry for " + pair_label({x, y}));
    }
    case RewardKind::penalized_band: {
      Scalar d = (x - y).abs();
      int c = sign(d - *delta_, 0.0);
      if (c < 0) return Extended(zero_like(x));
      if (c == 0) return Extended(Scalar(-1).as(x.mode()));
      if (penalty_) return Extended(-*penalty_);
      return Extended::neg_inf();
    }
    case RewardKind::offblock_sqrt: {
      if (Scalar(-1) < x && x.sign() < 0 && y.sign() > 0 && y < Scalar(1))
        return Extended(sqrt_floor((x * y).abs()));
      return Extended(zero_like(x));
    }
  }
  throw Error("unknown reward kind");
}

Extended DualCertificate::evaluate(const Scalar& x, const Scalar& y) const {
  auto p = phi.find(x);
  auto q = psi.find(y);
  auto k = h.find(x);
  if (p == phi.end() || k == h.end()) throw Error("certificate undefined at x = " + x.str());
  if (q == psi.end()) throw Error("certificate undefined at y = " + y.str());
  return add(add(p->second, q->second), Extended(k->second * (y - x)));
}

Extended certificate_value(const DualCertificate& cert, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  Extended total(zero_like(mu.mass()));
  auto accumulate = [&](const std::map<Scalar, Extended>& fn, const DiscreteMeasure& m, const char* name) {
    for (const auto& a : m.atoms()) {
      auto it = fn.find(a.x);
      if (it == fn.end()) throw Error(std::string(name) + " undefined at atom " + a.x.str());
      total = add(total, it->second.finite() ? Extended(a.w * it->second.value()) : it->second);
    }
  };
  accumulate(cert.phi, mu, "phi");
  accumulate(cert.psi, nu, "psi");
  return total;
}

std::vector<SupportPair> certificate_violations(const DualCertificate& cert, const RewardSpec& f,
                                                const std::vector<SupportPair>& pairs, double tol) {
  std::vector<SupportPair> out;
  for (const auto& p : pairs)
    if (!geq(cert.evaluate(p.first, p.second), f(p.first, p.second), tol)) out.push_back(p);
  return out;
}

DualCertificate gauge_transform(const DualCertificate& cert, const Scalar& c1, const Scalar& c2,
                                const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  DualCertificate out = cert;
  for (auto& [x, v] : out.phi)
    if (v.finite()) v = Extended(v.value() + c1 + c2 * x);
  for (auto& [y, v] : out.psi)
    if (v.finite()) v = Extended(v.value() - c1 - c2 * y);
  for (auto& [x, v] : out.h) v += c2;
  out.value = certificate_value(out, mu, nu);
  return out;
}

std::vector<std::vector<SupportPair>> component_pairs(const Decomposition& d) {
  std::vector<std::vector<SupportPair>> groups(d.components.size() + 1);
  for (const auto& a : d.stationary.atoms()) groups[0].emplace_back(a.x, a.x);
  for (std::size_t k = 0; k < d.components.size(); ++k) {
    const auto& c = d.components[k];
    for (const auto& a : d.mu.atoms()) {
      if (!c.in_interval(a.x)) continue;
      for (const auto& b : d.nu.atoms())
        if (c.in_domain(b.x)) groups[k + 1].emplace_back(a.x, b.x);
    }
  }
  return groups;
}

std::vector<SupportPair> constraint_pairs(const Decomposition& d, Formulation formulation) {
  if (formulation == Formulation::pointwise) return all_pairs(d.mu, d.nu);
  std::set<SupportPair> pairs;
  for (const auto& a : d.mu.atoms())
    if (d.nu.has_atom(a.x)) pairs.emplace(a.x, a.x);
  for (const auto& group : component_pairs(d)) pairs.insert(group.begin(), group.end());
  return {pairs.begin(), pairs.end()};
}

Scalar big_m_constant(const RewardSpec& f, const std::vector<SupportPair>& pairs,
                      const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::optional<Scalar> lo, hi;
  for (const auto& p : pairs) {
    Extended v = f(p.first, p.second);
    if (!v.finite()) continue;
    if (!lo || v.value() < *lo) lo = v.value();
    if (!hi || v.value() > *hi) hi = v.value();
  }
  Scalar one = Scalar(1).as(mu.mode());
  if (!lo) return one;
  Scalar min_atom = mu.atoms().front().w;
  for (const auto& a : mu.atoms()) min_atom = min(min_atom, a.w);
  for (const auto& a : nu.atoms()) min_atom = min(min_atom, a.w);
  Scalar m = one + (*hi - *lo) * (mu.mass() / min_atom);
  // -M must stay below every finite reward
  if (-m >= *lo) m -= *lo;
  return m;
}

MotLp build_lp_on_pairs(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const RewardSpec& f,
                        std::vector<SupportPair> pairs, std::optional<Scalar> big_m) {
  MotLp m{lp::LinearProgram(mu.mode()), std::move(pairs), {}, {}, 0, 0, 0, {}, std::nullopt,
          RewardSpec::table({})};
  std::map<SupportPair, Extended> effective;
  std::vector<Extended> values;
  for (const auto& p : m.pairs) {
    Extended v = f(p.first, p.second);
    if (v.is_pos_inf()) throw Error("reward +inf at " + pair_label(p) + " cannot enter the LP");
    if (v.is_neg_inf() && !big_m) big_m = big_m_constant(f, m.pairs, mu, nu);
    values.push_back(std::move(v));
  }
  m.big_m = big_m;
  std::map<Scalar, std::vector<std::pair<std::size_t, Scalar>>> by_x, by_y, mart;
  for (std::size_t j = 0; j < m.pairs.size(); ++j) {
    const auto& [x, y] = m.pairs[j];
    bool penalized = values[j].is_neg_inf();
    Scalar c = penalized ? -*big_m : values[j].value();
    m.penalized.push_back(penalized);
    effective[m.pairs[j]] = Extended(c);
    m.program.add_column("p" + pair_label(m.pairs[j]), c, lp::ColumnKind::pair);
    by_x[x].emplace_back(j, Scalar(1));
    by_y[y].emplace_back(j, Scalar(1));
    if ((y - x).sign() != 0) mart[x].emplace_back(j, y - x);
  }
  m.mu_row0 = m.program.num_rows();
  for (const auto& a : mu.atoms()) {
    m.mu_atoms.push_back(a.x);
    m.program.add_row("mu[" + a.x.str() + "]", lp::RowSense::equal, a.w, by_x[a.x], lp::RowKind::mu);
  }
  m.nu_row0 = m.program.num_rows();
  for (const auto& b : nu.atoms()) {
    m.nu_atoms.push_back(b.x);
    m.program.add_row("nu[" + b.x.str() + "]", lp::RowSense::equal, b.w, by_y[b.x], lp::RowKind::nu);
  }
  m.martingale_row0 = m.program.num_rows();
  for (const auto& a : mu.atoms())
    m.program.add_row("mart[" + a.x.str() + "]", lp::RowSense::equal, zero_like(a.w), mart[a.x],
                      lp::RowKind::martingale);
  m.effective_reward = RewardSpec::table(std::move(effective));
  return m;
}

namespace {

// Screens +inf rewards on the formulation's pairs.
void screen_infinite(const Decomposition& d, const RewardSpec& f, const std::vector<SupportPair>& pairs) {
  for (const auto& p : pairs) {
    if (!f(p.first, p.second).is_pos_inf()) continue;
    auto verdict = is_polar(d, {p}).front();
    if (!verdict.polar) throw UnboundedReward(p, "reward +inf at chargeable pair " + pair_label(p));
    throw PointwiseInfeasible("reward +inf at polar pair " + pair_label(p) +
                              " admits no pointwise certificate");
  }
}

}  // namespace

MotLp build_mot_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const RewardSpec& f,
                   Formulation formulation) {
  require_order(mu, nu);
  auto d = measures::decompose(mu, nu);
  auto pairs = constraint_pairs(d, formulation);
  screen_infinite(d, f, pairs);
  return build_lp_on_pairs(mu, nu, f, std::move(pairs));
}

bool MotSolution::verified() const {
  return std::all_of(verification.begin(), verification.end(),
                     [](const lp::VerificationReport& r) { return r.ok(); });
}

MotSolution solve_primal_dual(const DiscreteMeasure& mu_in, const DiscreteMeasure& nu_in,
                              const RewardSpec& f, Formulation formulation, Mode mode,
                              const SolveConfig& config) {
  const DiscreteMeasure mu = in_mode(mu_in, mode);
  const DiscreteMeasure nu = in_mode(nu_in, mode);
  require_order(mu, nu);

  MotSolution out;
  out.decomposition = measures::decompose(mu, nu);
  const auto& d = out.decomposition;
  out.coupling = Coupling(mode);
  out.certificate.formulation = formulation;
  out.stationary_value = Scalar(0).as(mode);

  auto pairs = constraint_pairs(d, formulation);
  try {
    screen_infinite(d, f, pairs);
  } catch (const UnboundedReward& e) {
    out.unbounded_pair = e.pair();
    out.primal_value = Extended::pos_inf();
    out.certificate.value = Extended::pos_inf();
    return out;
  }

  if (formulation != Formulation::componentwise) {
    auto [m, s, charged] = solve_with_penalty(mu, nu, f, pairs, std::nullopt, config);
    out.big_m = m.big_m;
    out.effectively_neg_inf = charged;
    out.effective_reward = m.effective_reward;
    out.coupling = s.coupling;
    for (const auto& [x, v] : s.phi) out.certificate.phi[x] = Extended(v);
    for (const auto& [y, v] : s.psi) out.certificate.psi[y] = Extended(v);
    out.certificate.h = s.h;
    out.primal_value = Extended(s.value);
    out.verification.push_back(s.verification);
    out.redundant_rows = s.solution.redundant_rows;
  } else {
    std::optional<Scalar> big_m;
    for (const auto& p : pairs)
      if (f(p.first, p.second).is_neg_inf()) {
        big_m = big_m_constant(f, pairs, mu, nu);
        break;
      }
    out.big_m = big_m;
    std::map<SupportPair, Extended> effective;
    Scalar total = Scalar(0).as(mode);

    for (const auto& b : nu.atoms()) out.certificate.psi[b.x] = Extended(Scalar(0).as(mode));
    for (const auto& a : d.stationary.atoms()) {
      Extended v = f(a.x, a.x);
      Scalar fx = v.finite() ? v.value() : -*big_m;
      if (!v.finite()) out.effectively_neg_inf = true;
      effective[{a.x, a.x}] = Extended(fx);
      out.certificate.phi[a.x] = Extended(fx);
      out.certificate.h[a.x] = Scalar(0).as(mode);
      out.coupling.add(a.x, a.x, a.w);
      out.stationary_value += a.w * fx;
    }
    total += out.stationary_value;

    for (const auto& c : d.components) {
      auto [m, s, charged] = solve_with_penalty(c.mu, c.nu, f, all_pairs(c.mu, c.nu), big_m, config);
      if (charged) out.effectively_neg_inf = true;
      if (m.big_m && (!out.big_m || *m.big_m > *out.big_m)) out.big_m = m.big_m;
      out.verification.push_back(s.verification);
      out.redundant_rows += s.solution.redundant_rows;
      for (const auto& [p, v] : m.effective_reward.entries()) effective[p] = v;

      // psi_k = 0 at both ends of J_k
      const Scalar& l = c.nu.atoms().front().x;
      const Scalar& r = c.nu.atoms().back().x;
      Scalar c2 = (s.psi.at(r) - s.psi.at(l)) / (r - l);
      Scalar c1 = s.psi.at(l) - c2 * l;
      for (const auto& [x, v] : s.phi) {
        out.certificate.phi[x] = Extended(v + c1 + c2 * x);
        out.certificate.h[x] = s.h.at(x) + c2;
      }
      for (const auto& [y, v] : s.psi) {
        Scalar shifted = v - c1 - c2 * y;
        auto& slot = out.certificate.psi[y];
        slot = Extended(slot.value() + shifted);
      }
      out.coupling = out.coupling.plus(s.coupling);
      out.component_values.push_back(s.value);
      total += s.value;
    }
    out.effective_reward = RewardSpec::table(std::move(effective));
    out.primal_value = Extended(total);
  }
  out.certificate.value = certificate_value(out.certificate, mu, nu);
  if (config.compute_gamma) out.gamma = monotonicity_set(out.certificate, out.effective_reward, d);
  return out;
}

std::optional<RestrictedSolve> solve_on_pairs(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                              const RewardSpec& f, const std::vector<SupportPair>& pairs) {
  MotLp m = build_lp_on_pairs(mu, nu, f, pairs);
  auto sol = lp::solve_lp(m.program);
  if (sol.status != lp::Status::optimal) return std::nullopt;
  RestrictedSolve out{sol.objective, Coupling(mu.mode())};
  for (std::size_t j = 0; j < m.pairs.size(); ++j)
    out.coupling.add(m.pairs[j].first, m.pairs[j].second, sol.primal[j]);
  return out;
}

std::vector<PolarVerdict> is_polar(const Decomposition& d, const std::vector<SupportPair>& points) {
  std::vector<PolarVerdict> out;
  for (const auto& p : points) {
    const auto& [x, y] = p;
    PolarVerdict v{p, true, PolarReason::charged};
    if (!d.mu.has_atom(x)) {
      v.reason = PolarReason::mu_null;
    } else if (!d.nu.has_atom(y)) {
      v.reason = PolarReason::nu_null;
    } else if (x == y || std::any_of(d.components.begin(), d.components.end(), [&](const auto& c) {
                 return c.in_interval(x) && c.in_domain(y);
               })) {
      v.polar = false;
    } else {
      v.reason = PolarReason::crosses_barrier;
    }
    out.push_back(v);
  }
  return out;
}

std::optional<Coupling> charging_witness(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         const SupportPair& point) {
  require_order(mu, nu);
  if (!mu.has_atom(point.first) || !nu.has_atom(point.second)) return std::nullopt;
  std::map<SupportPair, Extended> indicator{{point, Extended(Scalar(1).as(mu.mode()))}};
  auto f = RewardSpec::table(std::move(indicator), Extended(Scalar(0).as(mu.mode())));
  auto solved = solve_on_pairs(mu, nu, f, all_pairs(mu, nu));
  if (!solved || solved->value.sign() <= 0) return std::nullopt;
  return solved->coupling;
}

std::vector<SupportPair> monotonicity_set(const DualCertificate& cert, const RewardSpec& f,
                                          const Decomposition& d, double tol) {
  std::vector<SupportPair> out;
  for (const auto& p : constraint_pairs(d, Formulation::quasisure)) {
    if (!cert.phi.count(p.first) || !cert.psi.count(p.second) || !cert.h.count(p.first)) continue;
    if (tight(cert.evaluate(p.first, p.second), f(p.first, p.second), tol)) out.push_back(p);
  }
  return out;
}

OptimalityCheck check_optimality_via_gamma(const Coupling& coupling, const std::vector<SupportPair>& gamma,
                                           const RewardSpec& f, double tol) {
  auto mu = coupling.first_marginal();
  auto nu = coupling.second_marginal();
  require_martingale_coupling(coupling, mu, nu, tol);

  OptimalityCheck out;
  std::set<SupportPair> on(gamma.begin(), gamma.end());
  out.concentrated = std::all_of(coupling.entries().begin(), coupling.entries().end(),
                                 [&](const auto& e) { return on.count(e.first) > 0; });
  out.coupling_value = coupling.expectation([&](const Scalar& x, const Scalar& y) {
    Extended v = f(x, y);
    if (!v.finite()) throw Error("reward " + v.str() + " at charged pair " + pair_label({x, y}));
    return v.value();
  });
  SolveConfig config;
  config.compute_gamma = false;
  auto own = solve_primal_dual(mu, nu, f, Formulation::quasisure, coupling.mode(), config);
  out.own_value = own.primal_value;
  out.optimal = tight(Extended(out.coupling_value), own.primal_value, tol);
  return out;
}

RelaxedReward relax_lower_bound(const RewardSpec& f, const Minorant& minorant,
                                const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::map<SupportPair, Extended> table;
  for (const auto& [x, p0] : minorant.phi) {
    auto hx = minorant.h.find(x);
    for (const auto& [y, q0] : minorant.psi) {
      Extended v = f(x, y);
      if (v.is_neg_inf()) {
        table[{x, y}] = Extended(zero_like(p0));
      } else if (v.is_pos_inf()) {
        table[{x, y}] = v;
      } else {
        Scalar shifted = v.value() - p0 - q0;
        if (hx != minorant.h.end()) shifted -= hx->second * (y - x);
        table[{x, y}] = Extended(max(shifted, zero_like(shifted)));
      }
    }
  }
  RelaxedReward out;
  out.reward = RewardSpec::table(std::move(table));
  out.offset = Scalar(0).as(mu.mode());
  for (const auto& a : mu.atoms()) {
    auto it = minorant.phi.find(a.x);
    if (it == minorant.phi.end()) throw Error("minorant phi undefined at " + a.x.str());
    out.offset += a.w * it->second;
  }
  for (const auto& b : nu.atoms()) {
    auto it = minorant.psi.find(b.x);
    if (it == minorant.psi.end()) throw Error("minorant psi undefined at " + b.x.str());
    out.offset += b.w * it->second;
  }
  return out;
}

}  // namespace mot::transport
