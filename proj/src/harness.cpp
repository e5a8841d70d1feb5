#include "mot/harness.hpp"

#include <algorithm>
#include <future>

namespace mot::harness {

using measures::Atom;
using measures::DiscreteMeasure;
using transport::Formulation;
using transport::MotSolution;
using transport::RewardSpec;

namespace {

struct NameEntry {
  ScenarioName name;
  const char* text;
};

constexpr NameEntry kNames[] = {
    {ScenarioName::pointwise_gap, "pointwise-gap"},
    {ScenarioName::nonsmooth_two_component, "nonsmooth-two-component"},
    {ScenarioName::integrability_failure, "integrability-failure"},
    {ScenarioName::integrability_gap, "integrability-gap"},
    {ScenarioName::no_lower_bound, "no-lower-bound"},
};

Scalar q(long num, long den = 1) { return Scalar::exact(num, den); }

bool is_integer(const Scalar& s) { return s.is_exact() && s.rational().get_den() == 1; }

void add_check(std::vector<Check>& out, std::string clause, bool passed, std::string detail = {}) {
  out.push_back({std::move(clause), passed, std::move(detail)});
}

long resolved_n(ScenarioName name, const ScenarioParams& params) {
  if (params.n) return *params.n;
  return name == ScenarioName::no_lower_bound ? 8 : 4;
}

DiscreteMeasure uniform_grid(long n) {
  std::vector<Atom> atoms;
  for (long k = 0; k <= n; ++k) atoms.push_back({q(k, n), q(1, n + 1)});
  return DiscreteMeasure::make(std::move(atoms));
}

Scalar variance(const DiscreteMeasure& m) {
  Scalar mean = m.mean();
  return m.second_moment() / m.mass() - mean * mean;
}

bool verified(const MotSolution& s) { return s.verified(); }

std::string verification_detail(const MotSolution& s) {
  for (const auto& r : s.verification)
    if (!r.ok()) return r.messages.empty() ? "verification failed" : r.messages.front();
  return {};
}

void solve_checks(std::vector<Check>& out, const std::string& tag, const MotSolution& s) {
  add_check(out, tag + " LP verified", verified(s), verification_detail(s));
  bool dual_matches = s.certificate.value.finite() && s.primal_value.finite() &&
                      s.certificate.value.value() == s.primal_value.value();
  add_check(out, tag + " primal equals dual", dual_matches,
            s.primal_value.str() + " vs " + s.certificate.value.str());
}

}  // namespace

std::string to_string(ScenarioName name) {
  for (const auto& e : kNames)
    if (e.name == name) return e.text;
  return "unknown";
}

ScenarioName parse_scenario(const std::string& text) {
  for (const auto& e : kNames)
    if (text == e.text) return e.name;
  throw BadParams("unknown scenario '" + text + "'");
}

std::vector<ScenarioName> all_scenarios() {
  std::vector<ScenarioName> out;
  for (const auto& e : kNames) out.push_back(e.name);
  return out;
}

Scenario build_example(ScenarioName name, const ScenarioParams& params) {
  Scenario s;
  s.name = name;
  s.params = params;
  switch (name) {
    case ScenarioName::pointwise_gap: {
      long n = resolved_n(name, params);
      if (n < 2) throw BadParams("pointwise-gap needs n >= 2");
      s.n = n;
      s.mu = uniform_grid(n);
      s.nu = s.mu;
      s.reward = RewardSpec::indicator_offdiag();
      break;
    }
    case ScenarioName::nonsmooth_two_component: {
      long n = resolved_n(name, params);
      if (n < 2) throw BadParams("nonsmooth-two-component needs n >= 2");
      s.n = n;
      // Half of each atom's mass goes to its two grid neighbours, the other half
      // to the ends of its half-line; the second part keeps u_mu < u_nu strictly
      // inside (-1, 0) and (0, 1).
      std::vector<Atom> mu, nu;
      const Scalar w = q(1, 2 * n);
      const Scalar half_step = q(1, 2 * n);
      const Scalar quarter = w / Scalar(4);
      for (long k = 1; k <= n; ++k) {
        for (int side : {-1, 1}) {
          Scalar x = q(side * (2 * k - 1), 2 * n);
          Scalar far = x.abs();  // distance from 0 within the half-line
          mu.push_back({x, w});
          nu.push_back({x - half_step, quarter});
          nu.push_back({x + half_step, quarter});
          nu.push_back({Scalar(0), w / Scalar(2) * (Scalar(1) - far)});
          nu.push_back({Scalar(side), w / Scalar(2) * far});
        }
      }
      s.mu = DiscreteMeasure::make(std::move(mu));
      s.nu = DiscreteMeasure::make(std::move(nu));
      s.reward = RewardSpec::offblock_sqrt();
      break;
    }
    case ScenarioName::integrability_failure:
    case ScenarioName::integrability_gap: {
      long N = params.N;
      if (N < 3) throw BadParams("integrability scenarios need N >= 3");
      Scalar total;
      for (long i = 1; i <= N; ++i) total += q(1, i * i * i);
      std::vector<Atom> mu, nu;
      for (long i = 1; i <= N; ++i) {
        Scalar c = q(1, i * i * i) / total;
        mu.push_back({Scalar(i), c});
        for (long y : {i - 1, i, i + 1}) nu.push_back({Scalar(y), c / Scalar(3)});
      }
      s.mu = DiscreteMeasure::make(std::move(mu));
      s.nu = DiscreteMeasure::make(std::move(nu));
      s.reward = name == ScenarioName::integrability_failure ? RewardSpec::indicator_offdiag()
                                                              : RewardSpec::square_diff();
      break;
    }
    case ScenarioName::no_lower_bound: {
      long n = resolved_n(name, params);
      if (n < 2) throw BadParams("no-lower-bound needs n >= 2");
      const Scalar& delta = params.delta;
      if (!delta.is_exact() || delta.sign() <= 0 || !is_integer(delta * Scalar(n)))
        throw BadParams("delta must be a positive multiple of the grid step 1/" + std::to_string(n));
      if (params.penalty && params.penalty->sign() <= 0) throw BadParams("penalty must be positive");
      s.n = n;
      s.mu = uniform_grid(n);
      std::vector<Atom> nu;
      for (const auto& a : s.mu.atoms()) {
        nu.push_back({a.x - delta, a.w / Scalar(2)});
        nu.push_back({a.x + delta, a.w / Scalar(2)});
      }
      s.nu = DiscreteMeasure::make(std::move(nu));
      s.reward = RewardSpec::penalized_band(delta, params.penalty);
      break;
    }
  }
  if (!measures::check_convex_order(s.mu, s.nu).ordered)
    throw Error("scenario " + to_string(name) + " is not in convex order");
  return s;
}

bool PropertyReport::passed() const { return first_failure() == nullptr; }

const Check* PropertyReport::first_failure() const {
  for (const auto& c : checks)
    if (!c.passed) return &c;
  return nullptr;
}

void require_properties(const PropertyReport& report) {
  if (const Check* c = report.first_failure()) {
    std::string msg = to_string(report.scenario) + ": " + c->clause;
    if (!c->detail.empty()) msg += " (" + c->detail + ")";
    throw AssertionFailure(msg);
  }
}

IntegrabilityFit analyze_integrability(const MotSolution& solution) {
  IntegrabilityFit fit;
  const auto& mu = solution.decomposition.mu;
  const auto& cert = solution.certificate;
  const auto& p = solution.coupling;
  const Scalar one(1);
  for (const auto& a : mu.atoms()) {
    const Scalar& i = a.x;
    if (!mu.has_atom(i - one) || !mu.has_atom(i + one)) continue;
    if (p.at(i, i - one).sign() > 0 && p.at(i, i).sign() > 0 && p.at(i, i + one).sign() > 0)
      fit.interior.push_back(i);
  }
  auto phi = [&](const Scalar& x) { return cert.phi.at(x).value(); };
  for (const auto& i : fit.interior) {
    if (!cert.psi.count(i) || (phi(i) + cert.psi.at(i).value()).sign() != 0) {
      fit.diagonal_balanced = false;
      fit.failures.push_back("phi + psi != 0 at " + i.str());
    }
    Scalar second = Scalar(2) * phi(i) - phi(i - one) - phi(i + one);
    if (second != Scalar(2)) {
      fit.second_difference_two = false;
      fit.failures.push_back("second difference " + second.str() + " at " + i.str());
    }
  }
  if (fit.interior.size() >= 2) {
    const Scalar& i1 = fit.interior[0];
    const Scalar& i2 = fit.interior[1];
    Scalar g1 = phi(i1) + i1 * i1;
    Scalar g2 = phi(i2) + i2 * i2;
    fit.b = (g2 - g1) / (i2 - i1);
    fit.c = g1 - *fit.b * i1;
    fit.quadratic_fit = true;
    for (const auto& i : fit.interior) {
      if (phi(i) != -(i * i) + *fit.b * i + *fit.c) {
        fit.quadratic_fit = false;
        fit.failures.push_back("quadratic fit misses " + i.str());
      }
    }
  } else {
    fit.failures.push_back("fewer than two interior atoms");
  }
  return fit;
}

PropertyReport verify_example_properties(const Scenario& scenario) {
  PropertyReport r;
  r.scenario = scenario.name;
  auto& checks = r.checks;
  auto order = measures::check_convex_order(scenario.mu, scenario.nu);
  add_check(checks, "convex order", order.ordered, order.reason);
  if (!order.ordered) return r;

  switch (scenario.name) {
    case ScenarioName::pointwise_gap: {
      auto pw = transport::solve_primal_dual(scenario.mu, scenario.nu, scenario.reward, Formulation::pointwise);
      auto qs = transport::solve_primal_dual(scenario.mu, scenario.nu, scenario.reward, Formulation::quasisure);
      solve_checks(checks, "pointwise", pw);
      solve_checks(checks, "quasisure", qs);
      add_check(checks, "pointwise primal value 0", pw.primal_value == Extended(0), pw.primal_value.str());
      add_check(checks, "quasisure value 0", qs.primal_value == Extended(0), qs.primal_value.str());
      bool zero = true;
      for (const auto& [x, v] : qs.certificate.phi) zero = zero && v == Extended(0);
      for (const auto& [y, v] : qs.certificate.psi) zero = zero && v == Extended(0);
      for (const auto& [x, v] : qs.certificate.h) zero = zero && v.sign() == 0;
      add_check(checks, "quasisure certificate is zero", zero);
      r.values["pointwise_value"] = pw.primal_value.str();
      r.values["quasisure_value"] = qs.primal_value.str();
      break;
    }
    case ScenarioName::nonsmooth_two_component: {
      auto pw = transport::solve_primal_dual(scenario.mu, scenario.nu, scenario.reward, Formulation::pointwise);
      auto cw = transport::solve_primal_dual(scenario.mu, scenario.nu, scenario.reward,
                                             Formulation::componentwise);
      solve_checks(checks, "pointwise", pw);
      solve_checks(checks, "componentwise", cw);
      const auto& comps = cw.decomposition.components;
      bool two = comps.size() == 2 && comps[0].interval.lo == Scalar(-1) &&
                 comps[0].interval.hi == Scalar(0) && comps[1].interval.lo == Scalar(0) &&
                 comps[1].interval.hi == Scalar(1);
      add_check(checks, "components are (-1, 0) and (0, 1)", two,
                std::to_string(comps.size()) + " components");
      add_check(checks, "componentwise value equals pointwise value", cw.primal_value == pw.primal_value,
                cw.primal_value.str() + " vs " + pw.primal_value.str());
      r.values["pointwise_value"] = pw.primal_value.str();
      r.values["componentwise_value"] = cw.primal_value.str();
      break;
    }
    case ScenarioName::integrability_failure: {
      auto s = transport::solve_primal_dual(scenario.mu, scenario.nu, scenario.reward, Formulation::quasisure);
      solve_checks(checks, "quasisure", s);
      auto fit = analyze_integrability(s);
      std::string failures;
      for (const auto& f : fit.failures) failures += (failures.empty() ? "" : "; ") + f;
      add_check(checks, "interior region has at least two atoms", fit.interior.size() >= 2,
                std::to_string(fit.interior.size()) + " atoms");
      add_check(checks, "phi + psi = 0 on the interior", fit.diagonal_balanced, failures);
      add_check(checks, "second differences of phi equal 2 on the interior", fit.second_difference_two,
                failures);
      add_check(checks, "phi = -x^2 + b x + c on the interior", fit.quadratic_fit, failures);
      r.values["value"] = s.primal_value.str();
      r.values["interior_atoms"] = std::to_string(fit.interior.size());
      if (fit.b) r.values["fit_b"] = fit.b->str();
      if (fit.c) r.values["fit_c"] = fit.c->str();
      break;
    }
    case ScenarioName::integrability_gap: {
      auto d = measures::decompose(scenario.mu, scenario.nu);
      const Scalar top(scenario.params.N + 1);
      bool single = d.components.size() == 1 && d.components[0].interval.lo == Scalar(0) &&
                    d.components[0].interval.hi == top && d.stationary.empty();
      add_check(checks, "single component with I = (0, N + 1)", single,
                std::to_string(d.components.size()) + " components");
      auto s = transport::solve_primal_dual(scenario.mu, scenario.nu, scenario.reward, Formulation::quasisure);
      solve_checks(checks, "quasisure", s);
      // every martingale coupling integrates (x - y)^2 to the second-moment gap
      Scalar gap = scenario.nu.second_moment() - scenario.mu.second_moment();
      add_check(checks, "value equals the second-moment gap", s.primal_value == Extended(gap),
                s.primal_value.str() + " vs " + gap.str());
      r.values["value"] = s.primal_value.str();
      break;
    }
    case ScenarioName::no_lower_bound: {
      const Scalar& delta = scenario.params.delta;
      auto s = transport::solve_primal_dual(scenario.mu, scenario.nu, scenario.reward, Formulation::quasisure);
      solve_checks(checks, "quasisure", s);
      add_check(checks, "primal value -1", s.primal_value == Extended(-1), s.primal_value.str());
      add_check(checks, "no penalized cell charged", !s.effectively_neg_inf);
      bool on_band = true;
      for (const auto& [pair, w] : s.coupling.entries())
        if ((pair.second - pair.first).abs() != delta) on_band = false;
      add_check(checks, "optimizer supported on |y - x| = delta", on_band);
      Scalar spread =
          s.coupling.expectation([](const Scalar& x, const Scalar& y) { return (y - x) * (y - x); });
      add_check(checks, "sum p (y - x)^2 = delta^2", spread == delta * delta, spread.str());
      Scalar var_gap = variance(scenario.nu) - variance(scenario.mu);
      add_check(checks, "Var(nu) - Var(mu) = delta^2", var_gap == delta * delta, var_gap.str());
      r.values["value"] = s.primal_value.str();
      if (s.big_m) r.values["big_m"] = s.big_m->str();
      break;
    }
  }
  return r;
}

Scalar min_oscillation(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const RewardSpec& f,
                       Formulation formulation, const Scalar& value) {
  if (formulation == Formulation::componentwise) formulation = Formulation::quasisure;
  auto m = transport::build_mot_lp(mu, nu, f, formulation);
  const Mode mode = mu.mode();
  lp::LinearProgram aux(mode);
  std::map<Scalar, std::vector<std::pair<std::size_t, Scalar>>> by_x, by_y, mart;
  for (std::size_t j = 0; j < m.pairs.size(); ++j) {
    const auto& [x, y] = m.pairs[j];
    std::size_t col = aux.add_column(m.program.columns()[j].label, m.program.columns()[j].objective,
                                     lp::ColumnKind::pair);
    by_x[x].emplace_back(col, Scalar(1));
    by_y[y].emplace_back(col, Scalar(1));
    if ((y - x).sign() != 0) mart[x].emplace_back(col, y - x);
  }
  const std::size_t t = aux.add_column("t", -value);
  std::vector<std::pair<std::size_t, Scalar>> sum_a, sum_b, sum_c, sum_d;
  for (const auto& a : mu.atoms()) {
    auto up = aux.add_column("a[" + a.x.str() + "]", Scalar(0));
    auto down = aux.add_column("b[" + a.x.str() + "]", Scalar(0));
    sum_a.emplace_back(up, Scalar(1));
    sum_b.emplace_back(down, Scalar(1));
    auto row = by_x[a.x];
    row.emplace_back(t, -a.w);
    row.emplace_back(up, Scalar(-1));
    row.emplace_back(down, Scalar(1));
    aux.add_row("phi[" + a.x.str() + "]", lp::RowSense::equal, Scalar(0), std::move(row));
  }
  for (const auto& b : nu.atoms()) {
    auto up = aux.add_column("c[" + b.x.str() + "]", Scalar(0));
    auto down = aux.add_column("d[" + b.x.str() + "]", Scalar(0));
    sum_c.emplace_back(up, Scalar(1));
    sum_d.emplace_back(down, Scalar(1));
    auto row = by_y[b.x];
    row.emplace_back(t, -b.w);
    row.emplace_back(up, Scalar(-1));
    row.emplace_back(down, Scalar(1));
    aux.add_row("psi[" + b.x.str() + "]", lp::RowSense::equal, Scalar(0), std::move(row));
  }
  for (const auto& a : mu.atoms())
    aux.add_row("h[" + a.x.str() + "]", lp::RowSense::equal, Scalar(0), mart[a.x]);
  aux.add_row("max phi", lp::RowSense::equal, Scalar(1), sum_a);
  aux.add_row("min phi", lp::RowSense::equal, Scalar(1), sum_b);
  aux.add_row("max psi", lp::RowSense::equal, Scalar(1), sum_c);
  aux.add_row("min psi", lp::RowSense::equal, Scalar(1), sum_d);

  auto sol = lp::solve_lp(aux);
  if (sol.status != lp::Status::optimal)
    throw Error("min-oscillation LP is " + lp::to_string(sol.status));
  auto report = lp::verify_solution(aux, sol);
  if (!report.ok()) throw Error("min-oscillation LP failed verification");
  return sol.objective;
}

bool RefinementReport::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Check& c) { return c.passed; });
}

namespace {

RefinementRecord run_level(ScenarioName name, long level, ScenarioParams params) {
  params.n = level;
  Scenario s = build_example(name, params);
  auto pw = transport::solve_primal_dual(s.mu, s.nu, s.reward, Formulation::pointwise);
  auto qs = transport::solve_primal_dual(s.mu, s.nu, s.reward, Formulation::quasisure);
  if (!pw.primal_value.finite() || !qs.primal_value.finite())
    throw Error("refinement level " + std::to_string(level) + " has an infinite value");
  if (!pw.verified() || !qs.verified())
    throw Error("refinement level " + std::to_string(level) + " failed LP verification");
  RefinementRecord rec;
  rec.level = level;
  rec.primal_value = pw.primal_value.value();
  rec.penalized_cell_used = pw.effectively_neg_inf || qs.effectively_neg_inf;
  rec.pointwise_min_osc = min_oscillation(s.mu, s.nu, pw.effective_reward, Formulation::pointwise, pw.primal_value.value());
  rec.quasisure_min_osc = min_oscillation(s.mu, s.nu, qs.effective_reward, Formulation::quasisure, qs.primal_value.value());
  if (qs.primal_value != pw.primal_value)
    throw Error("pointwise and quasisure values differ at level " + std::to_string(level));
  return rec;
}

std::string list_of(const std::vector<RefinementRecord>& recs, Scalar RefinementRecord::*field) {
  std::string out;
  for (const auto& r : recs) out += (out.empty() ? "" : ", ") + (r.*field).str();
  return "[" + out + "]";
}

}  // namespace

RefinementReport run_refinement_study(ScenarioName name, const std::vector<long>& levels,
                                      const ScenarioParams& base) {
  if (name != ScenarioName::pointwise_gap && name != ScenarioName::nonsmooth_two_component &&
      name != ScenarioName::no_lower_bound)
    throw BadParams("scenario " + to_string(name) + " has no refinement study");
  if (levels.empty()) throw BadParams("refinement study needs at least one level");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1]) throw BadParams("levels must be strictly increasing");
  // validate every level up front so bad input fails before any solve
  for (long level : levels) {
    ScenarioParams p = base;
    p.n = level;
    build_example(name, p);
  }

  RefinementReport report;
  report.scenario = name;
  std::vector<std::future<RefinementRecord>> jobs;
  for (long level : levels) jobs.push_back(std::async(std::launch::async, run_level, name, level, base));
  for (auto& j : jobs) report.records.push_back(j.get());

  const auto& recs = report.records;
  auto& v = report.verdicts;
  auto all = [&](auto pred) { return std::all_of(recs.begin(), recs.end(), pred); };
  bool increasing = true, nondecreasing = true;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    increasing = increasing && recs[i].pointwise_min_osc > recs[i - 1].pointwise_min_osc;
    nondecreasing = nondecreasing && recs[i].pointwise_min_osc >= recs[i - 1].pointwise_min_osc;
  }
  const std::string pointwise_list = list_of(recs, &RefinementRecord::pointwise_min_osc);
  const std::string quasisure_list = list_of(recs, &RefinementRecord::quasisure_min_osc);

  switch (name) {
    case ScenarioName::pointwise_gap:
      add_check(v, "primal value 0 at every level",
                all([](const RefinementRecord& r) { return r.primal_value.sign() == 0; }));
      add_check(v, "quasisure min-oscillation identically 0",
                all([](const RefinementRecord& r) { return r.quasisure_min_osc.sign() == 0; }), quasisure_list);
      add_check(v, "pointwise min-oscillation strictly increasing", increasing, pointwise_list);
      add_check(v, "pointwise min-oscillation >= n^2/8", all([](const RefinementRecord& r) {
                  return r.pointwise_min_osc >= Scalar::exact(r.level * r.level, 8);
                }),
                pointwise_list);
      break;
    case ScenarioName::nonsmooth_two_component:
      add_check(v, "quasisure min-oscillation identically 0",
                all([](const RefinementRecord& r) { return r.quasisure_min_osc.sign() == 0; }), quasisure_list);
      add_check(v, "pointwise min-oscillation nondecreasing", nondecreasing, pointwise_list);
      break;
    case ScenarioName::no_lower_bound:
      add_check(v, "primal value -1 at every level",
                all([](const RefinementRecord& r) { return r.primal_value == Scalar(-1); }),
                list_of(recs, &RefinementRecord::primal_value));
      add_check(v, "no penalized cell charged",
                all([](const RefinementRecord& r) { return !r.penalized_cell_used; }));
      add_check(v, "pointwise min-oscillation nondecreasing", nondecreasing, pointwise_list);
      break;
    default:
      break;
  }
  return report;
}

}  // namespace mot::harness
