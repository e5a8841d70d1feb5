#include "mot/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mot/harness.hpp"

namespace mot::cli {

using measures::Atom;
using measures::DiscreteMeasure;
using transport::Formulation;
using transport::RewardSpec;
using transport::SupportPair;

namespace {

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const Json& field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

std::string number_text(const Json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw ParseError(where + ": expected a number or a numeric string");
}

Scalar scalar_at(const Json& v, Mode mode, const std::string& where) {
  try {
    return Scalar::parse(number_text(v, where), mode);
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.what());
  }
}

Extended extended_at(const Json& v, Mode mode, const std::string& where) {
  try {
    return Extended::parse(number_text(v, where), mode);
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.what());
  }
}

const Json& array_at(const Json& obj, const char* key, const std::string& where) {
  const Json& v = field(obj, key, where);
  if (!v.is_array()) throw ParseError(where + "." + key + ": expected an array");
  return v;
}

Json atoms_json(const DiscreteMeasure& m) {
  Json out = Json::array();
  for (const auto& a : m.atoms()) out.push_back({{"x", a.x.str()}, {"w", a.w.str()}});
  return out;
}

Json scalar_map_json(const std::map<Scalar, Scalar>& m) {
  Json out = Json::array();
  for (const auto& [x, v] : m) out.push_back({{"x", x.str()}, {"value", v.str()}});
  return out;
}

Json extended_map_json(const std::map<Scalar, Extended>& m) {
  Json out = Json::array();
  for (const auto& [x, v] : m) out.push_back({{"x", x.str()}, {"value", v.str()}});
  return out;
}

Json pairs_json(const std::vector<SupportPair>& pairs) {
  Json out = Json::array();
  for (const auto& [x, y] : pairs) out.push_back({{"x", x.str()}, {"y", y.str()}});
  return out;
}

Json coupling_json(const transport::Coupling& p) {
  Json out = Json::array();
  for (const auto& [pair, w] : p.entries())
    out.push_back({{"x", pair.first.str()}, {"y", pair.second.str()}, {"p", w.str()}});
  return out;
}

Json interval_json(const measures::Interval& i) {
  return {{"lo", i.lo ? Json(i.lo->str()) : Json("-inf")}, {"hi", i.hi ? Json(i.hi->str()) : Json("inf")}};
}

Json checks_json(const std::vector<harness::Check>& checks) {
  Json out = Json::array();
  for (const auto& c : checks) out.push_back({{"clause", c.clause}, {"passed", c.passed}, {"detail", c.detail}});
  return out;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Report skeleton shared by every command.
Json header(const std::string& command, Json arguments) {
  Json r;
  r["schema_version"] = kSchemaVersion;
  r["command"] = command;
  r["arguments"] = std::move(arguments);
  return r;
}

struct Failure {
  int code;
  std::string type;
  std::string message;
};

int finish(Json report, int code, std::ostream& out) {
  report["exit_code"] = code;
  out << emit_report(report);
  return code;
}

// Inputs shared by the commands; filled by CLI11.
struct Inputs {
  std::string mu, nu, reward, points, chi;
  std::string formulation = "quasisure";
  std::string mode = "exact";
  std::string method = "both";
  bool emit_gamma = false;
  std::string scenario;
  std::optional<long> n;
  long N = 10;
  std::string delta = "1/4";
  std::string levels;
};

struct Loaded {
  DiscreteMeasure mu, nu;
  Json digests;
};

Loaded load_pair(const Inputs& in) {
  Loaded l{parse_measure_file(in.mu), parse_measure_file(in.nu), Json::object()};
  l.digests["mu"] = digest(l.mu);
  l.digests["nu"] = digest(l.nu);
  return l;
}

Mode pair_mode(const Loaded& l) {
  return l.mu.mode() == Mode::approx || l.nu.mode() == Mode::approx ? Mode::approx : Mode::exact;
}

int cmd_order(const Inputs& in, Json report, std::ostream& out) {
  auto l = load_pair(in);
  report["digests"] = l.digests;
  auto r = measures::check_convex_order(l.mu, l.nu);
  Json touch = Json::array();
  for (const auto& t : r.touch_points) touch.push_back(t.str());
  report["result"] = {{"ordered", r.ordered}, {"reason", r.reason}, {"touch_points", touch}};
  return finish(std::move(report), r.ordered ? kSuccess : kNotInOrder, out);
}

int cmd_decompose(const Inputs& in, Json report, std::ostream& out) {
  auto l = load_pair(in);
  report["digests"] = l.digests;
  auto order = measures::check_convex_order(l.mu, l.nu);
  if (!order.ordered) throw transport::NotInOrder("marginals are not in convex order: " + order.reason);
  auto d = measures::decompose(l.mu, l.nu);
  Json comps = Json::array();
  for (const auto& c : d.components) {
    comps.push_back({{"index", c.index},
                     {"interval", interval_json(c.interval)},
                     {"left_closed", c.left_closed},
                     {"right_closed", c.right_closed},
                     {"mu", atoms_json(c.mu)},
                     {"nu", atoms_json(c.nu)}});
  }
  report["result"] = {{"components", comps},
                      {"stationary", atoms_json(d.stationary)},
                      {"identity_coupling_mass", d.identity_coupling_mass.str()}};
  return finish(std::move(report), kSuccess, out);
}

int cmd_solve(const Inputs& in, Json report, std::ostream& out) {
  auto l = load_pair(in);
  Formulation formulation;
  try {
    formulation = transport::parse_formulation(in.formulation);
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
  const Mode mode = in.mode == "float" ? Mode::approx : Mode::exact;
  auto reward_text = read_file(in.reward);
  auto f = parse_reward(reward_text, mode, in.reward);
  l.digests["reward"] = "fnv1a64:" + hex64(fnv1a(nlohmann::json::parse(reward_text).dump()));
  report["digests"] = l.digests;

  transport::SolveConfig config;
  config.compute_gamma = in.emit_gamma;
  auto s = transport::solve_primal_dual(l.mu, l.nu, f, formulation, mode, config);
  Json result;
  result["formulation"] = transport::to_string(formulation);
  result["mode"] = mode == Mode::exact ? "exact" : "float";
  if (s.unbounded_pair) {
    result["value"] = "inf";
    result["unbounded_pair"] = {{"x", s.unbounded_pair->first.str()}, {"y", s.unbounded_pair->second.str()}};
    report["result"] = std::move(result);
    return finish(std::move(report), kUnbounded, out);
  }
  // a charged penalized cell means the true value is -inf
  result["value"] = s.effectively_neg_inf ? "-inf" : s.primal_value.str();
  result["lp_value"] = s.primal_value.str();
  result["dual_value"] = s.certificate.value.str();
  result["effectively_neg_inf"] = s.effectively_neg_inf;
  result["big_m"] = s.big_m ? Json(s.big_m->str()) : Json(nullptr);
  result["verified"] = s.verified();
  result["coupling"] = coupling_json(s.coupling);
  result["certificate"] = {{"phi", extended_map_json(s.certificate.phi)},
                           {"psi", extended_map_json(s.certificate.psi)},
                           {"h", scalar_map_json(s.certificate.h)}};
  Json comps = Json::array();
  for (const auto& v : s.component_values) comps.push_back(v.str());
  result["component_values"] = comps;
  result["stationary_value"] = s.stationary_value.str();
  if (in.emit_gamma) result["gamma"] = pairs_json(s.gamma.value_or(std::vector<SupportPair>{}));
  report["result"] = std::move(result);
  return finish(std::move(report), kSuccess, out);
}

int cmd_polar(const Inputs& in, Json report, std::ostream& out) {
  auto l = load_pair(in);
  report["digests"] = l.digests;
  auto points = parse_points(read_file(in.points), pair_mode(l), in.points);
  auto order = measures::check_convex_order(l.mu, l.nu);
  if (!order.ordered) throw transport::NotInOrder("marginals are not in convex order: " + order.reason);
  auto verdicts = transport::is_polar(measures::decompose(l.mu, l.nu), points);
  Json list = Json::array();
  for (const auto& v : verdicts)
    list.push_back({{"x", v.point.first.str()},
                    {"y", v.point.second.str()},
                    {"polar", v.polar},
                    {"reason", transport::to_string(v.reason)}});
  report["result"] = {{"points", list}};
  return finish(std::move(report), kSuccess, out);
}

int cmd_integral(const Inputs& in, Json report, std::ostream& out) {
  auto l = load_pair(in);
  report["digests"] = l.digests;
  if (in.method != "i2" && in.method != "i3" && in.method != "both")
    throw ParseError("--method must be i2, i3 or both");
  auto chi = parse_concave(read_file(in.chi), pair_mode(l), in.chi);
  auto order = measures::check_convex_order(l.mu, l.nu);
  if (!order.ordered) throw transport::NotInOrder("marginals are not in convex order: " + order.reason);
  Json result;
  std::optional<Scalar> i2, i3;
  if (in.method != "i3") {
    i2 = integrals::concave_integral_i2(chi, l.mu, l.nu);
    result["i2"] = i2->str();
  }
  if (in.method != "i2") {
    // any martingale coupling serves; take the optimizer of the zero reward
    std::vector<SupportPair> pairs;
    for (const auto& a : l.mu.atoms())
      for (const auto& b : l.nu.atoms()) pairs.emplace_back(a.x, b.x);
    auto zero = RewardSpec::table({}, Extended(Scalar(0).as(pair_mode(l))));
    auto coupling = transport::solve_on_pairs(l.mu, l.nu, zero, pairs);
    if (!coupling) throw transport::NotInOrder("no martingale coupling found");
    i3 = integrals::concave_integral_i3(chi, l.mu, l.nu, coupling->coupling);
    result["i3"] = i3->str();
  }
  if (i2 && i3) result["agree"] = approx_equal(*i2, *i3);
  report["result"] = std::move(result);
  return finish(std::move(report), kSuccess, out);
}

std::vector<long> parse_levels(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      long v = std::stol(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ParseError("--levels: '" + item + "' is not an integer");
    }
  }
  if (out.empty()) throw ParseError("--levels is empty");
  return out;
}

int cmd_harness(const Inputs& in, Json report, std::ostream& out) {
  auto name = harness::parse_scenario(in.scenario);
  harness::ScenarioParams params;
  params.n = in.n;
  params.N = in.N;
  params.delta = Scalar::parse(in.delta);
  Json result;
  result["scenario"] = harness::to_string(name);
  bool passed = false;
  if (!in.levels.empty()) {
    auto study = harness::run_refinement_study(name, parse_levels(in.levels), params);
    Json records = Json::array();
    for (const auto& r : study.records)
      records.push_back({{"level", r.level},
                         {"primal_value", r.primal_value.str()},
                         {"quasisure_min_osc", r.quasisure_min_osc.str()},
                         {"pointwise_min_osc", r.pointwise_min_osc.str()},
                         {"penalized_cell_used", r.penalized_cell_used}});
    result["records"] = records;
    result["verdicts"] = checks_json(study.verdicts);
    passed = study.passed();
  } else {
    auto scenario = harness::build_example(name, params);
    auto props = harness::verify_example_properties(scenario);
    result["n"] = scenario.n;
    result["mu_digest"] = digest(scenario.mu);
    result["nu_digest"] = digest(scenario.nu);
    result["checks"] = checks_json(props.checks);
    Json values = Json::object();
    for (const auto& [k, v] : props.values) values[k] = v;
    result["values"] = values;
    passed = props.passed();
  }
  result["passed"] = passed;
  report["result"] = std::move(result);
  return finish(std::move(report), passed ? kSuccess : kAssertionFailed, out);
}

Failure classify(const std::exception& e) {
  if (dynamic_cast<const transport::UnboundedReward*>(&e)) return {kUnbounded, "UnboundedReward", e.what()};
  if (dynamic_cast<const transport::NotInOrder*>(&e)) return {kNotInOrder, "NotInOrder", e.what()};
  if (dynamic_cast<const transport::PointwiseInfeasible*>(&e))
    return {kNotInOrder, "PointwiseInfeasible", e.what()};
  if (dynamic_cast<const ParseError*>(&e)) return {kInvalidInput, "ParseError", e.what()};
  if (dynamic_cast<const measures::NegativeMass*>(&e)) return {kInvalidInput, "NegativeMass", e.what()};
  if (dynamic_cast<const measures::EmptyMeasure*>(&e)) return {kInvalidInput, "EmptyMeasure", e.what()};
  if (dynamic_cast<const harness::BadParams*>(&e)) return {kInvalidInput, "BadParams", e.what()};
  if (dynamic_cast<const integrals::DomainMismatch*>(&e)) return {kInvalidInput, "DomainMismatch", e.what()};
  if (dynamic_cast<const integrals::NotConcave*>(&e)) return {kInvalidInput, "NotConcave", e.what()};
  return {kInvalidInput, "Error", e.what()};
}

}  // namespace

DiscreteMeasure parse_measure(const std::string& text, const std::string& source) {
  Json j = parse_json(text, source);
  Mode mode = Mode::exact;
  if (j.is_object() && j.contains("mode")) {
    const Json& m = j["mode"];
    if (m == "exact") {
      mode = Mode::exact;
    } else if (m == "float") {
      mode = Mode::approx;
    } else {
      throw ParseError(source + ": field 'mode' must be \"exact\" or \"float\"");
    }
  }
  const Json& atoms = array_at(j, "atoms", source);
  std::vector<Atom> raw;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    std::string where = source + ": atoms[" + std::to_string(i) + "]";
    raw.push_back({scalar_at(field(atoms[i], "x", where), mode, where + ".x"),
                   scalar_at(field(atoms[i], "w", where), mode, where + ".w")});
  }
  return DiscreteMeasure::make_probability_input(std::move(raw), mode);
}

DiscreteMeasure parse_measure_file(const std::string& path) { return parse_measure(read_file(path), path); }

std::string emit_measure(const DiscreteMeasure& m) {
  Json j;
  j["atoms"] = atoms_json(m);
  j["mode"] = m.mode() == Mode::exact ? "exact" : "float";
  return j.dump();
}

RewardSpec parse_reward(const std::string& text, Mode mode, const std::string& source) {
  Json j = parse_json(text, source);
  const Json& kind_field = field(j, "kind", source);
  if (!kind_field.is_string()) throw ParseError(source + ": field 'kind' must be a string");
  const std::string kind = kind_field.get<std::string>();
  if (kind == "square_diff") return RewardSpec::square_diff();
  if (kind == "abs_diff") return RewardSpec::abs_diff();
  if (kind == "indicator_offdiag") return RewardSpec::indicator_offdiag();
  if (kind == "offblock_sqrt") return RewardSpec::offblock_sqrt();
  if (kind == "penalized_band") {
    Scalar delta = scalar_at(field(j, "delta", source), mode, source + ".delta");
    std::optional<Scalar> penalty;
    if (j.contains("penalty")) penalty = scalar_at(j["penalty"], mode, source + ".penalty");
    return RewardSpec::penalized_band(delta, penalty);
  }
  if (kind == "table") {
    const Json& entries = array_at(j, "entries", source);
    std::map<SupportPair, Extended> table;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      std::string where = source + ": entries[" + std::to_string(i) + "]";
      Scalar x = scalar_at(field(entries[i], "x", where), mode, where + ".x");
      Scalar y = scalar_at(field(entries[i], "y", where), mode, where + ".y");
      table[{x, y}] = extended_at(field(entries[i], "f", where), mode, where + ".f");
    }
    std::optional<Extended> fallback;
    if (j.contains("default")) fallback = extended_at(j["default"], mode, source + ".default");
    return RewardSpec::table(std::move(table), fallback);
  }
  throw ParseError(source + ": unknown reward kind '" + kind + "'");
}

std::vector<SupportPair> parse_points(const std::string& text, Mode mode, const std::string& source) {
  Json j = parse_json(text, source);
  const Json& points = array_at(j, "points", source);
  std::vector<SupportPair> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::string where = source + ": points[" + std::to_string(i) + "]";
    out.emplace_back(scalar_at(field(points[i], "x", where), mode, where + ".x"),
                     scalar_at(field(points[i], "y", where), mode, where + ".y"));
  }
  return out;
}

integrals::ConcaveFunction parse_concave(const std::string& text, Mode mode, const std::string& source) {
  Json j = parse_json(text, source);
  std::vector<integrals::Breakpoint> bps;
  const Json& list = array_at(j, "breakpoints", source);
  for (std::size_t i = 0; i < list.size(); ++i) {
    std::string where = source + ": breakpoints[" + std::to_string(i) + "]";
    bps.push_back({scalar_at(field(list[i], "x", where), mode, where + ".x"),
                   scalar_at(field(list[i], "value", where), mode, where + ".value")});
  }
  if (bps.empty()) throw ParseError(source + ": at least one breakpoint is required");
  Scalar left = scalar_at(field(j, "left_slope", source), mode, source + ".left_slope");
  Scalar right = scalar_at(field(j, "right_slope", source), mode, source + ".right_slope");
  std::vector<integrals::BoundaryJump> jumps;
  if (j.contains("jumps")) {
    const Json& js = array_at(j, "jumps", source);
    for (std::size_t i = 0; i < js.size(); ++i) {
      std::string where = source + ": jumps[" + std::to_string(i) + "]";
      jumps.push_back({scalar_at(field(js[i], "x", where), mode, where + ".x"),
                       scalar_at(field(js[i], "magnitude", where), mode, where + ".magnitude")});
    }
  }
  return integrals::ConcaveFunction(std::move(bps), left, right, std::move(jumps));
}

std::string digest(const DiscreteMeasure& m) { return "fnv1a64:" + hex64(fnv1a(emit_measure(m))); }

std::string emit_report(const Json& report) { return report.dump(2) + "\n"; }

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Martingale optimal transport on finitely supported marginals", "mot"};
  app.require_subcommand(1);
  Inputs in;

  auto add_pair = [&](CLI::App* sub) {
    sub->add_option("--mu", in.mu, "first marginal (measure JSON)")->required();
    sub->add_option("--nu", in.nu, "second marginal (measure JSON)")->required();
  };
  auto* order = app.add_subcommand("order", "check convex order");
  add_pair(order);
  auto* decompose = app.add_subcommand("decompose", "irreducible decomposition");
  add_pair(decompose);
  auto* solve = app.add_subcommand("solve", "primal and dual transport problem");
  add_pair(solve);
  solve->add_option("--reward", in.reward, "reward JSON")->required();
  solve->add_option("--formulation", in.formulation, "pointwise | quasisure | componentwise")
      ->check(CLI::IsMember({"pointwise", "quasisure", "componentwise"}));
  solve->add_option("--mode", in.mode, "exact | float")->check(CLI::IsMember({"exact", "float"}));
  solve->add_flag("--emit-gamma", in.emit_gamma, "list the monotonicity set");
  auto* polar = app.add_subcommand("polar", "polarity of support pairs");
  add_pair(polar);
  polar->add_option("--points", in.points, "points JSON")->required();
  auto* integral = app.add_subcommand("integral", "generalized integral of a concave function");
  add_pair(integral);
  integral->add_option("--chi", in.chi, "concave function JSON")->required();
  integral->add_option("--method", in.method, "i2 | i3 | both")->check(CLI::IsMember({"i2", "i3", "both"}));
  auto* harness_cmd = app.add_subcommand("harness", "scenario checks and refinement studies");
  harness_cmd->add_option("name", in.scenario, "scenario name")->required();
  harness_cmd->add_option("--n", in.n, "grid size");
  harness_cmd->add_option("--N", in.N, "truncation of the integrability scenarios");
  harness_cmd->add_option("--delta", in.delta, "band half-width for no-lower-bound");
  harness_cmd->add_option("--levels", in.levels, "comma-separated grid sizes for a refinement study");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (e.get_exit_code() == 0) return kSuccess;
    Json report = header(args.empty() ? "" : args.front(), Json::object());
    report["error"] = {{"type", "UsageError"}, {"message", e.what()}};
    return finish(std::move(report), kInvalidInput, out);
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  Json arguments = Json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_single_name() == "help" || opt->count() == 0) continue;
    auto results = opt->results();
    arguments[opt->get_single_name()] = results.size() == 1 ? Json(results.front()) : Json(results);
  }
  Json report = header(command, arguments);
  try {
    if (command == "order") return cmd_order(in, report, out);
    if (command == "decompose") return cmd_decompose(in, report, out);
    if (command == "solve") return cmd_solve(in, report, out);
    if (command == "polar") return cmd_polar(in, report, out);
    if (command == "integral") return cmd_integral(in, report, out);
    return cmd_harness(in, report, out);
  } catch (const std::exception& e) {
    Failure f = classify(e);
    err << "error: " << f.message << "\n";
    report["error"] = {{"type", f.type}, {"message", f.message}};
    return finish(std::move(report), f.code, out);
  }
}

}  // namespace mot::cli
