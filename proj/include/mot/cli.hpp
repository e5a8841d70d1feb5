#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mot/integrals.hpp"
#include "mot/measures.hpp"
#include "mot/transport.hpp"

namespace mot::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kSuccess = 0,
  kAssertionFailed = 1,  // a harness check or verdict failed
  kInvalidInput = 2,
  kNotInOrder = 3,  // also: no pointwise certificate exists
  kUnbounded = 4,
};

/// {"atoms": [{"x": "p/q", "w": "p/q"}, ...], "mode": "exact" | "float"}.
/// Numbers may also be given as JSON numbers. Throws ParseError naming the
/// offending field, NegativeMass or EmptyMeasure.
measures::DiscreteMeasure parse_measure(const std::string& text, const std::string& source = "<input>");
measures::DiscreteMeasure parse_measure_file(const std::string& path);

/// Canonical measure JSON; parse_measure inverts it exactly.
std::string emit_measure(const measures::DiscreteMeasure& m);

/// {"kind": "square_diff" | "abs_diff" | "indicator_offdiag" | "offblock_sqrt"},
/// {"kind": "penalized_band", "delta": q, "penalty": q (optional)} or
/// {"kind": "table", "entries": [{"x", "y", "f"}], "default": v (optional)};
/// table values admit "inf" and "-inf".
transport::RewardSpec parse_reward(const std::string& text, Mode mode = Mode::exact,
                                   const std::string& source = "<input>");

/// {"points": [{"x", "y"}, ...]}
std::vector<transport::SupportPair> parse_points(const std::string& text, Mode mode = Mode::exact,
                                                 const std::string& source = "<input>");

/// {"breakpoints": [{"x", "value"}], "left_slope": s, "right_slope": s,
///  "jumps": [{"x", "magnitude"}] (optional)}
integrals::ConcaveFunction parse_concave(const std::string& text, Mode mode = Mode::exact,
                                         const std::string& source = "<input>");

/// FNV-1a 64-bit hash of the canonical measure JSON, as "fnv1a64:<16 hex digits>".
std::string digest(const measures::DiscreteMeasure& m);

/// Two-space indented JSON followed by a newline.
std::string emit_report(const Json& report);

/// Runs one command line (without the program name). The JSON report goes to
/// `out`, diagnostics to `err`; the return value is an ExitCode.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mot::cli
