#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mot/scalar.hpp"

namespace mot::lp {

class IterationLimit : public Error {
 public:
  using Error::Error;
};

enum class RowSense { equal, less_equal };
/// What a row or column means for a transport LP; purely descriptive.
enum class RowKind { mu, nu, martingale, other };
enum class ColumnKind { pair, other };

struct Column {
  std::string label;
  Scalar objective;
  ColumnKind kind = ColumnKind::other;
};

struct Row {
  std::string label;
  RowSense sense = RowSense::equal;
  Scalar rhs;
  RowKind kind = RowKind::other;
  std::vector<std::pair<std::size_t, Scalar>> coefficients;  // (column, value)
};

/**
 * @brief maximize c'x subject to rows, x >= 0.
 *
 * All data is converted to the program's mode when added.
 */
class LinearProgram {
 public:
  explicit LinearProgram(Mode mode = Mode::exact) : mode_(mode) {}

  std::size_t add_column(std::string label, Scalar objective, ColumnKind kind = ColumnKind::other);
  std::size_t add_row(std::string label, RowSense sense, Scalar rhs,
                      std::vector<std::pair<std::size_t, Scalar>> coefficients,
                      RowKind kind = RowKind::other);
  void set_objective(std::size_t column, Scalar value);

  Mode mode() const { return mode_; }
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::size_t num_columns() const { return columns_.size(); }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t column_index(const std::string& label) const;
  std::size_t row_index(const std::string& label) const;

 private:
  Mode mode_;
  std::vector<Column> columns_;
  std::vector<Row> rows_;
  std::unordered_map<std::string, std::size_t> column_labels_;
  std::unordered_map<std::string, std::size_t> row_labels_;
};

enum class Status { optimal, infeasible, unbounded };
std::string to_string(Status s);

struct LpSolution {
  Status status = Status::infeasible;
  std::vector<Scalar> primal;  // per column
  std::vector<Scalar> dual;    // per row; free sign on equality rows, >= 0 on <= rows
  Scalar objective;
  /// Rows found linearly dependent in phase 1.
  std::size_t redundant_rows = 0;
  std::size_t iterations = 0;
  /// (entering column, leaving row) for every pivot, in order.
  std::vector<std::pair<std::size_t, std::size_t>> pivots;
};

enum class PivotRule {
  /// Smallest-index entering and leaving choices.
  bland,
  /// Largest reduced cost enters (ties to the smaller index); the leaving row
  /// minimizes the ratio lexicographically over the rows of the inverse basis.
  /// After a long run of degenerate pivots it switches to bland for good.
  dantzig_lexicographic
};

struct SolveOptions {
  PivotRule rule = PivotRule::dantzig_lexicographic;
  /// Approx mode only: pivot/reduced-cost threshold.
  double pivot_tolerance = 1e-9;
  /// Approx mode only: phase 1 infeasibility threshold.
  double feasibility_tolerance = 1e-8;
  /// 0 means the default guard 2^(rows + cols), saturated.
  std::uint64_t iteration_limit = 0;
};

/// Two-phase primal simplex; both pivot rules terminate on degenerate programs.
LpSolution solve_lp(const LinearProgram& lp, const SolveOptions& options = {});

struct VerificationReport {
  bool primal_feasible = false;
  bool dual_feasible = false;
  Scalar gap;
  bool gap_ok = false;
  std::vector<std::string> slackness_violations;
  std::vector<std::string> messages;

  bool ok() const {
    return primal_feasible && dual_feasible && gap_ok && slackness_violations.empty();
  }
};

struct VerifyTolerances {
  double feasibility = 1e-8;
  double gap = 1e-7;
};

/// Recomputes residuals, dual feasibility, gap and complementary slackness from
/// the LP data alone. Exact programs are checked with zero tolerance.
VerificationReport verify_solution(const LinearProgram& lp, const LpSolution& sol,
                                   const VerifyTolerances& tol = {});

}  // namespace mot::lp
