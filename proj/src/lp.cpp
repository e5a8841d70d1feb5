#include "mot/lp.hpp"

#include <cmath>
#include <limits>

namespace mot::lp {

std::size_t LinearProgram::add_column(std::string label, Scalar objective, ColumnKind kind) {
  if (column_labels_.count(label)) throw Error("duplicate column label '" + label + "'");
  column_labels_.emplace(label, columns_.size());
  columns_.push_back({std::move(label), objective.as(mode_), kind});
  return columns_.size() - 1;
}

std::size_t LinearProgram::add_row(std::string label, RowSense sense, Scalar rhs,
                                   std::vector<std::pair<std::size_t, Scalar>> coefficients,
                                   RowKind kind) {
  if (row_labels_.count(label)) throw Error("duplicate row label '" + label + "'");
  for (auto& [j, v] : coefficients) {
    if (j >= columns_.size()) throw Error("row '" + label + "' references unknown column");
    v = v.as(mode_);
  }
  row_labels_.emplace(label, rows_.size());
  rows_.push_back({std::move(label), sense, rhs.as(mode_), kind, std::move(coefficients)});
  return rows_.size() - 1;
}

void LinearProgram::set_objective(std::size_t column, Scalar value) {
  columns_.at(column).objective = value.as(mode_);
}

std::size_t LinearProgram::column_index(const std::string& label) const {
  auto it = column_labels_.find(label);
  if (it == column_labels_.end()) throw Error("unknown column '" + label + "'");
  return it->second;
}

std::size_t LinearProgram::row_index(const std::string& label) const {
  auto it = row_labels_.find(label);
  if (it == row_labels_.end()) throw Error("unknown row '" + label + "'");
  return it->second;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::optimal:
      return "optimal";
    case Status::infeasible:
      return "infeasible";
    case Status::unbounded:
      return "unbounded";
  }
  return "unknown";
}

namespace {

template <class T>
struct Arith;

template <>
struct Arith<mpq_class> {
  static mpq_class from(const Scalar& s) { return s.rational(); }
  static Scalar to(const mpq_class& v) { return Scalar(v); }
  static int sgn(const mpq_class& v, double) { return ::sgn(v); }
  static bool nonzero(const mpq_class& v) { return ::sgn(v) != 0; }
  // a -= f * b
  static void submul(mpq_class& a, const mpq_class& f, const mpq_class& b, mpq_class& tmp) {
    mpq_mul(tmp.get_mpq_t(), f.get_mpq_t(), b.get_mpq_t());
    mpq_sub(a.get_mpq_t(), a.get_mpq_t(), tmp.get_mpq_t());
  }
  static void clean(mpq_class&) {}
};

template <>
struct Arith<double> {
  static double from(const Scalar& s) { return s.to_double(); }
  static Scalar to(double v) { return Scalar::approx(v); }
  static int sgn(double v, double tol) { return std::abs(v) <= tol ? 0 : (v > 0 ? 1 : -1); }
  static bool nonzero(double v) { return v != 0.0; }
  static void submul(double& a, double f, double b, double&) { a -= f * b; }
  static void clean(double& v) {
    if (std::abs(v) < 1e-13) v = 0.0;
  }
};

std::uint64_t default_limit(std::size_t rows, std::size_t cols) {
  std::size_t e = rows + cols;
  if (e >= 63) return std::numeric_limits<std::uint64_t>::max();
  return std::uint64_t{1} << e;
}

// Dense tableau simplex. Columns: original, then slacks, then artificials.
template <class T>
class Simplex {
  using A = Arith<T>;

 public:
  Simplex(const LinearProgram& lp, const SolveOptions& opt) : lp_(lp), opt_(opt) {
    m_ = lp.num_rows();
    n_ = lp.num_columns();
    std::size_t slacks = 0;
    for (const auto& r : lp.rows()) slacks += r.sense == RowSense::less_equal;
    // Worst case every row needs an artificial.
    width_ = n_ + slacks + m_;
    tab_.assign(m_ * width_, T(0));
    rhs_.assign(m_, T(0));
    basis_.assign(m_, 0);
    identity_col_.assign(m_, 0);
    row_sign_.assign(m_, 1);
    is_artificial_.assign(width_, false);
    cost_.assign(width_, T(0));
    for (std::size_t j = 0; j < n_; ++j) cost_[j] = A::from(lp.columns()[j].objective);

    std::size_t next_slack = n_;
    std::size_t next_art = n_ + slacks;
    for (std::size_t i = 0; i < m_; ++i) {
      const Row& row = lp.rows()[i];
      for (const auto& [j, v] : row.coefficients) at(i, j) += A::from(v);
      rhs_[i] = A::from(row.rhs);
      std::size_t slack = width_;
      if (row.sense == RowSense::less_equal) {
        slack = next_slack++;
        at(i, slack) = T(1);
      }
      if (A::sgn(rhs_[i], 0.0) < 0) {
        row_sign_[i] = -1;
        for (std::size_t j = 0; j < width_; ++j) at(i, j) = -at(i, j);
        rhs_[i] = -rhs_[i];
      }
      if (slack != width_ && row_sign_[i] > 0) {
        basis_[i] = slack;
        identity_col_[i] = slack;
      } else {
        std::size_t art = next_art++;
        at(i, art) = T(1);
        is_artificial_[art] = true;
        basis_[i] = art;
        identity_col_[i] = art;
      }
    }
    used_width_ = next_art;
    limit_ = opt.iteration_limit ? opt.iteration_limit : default_limit(m_, n_);
  }

  LpSolution run() {
    LpSolution sol;
    // Phase 1: maximize -sum(artificials).
    std::vector<T> phase1_cost(width_, T(0));
    for (std::size_t j = 0; j < used_width_; ++j)
      if (is_artificial_[j]) phase1_cost[j] = T(-1);
    price(phase1_cost);
    if (iterate(sol) == Status::unbounded) throw Error("phase 1 unbounded; corrupt tableau");
    if (A::sgn(z_, opt_.feasibility_tolerance) < 0) {
      sol.status = Status::infeasible;
      sol.objective = A::to(T(0));
      return sol;
    }
    drive_out_artificials(sol);

    price(cost_);
    sol.status = iterate(sol);
    if (sol.status != Status::optimal) {
      sol.objective = A::to(T(0));
      return sol;
    }

    sol.primal.assign(n_, A::to(T(0)));
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) sol.primal[basis_[i]] = A::to(rhs_[i]);
    sol.dual.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      T y = -reduced_[identity_col_[i]];
      if (row_sign_[i] < 0) y = -y;
      sol.dual[i] = A::to(y);
    }
    sol.objective = A::to(z_);
    return sol;
  }

 private:
  T& at(std::size_t i, std::size_t j) { return tab_[i * width_ + j]; }

  std::uint64_t degenerate_limit() const { return 50 * static_cast<std::uint64_t>(m_ + n_); }

  double tol() const { return std::is_same_v<T, double> ? opt_.pivot_tolerance : 0.0; }

  void price(const std::vector<T>& cost) {
    active_cost_ = cost;
    reduced_.assign(width_, T(0));
    T tmp;
    for (std::size_t j = 0; j < used_width_; ++j) {
      reduced_[j] = cost[j];
      for (std::size_t i = 0; i < m_; ++i) {
        const T& cb = cost[basis_[i]];
        if (A::nonzero(cb) && A::nonzero(at(i, j))) A::submul(reduced_[j], cb, at(i, j), tmp);
      }
    }
    z_ = T(0);
    for (std::size_t i = 0; i < m_; ++i) z_ += cost[basis_[i]] * rhs_[i];
  }

  void pivot(std::size_t r, std::size_t e, LpSolution& sol) {
    T inv = T(1) / at(r, e);
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j < used_width_; ++j) {
      if (A::nonzero(at(r, j))) {
        at(r, j) *= inv;
        nz.push_back(j);
      }
    }
    rhs_[r] *= inv;
    at(r, e) = T(1);
    T tmp;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r || !A::nonzero(at(i, e))) continue;
      T f = at(i, e);
      for (std::size_t j : nz) {
        A::submul(at(i, j), f, at(r, j), tmp);
        A::clean(at(i, j));
      }
      A::submul(rhs_[i], f, rhs_[r], tmp);
      A::clean(rhs_[i]);
      at(i, e) = T(0);
    }
    if (A::nonzero(reduced_[e])) {
      T f = reduced_[e];
      for (std::size_t j : nz) {
        A::submul(reduced_[j], f, at(r, j), tmp);
        A::clean(reduced_[j]);
      }
      z_ += f * rhs_[r];
      reduced_[e] = T(0);
    }
    basis_[r] = e;
    sol.pivots.emplace_back(e, r);
    ++sol.iterations;
  }

  Status iterate(LpSolution& sol) {
    while (true) {
      const bool bland = opt_.rule == PivotRule::bland || degenerate_run_ > degenerate_limit();
      std::size_t e = used_width_;
      for (std::size_t j = 0; j < used_width_; ++j) {
        if (is_artificial_[j] || A::sgn(reduced_[j], tol()) <= 0) continue;
        if (e == used_width_ || (!bland && reduced_[j] > reduced_[e])) e = j;
        if (bland) break;
      }
      if (e == used_width_) return Status::optimal;
      std::size_t r = m_;
      T best{};
      std::vector<std::size_t> tied;
      for (std::size_t i = 0; i < m_; ++i) {
        if (A::sgn(at(i, e), tol()) <= 0) continue;
        T ratio = rhs_[i] / at(i, e);
        if (r == m_ || ratio < best) {
          r = i;
          best = ratio;
          tied.assign(1, i);
        } else if (ratio == best) {
          tied.push_back(i);
          if (bland && basis_[i] < basis_[r]) r = i;
        }
      }
      if (r == m_) return Status::unbounded;
      if (!bland && tied.size() > 1) r = lexicographic_row(tied, e);
      if (sol.iterations >= limit_) throw IterationLimit("simplex iteration limit reached");
      if (A::sgn(best, tol()) == 0) {
        ++degenerate_run_;
      } else if (degenerate_run_ <= degenerate_limit()) {
        degenerate_run_ = 0;
      }
      pivot(r, e, sol);
    }
  }

  // Among rows tied in the ratio test, the one whose inverse-basis row divided
  // by the pivot entry is lexicographically smallest. The rows of the inverse
  // basis are the tableau entries under the initial identity columns.
  std::size_t lexicographic_row(const std::vector<std::size_t>& tied, std::size_t e) {
    std::vector<std::size_t> alive = tied;
    for (std::size_t k = 0; k < m_ && alive.size() > 1; ++k) {
      const std::size_t col = identity_col_[k];
      std::vector<std::size_t> next;
      T best{};
      for (std::size_t i : alive) {
        T v = at(i, col) / at(i, e);
        if (next.empty() || v < best) {
          best = v;
          next.assign(1, i);
        } else if (v == best) {
          next.push_back(i);
        }
      }
      alive = std::move(next);
    }
    return alive.front();
  }

  void drive_out_artificials(LpSolution& sol) {
    for (std::size_t i = 0; i < m_; ++i) {
      if (!is_artificial_[basis_[i]]) continue;
      std::size_t e = used_width_;
      for (std::size_t j = 0; j < used_width_; ++j) {
        if (!is_artificial_[j] && A::sgn(at(i, j), tol()) != 0) {
          e = j;
          break;
        }
      }
      if (e == used_width_) {
        ++sol.redundant_rows;
      } else {
        pivot(i, e, sol);
      }
    }
  }

  const LinearProgram& lp_;
  const SolveOptions& opt_;
  std::size_t m_ = 0, n_ = 0, width_ = 0, used_width_ = 0;
  std::vector<T> tab_;
  std::vector<T> rhs_;
  std::vector<T> cost_;
  std::vector<T> active_cost_;
  std::vector<T> reduced_;
  T z_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> identity_col_;
  std::vector<int> row_sign_;
  std::vector<bool> is_artificial_;
  std::uint64_t limit_ = 0;
  std::uint64_t degenerate_run_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SolveOptions& options) {
  if (lp.mode() == Mode::exact) return Simplex<mpq_class>(lp, options).run();
  return Simplex<double>(lp, options).run();
}

VerificationReport verify_solution(const LinearProgram& lp, const LpSolution& sol,
                                   const VerifyTolerances& tol) {
  VerificationReport rep;
  const bool exact = lp.mode() == Mode::exact;
  const double feas = exact ? 0.0 : tol.feasibility;
  const Scalar zero = Scalar(0).as(lp.mode());
  rep.gap = zero;
  if (sol.status != Status::optimal) {
    rep.messages.push_back("solution status is " + to_string(sol.status));
    return rep;
  }
  if (sol.primal.size() != lp.num_columns() || sol.dual.size() != lp.num_rows()) {
    rep.messages.push_back("solution dimensions do not match the program");
    return rep;
  }

  rep.primal_feasible = true;
  for (std::size_t j = 0; j < lp.num_columns(); ++j) {
    if (sign(sol.primal[j], feas) < 0) {
      rep.primal_feasible = false;
      rep.messages.push_back("negative primal value in column " + lp.columns()[j].label);
    }
  }
  std::vector<Scalar> activity(lp.num_rows(), zero);
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const Row& row = lp.rows()[i];
    for (const auto& [j, v] : row.coefficients) activity[i] += v * sol.primal[j];
    int s = sign(activity[i] - row.rhs, feas);
    if ((row.sense == RowSense::equal && s != 0) || (row.sense == RowSense::less_equal && s > 0)) {
      rep.primal_feasible = false;
      rep.messages.push_back("row " + row.label + " violated: activity " + activity[i].str() +
                             " vs rhs " + row.rhs.str());
    }
  }

  rep.dual_feasible = true;
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    if (lp.rows()[i].sense == RowSense::less_equal && sign(sol.dual[i], feas) < 0) {
      rep.dual_feasible = false;
      rep.messages.push_back("negative dual on inequality row " + lp.rows()[i].label);
    }
  }
  std::vector<Scalar> column_dual(lp.num_columns(), zero);
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    for (const auto& [j, v] : lp.rows()[i].coefficients) column_dual[j] += v * sol.dual[i];
  }
  Scalar primal_obj = zero;
  for (std::size_t j = 0; j < lp.num_columns(); ++j) {
    const auto& col = lp.columns()[j];
    primal_obj += col.objective * sol.primal[j];
    Scalar reduced = column_dual[j] - col.objective;
    if (sign(reduced, feas) < 0) {
      rep.dual_feasible = false;
      rep.messages.push_back("dual constraint violated for column " + col.label);
    }
    if (sign(sol.primal[j], feas) > 0 && sign(reduced, feas) != 0)
      rep.slackness_violations.push_back("column " + col.label + " positive but dual constraint slack");
  }
  Scalar dual_obj = zero;
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const Row& row = lp.rows()[i];
    dual_obj += row.rhs * sol.dual[i];
    if (row.sense == RowSense::less_equal && sign(sol.dual[i], feas) > 0 &&
        sign(activity[i] - row.rhs, feas) != 0)
      rep.slackness_violations.push_back("row " + row.label + " has positive dual but is slack");
  }
  rep.gap = primal_obj - dual_obj;
  rep.gap_ok = sign(rep.gap, exact ? 0.0 : tol.gap) == 0;
  if (!rep.gap_ok) rep.messages.push_back("duality gap " + rep.gap.str());
  if (sign(primal_obj - sol.objective, exact ? 0.0 : tol.gap) != 0)
    rep.messages.push_back("reported objective differs from recomputed primal objective");
  return rep;
}

}  // namespace mot::lp
