#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace leakrate {

inline constexpr int kConstantTerm = -1;
inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// One coefficient of an affine symmetric matrix map. row <= col; an
// off-diagonal entry stands for both (row,col) and (col,row).
struct BlockEntry {
  int var;  // kConstantTerm for the constant matrix
  int row;
  int col;
  double value;
};

// Constraint F0 + sum_i y_i F_i >= 0 (PSD). Diagonal blocks only use row == col.
struct PsdBlock {
  int size = 0;
  bool diagonal = false;
  std::vector<BlockEntry> entries;
  std::string label;

  void add(int var, int row, int col, double value);
  void add_constant(int row, int col, double value) { add(kConstantTerm, row, col, value); }
};

struct LinearRow {
  std::vector<std::pair<int, double>> coeffs;
  double rhs = 0.0;
  std::string label;
};

// maximize  c.y + c0
// s.t.      F0_k + sum_i y_i F_ik >= 0  for every block k
//           a.y == rhs                  for every equality row
//           a.y <= rhs                  for every inequality row
// var_bounds[i] is an a-priori bound on |y_i| over the feasible set (infinite
// when unknown); certificates use it to absorb residual dual infeasibility.
struct ConicProblem {
  int num_vars = 0;
  std::vector<std::pair<int, double>> objective;
  double objective_constant = 0.0;
  std::vector<PsdBlock> blocks;
  std::vector<LinearRow> equalities;
  std::vector<LinearRow> inequalities;
  std::vector<double> var_bounds;
  std::vector<std::string> var_names;

  int add_var(std::string name, double bound = kUnbounded);
  void validate() const;
  double bound(int var) const;
};

// Sorted entries with duplicates merged and exact zeros dropped.
ConicProblem normalized(const ConicProblem& p);

// Moves every inequality into one trailing diagonal block with entries
// rhs - a.y >= 0.
ConicProblem with_inequalities_as_slack_block(const ConicProblem& p);

enum class SolveStatus { Optimal, Inaccurate, Infeasible, Failed };
std::string to_string(SolveStatus s);

// Dual multipliers follow the Lagrangian
//   c.y + c0 + sum_k <X_k, F0_k + sum_i y_i F_ik> + sum_j lam_j (rhs_j - a_j.y)
//            + sum_l mu_l (rhs_l - a_l.y)
// with X_k >= 0 (block_duals), lam >= 0 (ineq_duals) and mu free (eq_duals).
struct Solution {
  SolveStatus status = SolveStatus::Failed;
  std::string diagnostic;
  std::string engine;
  std::vector<double> primal;
  std::vector<Eigen::MatrixXd> block_duals;
  std::vector<double> eq_duals;
  std::vector<double> ineq_duals;
  double objective_value = 0.0;
  double dual_objective = 0.0;
  double duality_gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;

  bool has_duals() const;
};

struct Certificate {
  bool valid = false;
  double certified_upper_bound = kUnbounded;
  double max_dual_infeasibility = kUnbounded;
  double tolerance_used = 0.0;
  double dual_objective = 0.0;
  // Correction added to the dual objective: residual terms bounded through
  // var_bounds plus tol * (1 + sum of dual trace norms).
  double inflation = 0.0;
  // False when some residual could not be bounded through var_bounds.
  bool rigorous = false;
  std::string message;
};

inline constexpr double kDefaultSolverTolerance = 1e-8;
inline constexpr double kDefaultCertificateTolerance = 1e-7;

struct SolverOptions {
  double tol = kDefaultSolverTolerance;
  int max_iterations = 200;
  // "embedded" or the path of an external SDPA-reading executable.
  std::string engine = "embedded";
  std::string external_path;
  bool verbose = false;
};

// Parses "embedded" or "external:<path>".
SolverOptions solver_options_from_string(const std::string& spec);
// Command-line value if non-empty, else LEAKRATE_SOLVER, else embedded.
SolverOptions solver_options_from_environment(const std::string& flag_value);

Solution solve(const ConicProblem& p, const SolverOptions& opts = {});
Solution solve_embedded(const ConicProblem& p, const SolverOptions& opts = {});
Solution solve_external(const ConicProblem& p, const SolverOptions& opts);

Certificate verify_certificate(const ConicProblem& p, const Solution& s,
                               double tol = kDefaultCertificateTolerance);

// Sparse SDPA (.dat-s) text. Requires inequalities to be converted first.
// Equality rows are written as a pair of opposite entries in one trailing
// diagonal block. The SDPA problem minimizes -(c.y).
std::string export_sdpa(const ConicProblem& p);

// Parses SDPA-style solver output (objValPrimal, xVec, yMat) back into a
// Solution for the problem that was exported.
Solution parse_sdpa_result(const ConicProblem& p, const std::string& text);

nlohmann::json to_json(const Solution& s);
nlohmann::json to_json(const Certificate& c);

}  // namespace leakrate
