#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <tuple>

#include "leakrate/errors.hpp"
#include "leakrate/sdp.hpp"

namespace leakrate {

void PsdBlock::add(int var, int row, int col, double value) {
  if (row > col) std::swap(row, col);
  entries.push_back(BlockEntry{var, row, col, value});
}

int ConicProblem::add_var(std::string name, double bound) {
  var_names.push_back(std::move(name));
  if (var_bounds.size() < static_cast<std::size_t>(num_vars)) var_bounds.resize(num_vars, kUnbounded);
  var_bounds.push_back(bound);
  return num_vars++;
}

double ConicProblem::bound(int var) const {
  return static_cast<std::size_t>(var) < var_bounds.size() ? var_bounds[var] : kUnbounded;
}

void ConicProblem::validate() const {
  auto check_var = [&](int v) {
    if (v < 0 || v >= num_vars) throw ConfigError("variable index out of range in conic problem");
  };
  for (const auto& [v, c] : objective) {
    check_var(v);
    if (!std::isfinite(c)) throw ConfigError("non-finite objective coefficient");
  }
  for (const auto& b : blocks) {
    if (b.size <= 0) throw ConfigError("PSD block with non-positive size");
    for (const auto& e : b.entries) {
      if (e.var != kConstantTerm) check_var(e.var);
      if (e.row < 0 || e.col < e.row || e.col >= b.size) throw ConfigError("block entry out of range");
      if (b.diagonal && e.row != e.col) throw ConfigError("off-diagonal entry in diagonal block");
      if (!std::isfinite(e.value)) throw ConfigError("non-finite block entry");
    }
  }
  for (const auto* rows : {&equalities, &inequalities})
    for (const auto& r : *rows) {
      for (const auto& [v, c] : r.coeffs) {
        check_var(v);
        if (!std::isfinite(c)) throw ConfigError("non-finite linear coefficient");
      }
      if (!std::isfinite(r.rhs)) throw ConfigError("non-finite right-hand side");
    }
}

namespace {

std::vector<std::pair<int, double>> merge_coeffs(const std::vector<std::pair<int, double>>& in) {
  std::map<int, double> acc;
  for (const auto& [v, c] : in) acc[v] += c;
  std::vector<std::pair<int, double>> out;
  for (const auto& [v, c] : acc)
    if (c != 0.0) out.emplace_back(v, c);
  return out;
}

}  // namespace

ConicProblem normalized(const ConicProblem& p) {
  p.validate();
  ConicProblem out = p;
  out.objective = merge_coeffs(p.objective);
  for (auto& b : out.blocks) {
    std::map<std::tuple<int, int, int>, double> acc;
    for (const auto& e : b.entries) acc[{e.var, e.row, e.col}] += e.value;
    b.entries.clear();
    for (const auto& [k, v] : acc)
      if (v != 0.0) b.entries.push_back(BlockEntry{std::get<0>(k), std::get<1>(k), std::get<2>(k), v});
  }
  for (auto* rows : {&out.equalities, &out.inequalities})
    for (auto& r : *rows) r.coeffs = merge_coeffs(r.coeffs);
  out.var_bounds.resize(out.num_vars, kUnbounded);
  return out;
}

ConicProblem with_inequalities_as_slack_block(const ConicProblem& p) {
  ConicProblem out = p;
  if (p.inequalities.empty()) return out;
  PsdBlock slack;
  slack.size = static_cast<int>(p.inequalities.size());
  slack.diagonal = true;
  slack.label = "inequality slack";
  for (int j = 0; j < slack.size; ++j) {
    const auto& r = p.inequalities[j];
    if (r.rhs != 0.0) slack.add_constant(j, j, r.rhs);
    for (const auto& [v, c] : r.coeffs) slack.add(v, j, j, -c);
  }
  out.blocks.push_back(std::move(slack));
  out.inequalities.clear();
  return out;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Inaccurate: return "inaccurate";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Failed: return "failed";
  }
  return "unknown";
}

bool Solution::has_duals() const { return !block_duals.empty() || !eq_duals.empty() || !ineq_duals.empty(); }

SolverOptions solver_options_from_string(const std::string& spec) {
  SolverOptions o;
  if (spec.empty() || spec == "embedded") return o;
  const std::string prefix = "external:";
  if (spec.rfind(prefix, 0) == 0 && spec.size() > prefix.size()) {
    o.engine = "external";
    o.external_path = spec.substr(prefix.size());
    return o;
  }
  throw ConfigError("unknown solver '" + spec + "' (expected embedded or external:<path>)");
}

SolverOptions solver_options_from_environment(const std::string& flag_value) {
  if (!flag_value.empty()) return solver_options_from_string(flag_value);
  if (const char* env = std::getenv("LEAKRATE_SOLVER"); env && *env) return solver_options_from_string(env);
  return SolverOptions{};
}

Solution solve(const ConicProblem& p, const SolverOptions& opts) {
  if (opts.engine == "external") return solve_external(p, opts);
  return solve_embedded(p, opts);
}

nlohmann::json to_json(const Solution& s) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& m : s.block_duals) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
      nlohmann::json r = nlohmann::json::array();
      for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
      rows.push_back(r);
    }
    blocks.push_back(rows);
  }
  return {{"status", to_string(s.status)},
          {"diagnostic", s.diagnostic},
          {"engine", s.engine},
          {"objective_value", s.objective_value},
          {"dual_objective", s.dual_objective},
          {"duality_gap", s.duality_gap},
          {"primal_infeasibility", s.primal_infeasibility},
          {"dual_infeasibility", s.dual_infeasibility},
          {"iterations", s.iterations},
          {"primal", s.primal},
          {"eq_duals", s.eq_duals},
          {"ineq_duals", s.ineq_duals},
          {"block_duals", blocks}};
}

nlohmann::json to_json(const Certificate& c) {
  return {{"valid", c.valid},
          {"certified_upper_bound", c.certified_upper_bound},
          {"max_dual_infeasibility", c.max_dual_infeasibility},
          {"tolerance_used", c.tolerance_used},
          {"dual_objective", c.dual_objective},
          {"inflation", c.inflation},
          {"rigorous", c.rigorous},
          {"message", c.message}};
}

}  // namespace leakrate
