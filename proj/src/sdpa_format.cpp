#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <memory>
#include <sstream>
#include <tuple>

#include "leakrate/errors.hpp"
#include "leakrate/sdp.hpp"

namespace leakrate {

namespace {

std::string fmt(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string export_sdpa(const ConicProblem& problem) {
  if (!problem.inequalities.empty())
    throw ConfigError("export_sdpa: convert inequalities to a slack block first");
  const ConicProblem p = normalized(problem);

  std::vector<int> sizes;
  for (const auto& b : p.blocks) sizes.push_back(b.diagonal ? -b.size : b.size);
  const bool eq_block = !p.equalities.empty();
  if (eq_block) sizes.push_back(-2 * static_cast<int>(p.equalities.size()));

  // (matno, blkno, i, j) -> value; SDPA minimizes c.x with sum F_i x_i - F_0 >= 0.
  std::vector<std::tuple<int, int, int, int, double>> lines;
  for (std::size_t k = 0; k < p.blocks.size(); ++k)
    for (const auto& e : p.blocks[k].entries) {
      const int matno = e.var == kConstantTerm ? 0 : e.var + 1;
      const double v = e.var == kConstantTerm ? -e.value : e.value;
      lines.emplace_back(matno, static_cast<int>(k) + 1, e.row + 1, e.col + 1, v);
    }
  if (eq_block) {
    const int blk = static_cast<int>(p.blocks.size()) + 1;
    for (std::size_t l = 0; l < p.equalities.size(); ++l) {
      const auto& r = p.equalities[l];
      const int up = static_cast<int>(2 * l) + 1;
      const int down = up + 1;
      // a.y - rhs >= 0 and rhs - a.y >= 0.
      if (r.rhs != 0.0) {
        lines.emplace_back(0, blk, up, up, r.rhs);
        lines.emplace_back(0, blk, down, down, -r.rhs);
      }
      for (const auto& [v, c] : r.coeffs) {
        lines.emplace_back(v + 1, blk, up, up, c);
        lines.emplace_back(v + 1, blk, down, down, -c);
      }
    }
  }
  std::sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) {
    return std::make_tuple(std::get<0>(a), std::get<1>(a), std::get<2>(a), std::get<3>(a)) <
           std::make_tuple(std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b));
  });

  std::vector<double> c(p.num_vars, 0.0);
  for (const auto& [v, coef] : p.objective) c[v] = -coef;

  std::ostringstream os;
  os << p.num_vars << '\n' << sizes.size() << '\n';
  for (std::size_t i = 0; i < sizes.size(); ++i) os << (i ? " " : "") << sizes[i];
  os << '\n';
  for (std::size_t i = 0; i < c.size(); ++i) os << (i ? " " : "") << fmt(c[i]);
  os << '\n';
  for (const auto& [m, b, i, j, v] : lines) os << m << ' ' << b << ' ' << i << ' ' << j << ' ' << fmt(v) << '\n';
  return os.str();
}

namespace {

// Nested brace lists as written by SDPA-style solvers.
struct Node {
  bool leaf = false;
  double value = 0.0;
  std::vector<Node> items;
};

class BraceParser {
 public:
  explicit BraceParser(std::string_view text) : text_(text) {}

  Node parse() {
    skip();
    if (pos_ >= text_.size() || text_[pos_] != '{') throw SolverError("solver output: expected '{'");
    return list();
  }

 private:
  void skip() {
    while (pos_ < text_.size() && (std::isspace(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == ','))
      ++pos_;
  }

  Node list() {
    Node n;
    ++pos_;
    for (;;) {
      skip();
      if (pos_ >= text_.size()) throw SolverError("solver output: unterminated list");
      if (text_[pos_] == '}') {
        ++pos_;
        return n;
      }
      if (text_[pos_] == '{') {
        n.items.push_back(list());
        continue;
      }
      std::size_t end = pos_;
      while (end < text_.size() && !std::isspace(static_cast<unsigned char>(text_[end])) && text_[end] != ',' &&
             text_[end] != '}' && text_[end] != '{')
        ++end;
      Node leaf;
      leaf.leaf = true;
      leaf.value = std::stod(std::string(text_.substr(pos_, end - pos_)));
      n.items.push_back(leaf);
      pos_ = end;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

double find_scalar(const std::string& text, const std::string& key) {
  auto at = text.find(key);
  if (at == std::string::npos) throw SolverError("solver output: missing " + key);
  at = text.find('=', at);
  return std::stod(text.substr(at + 1));
}

Node find_list(const std::string& text, const std::string& key) {
  auto at = text.find(key);
  if (at == std::string::npos) throw SolverError("solver output: missing " + key);
  at = text.find('{', at);
  if (at == std::string::npos) throw SolverError("solver output: missing list after " + key);
  return BraceParser(std::string_view(text).substr(at)).parse();
}

Eigen::MatrixXd node_matrix(const Node& n, int size, bool diagonal) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size, size);
  if (diagonal || (!n.items.empty() && n.items.front().leaf)) {
    if (static_cast<int>(n.items.size()) != size) throw SolverError("solver output: diagonal block size mismatch");
    for (int i = 0; i < size; ++i) m(i, i) = n.items[i].value;
    return m;
  }
  if (static_cast<int>(n.items.size()) != size) throw SolverError("solver output: block size mismatch");
  for (int i = 0; i < size; ++i) {
    if (static_cast<int>(n.items[i].items.size()) != size) throw SolverError("solver output: row size mismatch");
    for (int j = 0; j < size; ++j) m(i, j) = n.items[i].items[j].value;
  }
  return m;
}

}  // namespace

Solution parse_sdpa_result(const ConicProblem& problem, const std::string& text) {
  const ConicProblem p = normalized(problem);
  Solution s;
  s.engine = "external";
  const auto phase_at = text.find("phase.value");
  const std::string phase = phase_at == std::string::npos ? "" : text.substr(phase_at, text.find('\n', phase_at) - phase_at);
  if (phase.find("pdOPT") != std::string::npos) s.status = SolveStatus::Optimal;
  else if (phase.find("pINF") != std::string::npos) s.status = SolveStatus::Infeasible;
  else if (phase.find("pdFEAS") != std::string::npos || phase.find("noINFO") != std::string::npos)
    s.status = SolveStatus::Inaccurate;
  else s.status = SolveStatus::Failed;
  s.diagnostic = phase;
  if (s.status == SolveStatus::Infeasible || s.status == SolveStatus::Failed) return s;

  const Node xvec = find_list(text, "xVec");
  if (static_cast<int>(xvec.items.size()) != p.num_vars) throw SolverError("solver output: xVec size mismatch");
  for (const Node& n : xvec.items) s.primal.push_back(n.value);

  const Node ymat = find_list(text, "yMat");
  const std::size_t expected = p.blocks.size() + (p.equalities.empty() ? 0 : 1);
  if (ymat.items.size() != expected) throw SolverError("solver output: yMat block count mismatch");
  for (std::size_t k = 0; k < p.blocks.size(); ++k)
    s.block_duals.push_back(node_matrix(ymat.items[k], p.blocks[k].size, p.blocks[k].diagonal));
  if (!p.equalities.empty()) {
    const Eigen::MatrixXd pairs = node_matrix(ymat.items.back(), 2 * static_cast<int>(p.equalities.size()), true);
    for (std::size_t l = 0; l < p.equalities.size(); ++l)
      s.eq_duals.push_back(pairs(2 * l + 1, 2 * l + 1) - pairs(2 * l, 2 * l));
  }
  s.objective_value = -find_scalar(text, "objValPrimal") + p.objective_constant;
  s.dual_objective = -find_scalar(text, "objValDual") + p.objective_constant;
  s.duality_gap = s.dual_objective - s.objective_value;
  return s;
}

}  // namespace leakrate
