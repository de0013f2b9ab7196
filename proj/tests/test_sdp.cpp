#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "leakrate/errors.hpp"
#include "leakrate/sdp.hpp"
#include "test_util.hpp"

using namespace leakrate;

namespace {

// maximize x s.t. [[1, x], [x, 1]] >= 0
ConicProblem toy_2x2() {
  ConicProblem p;
  const int x = p.add_var("x", 1.0);
  p.objective = {{x, 1.0}};
  PsdBlock b;
  b.size = 2;
  b.add_constant(0, 0, 1);
  b.add_constant(1, 1, 1);
  b.add(x, 0, 1, 1);
  p.blocks.push_back(b);
  return p;
}

// maximize sum_k t_k s.t. [[c_k, t_k], [t_k, p_k]] >= 0, sum p_k = 1 and
// p_k = 1/n. The optimum is sum_k sqrt(c_k / n).
ConicProblem bhattacharyya_problem(const std::vector<double>& c) {
  ConicProblem p;
  const int n = static_cast<int>(c.size());
  LinearRow total{{}, 1.0, "sum p"};
  for (int k = 0; k < n; ++k) {
    const int t = p.add_var("t" + std::to_string(k), 1.0);
    const int w = p.add_var("p" + std::to_string(k), 1.0);
    p.objective.push_back({t, 1.0});
    PsdBlock b;
    b.size = 2;
    b.add_constant(0, 0, c[k]);
    b.add(t, 0, 1, 1.0);
    b.add(w, 1, 1, 1.0);
    p.blocks.push_back(b);
    total.coeffs.push_back({w, 1.0});
    if (k + 1 < n) p.inequalities.push_back({{{w, 1.0}}, 1.0 / n, "p upper"}), p.inequalities.push_back({{{w, -1.0}}, -1.0 / n, "p lower"});
  }
  p.equalities.push_back(total);
  return p;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("2x2 toy") {
  const ConicProblem p = toy_2x2();
  const Solution s = solve(p);
  CHECK(s.status == SolveStatus::Optimal);
  CHECK(s.objective_value == doctest::Approx(1.0).epsilon(1e-7));
  const Certificate c = verify_certificate(p, s);
  CHECK(c.valid);
  CHECK(c.certified_upper_bound >= 1.0 - 1e-9);
  CHECK(c.certified_upper_bound <= 1.0 + 1e-5);
}

TEST_CASE("analytic dual of the 2x2 toy certifies 1") {
  const ConicProblem p = toy_2x2();
  Solution s;
  s.status = SolveStatus::Optimal;
  Eigen::MatrixXd dual(2, 2);
  dual << 0.5, -0.5, -0.5, 0.5;
  s.block_duals = {dual};
  const Certificate c = verify_certificate(p, s, 1e-8);
  CHECK(c.valid);
  CHECK(c.certified_upper_bound == doctest::Approx(1.0).epsilon(1e-7));

  // A dual with a -0.1 eigenvalue is rejected.
  Eigen::MatrixXd bad = dual;
  bad -= 0.1 * Eigen::MatrixXd::Identity(2, 2);
  s.block_duals = {bad};
  const Certificate r = verify_certificate(p, s, 1e-8);
  CHECK_FALSE(r.valid);
  CHECK(r.certified_upper_bound == kUnbounded);
  CHECK_FALSE(r.message.empty());
}

TEST_CASE("certificate needs duals") {
  const ConicProblem p = toy_2x2();
  Solution s;
  CHECK_THROWS_AS(verify_certificate(p, s), SolverError);
}

TEST_CASE("bhattacharyya fidelity as an SDP") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 4;
    const ProbVector c = test::random_prob_vector(rng, n);
    std::vector<double> cv(c.weights().begin(), c.weights().end());
    const ConicProblem p = bhattacharyya_problem(cv);
    const Solution s = solve(p);
    REQUIRE(s.status == SolveStatus::Optimal);
    const double expected = bhattacharyya_fidelity(c, ProbVector::uniform(n));
    CHECK(s.objective_value == doctest::Approx(expected).epsilon(1e-6));
    const Certificate cert = verify_certificate(p, s);
    REQUIRE(cert.valid);
    CHECK(cert.certified_upper_bound >= expected - 1e-9);
    CHECK(cert.certified_upper_bound >= s.objective_value - 1e-6);
    CHECK(cert.certified_upper_bound <= expected + 1e-5);
  }
}

TEST_CASE("infeasible toy") {
  ConicProblem p;
  const int x = p.add_var("x");
  p.objective = {{x, 1.0}};
  p.inequalities.push_back({{{x, -1.0}}, -1.0, "x>=1"});
  p.inequalities.push_back({{{x, 1.0}}, 0.0, "x<=0"});
  CHECK(solve(p).status == SolveStatus::Infeasible);
}

TEST_CASE("problem validation") {
  ConicProblem p = toy_2x2();
  p.objective.push_back({5, 1.0});
  CHECK_THROWS(p.validate());
  ConicProblem q = toy_2x2();
  q.blocks[0].entries.push_back({0, 1, 0, 1.0});
  CHECK_THROWS(q.validate());
}

TEST_CASE("SDPA export") {
  ConicProblem empty;
  PsdBlock zero;
  zero.size = 1;
  empty.blocks.push_back(zero);
  CHECK(export_sdpa(empty) == "0\n1\n1\n\n");

  ConicProblem one;
  const int x = one.add_var("x");
  one.objective = {{x, 1.0}};
  PsdBlock b;
  b.size = 1;
  b.add(x, 0, 0, 1.0);
  one.blocks.push_back(b);
  one.equalities.push_back({{{x, 1.0}}, 1.0, "x=1"});
  CHECK(export_sdpa(one) == read_text(LEAKRATE_TEST_DATA "/single_equality.dat-s"));

  ConicProblem with_ineq = bhattacharyya_problem({0.2, 0.3, 0.5});
  CHECK_THROWS_AS(export_sdpa(with_ineq), ConfigError);
  const std::string first = export_sdpa(with_inequalities_as_slack_block(with_ineq));
  CHECK(first == export_sdpa(with_inequalities_as_slack_block(bhattacharyya_problem({0.2, 0.3, 0.5}))));
}

TEST_CASE("SDPA result parsing") {
  const ConicProblem p = toy_2x2();
  const std::string text =
      "phase.value = pdOPT\nobjValPrimal = -1.0\nobjValDual = -1.0\n"
      "xVec = \n{1.0}\nyMat = \n{\n{{0.5,-0.5},{-0.5,0.5}}\n}\n";
  const Solution s = parse_sdpa_result(p, text);
  CHECK(s.status == SolveStatus::Optimal);
  CHECK(s.objective_value == doctest::Approx(1.0));
  CHECK(verify_certificate(p, s).valid);
  CHECK(parse_sdpa_result(p, "phase.value = pINF\n").status == SolveStatus::Infeasible);
  CHECK_THROWS_AS(parse_sdpa_result(p, "phase.value = pdOPT\nobjValPrimal = 1\n"), SolverError);
}

TEST_CASE("solver options") {
  CHECK(solver_options_from_string("embedded").engine == "embedded");
  const SolverOptions ext = solver_options_from_string("external:/bin/solver");
  CHECK(ext.engine == "external");
  CHECK(ext.external_path == "/bin/solver");
  CHECK_THROWS_AS(solver_options_from_string("mosek"), ConfigError);
}
