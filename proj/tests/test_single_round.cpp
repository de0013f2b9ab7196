#include <doctest.h>

#include <cmath>
#include <random>

#include "leakrate/core_math.hpp"
#include "leakrate/errors.hpp"
#include "leakrate/single_round.hpp"

using namespace leakrate;

namespace {

SingleRoundSpec chsh_spec(double q, LeakageKind kind, double delta,
                          FidelityEncoding enc = FidelityEncoding::Diag2x2) {
  return preset_spec(PresetId::TwoInputCHSH, q, LeakageModel{kind, delta}, enc);
}

double certified_pg(const SingleRoundSpec& spec) {
  const BoundResult r = solve_single_round(spec);
  REQUIRE(r.certified);
  return r.guessing_prob_upper;
}

double solver_objective(const SingleRoundSpec& spec) {
  const Solution s = solve(assemble(spec));
  REQUIRE(s.status == SolveStatus::Optimal);
  return s.objective_value;
}

SingleRoundSpec with_target(const TargetBehavior& target, double delta) {
  SingleRoundSpec spec = chsh_spec(0.0, LeakageKind::BoundedWeight, delta);
  spec.target = target;
  spec.q.reset();
  return spec;
}

}  // namespace

TEST_CASE("entropy from guessing probability") {
  CHECK(entropy_from_guessing(LeakageKind::BoundedWeight, 1.0, 0.0, 2) == 0.0);
  CHECK(entropy_from_guessing(LeakageKind::ClassicalProbabilistic, 1.0, 0.3, 2) == 0.0);
  CHECK(entropy_from_guessing(LeakageKind::BoundedWeight, 0.5 + std::sqrt(2.0) / 4.0, 0.0, 2) ==
        doctest::Approx(0.22844669683638802736).epsilon(1e-12));
  CHECK(entropy_from_guessing(LeakageKind::ClassicalProbabilistic, 0.5, 0.5, 2) == doctest::Approx(0.5));
  CHECK(entropy_from_guessing(LeakageKind::BoundedWeight, 0.6, 1e-3, 2) ==
        doctest::Approx(-std::log2(0.6) - 0.31108131553191482531).epsilon(1e-12));
  CHECK(entropy_from_guessing(LeakageKind::BoundedWeight, 0.9, 1e-3, 2) == 0.0);
  CHECK(entropy_from_guessing(LeakageKind::BoundedWeight, 0.6, 1e-3, 2, false) ==
        doctest::Approx(-std::log2(0.6)).epsilon(1e-14));
}

TEST_CASE("analytic CHSH guessing bound") {
  CHECK(chsh_guessing_bound(2.0) == doctest::Approx(1.0));
  CHECK(chsh_guessing_bound(2.0 * std::sqrt(2.0)) == doctest::Approx(0.5));
  CHECK(chsh_guessing_bound(2.5) == doctest::Approx(0.5 + 0.5 * std::sqrt(2.0 - 6.25 / 4.0)));
}

TEST_CASE("spec validation") {
  SingleRoundSpec spec = chsh_spec(0.0, LeakageKind::BoundedWeight, 0.0);
  spec.inputs.p_gen[0][0] = 0.5;
  spec.inputs.p_gen[1][1] = 0.5;
  CHECK_THROWS(spec.validate());
  SingleRoundSpec lvl = chsh_spec(0.0, LeakageKind::BoundedWeight, 0.0);
  lvl.npa_level = 3;
  CHECK_THROWS(lvl.validate());
  CHECK_THROWS(assemble(chsh_spec(0.0, LeakageKind::BoundedWeight, 1e-3, FidelityEncoding::ChshOnly)));
}

TEST_CASE("ChshOnly relaxation reproduces the analytic bound for q > 0") {
  for (double q : {0.02, 0.05, 0.1}) {
    const double s = 2.0 * std::sqrt(2.0) * (1.0 - 2.0 * q);
    const double pg = certified_pg(chsh_spec(q, LeakageKind::BoundedWeight, 0.0, FidelityEncoding::ChshOnly));
    CHECK(pg >= chsh_guessing_bound(s) - 1e-7);
    CHECK(pg <= chsh_guessing_bound(s) + 1e-4);
  }
}

TEST_CASE("certified bound close to the solver objective at delta = 0") {
  const SingleRoundSpec spec = chsh_spec(0.05, LeakageKind::BoundedWeight, 0.0);
  const BoundResult r = solve_single_round(spec);
  REQUIRE(r.certified);
  CHECK(std::abs(r.guessing_prob_upper - r.primal_objective) <= 1e-5);
  CHECK(r.certificate.max_dual_infeasibility <= 1e-7);
}

TEST_CASE("delta = 0 encodings reduce to exact equalities") {
  // The cone encoding has no strictly feasible point at delta = 0, so its
  // solve need not report Optimal. Both certificates must still hold and
  // the last iterates must agree.
  for (auto kind : {LeakageKind::BoundedWeight, LeakageKind::ClassicalProbabilistic}) {
    SingleRoundSpec exact = chsh_spec(0.05, kind, 0.0);
    SingleRoundSpec cones = exact;
    cones.exact_at_zero = false;
    const ConicProblem pe = assemble(exact), pc = assemble(cones);
    const Solution se = solve(pe), sc = solve(pc);
    REQUIRE(se.status == SolveStatus::Optimal);
    const Certificate ce = verify_certificate(pe, se), cc = verify_certificate(pc, sc);
    REQUIRE(ce.valid);
    REQUIRE(cc.valid);
    CHECK(sc.objective_value == doctest::Approx(se.objective_value).epsilon(1e-5));
    CHECK(cc.certified_upper_bound >= se.objective_value - 1e-9);
    CHECK(ce.certified_upper_bound >= sc.objective_value - 1e-5);
  }
}

TEST_CASE("nearly vacuous leakage lets Eve guess") {
  for (auto kind : {LeakageKind::BoundedWeight, LeakageKind::ClassicalProbabilistic}) {
    const BoundResult r = solve_single_round(chsh_spec(0.0, kind, 0.99));
    CHECK(r.certified);
    CHECK(r.guessing_prob_upper >= 1.0 - 1e-5);
    CHECK(r.entropy_lower_bits == 0.0);
  }
}

TEST_CASE("explicit and eliminated classical leakage windows agree") {
  for (double delta : {1e-5, 1e-3, 0.05}) {
    SingleRoundSpec eliminated = chsh_spec(0.05, LeakageKind::ClassicalProbabilistic, delta);
    SingleRoundSpec explicit_vars = eliminated;
    explicit_vars.explicit_leak_variables = true;
    CHECK(std::abs(solver_objective(eliminated) - solver_objective(explicit_vars)) <= 1e-7);
  }
}

TEST_CASE("model and level orderings") {
  for (double q : {0.0, 0.03}) {
    const double bw = certified_pg(chsh_spec(q, LeakageKind::BoundedWeight, 1e-3));
    const double cp = certified_pg(chsh_spec(q, LeakageKind::ClassicalProbabilistic, 1e-3));
    CHECK(cp <= bw + 1e-6);

    const BoundResult bw0 = solve_single_round(chsh_spec(q, LeakageKind::BoundedWeight, 0.0));
    const BoundResult cp0 = solve_single_round(chsh_spec(q, LeakageKind::ClassicalProbabilistic, 0.0));
    CHECK(std::abs(bw0.entropy_lower_bits - cp0.entropy_lower_bits) <= 2e-8 + 2e-6);

    SingleRoundSpec level1 = chsh_spec(q, LeakageKind::BoundedWeight, 0.0);
    level1.npa_level = 1;
    CHECK(certified_pg(level1) >= bw0.guessing_prob_upper - 1e-6);
  }
}

TEST_CASE("dashed curve exceeds the solid one by the continuity correction") {
  const SingleRoundSpec spec = chsh_spec(0.02, LeakageKind::BoundedWeight, 1e-5);
  const BoundResult r = solve_single_round(spec);
  REQUIRE(r.certified);
  CHECK(r.entropy_without_fcont_bits - r.entropy_unclamped_bits == doctest::Approx(fcont(ContinuityInput(1e-5, 2))));
  CHECK(r.fcont_subtracted_bits == fcont(ContinuityInput(1e-5, 2)));
}

TEST_CASE("uniform behaviour gives no entropy") {
  for (auto kind : {LeakageKind::BoundedWeight, LeakageKind::ClassicalProbabilistic})
    for (double delta : {0.0, 1e-3}) {
      const BoundResult r = solve_single_round(chsh_spec(0.5, kind, delta));
      CHECK(r.certified);
      CHECK(r.guessing_prob_upper >= 1.0 - 1e-6);
      CHECK(r.entropy_lower_bits == 0.0);
    }
}

TEST_CASE("uncertified results are refused") {
  const SingleRoundSpec spec = chsh_spec(0.05, LeakageKind::BoundedWeight, 0.0);
  const ConicProblem p = assemble(spec);
  Solution s = solve(p);
  Certificate bogus = verify_certificate(p, s);
  bogus.valid = false;
  CHECK_THROWS_AS(entropy_bound(spec, s, bogus), SolverError);
  const BoundResult loose = entropy_bound(spec, s, bogus, true);
  CHECK_FALSE(loose.certified);
}

TEST_CASE("explicit attacks") {
  // Honest maximally entangled qubits with CHSH measurements and Eve holding
  // an uncorrelated qubit.
  AttackStrategy honest;
  honest.state = Eigen::VectorXcd::Zero(8);
  honest.state(0) = honest.state(6) = 1.0 / std::sqrt(2.0);
  const double angles_a[2] = {0.0, M_PI / 2}, angles_b[2] = {M_PI / 4, 3 * M_PI / 4};
  auto projectors = [](double theta) {
    Eigen::MatrixXcd p0(2, 2);
    p0 << std::cos(theta / 2) * std::cos(theta / 2), std::cos(theta / 2) * std::sin(theta / 2),
        std::cos(theta / 2) * std::sin(theta / 2), std::sin(theta / 2) * std::sin(theta / 2);
    return std::vector<Eigen::MatrixXcd>{p0, Eigen::MatrixXcd::Identity(2, 2) - p0};
  };
  for (double t : angles_a) honest.proj_a.push_back(projectors(t));
  for (double t : angles_b) honest.proj_b.push_back(projectors(t));
  honest.eve_povm = {Eigen::MatrixXcd::Identity(2, 2), Eigen::MatrixXcd::Zero(2, 2)};
  const AttackOutcome h = explicit_attack_oracle(honest);
  CHECK(h.guessing_prob == doctest::Approx(0.5));
  CHECK(validate_behavior(h.behavior).empty());
  const BoundResult rh = solve_single_round(with_target(h.behavior, 0.0));
  CHECK(rh.guessing_prob_upper >= 0.5 - 1e-9);

  // Deterministic local strategy.
  AttackStrategy local = honest;
  local.state = Eigen::VectorXcd::Zero(8);
  local.state(0) = 1.0;
  for (auto& px : local.proj_a) px = {Eigen::MatrixXcd::Identity(2, 2), Eigen::MatrixXcd::Zero(2, 2)};
  for (auto& py : local.proj_b) py = {Eigen::MatrixXcd::Identity(2, 2), Eigen::MatrixXcd::Zero(2, 2)};
  const AttackOutcome l = explicit_attack_oracle(local);
  CHECK(l.guessing_prob == doctest::Approx(1.0));
  const BoundResult rl = solve_single_round(with_target(l.behavior, 0.0));
  CHECK(rl.guessing_prob_upper >= 1.0 - 1e-9);

  AttackStrategy broken = honest;
  broken.eve_povm[0] *= 0.5;
  CHECK_THROWS(explicit_attack_oracle(broken));
}

TEST_CASE("random attacks never beat the certified bound") {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const AttackOutcome out = explicit_attack_oracle(random_attack_strategy(rng, 2, 2, 2 + trial % 3));
    const BoundResult r = solve_single_round(with_target(out.behavior, trial % 2 ? 1e-3 : 0.0));
    REQUIRE(r.certified);
    CHECK(r.guessing_prob_upper >= out.guessing_prob - 1e-9);
  }
}

TEST_CASE("sweep rows") {
  SweepOptions opts;
  opts.jobs = 2;
  const auto rows = sweep_curve(PresetId::TwoInputCHSH, {0.0, 0.05}, {0.0, 1e-3}, LeakageKind::BoundedWeight, opts);
  REQUIRE(rows.size() == 8);
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    CHECK_FALSE(rows[i].dashed);
    CHECK(rows[i + 1].dashed);
    CHECK(rows[i + 1].entropy_bits - rows[i].entropy_unclamped_bits ==
          doctest::Approx(fcont(ContinuityInput(rows[i].delta, 2))));
  }
  const std::string csv = sweep_to_csv(rows);
  CHECK(csv.rfind("preset,model,encoding,level,q,delta,entropy_bits,pguess,cert_slack\n", 0) == 0);
  CHECK(csv == sweep_to_csv(sweep_curve(PresetId::TwoInputCHSH, {0.0, 0.05}, {0.0, 1e-3},
                                        LeakageKind::BoundedWeight, opts)));
  CHECK(model_label(rows[1]) == "bounded-weight-dashed");
}
