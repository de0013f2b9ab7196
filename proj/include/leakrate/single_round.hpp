#pragma once

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "leakrate/npa.hpp"
#include "leakrate/scenario.hpp"
#include "leakrate/sdp.hpp"

namespace leakrate {

enum class FidelityEncoding { Diag2x2, UhlmannFull, ChshOnly };
std::string to_string(FidelityEncoding e);
FidelityEncoding encoding_from_string(const std::string& name);

enum class KeyMap { KeyIsA };

struct SingleRoundSpec {
  BellScenario scenario;
  TargetBehavior target;
  InputDistribution inputs;
  LeakageModel leakage;
  int npa_level = 1;
  KeyMap key_map = KeyMap::KeyIsA;
  FidelityEncoding encoding = FidelityEncoding::Diag2x2;
  // Input labels of the CHSH combination used by ChshOnly.
  std::array<int, 4> chsh_inputs{0, 1, 0, 1};
  // At delta = 0 a fidelity of 1 forces the branch-averaged behaviour to equal
  // the target; emit that as equalities instead of degenerate cones.
  bool exact_at_zero = true;
  // Classical-probabilistic model with the leaked distribution as explicit
  // variables instead of eliminated into a window.
  bool explicit_leak_variables = false;
  // Werner noise, if the target came from a preset; metadata only.
  std::optional<double> q;

  void validate() const;
};

SingleRoundSpec preset_spec(PresetId preset, double q, const LeakageModel& leakage,
                            FidelityEncoding encoding = FidelityEncoding::Diag2x2,
                            std::optional<int> level = std::nullopt);

// Guessing-probability relaxation: one subnormalized moment matrix per guess
// of Eve, objective sum_e P_e(a = e | x*), constraints on the branch average.
ConicProblem assemble_bounded_weight(const SingleRoundSpec& spec);
ConicProblem assemble_classical_prob(const SingleRoundSpec& spec);
ConicProblem assemble(const SingleRoundSpec& spec);

struct BoundResult {
  double guessing_prob_upper = 1.0;
  double entropy_lower_bits = 0.0;
  // -log2 P_g without the continuity correction (the dashed curves).
  double entropy_without_fcont_bits = 0.0;
  // Before clamping at zero.
  double entropy_unclamped_bits = 0.0;
  double fcont_subtracted_bits = 0.0;
  double primal_objective = 0.0;
  bool certified = false;
  SolveStatus status = SolveStatus::Failed;
  Certificate certificate;
  int level = 0;
  FidelityEncoding encoding = FidelityEncoding::Diag2x2;
  LeakageKind model = LeakageKind::BoundedWeight;
  double delta = 0.0;
  std::optional<double> q;
};

// Entropy lower bound implied by a guessing probability under each model.
double entropy_from_guessing(LeakageKind model, double pguess, double delta, int dim_s,
                             bool subtract_fcont = true);

BoundResult entropy_bound(const SingleRoundSpec& spec, const Solution& solution, const Certificate& cert,
                          bool allow_uncertified = false);

BoundResult solve_single_round(const SingleRoundSpec& spec, const SolverOptions& opts = {},
                               double cert_tol = kDefaultCertificateTolerance, bool allow_uncertified = false);

nlohmann::json to_json(const BoundResult& r);

// Analytic guessing probability for a given CHSH value.
double chsh_guessing_bound(double chsh);

struct SweepOptions {
  FidelityEncoding encoding = FidelityEncoding::Diag2x2;
  SolverOptions solver;
  double cert_tol = kDefaultCertificateTolerance;
  int jobs = 0;  // 0: hardware concurrency
  bool allow_uncertified = false;
  std::optional<int> level;
};

struct SweepRow {
  PresetId preset;
  LeakageKind model;
  FidelityEncoding encoding;
  int level;
  double q;
  double delta;
  bool dashed;  // continuity correction omitted
  double entropy_bits;
  double entropy_unclamped_bits;
  double pguess;
  double cert_slack;
  bool certified;
};

std::vector<SweepRow> sweep_curve(PresetId preset, const std::vector<double>& q_grid,
                                  const std::vector<double>& delta_list, LeakageKind model,
                                  const SweepOptions& opts = {});

// CSV with header preset,model,encoding,level,q,delta,entropy_bits,pguess,cert_slack.
// Uncertified rows carry NA as cert_slack.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
std::string model_label(const SweepRow& row);

// Explicit attack: state on A (x) B (x) E, projective measurements for A and
// B, and a POVM for Eve guessing A at input x_star.
struct AttackStrategy {
  int dim_a = 2;
  int dim_b = 2;
  int dim_e = 2;
  Eigen::VectorXcd state;
  std::vector<std::vector<Eigen::MatrixXcd>> proj_a;  // [x][a]
  std::vector<std::vector<Eigen::MatrixXcd>> proj_b;  // [y][b]
  std::vector<Eigen::MatrixXcd> eve_povm;             // [guess]
  int x_star = 0;
};

struct AttackOutcome {
  double guessing_prob;
  TargetBehavior behavior;
};

AttackOutcome explicit_attack_oracle(const AttackStrategy& s);

// Random pure state with random rank-one qubit measurements for A and B and a
// random projective measurement for Eve.
AttackStrategy random_attack_strategy(std::mt19937& rng, int inputs_a, int inputs_b, int dim_e);

}  // namespace leakrate
