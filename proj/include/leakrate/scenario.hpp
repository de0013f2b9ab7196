#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace leakrate {

struct BellScenario {
  int inputs_a = 2;
  int inputs_b = 2;
  int outputs_a = 2;
  int outputs_b = 2;

  void validate() const;
  bool binary() const { return outputs_a == 2 && outputs_b == 2; }
  bool operator==(const BellScenario&) const = default;
};

// Input distributions for test and generation rounds, both indexed [x][y].
struct InputDistribution {
  std::vector<std::vector<double>> p_test;
  std::vector<std::vector<double>> p_gen;
  // Probability of a test round. Carried as metadata; nothing consumes it.
  std::optional<double> gamma;

  static InputDistribution uniform_test(const BellScenario& s, int x_gen, int y_gen);
  void validate(const BellScenario& s) const;
  // The single input pair with p_gen = 1, if there is one.
  std::optional<std::pair<int, int>> generation_input() const;
};

struct WernerSpec {
  double q = 0.0;
  std::vector<double> angles_a;
  std::vector<double> angles_b;

  void validate() const;
};

// Conditional distribution p(a,b|x,y), stored dense.
class TargetBehavior {
 public:
  TargetBehavior() = default;
  explicit TargetBehavior(const BellScenario& s);

  const BellScenario& scenario() const { return scenario_; }
  double& operator()(int a, int b, int x, int y) { return data_[index(a, b, x, y)]; }
  double operator()(int a, int b, int x, int y) const { return data_[index(a, b, x, y)]; }
  double marginal_a(int a, int x, int y) const;
  double marginal_b(int b, int x, int y) const;

 private:
  std::size_t index(int a, int b, int x, int y) const;
  BellScenario scenario_;
  std::vector<double> data_;
};

enum class LeakageKind { BoundedWeight, ClassicalProbabilistic };
enum class LeakageProvenance { JointFourRegister, PerRegisterVariant };

struct LeakageModel {
  LeakageKind kind = LeakageKind::BoundedWeight;
  double delta = 0.0;
  LeakageProvenance provenance = LeakageProvenance::JointFourRegister;

  void validate() const;
};

std::string to_string(LeakageKind kind);
LeakageKind leakage_kind_from_string(const std::string& name);

enum class ConversionContext { JointFromPerRegister, SingleRoundTwoRegister, AccountingOneRegister };

TargetBehavior werner_behavior(const WernerSpec& spec);

// S = E(x0,y0) + E(x0,y1) + E(x1,y0) - E(x1,y1).
double chsh_value(const TargetBehavior& b, int x0, int x1, int y0, int y1);

// Leakage parameter for a given accounting context from the per-register one.
double convert_leakage_param(double delta_prime, ConversionContext context);

struct BehaviorViolation {
  enum class Kind { Negative, Normalization, Signalling };
  Kind kind;
  std::string where;
  double magnitude;
};

std::string to_string(BehaviorViolation::Kind kind);

std::vector<BehaviorViolation> validate_behavior(const TargetBehavior& b, double tol = 1e-9);

// Reproduction presets: Werner statistics measured at fixed X-Z plane angles.
enum class PresetId { TwoInputCHSH, FourInputMYCHSH };

struct ScenarioPreset {
  PresetId id;
  std::string name;
  BellScenario scenario;
  std::vector<double> angles_a;
  std::vector<double> angles_b;
  InputDistribution inputs;
  int npa_level;
  // Input labels for which the CHSH combination attains 2*sqrt(2) at q = 0.
  int chsh_x0, chsh_x1, chsh_y0, chsh_y1;

  WernerSpec werner(double q) const { return WernerSpec{q, angles_a, angles_b}; }
};

ScenarioPreset scenario_preset(PresetId id);
PresetId preset_from_string(const std::string& name);
std::string to_string(PresetId id);

// JSON layout: {"inputs_a","inputs_b","outputs_a","outputs_b","p"} with p
// nested as p[x][y][a][b].
nlohmann::json behavior_to_json(const TargetBehavior& b);
TargetBehavior behavior_from_json(const nlohmann::json& j);
std::string behavior_to_csv(const TargetBehavior& b);

}  // namespace leakrate
