#include "leakrate/scenario.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "leakrate/errors.hpp"

namespace leakrate {

namespace {

void check_table(const std::vector<std::vector<double>>& t, const BellScenario& s,
                 const char* name) {
  if (static_cast<int>(t.size()) != s.inputs_a) throw ConfigError(std::string(name) + ": wrong x size");
  double total = 0.0;
  for (const auto& row : t) {
    if (static_cast<int>(row.size()) != s.inputs_b) throw ConfigError(std::string(name) + ": wrong y size");
    for (double v : row) {
      if (!(v >= 0.0)) throw ConfigError(std::string(name) + ": negative entry");
      total += v;
    }
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError(std::string(name) + ": does not sum to 1");
}

}  // namespace

void BellScenario::validate() const {
  if (inputs_a < 2 || inputs_b < 2 || outputs_a < 2 || outputs_b < 2)
    throw ConfigError("Bell scenario needs at least 2 inputs and 2 outputs per party");
}

InputDistribution InputDistribution::uniform_test(const BellScenario& s, int x_gen, int y_gen) {
  s.validate();
  InputDistribution d;
  const double u = 1.0 / (s.inputs_a * s.inputs_b);
  d.p_test.assign(s.inputs_a, std::vector<double>(s.inputs_b, u));
  d.p_gen.assign(s.inputs_a, std::vector<double>(s.inputs_b, 0.0));
  d.p_gen.at(x_gen).at(y_gen) = 1.0;
  return d;
}

void InputDistribution::validate(const BellScenario& s) const {
  check_table(p_test, s, "p_test");
  check_table(p_gen, s, "p_gen");
  if (gamma && !(*gamma >= 0.0 && *gamma <= 1.0)) throw ConfigError("gamma outside [0,1]");
}

std::optional<std::pair<int, int>> InputDistribution::generation_input() const {
  for (std::size_t x = 0; x < p_gen.size(); ++x)
    for (std::size_t y = 0; y < p_gen[x].size(); ++y)
      if (p_gen[x][y] == 1.0) return std::make_pair(static_cast<int>(x), static_cast<int>(y));
  return std::nullopt;
}

void WernerSpec::validate() const {
  if (!(q >= 0.0 && q <= 0.5)) throw DomainError("Werner noise q must lie in [0, 1/2]");
  if (angles_a.size() < 2 || angles_b.size() < 2) throw ConfigError("need at least two angles per party");
}

TargetBehavior::TargetBehavior(const BellScenario& s) : scenario_(s) {
  s.validate();
  data_.assign(static_cast<std::size_t>(s.inputs_a * s.inputs_b * s.outputs_a * s.outputs_b), 0.0);
}

std::size_t TargetBehavior::index(int a, int b, int x, int y) const {
  const auto& s = scenario_;
  if (a < 0 || a >= s.outputs_a || b < 0 || b >= s.outputs_b || x < 0 || x >= s.inputs_a || y < 0 ||
      y >= s.inputs_b)
    throw std::out_of_range("behavior index out of range");
  return static_cast<std::size_t>(((x * s.inputs_b + y) * s.outputs_a + a) * s.outputs_b + b);
}

double TargetBehavior::marginal_a(int a, int x, int y) const {
  double m = 0.0;
  for (int b = 0; b < scenario_.outputs_b; ++b) m += (*this)(a, b, x, y);
  return m;
}

double TargetBehavior::marginal_b(int b, int x, int y) const {
  double m = 0.0;
  for (int a = 0; a < scenario_.outputs_a; ++a) m += (*this)(a, b, x, y);
  return m;
}

void LeakageModel::validate() const {
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("leakage delta must lie in [0,1)");
}

std::string to_string(LeakageKind kind) {
  return kind == LeakageKind::BoundedWeight ? "bounded-weight" : "classical-prob";
}

LeakageKind leakage_kind_from_string(const std::string& name) {
  if (name == "bounded-weight" || name == "bw") return LeakageKind::BoundedWeight;
  if (name == "classical-prob" || name == "cp") return LeakageKind::ClassicalProbabilistic;
  throw ConfigError("unknown leakage model '" + name + "'");
}

TargetBehavior werner_behavior(const WernerSpec& spec) {
  spec.validate();
  BellScenario s{static_cast<int>(spec.angles_a.size()), static_cast<int>(spec.angles_b.size()), 2, 2};
  TargetBehavior out(s);
  const double visibility = 1.0 - 2.0 * spec.q;
  for (int x = 0; x < s.inputs_a; ++x)
    for (int y = 0; y < s.inputs_b; ++y) {
      const double corr = visibility * std::cos(spec.angles_a[x] - spec.angles_b[y]);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) out(a, b, x, y) = 0.25 * (1.0 + ((a ^ b) ? -corr : corr));
    }
  return out;
}

double chsh_value(const TargetBehavior& b, int x0, int x1, int y0, int y1) {
  if (!b.scenario().binary()) throw DomainError("chsh_value requires binary outputs");
  auto corr = [&](int x, int y) {
    return b(0, 0, x, y) + b(1, 1, x, y) - b(0, 1, x, y) - b(1, 0, x, y);
  };
  return corr(x0, y0) + corr(x0, y1) + corr(x1, y0) - corr(x1, y1);
}

double convert_leakage_param(double delta_prime, ConversionContext context) {
  if (!(delta_prime >= 0.0 && delta_prime < 1.0)) throw DomainError("delta' must lie in [0,1)");
  double factor = 1.0;
  switch (context) {
    case ConversionContext::JointFromPerRegister: factor = 4.0; break;
    case ConversionContext::SingleRoundTwoRegister: factor = 2.0; break;
    case ConversionContext::AccountingOneRegister: factor = 1.0; break;
  }
  const double out = factor * delta_prime;
  if (out >= 1.0) throw DomainError("converted leakage parameter is >= 1; constraint is vacuous");
  return out;
}

std::string to_string(BehaviorViolation::Kind kind) {
  switch (kind) {
    case BehaviorViolation::Kind::Negative: return "negative";
    case BehaviorViolation::Kind::Normalization: return "normalization";
    case BehaviorViolation::Kind::Signalling: return "signalling";
  }
  return "unknown";
}

std::vector<BehaviorViolation> validate_behavior(const TargetBehavior& b, double tol) {
  const auto& s = b.scenario();
  std::vector<BehaviorViolation> out;
  auto at = [](int x, int y) {
    return "x=" + std::to_string(x) + ",y=" + std::to_string(y);
  };
  for (int x = 0; x < s.inputs_a; ++x)
    for (int y = 0; y < s.inputs_b; ++y) {
      double total = 0.0;
      for (int a = 0; a < s.outputs_a; ++a)
        for (int c = 0; c < s.outputs_b; ++c) {
          const double v = b(a, c, x, y);
          total += v;
          if (v < -tol)
            out.push_back({BehaviorViolation::Kind::Negative,
                           at(x, y) + ",a=" + std::to_string(a) + ",b=" + std::to_string(c), -v});
        }
      if (std::abs(total - 1.0) > tol)
        out.push_back({BehaviorViolation::Kind::Normalization, at(x, y), std::abs(total - 1.0)});
    }
  // Largest spread of each marginal over the other party's input.
  for (int x = 0; x < s.inputs_a; ++x)
    for (int a = 0; a < s.outputs_a; ++a) {
      double lo = 1e300, hi = -1e300;
      for (int y = 0; y < s.inputs_b; ++y) {
        lo = std::min(lo, b.marginal_a(a, x, y));
        hi = std::max(hi, b.marginal_a(a, x, y));
      }
      if (hi - lo > tol)
        out.push_back({BehaviorViolation::Kind::Signalling,
                       "A marginal a=" + std::to_string(a) + ",x=" + std::to_string(x), hi - lo});
    }
  for (int y = 0; y < s.inputs_b; ++y)
    for (int c = 0; c < s.outputs_b; ++c) {
      double lo = 1e300, hi = -1e300;
      for (int x = 0; x < s.inputs_a; ++x) {
        lo = std::min(lo, b.marginal_b(c, x, y));
        hi = std::max(hi, b.marginal_b(c, x, y));
      }
      if (hi - lo > tol)
        out.push_back({BehaviorViolation::Kind::Signalling,
                       "B marginal b=" + std::to_string(c) + ",y=" + std::to_string(y), hi - lo});
    }
  return out;
}

ScenarioPreset scenario_preset(PresetId id) {
  constexpr double pi = std::numbers::pi;
  ScenarioPreset p{};
  p.id = id;
  if (id == PresetId::TwoInputCHSH) {
    p.name = "chsh2";
    p.scenario = BellScenario{2, 2, 2, 2};
    p.angles_a = {0.0, pi / 2};
    p.angles_b = {pi / 4, 3 * pi / 4};
    p.npa_level = 2;
    p.chsh_x0 = 1;
    p.chsh_x1 = 0;
    p.chsh_y0 = 0;
    p.chsh_y1 = 1;
  } else {
    p.name = "mychsh4";
    p.scenario = BellScenario{4, 4, 2, 2};
    p.angles_a = {0.0, pi / 4, pi / 2, 3 * pi / 4};
    p.angles_b = p.angles_a;
    p.npa_level = 1;
    // Inputs 0,2 on A and 1,3 on B form a CHSH-optimal subset.
    p.chsh_x0 = 2;
    p.chsh_x1 = 0;
    p.chsh_y0 = 1;
    p.chsh_y1 = 3;
  }
  p.inputs = InputDistribution::uniform_test(p.scenario, 0, 0);
  return p;
}

PresetId preset_from_string(const std::string& name) {
  if (name == "chsh2" || name == "fig2" || name == "two-input") return PresetId::TwoInputCHSH;
  if (name == "mychsh4" || name == "fig1" || name == "four-input") return PresetId::FourInputMYCHSH;
  throw ConfigError("unknown scenario preset '" + name + "'");
}

std::string to_string(PresetId id) { return id == PresetId::TwoInputCHSH ? "chsh2" : "mychsh4"; }

nlohmann::json behavior_to_json(const TargetBehavior& b) {
  const auto& s = b.scenario();
  nlohmann::json p = nlohmann::json::array();
  for (int x = 0; x < s.inputs_a; ++x) {
    nlohmann::json px = nlohmann::json::array();
    for (int y = 0; y < s.inputs_b; ++y) {
      nlohmann::json pxy = nlohmann::json::array();
      for (int a = 0; a < s.outputs_a; ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < s.outputs_b; ++c) row.push_back(b(a, c, x, y));
        pxy.push_back(row);
      }
      px.push_back(pxy);
    }
    p.push_back(px);
  }
  return {{"inputs_a", s.inputs_a}, {"inputs_b", s.inputs_b}, {"outputs_a", s.outputs_a},
          {"outputs_b", s.outputs_b}, {"index_order", "x,y,a,b"}, {"p", p}};
}

TargetBehavior behavior_from_json(const nlohmann::json& j) {
  try {
    const auto& p = j.at("p");
    BellScenario s;
    s.inputs_a = j.value("inputs_a", static_cast<int>(p.size()));
    s.inputs_b = j.value("inputs_b", static_cast<int>(p.at(0).size()));
    s.outputs_a = j.value("outputs_a", static_cast<int>(p.at(0).at(0).size()));
    s.outputs_b = j.value("outputs_b", static_cast<int>(p.at(0).at(0).at(0).size()));
    TargetBehavior out(s);
    if (static_cast<int>(p.size()) != s.inputs_a) throw ConfigError("behavior: x dimension mismatch");
    for (int x = 0; x < s.inputs_a; ++x) {
      if (static_cast<int>(p[x].size()) != s.inputs_b) throw ConfigError("behavior: y dimension mismatch");
      for (int y = 0; y < s.inputs_b; ++y) {
        if (static_cast<int>(p[x][y].size()) != s.outputs_a) throw ConfigError("behavior: a dimension mismatch");
        for (int a = 0; a < s.outputs_a; ++a) {
          if (static_cast<int>(p[x][y][a].size()) != s.outputs_b)
            throw ConfigError("behavior: b dimension mismatch");
          for (int c = 0; c < s.outputs_b; ++c) out(a, c, x, y) = p[x][y][a][c].get<double>();
        }
      }
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("behavior JSON: ") + e.what());
  }
}

std::string behavior_to_csv(const TargetBehavior& b) {
  const auto& s = b.scenario();
  std::ostringstream os;
  os.precision(17);
  os << "x,y,a,b,p\n";
  for (int x = 0; x < s.inputs_a; ++x)
    for (int y = 0; y < s.inputs_b; ++y)
      for (int a = 0; a < s.outputs_a; ++a)
        for (int c = 0; c < s.outputs_b; ++c) os << x << ',' << y << ',' << a << ',' << c << ',' << b(a, c, x, y) << '\n';
  return os.str();
}

}  // namespace leakrate
