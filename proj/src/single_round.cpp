#include "leakrate/single_round.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "leakrate/core_math.hpp"
#include "leakrate/errors.hpp"

namespace leakrate {

std::string to_string(FidelityEncoding e) {
  switch (e) {
    case FidelityEncoding::Diag2x2: return "diag2x2";
    case FidelityEncoding::UhlmannFull: return "uhlmann";
    case FidelityEncoding::ChshOnly: return "chsh-only";
  }
  return "unknown";
}

FidelityEncoding encoding_from_string(const std::string& name) {
  if (name == "diag2x2") return FidelityEncoding::Diag2x2;
  if (name == "uhlmann") return FidelityEncoding::UhlmannFull;
  if (name == "chsh-only") return FidelityEncoding::ChshOnly;
  throw ConfigError("unknown encoding '" + name + "'");
}

void SingleRoundSpec::validate() const {
  scenario.validate();
  if (!(target.scenario() == scenario)) throw ConfigError("target behaviour does not match the scenario");
  inputs.validate(scenario);
  leakage.validate();
  if (npa_level != 1 && npa_level != 2) throw ConfigError("NPA level must be 1 or 2");
  for (int x = 0; x < scenario.inputs_a; ++x)
    for (int y = 0; y < scenario.inputs_b; ++y) {
      double total = 0.0;
      for (int a = 0; a < scenario.outputs_a; ++a)
        for (int b = 0; b < scenario.outputs_b; ++b) {
          if (target(a, b, x, y) < -1e-12) throw ConfigError("target behaviour has negative entries");
          total += target(a, b, x, y);
        }
      if (std::abs(total - 1.0) > 1e-9) throw ConfigError("target behaviour is not normalized");
    }
  if (!inputs.generation_input())
    throw ConfigError("unsupported key map: generation rounds must use a single input pair");
}

SingleRoundSpec preset_spec(PresetId preset, double q, const LeakageModel& leakage, FidelityEncoding encoding,
                            std::optional<int> level) {
  const ScenarioPreset p = scenario_preset(preset);
  SingleRoundSpec s;
  s.scenario = p.scenario;
  s.target = werner_behavior(p.werner(q));
  s.inputs = p.inputs;
  s.leakage = leakage;
  s.npa_level = level.value_or(p.npa_level);
  s.encoding = encoding;
  s.chsh_inputs = {p.chsh_x0, p.chsh_x1, p.chsh_y0, p.chsh_y1};
  s.q = q;
  return s;
}

namespace {

constexpr double kZeroTarget = 1e-15;

using Form = std::vector<std::pair<int, double>>;

void add_scaled(Form& out, const Form& in, double scale) {
  for (const auto& [v, c] : in) out.emplace_back(v, scale * c);
}

// Eve-branch moment matrices shared by both leakage models.
struct BranchProblem {
  ConicProblem problem;
  MomentStructure moments;
  std::vector<std::vector<int>> vars;  // [branch][class]
  std::pair<int, int> gen;

  Form on_branch(int e, const MomentForm& f) const {
    Form out;
    for (const auto& [c, v] : f) out.emplace_back(vars[e][c], v);
    return out;
  }

  Form averaged(int a, int b, int x, int y) const {
    const MomentForm f = moments.probability_form(a, b, x, y);
    Form out;
    for (std::size_t e = 0; e < vars.size(); ++e) add_scaled(out, on_branch(static_cast<int>(e), f), 1.0);
    return out;
  }
};

BranchProblem build_branches(const SingleRoundSpec& spec) {
  spec.validate();
  BranchProblem bp;
  bp.gen = *spec.inputs.generation_input();
  bp.moments = moment_structure(spec.scenario, local_level_basis(spec.scenario, spec.npa_level));
  ConicProblem& p = bp.problem;
  const int guesses = spec.scenario.outputs_a;
  const int n = static_cast<int>(bp.moments.size());
  LinearRow norm;
  norm.label = "branch weights sum to 1";
  norm.rhs = 1.0;
  for (int e = 0; e < guesses; ++e) {
    std::vector<int> vars;
    for (int c = 0; c < bp.moments.num_classes(); ++c)
      vars.push_back(p.add_var("m" + std::to_string(e) + "[" + bp.moments.classes[c].to_string() + "]", 1.0));
    PsdBlock g;
    g.size = n;
    g.label = "moment matrix, guess " + std::to_string(e);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const int c = bp.moments.entry_class[i][j];
        if (c != MomentStructure::kZeroClass) g.add(vars[c], i, j, 1.0);
      }
    p.blocks.push_back(std::move(g));
    norm.coeffs.emplace_back(vars[MomentStructure::kIdentityClass], 1.0);
    bp.vars.push_back(std::move(vars));
  }
  p.equalities.push_back(norm);
  for (int e = 0; e < guesses; ++e) {
    const Form f = bp.on_branch(e, bp.moments.marginal_a_form(e, bp.gen.first));
    p.objective.insert(p.objective.end(), f.begin(), f.end());
  }
  return bp;
}

bool tested(const SingleRoundSpec& spec, int x, int y) { return spec.inputs.p_test[x][y] > 0.0; }

void add_exact_equalities(const SingleRoundSpec& spec, BranchProblem& bp) {
  const auto& s = spec.scenario;
  for (int x = 0; x < s.inputs_a; ++x)
    for (int y = 0; y < s.inputs_b; ++y) {
      if (!tested(spec, x, y)) continue;
      for (int a = 0; a < s.outputs_a; ++a)
        for (int b = 0; b < s.outputs_b; ++b)
          bp.problem.equalities.push_back({bp.averaged(a, b, x, y), spec.target(a, b, x, y), "behaviour"});
    }
}

void add_chsh_constraint(const SingleRoundSpec& spec, BranchProblem& bp) {
  if (!spec.scenario.binary()) throw ConfigError("CHSH constraint needs binary outputs");
  if (spec.leakage.delta != 0.0) throw ConfigError("CHSH-only constraints are only defined for delta = 0");
  const auto [x0, x1, y0, y1] = spec.chsh_inputs;
  const std::array<std::tuple<int, int, double>, 4> terms{{{x0, y0, 1.0}, {x0, y1, 1.0}, {x1, y0, 1.0}, {x1, y1, -1.0}}};
  LinearRow row;
  row.label = "CHSH value";
  row.rhs = chsh_value(spec.target, x0, x1, y0, y1);
  for (const auto& [x, y, sign] : terms)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) add_scaled(row.coeffs, bp.averaged(a, b, x, y), sign * ((a ^ b) ? -1.0 : 1.0));
  bp.problem.equalities.push_back(row);
}

void add_diag2x2(const SingleRoundSpec& spec, BranchProblem& bp) {
  const auto& s = spec.scenario;
  ConicProblem& p = bp.problem;
  for (int x = 0; x < s.inputs_a; ++x)
    for (int y = 0; y < s.inputs_b; ++y) {
      if (!tested(spec, x, y)) continue;
      LinearRow overlap;
      overlap.label = "fidelity x=" + std::to_string(x) + " y=" + std::to_string(y);
      overlap.rhs = -(1.0 - spec.leakage.delta);
      for (int a = 0; a < s.outputs_a; ++a)
        for (int b = 0; b < s.outputs_b; ++b) {
          const double c = spec.target(a, b, x, y);
          if (c <= kZeroTarget) continue;  // sqrt(c p) = 0 contributes nothing
          const int t = p.add_var("t", 1.0);
          PsdBlock blk;
          blk.size = 2;
          blk.label = "overlap";
          blk.add_constant(0, 0, c);
          blk.add(t, 0, 1, 1.0);
          for (const auto& [v, coef] : bp.averaged(a, b, x, y)) blk.add(v, 1, 1, coef);
          p.blocks.push_back(std::move(blk));
          overlap.coeffs.emplace_back(t, -1.0);
        }
      p.inequalities.push_back(std::move(overlap));
    }
}

void add_uhlmann(const SingleRoundSpec& spec, BranchProblem& bp) {
  const auto& s = spec.scenario;
  ConicProblem& p = bp.problem;
  const int d = s.outputs_a * s.outputs_b;
  const int dd = d * d;
  const double target_overlap = (1.0 - spec.leakage.delta) * (1.0 - spec.leakage.delta);
  for (int x = 0; x < s.inputs_a; ++x)
    for (int y = 0; y < s.inputs_b; ++y) {
      if (!tested(spec, x, y)) continue;
      // Extension on AB A'B'; row index i*d + j with i on AB and j on A'B'.
      std::vector<std::vector<int>> var(dd, std::vector<int>(dd, -1));
      PsdBlock blk;
      blk.size = dd;
      blk.label = "fidelity extension";
      for (int r = 0; r < dd; ++r)
        for (int c = r; c < dd; ++c) {
          var[r][c] = var[c][r] = p.add_var("ext", 1.0);
          blk.add(var[r][c], r, c, 1.0);
        }
      p.blocks.push_back(std::move(blk));
      for (int i = 0; i < d; ++i)
        for (int k = i; k < d; ++k) {
          LinearRow row;
          row.label = "partial trace";
          for (int j = 0; j < d; ++j) row.coeffs.emplace_back(var[i * d + j][k * d + j], 1.0);
          if (i == k) add_scaled(row.coeffs, bp.averaged(i / s.outputs_b, i % s.outputs_b, x, y), -1.0);
          p.equalities.push_back(std::move(row));
        }
      std::vector<double> root(d);
      for (int i = 0; i < d; ++i) root[i] = std::sqrt(std::max(0.0, spec.target(i / s.outputs_b, i % s.outputs_b, x, y)));
      LinearRow overlap;
      overlap.label = "fidelity";
      overlap.rhs = -target_overlap;
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k)
          if (root[i] * root[k] > 0.0) overlap.coeffs.emplace_back(var[i * d + i][k * d + k], -root[i] * root[k]);
      p.inequalities.push_back(std::move(overlap));
    }
}

}  // namespace

ConicProblem assemble_bounded_weight(const SingleRoundSpec& spec) {
  if (spec.leakage.kind != LeakageKind::BoundedWeight) throw ConfigError("spec is not a bounded-weight model");
  BranchProblem bp = build_branches(spec);
  if (spec.encoding == FidelityEncoding::ChshOnly) {
    add_chsh_constraint(spec, bp);
  } else if (spec.leakage.delta == 0.0 && spec.exact_at_zero) {
    add_exact_equalities(spec, bp);
  } else if (spec.encoding == FidelityEncoding::Diag2x2) {
    add_diag2x2(spec, bp);
  } else {
    add_uhlmann(spec, bp);
  }
  return normalized(bp.problem);
}

ConicProblem assemble_classical_prob(const SingleRoundSpec& spec) {
  if (spec.leakage.kind != LeakageKind::ClassicalProbabilistic)
    throw ConfigError("spec is not a classical-probabilistic model");
  BranchProblem bp = build_branches(spec);
  if (spec.encoding == FidelityEncoding::ChshOnly) {
    add_chsh_constraint(spec, bp);
    return normalized(bp.problem);
  }
  const double delta = spec.leakage.delta;
  if (delta == 0.0) {
    add_exact_equalities(spec, bp);
    return normalized(bp.problem);
  }
  const auto& s = spec.scenario;
  ConicProblem& p = bp.problem;
  // c = (1-delta) pbar + delta chat with chat a behaviour. Summing over (a,b)
  // gives sum chat = 1 automatically because pbar and c are both normalized.
  for (int x = 0; x < s.inputs_a; ++x)
    for (int y = 0; y < s.inputs_b; ++y) {
      if (!tested(spec, x, y)) continue;
      for (int a = 0; a < s.outputs_a; ++a)
        for (int b = 0; b < s.outputs_b; ++b) {
          const double c = spec.target(a, b, x, y);
          Form scaled;
          add_scaled(scaled, bp.averaged(a, b, x, y), 1.0 - delta);
          if (spec.explicit_leak_variables) {
            const int hat = p.add_var("chat", 1.0);
            Form row = scaled;
            row.emplace_back(hat, delta);
            p.equalities.push_back({row, c, "mixture"});
            p.inequalities.push_back({{{hat, -1.0}}, 0.0, "chat >= 0"});
          } else if (c <= kZeroTarget) {
            // The window collapses to pbar = 0.
            p.equalities.push_back({scaled, 0.0, "window"});
          } else {
            p.inequalities.push_back({scaled, c, "window low"});
            Form neg;
            add_scaled(neg, scaled, -1.0);
            p.inequalities.push_back({neg, delta - c, "window high"});
          }
        }
    }
  return normalized(p);
}

ConicProblem assemble(const SingleRoundSpec& spec) {
  return spec.leakage.kind == LeakageKind::BoundedWeight ? assemble_bounded_weight(spec)
                                                         : assemble_classical_prob(spec);
}

double entropy_from_guessing(LeakageKind model, double pguess, double delta, int dim_s, bool subtract_fcont) {
  if (!(pguess > 0.0)) throw DomainError("guessing probability must be positive");
  const double hmin = -std::log2(std::min(pguess, 1.0));
  if (model == LeakageKind::ClassicalProbabilistic) return std::max(0.0, (1.0 - delta) * hmin);
  const double corr = subtract_fcont ? fcont(ContinuityInput(delta, dim_s)) : 0.0;
  return std::max(0.0, hmin - corr);
}

BoundResult entropy_bound(const SingleRoundSpec& spec, const Solution& solution, const Certificate& cert,
                          bool allow_uncertified) {
  BoundResult r;
  r.status = solution.status;
  r.certificate = cert;
  // The certificate only uses the dual point, so it stands whatever the
  // primal status.
  r.certified = cert.valid && std::isfinite(cert.certified_upper_bound);
  r.level = spec.npa_level;
  r.encoding = spec.encoding;
  r.model = spec.leakage.kind;
  r.delta = spec.leakage.delta;
  r.q = spec.q;
  r.primal_objective = solution.objective_value;
  double pg = 0.0;
  if (r.certified) {
    pg = cert.certified_upper_bound;
  } else if (allow_uncertified && std::isfinite(solution.dual_objective) &&
             solution.status != SolveStatus::Infeasible) {
    pg = solution.dual_objective;
  } else {
    throw SolverError("guessing probability is not certified (" + to_string(solution.status) + ": " +
                      (cert.message.empty() ? solution.diagnostic : cert.message) + ")");
  }
  // Any guessing probability is at most 1, and at least 1/|A|.
  pg = std::clamp(pg, 1.0 / spec.scenario.outputs_a, 1.0);
  r.guessing_prob_upper = pg;
  const double hmin = pg < 1.0 ? -std::log2(pg) : 0.0;
  r.entropy_without_fcont_bits = hmin;
  if (spec.leakage.kind == LeakageKind::BoundedWeight) {
    r.fcont_subtracted_bits = fcont(ContinuityInput(spec.leakage.delta, spec.scenario.outputs_a));
    r.entropy_unclamped_bits = hmin - r.fcont_subtracted_bits;
  } else {
    r.entropy_unclamped_bits = (1.0 - spec.leakage.delta) * hmin;
  }
  r.entropy_lower_bits = std::max(0.0, r.entropy_unclamped_bits);
  return r;
}

BoundResult solve_single_round(const SingleRoundSpec& spec, const SolverOptions& opts, double cert_tol,
                               bool allow_uncertified) {
  const ConicProblem p = assemble(spec);
  const Solution s = solve(p, opts);
  Certificate cert;
  if (s.has_duals()) cert = verify_certificate(p, s, cert_tol);
  else cert.message = "solver returned no duals";
  return entropy_bound(spec, s, cert, allow_uncertified);
}

nlohmann::json to_json(const BoundResult& r) {
  nlohmann::json j{{"guessing_prob_upper", r.guessing_prob_upper},
                   {"entropy_lower_bits", r.entropy_lower_bits},
                   {"entropy_without_fcont_bits", r.entropy_without_fcont_bits},
                   {"entropy_unclamped_bits", r.entropy_unclamped_bits},
                   {"fcont_subtracted_bits", r.fcont_subtracted_bits},
                   {"primal_objective", r.primal_objective},
                   {"certified", r.certified},
                   {"status", to_string(r.status)},
                   {"certificate", to_json(r.certificate)},
                   {"level", r.level},
                   {"encoding", to_string(r.encoding)},
                   {"model", to_string(r.model)},
                   {"delta", r.delta}};
  if (r.q) j["q"] = *r.q;
  return j;
}

double chsh_guessing_bound(double chsh) {
  const double inside = std::max(0.0, 2.0 - chsh * chsh / 4.0);
  return std::min(1.0, 0.5 + 0.5 * std::sqrt(inside));
}

}  // namespace leakrate
