#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "leakrate/errors.hpp"
#include "leakrate/leak_accounting.hpp"
#include "leakrate/plot_data.hpp"
#include "leakrate/scenario.hpp"
#include "leakrate/sdp.hpp"
#include "leakrate/single_round.hpp"
#include "leakrate/version.hpp"

using nlohmann::json;
using namespace leakrate;

namespace {

enum ExitCode { kOk = 0, kDomainFailure = 1, kConfigFailure = 2 };

struct Common {
  std::string solver;
  double tol = kDefaultSolverTolerance;
  double cert_tol = kDefaultCertificateTolerance;
  int jobs = 0;
  std::string out;
  bool allow_uncertified = false;
  std::string config;
};

struct SingleArgs {
  std::string preset = "chsh2";
  double q = 0.0;
  double delta = 0.0;
  std::string model = "bounded-weight";
  std::string encoding = "diag2x2";
  std::optional<int> level;
  std::string behavior;
  std::string sdpa_out;
};

struct SweepArgs {
  std::string preset = "chsh2";
  std::string model = "bounded-weight";
  std::vector<double> deltas;
  std::vector<double> qs;
  double q_step = 0.02;
  double q_max = 0.5;
  std::string encoding = "diag2x2";
  std::optional<int> level;
  std::string plot_dir;
};

struct DimArgs {
  std::string preset;
  std::int64_t n = 1000000;
  int d_l = 33;
  double delta = 1e-3;
  double eps_l = 1e-3;
  double eps_pe = 1e-3;
  std::optional<double> alpha;
  std::string plot_dir;
};

struct EnergyArgs {
  double alpha = 0.99;
  double delta = 1e-3;
  double e_max = 1e5;
  std::vector<double> spacings{1.0, 2.0};
  std::optional<std::int64_t> n;
  double eps_l = 1e-3;
  double eps_pe = 1e-3;
};

struct TableArgs {
  std::string preset;
  std::vector<double> alphas{0.9, 0.99, 0.999};
  std::vector<double> deltas{1e-2, 1e-3, 1e-4};
  std::vector<double> e_maxes{1e5, 1e12};
  std::vector<double> spacings{1.0, 2.0};
  std::string plot_dir;
};

struct ChainArgs {
  double hmin = 0.0;
  double hmax_a = 0.0;
  double hmax_b = 0.0;
  double eps = 1e-3;
  double tau = 1e-3;
  double eps_l = 1e-3;
  double eps_pe = 1e-3;
  bool classical = false;
};

struct ValidateArgs {
  std::string behavior;
  double tol = 1e-9;
};

// Thrown for behaviour tables that fail validation; carries the report.
struct ValidationFailure {
  json report;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

// Config files hold {"schema_version": 1, "command": ..., "<flag>": value}.
// Entries become command-line tokens placed before the user's own, so
// explicit flags win.
std::vector<std::string> config_tokens(const json& cfg, std::string& command) {
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  if (!cfg.contains("schema_version") || !cfg["schema_version"].is_number_integer())
    throw ConfigError("config needs an integer schema_version");
  if (cfg["schema_version"].get<int>() != kConfigSchemaVersion)
    throw ConfigError("unsupported config schema_version " + cfg["schema_version"].dump());
  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "schema_version") continue;
    if (key == "command") {
      command = value.get<std::string>();
      continue;
    }
    const std::string flag = "--" + key;
    auto scalar = [](const json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
      return v.dump();
    };
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        tokens.push_back(flag);
        tokens.push_back(scalar(v));
      }
    } else {
      tokens.push_back(flag);
      tokens.push_back(scalar(value));
    }
  }
  return tokens;
}

SolverOptions solver_from(const Common& c) {
  SolverOptions o = solver_options_from_environment(c.solver);
  if (!(c.tol > 0.0)) throw ConfigError("--tol must be positive");
  o.tol = c.tol;
  return o;
}

json run_metadata(const std::string& command, const Common& c, const SolverOptions* solver) {
  json meta{{"tool", "leakrate"},
            {"version", kVersion},
            {"command", command},
            {"config_schema_version", kConfigSchemaVersion},
            {"jobs", c.jobs}};
  if (solver) {
    meta["solver"] = solver->engine == "external" ? "external:" + solver->external_path : std::string("embedded");
    meta["tolerances"] = {{"solver", solver->tol},
                          {"certificate", c.cert_tol},
                          {"bound_inflation", "certificate tol * (1 + trace norm of dual blocks)"}};
  }
  return meta;
}

void write_sidecar(const Common& c, json meta, double seconds) {
  if (c.out.empty()) return;
  meta["wall_time_s"] = seconds;
  meta["output"] = c.out;
  write_output(c.out + ".meta.json", meta.dump(2));
}

SingleRoundSpec single_spec(const SingleArgs& a) {
  const PresetId preset = preset_from_string(a.preset);
  const LeakageModel leak{leakage_kind_from_string(a.model), a.delta};
  SingleRoundSpec spec = preset_spec(preset, a.q, leak, encoding_from_string(a.encoding), a.level);
  if (!a.behavior.empty()) {
    spec.target = behavior_from_json(read_json(a.behavior));
    spec.q.reset();
    if (!(spec.target.scenario() == spec.scenario))
      throw ConfigError("behaviour file does not match the preset's input/output sizes");
  }
  return spec;
}

int cmd_single(const Common& c, const SingleArgs& a, json& meta) {
  const SolverOptions solver = solver_from(c);
  meta = run_metadata("single-round", c, &solver);
  const SingleRoundSpec spec = single_spec(a);
  const ConicProblem problem = assemble(spec);
  if (!a.sdpa_out.empty()) write_output(a.sdpa_out, export_sdpa(with_inequalities_as_slack_block(problem)));
  const Solution sol = solve(problem, solver);
  Certificate cert;
  if (sol.has_duals()) cert = verify_certificate(problem, sol, c.cert_tol);
  else cert.message = "solver returned no duals";
  const BoundResult r = entropy_bound(spec, sol, cert, c.allow_uncertified);
  json out = to_json(r);
  out["preset"] = a.preset;
  json summary = to_json(sol);
  for (const char* key : {"primal", "block_duals", "eq_duals", "ineq_duals"}) summary.erase(key);
  out["solver"] = summary;
  meta["certificate_status"] = r.certified ? "certified" : "uncertified";
  write_output(c.out, out.dump(2));
  return kOk;
}

std::vector<double> q_grid(const SweepArgs& a) {
  if (!a.qs.empty()) return a.qs;
  if (!(a.q_step > 0.0) || a.q_max < 0.0) throw ConfigError("q grid needs a positive step and non-negative maximum");
  std::vector<double> grid;
  const int steps = static_cast<int>(std::floor(a.q_max / a.q_step + 1e-9));
  for (int i = 0; i <= steps; ++i) grid.push_back(std::round(i * a.q_step * 1e12) / 1e12);
  return grid;
}

int cmd_sweep(const Common& c, const SweepArgs& a, json& meta) {
  SweepOptions opts;
  opts.solver = solver_from(c);
  meta = run_metadata("sweep", c, &opts.solver);
  opts.encoding = encoding_from_string(a.encoding);
  opts.cert_tol = c.cert_tol;
  opts.jobs = c.jobs;
  opts.allow_uncertified = c.allow_uncertified;
  opts.level = a.level;
  const PresetId preset = preset_from_string(a.preset);
  const std::vector<double> deltas = a.deltas.empty() ? std::vector<double>{0.0} : a.deltas;
  const auto rows = sweep_curve(preset, q_grid(a), deltas, leakage_kind_from_string(a.model), opts);
  write_output(c.out, sweep_to_csv(rows));

  int certified = 0;
  double min_bits = INFINITY, max_bits = -INFINITY;
  for (const auto& r : rows) {
    if (!r.certified || r.dashed) continue;
    ++certified;
    min_bits = std::min(min_bits, r.entropy_bits);
    max_bits = std::max(max_bits, r.entropy_bits);
  }
  meta["rows"] = rows.size();
  meta["certified_rows"] = certified;
  meta["certificate_status"] = certified * 2 == static_cast<int>(rows.size()) ? "certified" : "partial";
  if (certified > 0) meta["certified_summary"] = {{"min_entropy_bits", min_bits}, {"max_entropy_bits", max_bits}};
  if (!a.plot_dir.empty()) {
    const PlotKind kind = preset == PresetId::TwoInputCHSH ? PlotKind::Fig2 : PlotKind::Fig1;
    emit_plot_data(rows, kind, a.plot_dir);
  }
  return kOk;
}

int cmd_dim(const Common& c, const DimArgs& a, json& meta) {
  meta = run_metadata("dim-bound", c, nullptr);
  if (!a.preset.empty()) {
    if (a.preset != "fig4") throw ConfigError("dim-bound knows only the fig4 preset");
    const auto curves = dimension_curves_preset();
    std::ostringstream csv;
    csv << "delta,eps,n,per_round_bits,alpha\n";
    for (const auto& cv : curves)
      for (std::size_t i = 0; i < cv.n.size(); ++i) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%g,%g,%lld,%.12g,%.12g\n", cv.delta, cv.eps, static_cast<long long>(cv.n[i]),
                      cv.per_round_bits[i], cv.alpha[i]);
        csv << buf;
      }
    write_output(c.out, csv.str());
    if (!a.plot_dir.empty()) emit_plot_data(curves, PlotKind::Fig4, a.plot_dir);
    return kOk;
  }
  const DimensionBoundSpec spec{a.d_l, a.delta};
  const SmoothingBudget budget{a.eps_l, a.eps_l, a.eps_l, a.eps_pe};
  const HmaxBound b = hmax_dimension_bound(a.n, spec, budget, a.alpha);
  json out{{"n", a.n},
           {"d_l", a.d_l},
           {"delta", a.delta},
           {"eps_l", a.eps_l},
           {"eps_pe", a.eps_pe},
           {"alpha", b.alpha},
           {"hmax_bits", b.bits},
           {"per_round_bits", b.per_round_bits},
           {"trivial", b.trivial},
           {"shannon_asymptote_bits", shannon_asymptote(spec)}};
  write_output(c.out, out.dump(2));
  return kOk;
}

int cmd_energy(const Common& c, const EnergyArgs& a, json& meta) {
  meta = run_metadata("energy-bound", c, nullptr);
  const EnergySpec spec{a.spacings, a.e_max};
  const RenyiParameter alpha(a.alpha);
  const EnergyBound b = energy_bound_optimize(spec, a.delta, alpha);
  json out{{"alpha", a.alpha},
           {"delta", a.delta},
           {"emax", a.e_max},
           {"spacings", a.spacings},
           {"renyi_bits", b.renyi_bits},
           {"dual_value", b.dual_value},
           {"dual_point", {{"lag_g", b.point.lag_g}, {"z", b.point.z}, {"lag_e", b.point.lag_e()}, {"lag_p", b.point.lag_p}}},
           {"gap_estimate", b.gap_estimate}};
  if (a.n) {
    const SmoothingBudget budget{a.eps_l, a.eps_l, a.eps_l, a.eps_pe};
    out["n"] = *a.n;
    out["correction_bits"] = renyi_correction_bits(budget, alpha);
    out["hmax_bits"] = static_cast<double>(*a.n) * b.renyi_bits + renyi_correction_bits(budget, alpha);
  }
  write_output(c.out, out.dump(2));
  return kOk;
}

int cmd_table(const Common& c, const TableArgs& a, json& meta) {
  meta = run_metadata("energy-table", c, nullptr);
  std::vector<EnergyTableRow> rows;
  if (!a.preset.empty()) {
    if (a.preset != "paper") throw ConfigError("energy-table knows only the 'paper' preset");
    rows = energy_table_preset(c.jobs);
  } else {
    rows = energy_table(a.spacings, a.alphas, a.deltas, a.e_maxes, c.jobs);
  }
  write_output(c.out, energy_table_to_csv(rows));
  meta["rows"] = rows.size();
  if (!a.plot_dir.empty()) emit_plot_data(rows, PlotKind::EnergyTable, a.plot_dir);
  return kOk;
}

int cmd_chain(const Common& c, const ChainArgs& a, json& meta) {
  meta = run_metadata("chain", c, nullptr);
  ChainInputs in{a.hmin, a.hmax_a, a.hmax_b, SmoothingBudget{a.eps, a.tau, a.eps_l, a.eps_pe}, a.classical};
  const ChainResult r = chain_assemble(in);
  json out{{"hmin_corrected_bits", r.hmin_corrected_bits},
           {"eps_prime", r.eps_prime},
           {"vacuous", r.vacuous},
           {"rule", a.classical ? "classical" : "default"}};
  write_output(c.out, out.dump(2));
  return kOk;
}

int cmd_validate(const Common& c, const ValidateArgs& a, json& meta) {
  meta = run_metadata("validate", c, nullptr);
  const TargetBehavior b = behavior_from_json(read_json(a.behavior));
  const auto violations = validate_behavior(b, a.tol);
  json report{{"behavior", a.behavior}, {"valid", violations.empty()}, {"violations", json::array()}};
  for (const auto& v : violations)
    report["violations"].push_back({{"kind", to_string(v.kind)}, {"where", v.where}, {"magnitude", v.magnitude}});
  write_output(c.out, report.dump(2));
  if (!violations.empty()) throw ValidationFailure{report};
  return kOk;
}

void print_error(const std::string& kind, const std::string& message, int code) {
  json err{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << err.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified key-rate bounds under constrained leakage", "leakrate"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(0, 1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--solver", common.solver, "embedded or external:<path> (default: $LEAKRATE_SOLVER or embedded)");
    sub->add_option("--tol", common.tol, "solver tolerance");
    sub->add_option("--cert-tol", common.cert_tol, "certificate tolerance");
    sub->add_option("--jobs", common.jobs, "worker threads (0: all cores)");
    sub->add_option("--out", common.out, "output file (default: stdout)");
    sub->add_flag("--allow-uncertified", common.allow_uncertified, "report solver values without a certificate");
    sub->add_option("--config", common.config, "JSON config file");
  };

  SingleArgs single;
  auto* s1 = app.add_subcommand("single-round", "single-round entropy bound");
  add_common(s1);
  s1->add_option("--preset", single.preset, "chsh2|mychsh4 (aliases fig2|fig1)");
  s1->add_option("--q", single.q, "Werner noise");
  s1->add_option("--delta", single.delta, "leakage parameter");
  s1->add_option("--model", single.model, "bounded-weight|classical-prob");
  s1->add_option("--encoding", single.encoding, "diag2x2|uhlmann|chsh-only");
  s1->add_option("--level", single.level, "local NPA level (1 or 2)");
  s1->add_option("--behavior", single.behavior, "JSON behaviour replacing the Werner target");
  s1->add_option("--sdpa-out", single.sdpa_out, "also write the problem in SDPA sparse format");

  SweepArgs sweep;
  auto* s2 = app.add_subcommand("sweep", "entropy bound over a q grid");
  add_common(s2);
  s2->add_option("--preset", sweep.preset, "chsh2|mychsh4 (aliases fig2|fig1)");
  s2->add_option("--model", sweep.model, "bounded-weight|classical-prob");
  s2->add_option("--delta", sweep.deltas, "leakage parameters (repeatable)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  s2->add_option("--q", sweep.qs, "explicit q values (repeatable)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  s2->add_option("--q-step", sweep.q_step, "grid step when no --q is given");
  s2->add_option("--q-max", sweep.q_max, "grid end when no --q is given");
  s2->add_option("--encoding", sweep.encoding, "diag2x2|uhlmann|chsh-only");
  s2->add_option("--level", sweep.level, "local NPA level (1 or 2)");
  s2->add_option("--plot-dir", sweep.plot_dir, "write per-curve CSVs and a gnuplot script here");

  DimArgs dim;
  auto* s3 = app.add_subcommand("dim-bound", "max-entropy bound for dimension-bounded leakage");
  add_common(s3);
  s3->add_option("--preset", dim.preset, "fig4: all curves of the dimension figure");
  s3->add_option("--n", dim.n, "number of rounds");
  s3->add_option("--dl", dim.d_l, "leakage register dimension");
  s3->add_option("--delta", dim.delta, "leakage parameter");
  s3->add_option("--eps-l", dim.eps_l, "smoothing of the max-entropy");
  s3->add_option("--eps-pe", dim.eps_pe, "parameter-estimation threshold");
  s3->add_option("--alpha", dim.alpha, "fixed Renyi order (default: optimized)");
  s3->add_option("--plot-dir", dim.plot_dir, "write per-curve CSVs and a gnuplot script here");

  EnergyArgs energy;
  auto* s4 = app.add_subcommand("energy-bound", "Renyi entropy bound for energy-bounded leakage");
  add_common(s4);
  s4->add_option("--alpha", energy.alpha, "Renyi order in (1/2, 1)");
  s4->add_option("--delta", energy.delta, "leakage parameter");
  s4->add_option("--emax", energy.e_max, "expected-energy bound");
  s4->add_option("--spacings", energy.spacings, "mode spacings")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(',');
  s4->add_option("--n", energy.n, "also report the n-round max-entropy bound");
  s4->add_option("--eps-l", energy.eps_l, "smoothing of the max-entropy");
  s4->add_option("--eps-pe", energy.eps_pe, "parameter-estimation threshold");

  TableArgs table;
  auto* s5 = app.add_subcommand("energy-table", "energy bounds over a parameter grid");
  add_common(s5);
  s5->add_option("--preset", table.preset, "paper: the two-mode reference tables");
  s5->add_option("--alphas", table.alphas)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(',');
  s5->add_option("--deltas", table.deltas)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(',');
  s5->add_option("--emaxes", table.e_maxes)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(',');
  s5->add_option("--spacings", table.spacings)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(',');
  s5->add_option("--plot-dir", table.plot_dir, "write per-curve CSVs and a gnuplot script here");

  ChainArgs chain;
  auto* s6 = app.add_subcommand("chain", "compensate leaked registers in the min-entropy");
  add_common(s6);
  s6->add_option("--hmin", chain.hmin, "smooth min-entropy without leakage (bits)")->required();
  s6->add_option("--hmax-a", chain.hmax_a, "max-entropy of Alice's leakage (bits)");
  s6->add_option("--hmax-b", chain.hmax_b, "max-entropy of Bob's leakage (bits)");
  s6->add_option("--eps", chain.eps);
  s6->add_option("--tau", chain.tau);
  s6->add_option("--eps-l", chain.eps_l);
  s6->add_option("--eps-pe", chain.eps_pe);
  s6->add_flag("--classical", chain.classical, "leaked registers are classical");

  ValidateArgs validate;
  auto* s7 = app.add_subcommand("validate", "check a behaviour table");
  add_common(s7);
  s7->add_option("--behavior", validate.behavior, "behaviour JSON")->required();
  s7->add_option("--violation-tol", validate.tol, "violation tolerance");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    // A config file contributes tokens ahead of the explicit ones.
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] != "--config") continue;
      std::string command;
      std::vector<std::string> extra = config_tokens(read_json(args[i + 1]), command);
      std::size_t insert_at = 0;
      if (!args.empty() && !args[0].empty() && args[0][0] != '-') insert_at = 1;
      else if (!command.empty()) args.insert(args.begin(), command), insert_at = 1;
      else throw ConfigError("config file names no command and none was given");
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(insert_at), extra.begin(), extra.end());
      break;
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what(), kConfigFailure);
    return kConfigFailure;
  } catch (const ConfigError& e) {
    print_error("config", e.what(), kConfigFailure);
    return kConfigFailure;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return kOk;
  }

  const auto start = std::chrono::steady_clock::now();
  json meta;
  int code = kOk;
  try {
    if (*s1) code = cmd_single(common, single, meta);
    else if (*s2) code = cmd_sweep(common, sweep, meta);
    else if (*s3) code = cmd_dim(common, dim, meta);
    else if (*s4) code = cmd_energy(common, energy, meta);
    else if (*s5) code = cmd_table(common, table, meta);
    else if (*s6) code = cmd_chain(common, chain, meta);
    else if (*s7) code = cmd_validate(common, validate, meta);
  } catch (const ValidationFailure& f) {
    print_error("invalid-behavior", f.report["violations"].dump(), kDomainFailure);
    code = kDomainFailure;
  } catch (const ConfigError& e) {
    print_error("config", e.what(), kConfigFailure);
    return kConfigFailure;
  } catch (const DomainError& e) {
    print_error("domain", e.what(), kDomainFailure);
    code = kDomainFailure;
  } catch (const SolverError& e) {
    print_error("solver", e.what(), kDomainFailure);
    code = kDomainFailure;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), kDomainFailure);
    code = kDomainFailure;
  }
  if (!meta.is_null()) {
    meta["exit_code"] = code;
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
      write_sidecar(common, meta, seconds);
    } catch (const std::exception& e) {
      print_error("config", e.what(), kConfigFailure);
      return kConfigFailure;
    }
  }
  return code;
}
