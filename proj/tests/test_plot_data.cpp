#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "leakrate/errors.hpp"
#include "leakrate/plot_data.hpp"

using namespace leakrate;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("leakrate-plot-test-" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("fig4 curves") {
  const auto curves = dimension_curves(33, {1e-3, 1e-4, 1e-5}, {1e-3, 1e-10}, {1000000, 100000000});
  const fs::path dir = fresh_dir("fig4");
  const PlotFiles files = emit_plot_data(curves, PlotKind::Fig4, dir);
  CHECK(files.curves.size() == 6);
  for (const auto& f : files.curves) {
    CHECK(fs::exists(f));
    CHECK(slurp(f).rfind("n,per_round_bits,alpha\n", 0) == 0);
  }
  const std::string script = slurp(files.script);
  for (const auto& f : files.curves) CHECK(script.find(f.filename().string()) != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("empty sweep writes headers only") {
  const fs::path dir = fresh_dir("empty");
  const PlotFiles files = emit_plot_data(std::vector<SweepRow>{}, PlotKind::Fig2, dir);
  CHECK(files.curves.empty());
  CHECK(slurp(files.aggregate) == "preset,model,encoding,level,q,delta,entropy_bits,pguess,cert_slack\n");
  CHECK(fs::exists(files.script));
  fs::remove_all(dir);
}

TEST_CASE("sweep curves: solid and dashed") {
  SweepOptions opts;
  opts.jobs = 1;
  const auto rows = sweep_curve(PresetId::TwoInputCHSH, {0.0, 0.05}, {1e-5}, LeakageKind::BoundedWeight, opts);
  const fs::path dir = fresh_dir("fig2");
  const PlotFiles files = emit_plot_data(rows, PlotKind::Fig2, dir);
  CHECK(files.curves.size() == 2);
  bool dashed = false;
  for (const auto& f : files.curves) dashed |= f.filename().string().find("dashed") != std::string::npos;
  CHECK(dashed);
  CHECK_THROWS_AS(emit_plot_data(rows, PlotKind::Fig1, dir), ConfigError);
  CHECK_THROWS_AS(emit_plot_data(rows, PlotKind::Fig4, dir), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("plot kinds") {
  CHECK(plot_kind_from_string("energy-table") == PlotKind::EnergyTable);
  CHECK(to_string(PlotKind::Fig1) == "fig1");
  CHECK_THROWS(plot_kind_from_string("fig3"));
}
