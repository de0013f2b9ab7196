#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "leakrate/leak_accounting.hpp"
#include "leakrate/single_round.hpp"

namespace leakrate {

enum class PlotKind { Fig1, Fig2, Fig4, EnergyTable };
std::string to_string(PlotKind k);
PlotKind plot_kind_from_string(const std::string& name);

using PlotTable = std::variant<std::vector<SweepRow>, std::vector<DimCurve>, std::vector<EnergyTableRow>>;

struct PlotFiles {
  std::filesystem::path aggregate;
  std::vector<std::filesystem::path> curves;
  std::filesystem::path script;
};

// Writes one CSV per curve, an aggregate CSV and a gnuplot script into dir.
// fig1/fig2 take sweep rows of the four-/two-input preset, fig4 dimension
// curves, energy-table energy rows.
PlotFiles emit_plot_data(const PlotTable& table, PlotKind kind, const std::filesystem::path& dir);

}  // namespace leakrate
