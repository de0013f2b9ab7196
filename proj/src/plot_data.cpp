#include "leakrate/plot_data.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "leakrate/errors.hpp"

namespace leakrate {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string tag(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("failed writing " + path.string());
}

struct Curve {
  std::string file;
  std::string title;
  std::string body;
};

std::string script_text(const std::string& title, const std::string& xlabel, const std::string& ylabel, bool logx,
                        const std::vector<Curve>& curves, int ycol) {
  std::ostringstream s;
  s << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set title '" << title << "'\n"
    << "set xlabel '" << xlabel << "'\n"
    << "set ylabel '" << ylabel << "'\n";
  if (logx) s << "set logscale x\n";
  if (curves.empty()) {
    s << "# no curves\n";
    return s.str();
  }
  s << "plot ";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    if (i) s << ", \\\n     ";
    s << "'" << curves[i].file << "' using 1:" << ycol << " with lines title '" << curves[i].title << "'";
  }
  s << "\n";
  return s.str();
}

std::vector<Curve> sweep_curves(const std::vector<SweepRow>& rows, const std::string& prefix) {
  // Grid order of first appearance is kept so reruns produce identical files.
  using Key = std::tuple<std::string, std::string, int, double>;
  std::vector<Key> order;
  std::map<Key, std::string> bodies;
  for (const auto& r : rows) {
    Key k{model_label(r), to_string(r.encoding), r.level, r.delta};
    if (!bodies.count(k)) {
      order.push_back(k);
      bodies[k] = "q,entropy_bits,pguess,certified\n";
    }
    bodies[k] += num(r.q) + "," + num(r.entropy_bits) + "," + num(r.pguess) + "," + (r.certified ? "1" : "0") + "\n";
  }
  std::vector<Curve> out;
  for (const auto& k : order) {
    const auto& [model, enc, level, delta] = k;
    const std::string file = prefix + "_" + model + "_" + enc + "_L" + std::to_string(level) + "_delta" + tag(delta) + ".csv";
    out.push_back({file, model + " delta=" + tag(delta), bodies[k]});
  }
  return out;
}

}  // namespace

std::string to_string(PlotKind k) {
  switch (k) {
    case PlotKind::Fig1: return "fig1";
    case PlotKind::Fig2: return "fig2";
    case PlotKind::Fig4: return "fig4";
    case PlotKind::EnergyTable: return "energy-table";
  }
  return "unknown";
}

PlotKind plot_kind_from_string(const std::string& name) {
  if (name == "fig1") return PlotKind::Fig1;
  if (name == "fig2") return PlotKind::Fig2;
  if (name == "fig4") return PlotKind::Fig4;
  if (name == "energy-table") return PlotKind::EnergyTable;
  throw ConfigError("unknown plot kind '" + name + "'");
}

PlotFiles emit_plot_data(const PlotTable& table, PlotKind kind, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string());
  const std::string name = to_string(kind);
  PlotFiles files;
  files.aggregate = dir / (name + ".csv");
  files.script = dir / (name + ".gp");
  std::vector<Curve> curves;
  std::string aggregate, script;

  switch (kind) {
    case PlotKind::Fig1:
    case PlotKind::Fig2: {
      const auto* rows = std::get_if<std::vector<SweepRow>>(&table);
      if (!rows) throw ConfigError(name + " plot data needs sweep rows");
      const PresetId want = kind == PlotKind::Fig1 ? PresetId::FourInputMYCHSH : PresetId::TwoInputCHSH;
      for (const auto& r : *rows)
        if (r.preset != want) throw ConfigError(name + " plot data needs rows of preset " + to_string(want));
      curves = sweep_curves(*rows, name);
      aggregate = sweep_to_csv(*rows);
      script = script_text(name, "q", "entropy (bits)", false, curves, 2);
      break;
    }
    case PlotKind::Fig4: {
      const auto* dims = std::get_if<std::vector<DimCurve>>(&table);
      if (!dims) throw ConfigError("fig4 plot data needs dimension-bound curves");
      aggregate = "delta,eps,n,per_round_bits,alpha\n";
      for (const auto& c : *dims) {
        Curve cv{name + "_delta" + tag(c.delta) + "_eps" + tag(c.eps) + ".csv",
                 "delta=" + tag(c.delta) + " eps=" + tag(c.eps), "n,per_round_bits,alpha\n"};
        for (std::size_t i = 0; i < c.n.size(); ++i) {
          const std::string line = std::to_string(c.n[i]) + "," + num(c.per_round_bits[i]) + "," + num(c.alpha[i]);
          cv.body += line + "\n";
          aggregate += tag(c.delta) + "," + tag(c.eps) + "," + line + "\n";
        }
        curves.push_back(std::move(cv));
      }
      script = script_text(name, "n", "per-round max-entropy bound (bits)", true, curves, 2);
      break;
    }
    case PlotKind::EnergyTable: {
      const auto* rows = std::get_if<std::vector<EnergyTableRow>>(&table);
      if (!rows) throw ConfigError("energy-table plot data needs energy rows");
      std::vector<std::pair<double, double>> order;
      std::map<std::pair<double, double>, std::string> bodies;
      for (const auto& r : *rows) {
        const auto key = std::make_pair(r.e_max, r.delta);
        if (!bodies.count(key)) {
          order.push_back(key);
          bodies[key] = "alpha,renyi_bits\n";
        }
        bodies[key] += num(r.alpha) + "," + num(r.bound.renyi_bits) + "\n";
      }
      for (const auto& key : order)
        curves.push_back({name + "_emax" + tag(key.first) + "_delta" + tag(key.second) + ".csv",
                          "E_max=" + tag(key.first) + " delta=" + tag(key.second), bodies[key]});
      aggregate = energy_table_to_csv(*rows);
      script = script_text(name, "alpha", "Renyi entropy bound (bits)", false, curves, 2);
      break;
    }
  }

  write_file(files.aggregate, aggregate);
  for (const auto& c : curves) {
    files.curves.push_back(dir / c.file);
    write_file(dir / c.file, c.body);
  }
  write_file(files.script, script);
  return files;
}

}  // namespace leakrate
