#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

#include "leakrate/errors.hpp"
#include "leakrate/leak_accounting.hpp"

namespace leakrate {

namespace {

constexpr double kAlphaMax = 1.0 - 1e-6;

void require_unit_open(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) throw DomainError(std::string(name) + " must lie in (0, 1)");
}

}  // namespace

void SmoothingBudget::validate() const {
  require_unit_open(eps, "eps");
  require_unit_open(tau, "tau");
  require_unit_open(eps_l, "eps_L");
  require_unit_open(eps_pe, "eps_PE");
  if (!(eps_prime() < 1.0)) throw DomainError("eps + 4 tau + 8 eps_L must be below 1");
}

void DimensionBoundSpec::validate() const {
  if (d_l < 2) throw DomainError("leakage dimension must be at least 2");
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("delta must lie in [0, 1)");
}

int leakage_dim_from_memory(int d_c) {
  if (d_c < 1) throw DomainError("memory dimension must be positive");
  return d_c + 1;
}

DimOptValue dim_opt_value(const DimensionBoundSpec& spec, RenyiParameter a) {
  spec.validate();
  const double alpha = a.value();
  const double d = spec.d_l;
  if (spec.delta >= 1.0 - 1.0 / d) return {std::pow(d, 1.0 - alpha), true};
  if (spec.delta == 0.0) return {1.0, false};
  return {std::pow(1.0 - spec.delta, alpha) + (d - 1.0) * std::pow(spec.delta / (d - 1.0), alpha), false};
}

double dim_renyi_bits(const DimensionBoundSpec& spec, RenyiParameter a) {
  const DimOptValue v = dim_opt_value(spec, a);
  if (v.trivial) return std::log2(static_cast<double>(spec.d_l));
  if (spec.delta == 0.0) return 0.0;
  const double alpha = a.value();
  // value - 1 = ((1-delta)^alpha - 1) + (d-1)^(1-alpha) delta^alpha
  const double excess = std::expm1(alpha * std::log1p(-spec.delta)) +
                        std::exp((1.0 - alpha) * std::log(spec.d_l - 1.0) + alpha * std::log(spec.delta));
  return std::log1p(excess) / std::log(2.0) / (1.0 - alpha);
}

double renyi_correction_bits(const SmoothingBudget& budget, RenyiParameter a) {
  budget.validate();
  a.require_chain_range();
  const double alpha = a.value();
  return (std::log2(1.0 / budget.eps_pe) + smf(budget.eps_l)) * alpha / (1.0 - alpha);
}

HmaxBound hmax_dimension_bound(std::int64_t n, const DimensionBoundSpec& spec, const SmoothingBudget& budget,
                               std::optional<double> alpha) {
  if (n < 1) throw DomainError("number of rounds must be positive");
  spec.validate();
  budget.validate();
  const double rounds = static_cast<double>(n);
  auto total = [&](double al) {
    const RenyiParameter a(al);
    return rounds * dim_renyi_bits(spec, a) + renyi_correction_bits(budget, a);
  };
  HmaxBound out;
  out.trivial = dim_opt_value(spec, RenyiParameter(0.5)).trivial;
  if (alpha) {
    RenyiParameter(*alpha).require_chain_range();
    out.alpha = *alpha;
  } else {
    // Search over t = log(1 - alpha): coarse scan, then Brent around the best cell.
    const double lo = std::log(1.0 - kAlphaMax), hi = std::log(0.5);
    const int cells = 64;
    auto f = [&](double t) { return total(1.0 - std::exp(t)); };
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= cells; ++i) {
      const double v = f(lo + (hi - lo) * i / cells);
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    const double a0 = lo + (hi - lo) * std::max(0, best - 1) / cells;
    const double b0 = lo + (hi - lo) * std::min(cells, best + 1) / cells;
    const auto r = boost::math::tools::brent_find_minima(f, a0, b0, std::numeric_limits<double>::digits / 2);
    const double t = r.second <= best_val ? r.first : lo + (hi - lo) * best / cells;
    out.alpha = 1.0 - std::exp(t);
  }
  out.bits = total(out.alpha);
  out.per_round_bits = out.bits / rounds;
  return out;
}

double shannon_asymptote(const DimensionBoundSpec& spec) {
  spec.validate();
  return binary_entropy(spec.delta) + spec.delta * std::log2(spec.d_l - 1.0);
}

std::vector<DimCurve> dimension_curves(int d_l, const std::vector<double>& deltas, const std::vector<double>& eps_list,
                                       const std::vector<std::int64_t>& n_grid) {
  std::vector<DimCurve> out;
  for (double eps : eps_list)
    for (double delta : deltas) {
      DimCurve c{delta, eps, n_grid, {}, {}};
      const SmoothingBudget budget{eps, eps, eps, eps};
      for (std::int64_t n : n_grid) {
        const HmaxBound b = hmax_dimension_bound(n, DimensionBoundSpec{d_l, delta}, budget);
        c.per_round_bits.push_back(b.per_round_bits);
        c.alpha.push_back(b.alpha);
      }
      out.push_back(std::move(c));
    }
  return out;
}

std::vector<DimCurve> dimension_curves_preset() {
  std::vector<std::int64_t> grid;
  for (int k = 0; k <= 32; ++k) grid.push_back(static_cast<std::int64_t>(std::llround(std::pow(10.0, 6.0 + k * 0.25))));
  return dimension_curves(33, {1e-3, 1e-4, 1e-5}, {1e-3, 1e-10}, grid);
}

}  // namespace leakrate
