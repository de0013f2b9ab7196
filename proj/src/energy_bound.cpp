#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/tools/minima.hpp>

#include "leakrate/errors.hpp"
#include "leakrate/leak_accounting.hpp"

namespace leakrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& terms) {
  double m = -kInf;
  for (double t : terms) m = std::max(m, t);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

// log of sum_{l=1}^{K} (alpha / (lag_e l spacing + lag_p))^s; terms decrease in l.
double log_truncated_mode_sum(double alpha, double s, double lag_e, double lag_p, double spacing, std::int64_t levels) {
  const double first = s * std::log(alpha / (lag_e * spacing + lag_p));
  double acc = 0.0;
  for (std::int64_t l = 1; l <= levels; ++l) {
    const double t = s * std::log(alpha / (lag_e * static_cast<double>(l) * spacing + lag_p)) - first;
    const double e = std::exp(t);
    acc += e;
    if (e < 1e-18 * acc) break;
  }
  return first + std::log(acc);
}

// log of zeta(s, q) = sum_{k>=0} (q + k)^-s, kept in log space because the
// value underflows for the large s and q met near alpha -> 1.
double log_hurwitz_zeta(double s, double q) {
  // Direct terms until q + N is well above s, then Euler-Maclaurin.
  const double gap = std::max(0.0, std::ceil(2.0 * s + 20.0 - q));
  if (gap > 1e7) throw DomainError("Hurwitz zeta evaluation out of range at these multipliers; use the integral bound");
  const auto n = static_cast<std::int64_t>(gap);
  double acc = 0.0;
  for (std::int64_t k = 0; k < n; ++k) acc += std::exp(-s * std::log1p(static_cast<double>(k) / q));
  const double qn = q + static_cast<double>(n);
  double tail = qn / (s - 1.0) + 0.5;
  double rising = s / qn;  // s (s+1) ... (s+2j-2) / qn^(2j-1)
  double factorial = 2.0;
  for (int j = 1; j <= 10; ++j) {
    tail += boost::math::bernoulli_b2n<double>(j) / factorial * rising;
    rising *= (s + 2.0 * j - 1.0) * (s + 2.0 * j) / (qn * qn);
    factorial *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
  }
  acc += std::exp(-s * std::log1p(static_cast<double>(n) / q)) * tail;
  return -s * std::log(q) + std::log(acc);
}

double log_hurwitz_mode_sum(double alpha, double s, double lag_e, double lag_p, double spacing) {
  return s * std::log(alpha / (lag_e * spacing)) + log_hurwitz_zeta(s, 1.0 + lag_p / (lag_e * spacing));
}

double combine(double log_sum, double alpha, const DualPoint& d, double delta, double e_max) {
  const double sum = std::exp(log_sum);
  if (!std::isfinite(sum)) return kInf;
  return (1.0 - alpha) * sum - d.lag_g * (1.0 - delta) + d.lag_e() * e_max + d.lag_p;
}

}  // namespace

void EnergySpec::validate() const {
  if (spacings.empty()) throw DomainError("energy spec needs at least one mode");
  for (double d : spacings)
    if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("mode spacings must be positive (gapped Hamiltonian)");
  if (!(e_max > 0.0) || !std::isfinite(e_max)) throw DomainError("energy bound must be positive");
}

double DualPoint::lag_e() const { return std::pow(10.0, -z); }

bool DualPoint::valid() const { return lag_g >= 0.0 && lag_p > lag_g && std::isfinite(z); }

std::string to_string(SumMethod m) {
  switch (m) {
    case SumMethod::IntegralBound: return "integral";
    case SumMethod::HurwitzZeta: return "hurwitz";
    case SumMethod::Truncated: return "truncated";
  }
  return "unknown";
}

SumMethod sum_method_from_string(const std::string& name) {
  if (name == "integral") return SumMethod::IntegralBound;
  if (name == "hurwitz") return SumMethod::HurwitzZeta;
  if (name == "truncated") return SumMethod::Truncated;
  throw ConfigError("unknown sum method '" + name + "'");
}

DualValue energy_dualf(const DualPoint& d, const EnergySpec& e, double delta, RenyiParameter a, SumRule rule) {
  e.validate();
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("delta must lie in [0, 1]");
  if (!d.valid()) throw DomainError("dual point needs lag_P > lag_G >= 0");
  const double alpha = a.value();
  if (!(alpha > 0.5)) throw DomainError("the mode sums need alpha > 1/2");
  const double lag_e = d.lag_e();
  if (rule.method != SumMethod::Truncated && !(lag_e > 0.0))
    throw DomainError("mode sums diverge for a zero energy multiplier");
  if (rule.method == SumMethod::Truncated && rule.levels < 1) throw ConfigError("truncated sums need levels >= 1");
  const double s = alpha / (1.0 - alpha);

  std::vector<double> upper{s * std::log(alpha / (d.lag_p - d.lag_g))};
  std::vector<double> lower = upper;
  for (double spacing : e.spacings) {
    switch (rule.method) {
      case SumMethod::IntegralBound: {
        const double x = lag_e * spacing + d.lag_p;
        const double head = s * std::log(alpha / x);
        const double tail = std::log((1.0 - alpha) / (2.0 * alpha - 1.0)) + std::log(alpha / (lag_e * spacing)) +
                            (s - 1.0) * std::log(alpha / x);
        upper.push_back(head);
        upper.push_back(tail);
        lower.push_back(tail);
        break;
      }
      case SumMethod::HurwitzZeta: {
        const double v = log_hurwitz_mode_sum(alpha, s, lag_e, d.lag_p, spacing);
        upper.push_back(v);
        lower.push_back(v);
        break;
      }
      case SumMethod::Truncated: {
        const double v = log_truncated_mode_sum(alpha, s, lag_e, d.lag_p, spacing, rule.levels);
        upper.push_back(v);
        lower.push_back(v);
        break;
      }
    }
  }
  return {combine(log_sum_exp(upper), alpha, d, delta, e.e_max), combine(log_sum_exp(lower), alpha, d, delta, e.e_max)};
}

double renyi_bits_from_power_sum(double value, RenyiParameter a) {
  if (!(value > 0.0)) throw DomainError("power sum must be positive");
  return std::log2(value) / (1.0 - a.value());
}

namespace {

struct OptContext {
  const EnergySpec* spec;
  double delta;
  double alpha;
};

DualPoint point_from(const gsl_vector* v) {
  const double sg = gsl_vector_get(v, 2);
  DualPoint d;
  d.lag_g = sg * sg;
  d.z = gsl_vector_get(v, 1);
  d.lag_p = d.lag_g + std::exp(gsl_vector_get(v, 0));
  return d;
}

double objective(const gsl_vector* v, void* params) {
  const auto* ctx = static_cast<const OptContext*>(params);
  const DualPoint d = point_from(v);
  if (!d.valid() || !(d.lag_e() > 0.0) || !std::isfinite(d.lag_e())) return 1e300;
  const double f = energy_dualf(d, *ctx->spec, ctx->delta, RenyiParameter(ctx->alpha)).value;
  return std::isfinite(f) ? f : 1e300;
}

std::pair<DualPoint, double> nelder_mead(OptContext& ctx, const double start[3]) {
  gsl_multimin_function fn{&objective, 3, &ctx};
  gsl_vector* x = gsl_vector_alloc(3);
  gsl_vector* step = gsl_vector_alloc(3);
  for (int i = 0; i < 3; ++i) gsl_vector_set(x, i, start[i]);
  gsl_vector_set(step, 0, 0.5);
  gsl_vector_set(step, 1, 1.0);
  gsl_vector_set(step, 2, 0.5);
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
  gsl_multimin_fminimizer_set(m, &fn, x, step);
  for (int it = 0; it < 20000; ++it) {
    if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-12) == GSL_SUCCESS) break;
  }
  const DualPoint best = point_from(m->x);
  const double value = m->fval;
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return {best, value};
}

}  // namespace

EnergyBound energy_bound_optimize(const EnergySpec& e, double delta, RenyiParameter a) {
  e.validate();
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  const double alpha = a.value();
  if (!(alpha > 0.5)) throw DomainError("energy bounds need alpha > 1/2");
  OptContext ctx{&e, delta, alpha};
  DualPoint best;
  double best_value = kInf;
  for (double z0 : {2.0, 4.0, 6.0, 8.0, 10.0}) {
    // lag_G = 0 and lag_P = alpha put the stationary ground weight at 1.
    double start[3] = {std::log(alpha), z0, 0.0};
    auto [p, v] = nelder_mead(ctx, start);
    // Restart from the end point; the simplex tends to collapse early.
    for (int r = 0; r < 3; ++r) {
      double again[3] = {std::log(p.lag_p - p.lag_g), p.z, std::sqrt(p.lag_g)};
      auto [p2, v2] = nelder_mead(ctx, again);
      if (!(v2 < v)) break;
      p = p2;
      v = v2;
    }
    if (v < best_value) {
      best_value = v;
      best = p;
    }
  }
  if (!(best_value < 1e300)) throw SolverError("every evaluated dual point diverged");
  const DualValue dv = energy_dualf(best, e, delta, a);
  EnergyBound out;
  out.point = best;
  out.dual_value = dv.value;
  out.renyi_bits = renyi_bits_from_power_sum(dv.value, a);
  out.gap_estimate = dv.lower > 0.0 ? out.renyi_bits - renyi_bits_from_power_sum(dv.lower, a) : kInf;
  return out;
}

double energy_primal_truncated(const EnergySpec& e, double delta, RenyiParameter a, std::int64_t levels) {
  e.validate();
  if (levels < 1) throw ConfigError("levels must be at least 1");
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("delta must lie in [0, 1]");
  if (delta == 0.0) return 1.0;
  const double alpha = a.value();
  const double p = 1.0 / (1.0 - alpha);
  std::vector<double> energy;
  energy.reserve(e.spacings.size() * static_cast<std::size_t>(levels));
  for (double spacing : e.spacings)
    for (std::int64_t l = 1; l <= levels; ++l) energy.push_back(static_cast<double>(l) * spacing);
  std::vector<double> lw(energy.size());

  // Tail w_k = t (E_k + c)^(-p), scaled as far as the ground-weight and energy
  // constraints allow.
  auto value = [&](double log_c) {
    const double c = std::exp(log_c);
    double m = -kInf;
    for (std::size_t k = 0; k < energy.size(); ++k) {
      lw[k] = -p * std::log(energy[k] + c);
      m = std::max(m, lw[k]);
    }
    double s0 = 0.0, s1 = 0.0, sa = 0.0;
    for (std::size_t k = 0; k < energy.size(); ++k) {
      const double w = std::exp(lw[k] - m);
      s0 += w;
      s1 += w * energy[k];
      sa += std::exp(alpha * (lw[k] - m));
    }
    const double log_scale = std::min(std::log(delta) - std::log(s0), std::log(e.e_max) - std::log(s1));
    const double tail = std::exp(log_scale) * s0;
    const double ground = std::max(0.0, 1.0 - tail);
    return std::pow(ground, alpha) + std::exp(alpha * log_scale) * sa;
  };

  double min_e = kInf, max_e = 0.0;
  for (double x : energy) {
    min_e = std::min(min_e, x);
    max_e = std::max(max_e, x);
  }
  const double lo = std::log(min_e) - 20.0, hi = std::log(max_e) + 20.0;
  const int cells = 96;
  int best = 0;
  double best_val = -kInf;
  for (int i = 0; i <= cells; ++i) {
    const double v = value(lo + (hi - lo) * i / cells);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a0 = lo + (hi - lo) * std::max(0, best - 1) / cells;
  const double b0 = lo + (hi - lo) * std::min(cells, best + 1) / cells;
  const auto r = boost::math::tools::brent_find_minima([&](double x) { return -value(x); }, a0, b0,
                                                       std::numeric_limits<double>::digits / 2);
  return std::max(best_val, -r.second);
}

double hmax_energy_bound(std::int64_t n, const EnergySpec& e, double delta, RenyiParameter a,
                         const SmoothingBudget& budget) {
  if (n < 0) throw DomainError("number of rounds must be non-negative");
  a.require_chain_range();
  const double correction = renyi_correction_bits(budget, a);
  if (n == 0) return correction;
  return static_cast<double>(n) * energy_bound_optimize(e, delta, a).renyi_bits + correction;
}

std::vector<EnergyTableRow> energy_table(const std::vector<double>& spacings, const std::vector<double>& alphas,
                                         const std::vector<double>& deltas, const std::vector<double>& e_maxes,
                                         int jobs) {
  std::vector<EnergyTableRow> rows;
  for (double e_max : e_maxes)
    for (double delta : deltas)
      for (double alpha : alphas) rows.push_back({alpha, delta, e_max, {}});
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      try {
        rows[i].bound = energy_bound_optimize(EnergySpec{spacings, rows[i].e_max}, rows[i].delta,
                                              RenyiParameter(rows[i].alpha));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = rows.size();
      }
    }
  };
  int n = jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n = std::min<int>(n, static_cast<int>(std::max<std::size_t>(1, rows.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::vector<EnergyTableRow> energy_table_preset(int jobs) {
  return energy_table({1.0, 2.0}, {0.9, 0.99, 0.999}, {1e-2, 1e-3, 1e-4}, {1e5, 1e12}, jobs);
}

std::string energy_table_to_csv(const std::vector<EnergyTableRow>& rows) {
  std::ostringstream out;
  out << "alpha,delta,emax,renyi_bits,dual_lagG,dual_z,dual_lagP,gap_estimate\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.6g\n", r.alpha, r.delta, r.e_max,
                  r.bound.renyi_bits, r.bound.point.lag_g, r.bound.point.z, r.bound.point.lag_p, r.bound.gap_estimate);
    out << buf;
  }
  return out.str();
}

}  // namespace leakrate
