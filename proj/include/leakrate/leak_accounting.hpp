#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "leakrate/core_math.hpp"

namespace leakrate {

// Smoothing parameters of the leakage chain rule.
struct SmoothingBudget {
  double eps = 1e-3;
  double tau = 1e-3;
  double eps_l = 1e-3;
  double eps_pe = 1e-3;

  // Smoothing of the corrected min-entropy after compensating both leakage
  // registers with the default rule.
  double eps_prime() const { return eps + 4.0 * tau + 8.0 * eps_l; }
  // Same for the rule that applies when the leaked registers are classical.
  double eps_prime_classical() const { return eps + 2.0 * tau + 4.0 * eps_l; }
  void validate() const;
};

struct DimensionBoundSpec {
  int d_l = 2;
  double delta = 0.0;

  void validate() const;
};

// Leakage-register dimension for a device whose memory holds d_c classical
// states.
int leakage_dim_from_memory(int d_c);

struct DimOptValue {
  // Maximum of sum_k w_k^alpha over the constrained simplex.
  double value = 1.0;
  // delta >= 1 - 1/d_L: the constraint is inactive and the value is that of
  // the uniform distribution.
  bool trivial = false;
};

DimOptValue dim_opt_value(const DimensionBoundSpec& spec, RenyiParameter a);

// (1/(1-alpha)) log2 dim_opt_value, computed without cancellation.
double dim_renyi_bits(const DimensionBoundSpec& spec, RenyiParameter a);

// (log2(1/eps_PE) + smf(eps_L)) / (1/alpha - 1).
double renyi_correction_bits(const SmoothingBudget& budget, RenyiParameter a);

struct HmaxBound {
  double bits = 0.0;
  double per_round_bits = 0.0;
  double alpha = 0.5;
  bool trivial = false;
};

// Upper bound on the smooth max-entropy of n leakage registers of dimension
// at most d_L. Without alpha the bound is minimized over [1/2, 1 - 1e-6].
HmaxBound hmax_dimension_bound(std::int64_t n, const DimensionBoundSpec& spec, const SmoothingBudget& budget,
                               std::optional<double> alpha = std::nullopt);

// Harmonic modes sharing a ground state at energy 0: levels l * spacing.
struct EnergySpec {
  std::vector<double> spacings;
  double e_max = 1.0;

  void validate() const;
};

// Multipliers for the ground-weight, energy and normalization constraints,
// with the energy multiplier stored as 10^-z.
struct DualPoint {
  double lag_g = 0.0;
  double z = 6.0;
  double lag_p = 1.0;

  double lag_e() const;
  bool valid() const;
};

enum class SumMethod { IntegralBound, HurwitzZeta, Truncated };
std::string to_string(SumMethod m);
SumMethod sum_method_from_string(const std::string& name);

struct SumRule {
  SumMethod method = SumMethod::IntegralBound;
  std::int64_t levels = 0;  // Truncated only
};

struct DualValue {
  // Upper bound on max sum_k w_k^alpha.
  double value = 0.0;
  // Same expression with each mode sum replaced by a lower bound. Equal to
  // value for the exact sum methods.
  double lower = 0.0;
};

DualValue energy_dualf(const DualPoint& d, const EnergySpec& e, double delta, RenyiParameter a,
                       SumRule rule = {});

struct EnergyBound {
  double renyi_bits = 0.0;
  DualPoint point;
  double dual_value = 0.0;
  // Bits between the bound and its lower companion at the same point.
  double gap_estimate = 0.0;
};

EnergyBound energy_bound_optimize(const EnergySpec& e, double delta, RenyiParameter a);

// Lower bound on max sum_k w_k^alpha with each mode cut at `levels` levels,
// from the best member of the stationary family w_k ~ (E_k + c)^(-1/(1-alpha)).
double energy_primal_truncated(const EnergySpec& e, double delta, RenyiParameter a, std::int64_t levels);

// (1/(1-alpha)) log2 of a value of sum_k w_k^alpha.
double renyi_bits_from_power_sum(double value, RenyiParameter a);

double hmax_energy_bound(std::int64_t n, const EnergySpec& e, double delta, RenyiParameter a,
                         const SmoothingBudget& budget);

struct EnergyTableRow {
  double alpha;
  double delta;
  double e_max;
  EnergyBound bound;
};

// The two-mode example with spacings (1, 2), alpha in {0.9, 0.99, 0.999},
// delta in {1e-2, 1e-3, 1e-4} and E_max in {1e5, 1e12}.
std::vector<EnergyTableRow> energy_table_preset(int jobs = 0);
std::vector<EnergyTableRow> energy_table(const std::vector<double>& spacings, const std::vector<double>& alphas,
                                         const std::vector<double>& deltas, const std::vector<double>& e_maxes,
                                         int jobs = 0);
// Header alpha,delta,emax,renyi_bits,dual_lagG,dual_z,dual_lagP,gap_estimate.
std::string energy_table_to_csv(const std::vector<EnergyTableRow>& rows);

struct ChainInputs {
  double hmin_base = 0.0;
  double hmax_ae = 0.0;
  double hmax_be = 0.0;
  SmoothingBudget budget;
  bool q_prime_classical = false;
};

struct ChainResult {
  double hmin_corrected_bits = 0.0;
  double eps_prime = 0.0;
  bool vacuous = false;
};

ChainResult chain_assemble(const ChainInputs& c);

double public_comm_chain(double hmin, double log_dim_p);

// sqrt(n e_avg / e_cut). Grows with n, so only useful as a diagnostic.
double energy_cutoff_closeness(std::int64_t n, double e_avg, double e_cut);

// Per-round dimension bound against n for the leakage-dimension figure.
struct DimCurve {
  double delta;
  double eps;  // eps_L = eps_PE
  std::vector<std::int64_t> n;
  std::vector<double> per_round_bits;
  std::vector<double> alpha;
};

std::vector<DimCurve> dimension_curves(int d_l, const std::vector<double>& deltas, const std::vector<double>& eps_list,
                                       const std::vector<std::int64_t>& n_grid);

// The figure preset: d_L = 33, delta in {1e-3, 1e-4, 1e-5}, eps in
// {1e-3, 1e-10}, n on a log grid from 1e6 to 1e14.
std::vector<DimCurve> dimension_curves_preset();

// h(delta) + delta log2(d_L - 1).
double shannon_asymptote(const DimensionBoundSpec& spec);

}  // namespace leakrate
