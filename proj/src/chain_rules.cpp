#include <cmath>

#include "leakrate/errors.hpp"
#include "leakrate/leak_accounting.hpp"

namespace leakrate {

ChainResult chain_assemble(const ChainInputs& c) {
  c.budget.validate();
  if (!std::isfinite(c.hmin_base) || !std::isfinite(c.hmax_ae) || !std::isfinite(c.hmax_be))
    throw DomainError("chain inputs must be finite");
  ChainResult r;
  const double corr = smf(c.budget.tau);
  if (c.q_prime_classical) {
    // One chain-rule step per register, the classical register absorbed
    // without a second max-entropy term.
    r.hmin_corrected_bits = c.hmin_base - c.hmax_ae - c.hmax_be - 4.0 * corr;
    r.eps_prime = c.budget.eps_prime_classical();
  } else {
    r.hmin_corrected_bits = c.hmin_base - 2.0 * c.hmax_ae - 2.0 * c.hmax_be - 6.0 * corr;
    r.eps_prime = c.budget.eps_prime();
  }
  if (!(r.eps_prime < 1.0)) throw DomainError("smoothing budget exceeds 1 after the chain rule");
  r.vacuous = r.hmin_corrected_bits < 0.0;
  return r;
}

double public_comm_chain(double hmin, double log_dim_p) {
  if (!(log_dim_p >= 0.0)) throw DomainError("log dimension of the public register must be non-negative");
  return hmin - log_dim_p;
}

double energy_cutoff_closeness(std::int64_t n, double e_avg, double e_cut) {
  if (!(e_cut > 0.0)) throw DomainError("energy cutoff must be positive");
  if (n < 0 || e_avg < 0.0) throw DomainError("rounds and average energy must be non-negative");
  return std::sqrt(static_cast<double>(n) * e_avg / e_cut);
}

}  // namespace leakrate
