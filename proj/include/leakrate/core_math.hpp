#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace leakrate {

inline constexpr double kNormalizationTolerance = 1e-12;
// Weights below this are treated as exact zeros before taking logarithms.
inline constexpr double kProbabilityFloor = 1e-15;

// Non-negative weight vector. Normalized unless constructed with
// allow_subnormalized, in which case the total may be anywhere in [0, 1].
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> weights, bool allow_subnormalized = false);

  static ProbVector uniform(std::size_t size);
  static ProbVector point_mass(std::size_t size, std::size_t index);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  double total() const { return total_; }
  bool normalized() const;

 private:
  std::vector<double> weights_;
  double total_ = 0.0;
};

// Order of a Renyi entropy, restricted to (0, 1).
class RenyiParameter {
 public:
  explicit RenyiParameter(double alpha);
  double value() const { return alpha_; }
  // Chain-rule corrections are only valid for alpha >= 1/2.
  bool in_chain_range() const { return alpha_ >= 0.5; }
  void require_chain_range() const;

 private:
  double alpha_;
};

// Fidelity deficit and key-register dimension for the continuity bound.
class ContinuityInput {
 public:
  ContinuityInput(double delta, int dim_s);
  double delta() const { return delta_; }
  int dim_s() const { return dim_s_; }

 private:
  double delta_;
  int dim_s_;
};

double binary_entropy(double p);
double shannon_entropy(const ProbVector& w);
double renyi_entropy(const ProbVector& w, RenyiParameter alpha);
double bhattacharyya_fidelity(const ProbVector& p, const ProbVector& q);
double fcont(const ContinuityInput& c);
double smf(double p);

// Root fidelity ||sqrt(rho) sqrt(sigma)||_1 of two density matrices.
double matrix_fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma);

// Throws DomainError unless rho is Hermitian, PSD and unit trace.
void require_density_matrix(const Eigen::MatrixXcd& rho, double tol = 1e-10);

Eigen::MatrixXcd partial_trace_first(const Eigen::MatrixXcd& rho, int dim_a, int dim_b);
Eigen::MatrixXcd partial_trace_second(const Eigen::MatrixXcd& rho, int dim_a, int dim_b);

struct GentleWitness {
  double ground_weight = 0.0;
  double fidelity = 0.0;
};

// Ground-state weight <g|rho_A|g> and the fidelity between rho_AB and
// |g><g|_A (x) rho_B. The fidelity is evaluated on a purification |psi> of
// rho_AB against |g><g| (x) rho_BR, where one argument is pure and the value
// is sqrt(<psi|.|psi>). By monotonicity this never exceeds the fidelity of the
// reduced states, so it is a conservative witness.
GentleWitness gentle_fidelity_witness(const Eigen::MatrixXcd& rho_ab, int dim_a,
                                      int ground_index);

}  // namespace leakrate
