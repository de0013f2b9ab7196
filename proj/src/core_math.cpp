#include "leakrate/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "leakrate/errors.hpp"

namespace leakrate {

namespace {

double clamp_small(double w) { return w < kProbabilityFloor ? 0.0 : w; }

double xlog2x(double w) {
  w = clamp_small(w);
  return w == 0.0 ? 0.0 : w * std::log2(w);
}

}  // namespace

ProbVector::ProbVector(std::vector<double> weights, bool allow_subnormalized)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw DomainError("probability vector must be non-empty");
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0)
      throw DomainError("probability weights must be finite and non-negative");
  }
  total_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (allow_subnormalized) {
    if (total_ > 1.0 + kNormalizationTolerance)
      throw DomainError("subnormalized vector has total weight above 1");
  } else if (std::abs(total_ - 1.0) > kNormalizationTolerance) {
    throw DomainError("probability vector not normalized (total " + std::to_string(total_) + ")");
  }
}

ProbVector ProbVector::uniform(std::size_t size) {
  if (size == 0) throw DomainError("uniform distribution needs at least one entry");
  return ProbVector(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

ProbVector ProbVector::point_mass(std::size_t size, std::size_t index) {
  if (index >= size) throw DomainError("point mass index out of range");
  std::vector<double> w(size, 0.0);
  w[index] = 1.0;
  return ProbVector(std::move(w));
}

bool ProbVector::normalized() const { return std::abs(total_ - 1.0) <= kNormalizationTolerance; }

RenyiParameter::RenyiParameter(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("Renyi order must lie in (0,1); use shannon_entropy at alpha = 1");
  }
}

void RenyiParameter::require_chain_range() const {
  if (!in_chain_range()) throw DomainError("Renyi order must be at least 1/2 here");
}

ContinuityInput::ContinuityInput(double delta, int dim_s) : delta_(delta), dim_s_(dim_s) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("continuity delta must lie in [0,1]");
  if (dim_s < 2) throw DomainError("key register dimension must be at least 2");
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binary_entropy: p outside [0,1]");
  return -xlog2x(p) - xlog2x(1.0 - p);
}

double shannon_entropy(const ProbVector& w) {
  double h = 0.0;
  for (double x : w.weights()) h -= xlog2x(x);
  return h;
}

double renyi_entropy(const ProbVector& w, RenyiParameter alpha) {
  if (!w.normalized()) throw DomainError("renyi_entropy requires a normalized vector");
  const double a = alpha.value();
  // sum w^a - 1 = sum w (w^(a-1) - 1), accurate when a is close to 1.
  double excess = 0.0;
  for (double x : w.weights()) {
    x = clamp_small(x);
    if (x > 0.0) excess += x * std::expm1((a - 1.0) * std::log(x));
  }
  excess += 1.0 - w.total();
  return std::log1p(excess) / std::log(2.0) / (1.0 - a);
}

double bhattacharyya_fidelity(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) throw DomainError("bhattacharyya_fidelity: length mismatch");
  double f = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) f += std::sqrt(p[k] * q[k]);
  return std::min(f, 1.0);
}

double fcont(const ContinuityInput& c) {
  const double d = c.delta();
  const double t = std::sqrt(std::max(0.0, 2.0 * d - d * d));
  return t * std::log2(static_cast<double>(c.dim_s())) + (1.0 + t) * binary_entropy(t / (1.0 + t));
}

double smf(double p) {
  if (!(p > 0.0)) throw DomainError("smf: argument must be positive");
  if (p > 1.0) throw DomainError("smf: argument must not exceed 1");
  // 1 - sqrt(1-p^2) rewritten to avoid cancellation at small p.
  const double gap = p * p / (1.0 + std::sqrt(1.0 - p * p));
  return -std::log2(gap);
}

void require_density_matrix(const Eigen::MatrixXcd& rho, double tol) {
  if (rho.rows() != rho.cols() || rho.rows() == 0)
    throw DomainError("density matrix must be square and non-empty");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol)
    throw DomainError("density matrix is not Hermitian");
  if (std::abs(rho.trace() - std::complex<double>(1.0, 0.0)) > tol)
    throw DomainError("density matrix does not have unit trace");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol) throw DomainError("density matrix is not PSD");
}

namespace {

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

double matrix_fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw DomainError("matrix_fidelity: dimension mismatch");
  const Eigen::MatrixXcd s = psd_sqrt(rho);
  Eigen::MatrixXcd inner = s * sigma * s;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(inner, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

Eigen::MatrixXcd partial_trace_first(const Eigen::MatrixXcd& rho, int dim_a, int dim_b) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim_b, dim_b);
  for (int a = 0; a < dim_a; ++a) out += rho.block(a * dim_b, a * dim_b, dim_b, dim_b);
  return out;
}

Eigen::MatrixXcd partial_trace_second(const Eigen::MatrixXcd& rho, int dim_a, int dim_b) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim_a, dim_a);
  for (int i = 0; i < dim_a; ++i)
    for (int j = 0; j < dim_a; ++j)
      for (int b = 0; b < dim_b; ++b) out(i, j) += rho(i * dim_b + b, j * dim_b + b);
  return out;
}

GentleWitness gentle_fidelity_witness(const Eigen::MatrixXcd& rho_ab, int dim_a,
                                      int ground_index) {
  require_density_matrix(rho_ab);
  const int n = static_cast<int>(rho_ab.rows());
  if (dim_a < 1 || n % dim_a != 0) throw DomainError("dim_a does not divide the state dimension");
  if (ground_index < 0 || ground_index >= dim_a) throw DomainError("ground index out of range");
  const int dim_b = n / dim_a;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_ab);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);

  // Slices of the purification sum_i sqrt(lam_i) |v_i>|i>_R for each A index.
  std::vector<Eigen::MatrixXcd> slice(dim_a, Eigen::MatrixXcd::Zero(dim_b, n));
  for (int i = 0; i < n; ++i) {
    const double w = std::sqrt(lam(i));
    for (int a = 0; a < dim_a; ++a)
      for (int b = 0; b < dim_b; ++b) slice[a](b, i) = w * es.eigenvectors()(a * dim_b + b, i);
  }

  GentleWitness out;
  const Eigen::MatrixXcd& g = slice[ground_index];
  out.ground_weight = std::clamp(g.squaredNorm(), 0.0, 1.0);
  double overlap = 0.0;
  for (int a = 0; a < dim_a; ++a) overlap += std::norm((g.conjugate().cwiseProduct(slice[a])).sum());
  out.fidelity = std::clamp(std::sqrt(overlap), 0.0, 1.0);
  return out;
}

}  // namespace leakrate
