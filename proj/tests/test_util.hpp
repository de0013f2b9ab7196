#pragma once

#include <cmath>
#include <complex>
#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "leakrate/core_math.hpp"

namespace leakrate::test {

inline ProbVector random_prob_vector(std::mt19937& rng, std::size_t size) {
  std::exponential_distribution<double> exp(1.0);
  std::vector<double> w(size);
  double total = 0.0;
  for (auto& v : w) total += (v = exp(rng));
  for (auto& v : w) v /= total;
  return ProbVector(w);
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Ginibre-type density matrix of the given rank.
inline Eigen::MatrixXcd random_density_matrix(std::mt19937& rng, int dim, int rank) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd m(dim, rank);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < rank; ++j) m(i, j) = {g(rng), g(rng)};
  Eigen::MatrixXcd rho = m * m.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

// Projector onto outcome a of a qubit measurement at polar angle theta in
// the X-Z plane.
inline Eigen::Matrix2cd plane_projector(double theta, int a) {
  Eigen::Matrix2cd x, z, id = Eigen::Matrix2cd::Identity();
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  const double sign = a == 0 ? 1.0 : -1.0;
  return 0.5 * (id + sign * (std::sin(theta) * x + std::cos(theta) * z));
}

inline Eigen::MatrixXcd werner_state(double q) {
  Eigen::Vector4cd phi = Eigen::Vector4cd::Zero();
  phi(0) = phi(3) = 1.0 / std::sqrt(2.0);
  return (1.0 - 2.0 * q) * phi * phi.adjoint() + 2.0 * q * Eigen::Matrix4cd::Identity() / 4.0;
}

// Born-rule statistics of the Werner state measured in the X-Z plane.
inline double werner_oracle(double q, double theta_a, double theta_b, int a, int b) {
  const Eigen::MatrixXcd proj = kron(plane_projector(theta_a, a), plane_projector(theta_b, b));
  return (werner_state(q) * proj).trace().real();
}

// Euclidean projection onto {y >= 0, sum y = mass}.
inline std::vector<double> project_to_simplex(std::vector<double> v, double mass) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cumulative += u[i];
    const double t = (cumulative - mass) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (auto& x : v) x = std::max(x - theta, 0.0);
  return v;
}

// max sum_k w_k^alpha over the simplex in d entries with w_0 >= 1 - delta,
// by projected gradient ascent with backtracking.
inline double projected_gradient_dim_opt(int d, double delta, double alpha) {
  auto objective = [&](const std::vector<double>& y) {
    double f = std::pow(y[0] + 1.0 - delta, alpha);
    for (int k = 1; k < d; ++k) f += std::pow(y[k], alpha);
    return f;
  };
  std::vector<double> y(d, delta / d);
  double f = objective(y);
  double step = 1e-3;
  for (int iter = 0; iter < 20000 && step > 1e-18; ++iter) {
    std::vector<double> g(d);
    g[0] = alpha * std::pow(y[0] + 1.0 - delta, alpha - 1.0);
    for (int k = 1; k < d; ++k) g[k] = alpha * std::pow(std::max(y[k], 1e-300), alpha - 1.0);
    std::vector<double> trial(d);
    for (int k = 0; k < d; ++k) trial[k] = y[k] + step * g[k];
    trial = project_to_simplex(trial, delta);
    const double ft = objective(trial);
    if (ft > f) {
      const bool tiny = ft - f < 1e-16;
      y = trial;
      f = ft;
      step *= 1.5;
      if (tiny) break;
    } else {
      step *= 0.5;
    }
  }
  return f;
}

}  // namespace leakrate::test
