#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "leakrate/errors.hpp"
#include "leakrate/single_round.hpp"

namespace leakrate {

namespace {

using cd = std::complex<double>;

Eigen::MatrixXcd kron3(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& c) {
  auto kron = [](const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
    Eigen::MatrixXcd out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    return out;
  };
  return kron(kron(a, b), c);
}

Eigen::MatrixXcd random_unitary(std::mt19937& rng, int d) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = cd(g(rng), g(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(d, d);
}

std::vector<Eigen::MatrixXcd> projective_from_unitary(const Eigen::MatrixXcd& u, int outcomes) {
  std::vector<Eigen::MatrixXcd> out;
  for (int k = 0; k < outcomes; ++k) out.push_back(u.col(k) * u.col(k).adjoint());
  return out;
}

void require_complete(const std::vector<Eigen::MatrixXcd>& povm, int dim, const char* who) {
  Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& e : povm) {
    if (e.rows() != dim || e.cols() != dim) throw ConfigError(std::string(who) + " measurement has the wrong dimension");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (e + e.adjoint()));
    if (es.eigenvalues().minCoeff() < -1e-9) throw ConfigError(std::string(who) + " measurement element is not PSD");
    total += e;
  }
  if ((total - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-9)
    throw ConfigError(std::string(who) + " measurement does not sum to the identity");
}

}  // namespace

AttackOutcome explicit_attack_oracle(const AttackStrategy& s) {
  const int dim = s.dim_a * s.dim_b * s.dim_e;
  if (s.state.size() != dim) throw ConfigError("attack state has the wrong dimension");
  if (s.proj_a.empty() || s.proj_b.empty()) throw ConfigError("attack needs measurements for A and B");
  if (s.x_star < 0 || s.x_star >= static_cast<int>(s.proj_a.size())) throw ConfigError("x_star out of range");
  if (s.eve_povm.size() != s.proj_a[s.x_star].size()) throw ConfigError("Eve needs one POVM element per outcome");
  for (const auto& m : s.proj_a) require_complete(m, s.dim_a, "A");
  for (const auto& m : s.proj_b) require_complete(m, s.dim_b, "B");
  require_complete(s.eve_povm, s.dim_e, "Eve");
  BellScenario sc{static_cast<int>(s.proj_a.size()), static_cast<int>(s.proj_b.size()),
                  static_cast<int>(s.proj_a[0].size()), static_cast<int>(s.proj_b[0].size())};
  const Eigen::VectorXcd psi = s.state / s.state.norm();
  const Eigen::MatrixXcd id_a = Eigen::MatrixXcd::Identity(s.dim_a, s.dim_a);
  const Eigen::MatrixXcd id_b = Eigen::MatrixXcd::Identity(s.dim_b, s.dim_b);
  const Eigen::MatrixXcd id_e = Eigen::MatrixXcd::Identity(s.dim_e, s.dim_e);
  AttackOutcome out{0.0, TargetBehavior(sc)};
  for (int x = 0; x < sc.inputs_a; ++x)
    for (int y = 0; y < sc.inputs_b; ++y)
      for (int a = 0; a < sc.outputs_a; ++a)
        for (int b = 0; b < sc.outputs_b; ++b) {
          const Eigen::MatrixXcd op = kron3(s.proj_a[x][a], s.proj_b[y][b], id_e);
          out.behavior(a, b, x, y) = (psi.adjoint() * op * psi)(0, 0).real();
        }
  for (int a = 0; a < sc.outputs_a; ++a) {
    const Eigen::MatrixXcd op = kron3(s.proj_a[s.x_star][a], id_b, s.eve_povm[a]);
    out.guessing_prob += (psi.adjoint() * op * psi)(0, 0).real();
  }
  return out;
}

AttackStrategy random_attack_strategy(std::mt19937& rng, int inputs_a, int inputs_b, int dim_e) {
  AttackStrategy s;
  s.dim_a = 2;
  s.dim_b = 2;
  s.dim_e = dim_e;
  std::normal_distribution<double> g;
  s.state.resize(4 * dim_e);
  for (Eigen::Index i = 0; i < s.state.size(); ++i) s.state(i) = cd(g(rng), g(rng));
  s.state /= s.state.norm();
  for (int x = 0; x < inputs_a; ++x) s.proj_a.push_back(projective_from_unitary(random_unitary(rng, 2), 2));
  for (int y = 0; y < inputs_b; ++y) s.proj_b.push_back(projective_from_unitary(random_unitary(rng, 2), 2));
  // Eve guesses with a two-outcome projective measurement: split her space.
  const Eigen::MatrixXcd u = random_unitary(rng, dim_e);
  Eigen::MatrixXcd p0 = Eigen::MatrixXcd::Zero(dim_e, dim_e);
  for (int k = 0; k < (dim_e + 1) / 2; ++k) p0 += u.col(k) * u.col(k).adjoint();
  s.eve_povm = {p0, Eigen::MatrixXcd::Identity(dim_e, dim_e) - p0};
  s.x_star = 0;
  return s;
}

}  // namespace leakrate
