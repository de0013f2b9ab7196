#include <doctest.h>

#include <algorithm>
#include <complex>
#include <fstream>
#include <random>
#include <sstream>

#include "leakrate/errors.hpp"
#include "leakrate/npa.hpp"
#include "test_util.hpp"

using namespace leakrate;

namespace {

Letter A(int outcome, int input) { return {Party::A, input, outcome}; }
Letter B(int outcome, int input) { return {Party::B, input, outcome}; }

// Rewrites a word by applying one randomly chosen applicable rule at a time
// until none applies. Returns an empty optional for Zero.
std::optional<std::vector<Letter>> random_rewrite(std::vector<Letter> w, std::mt19937& rng) {
  for (;;) {
    std::vector<std::pair<int, std::size_t>> moves;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      const Letter &l = w[i], &r = w[i + 1];
      if (l.party == Party::B && r.party == Party::A) moves.push_back({0, i});
      if (l.party == r.party && l.input == r.input) moves.push_back({l.outcome == r.outcome ? 1 : 2, i});
    }
    if (moves.empty()) return w;
    const auto [rule, i] = moves[std::uniform_int_distribution<std::size_t>(0, moves.size() - 1)(rng)];
    if (rule == 0) std::swap(w[i], w[i + 1]);
    else if (rule == 1) w.erase(w.begin() + static_cast<std::ptrdiff_t>(i));
    else return std::nullopt;
  }
}

struct Strategy {
  Eigen::VectorXcd psi;
  std::vector<Eigen::Matrix2cd> proj_a, proj_b;  // outcome-0 projectors

  Eigen::Matrix4cd op(const Letter& l) const {
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    Eigen::Matrix2cd p = l.party == Party::A ? proj_a[l.input] : proj_b[l.input];
    if (l.outcome != 0) p = id - p;
    return l.party == Party::A ? test::kron(p, id) : test::kron(id, p);
  }
  Eigen::Matrix4cd op(const Monomial& m) const {
    Eigen::Matrix4cd out = Eigen::Matrix4cd::Identity();
    for (const Letter& l : m.letters()) out = out * op(l);
    return out;
  }
  double expect(const Eigen::Matrix4cd& o) const { return (psi.adjoint() * o * psi)(0, 0).real(); }
};

Eigen::Matrix2cd random_projector(std::mt19937& rng) {
  std::normal_distribution<double> g;
  Eigen::Vector2cd v(std::complex<double>(g(rng), g(rng)), std::complex<double>(g(rng), g(rng)));
  v.normalize();
  return v * v.adjoint();
}

Strategy random_strategy(std::mt19937& rng, int inputs_a, int inputs_b) {
  std::normal_distribution<double> g;
  Strategy s;
  s.psi = Eigen::VectorXcd(4);
  for (int i = 0; i < 4; ++i) s.psi(i) = {g(rng), g(rng)};
  s.psi.normalize();
  for (int x = 0; x < inputs_a; ++x) s.proj_a.push_back(random_projector(rng));
  for (int y = 0; y < inputs_b; ++y) s.proj_b.push_back(random_projector(rng));
  return s;
}

double evaluate(const MomentForm& f, const std::vector<double>& class_values) {
  double v = 0.0;
  for (const auto& [c, coef] : f) v += coef * class_values.at(c);
  return v;
}

}  // namespace

TEST_CASE("canonicalization examples") {
  const std::vector<Letter> idem{A(0, 0), A(0, 0)};
  CHECK(canonicalize(idem).to_string() == canonicalize(std::vector<Letter>{A(0, 0)}).to_string());
  const std::vector<Letter> orth{A(0, 0), A(1, 0)};
  CHECK(canonicalize(orth).is_zero());
  const std::vector<Letter> swapped{B(0, 1), A(0, 0)};
  const Monomial m = canonicalize(swapped);
  REQUIRE(m.length() == 2);
  CHECK(m.letters()[0] == A(0, 0));
  CHECK(m.letters()[1] == B(0, 1));
  CHECK(canonicalize(std::vector<Letter>{}).is_identity());
  CHECK(multiply(Monomial::zero(), m).is_zero());
}

TEST_CASE("canonicalization is confluent") {
  std::mt19937 rng(21);
  std::uniform_int_distribution<int> len(0, 8), party(0, 1), input(0, 2), outcome(0, 1);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<Letter> w(len(rng));
    for (auto& l : w) l = {party(rng) ? Party::B : Party::A, input(rng), outcome(rng)};
    const Monomial canon = canonicalize(w);
    const auto rewritten = random_rewrite(w, rng);
    if (!rewritten) {
      CHECK(canon.is_zero());
      continue;
    }
    REQUIRE_FALSE(canon.is_zero());
    CHECK(std::vector<Letter>(canon.letters().begin(), canon.letters().end()) == *rewritten);
  }
}

TEST_CASE("local level basis sizes") {
  CHECK(local_level_basis(BellScenario{2, 2, 2, 2}, 1).size() == 9);
  CHECK(local_level_basis(BellScenario{2, 2, 2, 2}, 2).size() == 25);
  CHECK(local_level_basis(BellScenario{4, 4, 2, 2}, 1).size() == 25);
  CHECK(local_level_basis(BellScenario{2, 2, 3, 2}, 1).size() == 15);
  CHECK_THROWS(local_level_basis(BellScenario{}, 3));
  const auto basis = local_level_basis(BellScenario{}, 2);
  CHECK(basis.front().is_identity());
  CHECK(basis == local_level_basis(BellScenario{}, 2));
}

TEST_CASE("moment structure classes") {
  const BellScenario s{};
  const MomentStructure ms = moment_structure(s, local_level_basis(s, 2));
  for (std::size_t i = 0; i < ms.size(); ++i)
    for (std::size_t j = 0; j < ms.size(); ++j) CHECK(ms.entry_class[i][j] == ms.entry_class[j][i]);
  CHECK(ms.entry_class[0][0] == MomentStructure::kIdentityClass);

  auto index = [&](const Monomial& m) {
    return static_cast<std::size_t>(std::find(ms.basis.begin(), ms.basis.end(), m) - ms.basis.begin());
  };
  const Monomial a00 = canonicalize(std::vector<Letter>{A(0, 0)});
  const std::size_t ia = index(a00);
  REQUIRE(ia < ms.size());
  CHECK(ms.entry_class[0][ia] == ms.entry_class[ia][ia]);

  const BellScenario ternary{2, 2, 3, 2};
  const MomentStructure mt = moment_structure(ternary, local_level_basis(ternary, 1));
  const std::size_t i0 = static_cast<std::size_t>(
      std::find(mt.basis.begin(), mt.basis.end(), canonicalize(std::vector<Letter>{A(0, 0)})) - mt.basis.begin());
  const std::size_t i1 = static_cast<std::size_t>(
      std::find(mt.basis.begin(), mt.basis.end(), canonicalize(std::vector<Letter>{A(1, 0)})) - mt.basis.begin());
  REQUIRE(i0 < mt.size());
  REQUIRE(i1 < mt.size());
  CHECK(mt.entry_class[i0][i1] == MomentStructure::kZeroClass);
}

TEST_CASE("moment matrices of explicit strategies are PSD and reproduce the behaviour") {
  std::mt19937 rng(22);
  for (const auto& [scenario, level] : {std::pair{BellScenario{2, 2, 2, 2}, 1}, std::pair{BellScenario{2, 2, 2, 2}, 2},
                                        std::pair{BellScenario{4, 4, 2, 2}, 1}, std::pair{BellScenario{3, 2, 2, 2}, 2}}) {
    const MomentStructure ms = moment_structure(scenario, local_level_basis(scenario, level));
    for (int trial = 0; trial < 25; ++trial) {
      const Strategy st = random_strategy(rng, scenario.inputs_a, scenario.inputs_b);
      std::vector<double> values(ms.num_classes());
      for (int c = 0; c < ms.num_classes(); ++c) values[c] = st.expect(st.op(ms.classes[c]));
      CHECK(values[MomentStructure::kIdentityClass] == doctest::Approx(1.0));

      const int n = static_cast<int>(ms.size());
      Eigen::MatrixXd gamma(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const int c = ms.entry_class[i][j];
          gamma(i, j) = c == MomentStructure::kZeroClass ? 0.0 : values[c];
          const double direct = st.expect(st.op(ms.basis[i]).adjoint() * st.op(ms.basis[j]));
          CHECK(std::abs(gamma(i, j) - direct) <= 1e-10);
        }
      CHECK((gamma - gamma.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
      CHECK(es.eigenvalues().minCoeff() >= -1e-9);

      for (int x = 0; x < scenario.inputs_a; ++x)
        for (int y = 0; y < scenario.inputs_b; ++y)
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
              const Eigen::Matrix4cd pa = st.op(Letter{Party::A, x, a}), pb = st.op(Letter{Party::B, y, b});
              CHECK(std::abs(evaluate(ms.probability_form(a, b, x, y), values) - st.expect(pa * pb)) <= 1e-10);
              CHECK(std::abs(evaluate(ms.marginal_a_form(a, x), values) - st.expect(pa)) <= 1e-10);
              CHECK(std::abs(evaluate(ms.marginal_b_form(b, y), values) - st.expect(pb)) <= 1e-10);
            }
    }
  }
}

TEST_CASE("moment structure dump matches golden file") {
  const BellScenario s{};
  const std::string text = dump(moment_structure(s, local_level_basis(s, 1)));
  std::ifstream in(LEAKRATE_TEST_DATA "/chsh_level1_structure.txt");
  REQUIRE(in);
  std::stringstream golden;
  golden << in.rdbuf();
  CHECK(text == golden.str());
}
