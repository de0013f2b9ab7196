#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "leakrate/core_math.hpp"
#include "leakrate/errors.hpp"
#include "test_util.hpp"

using namespace leakrate;

TEST_CASE("binary entropy values and domain") {
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  // 40-digit evaluation of the formula.
  CHECK(binary_entropy(1e-3) == doctest::Approx(0.011407757737461135718).epsilon(1e-13));
  CHECK_THROWS_AS(binary_entropy(-0.1), DomainError);
  CHECK_THROWS_AS(binary_entropy(1.1), DomainError);
  CHECK_THROWS_AS(binary_entropy(std::nan("")), DomainError);
}

TEST_CASE("probability vector invariants") {
  CHECK_THROWS_AS(ProbVector({0.5, 0.6}), DomainError);
  CHECK_THROWS_AS(ProbVector({1.2, -0.2}), DomainError);
  CHECK_NOTHROW(ProbVector({0.3, 0.3}, true));
  CHECK_THROWS_AS(ProbVector({0.6, 0.6}, true), DomainError);
  CHECK(ProbVector::uniform(4).normalized());
}

TEST_CASE("renyi parameter range") {
  CHECK_THROWS_AS(RenyiParameter(1.0), DomainError);
  CHECK_THROWS_AS(RenyiParameter(0.0), DomainError);
  CHECK_FALSE(RenyiParameter(0.3).in_chain_range());
  CHECK_THROWS_AS(RenyiParameter(0.3).require_chain_range(), DomainError);
  CHECK_NOTHROW(RenyiParameter(0.5).require_chain_range());
}

TEST_CASE("renyi entropy values") {
  for (double a : {0.1, 0.5, 0.9, 0.999})
    for (std::size_t d : {2u, 3u, 33u})
      CHECK(renyi_entropy(ProbVector::uniform(d), RenyiParameter(a)) == doctest::Approx(std::log2(d)).epsilon(1e-12));
  CHECK(renyi_entropy(ProbVector::point_mass(5, 2), RenyiParameter(0.7)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(renyi_entropy(ProbVector({0.999, 0.001}), RenyiParameter(0.9)) ==
        doctest::Approx(0.015791999394066064471).epsilon(1e-12));
}

TEST_CASE("renyi entropy is non-increasing in alpha") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const ProbVector w = test::random_prob_vector(rng, 2 + trial % 7);
    double prev = INFINITY;
    for (double a = 0.05; a < 0.999; a += 0.05) {
      const double h = renyi_entropy(w, RenyiParameter(a));
      CHECK(h <= prev + 1e-12);
      prev = h;
    }
  }
}

TEST_CASE("renyi entropy approaches shannon entropy") {
  std::mt19937 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const ProbVector w = test::random_prob_vector(rng, 2 + trial % 9);
    CHECK(std::abs(renyi_entropy(w, RenyiParameter(1.0 - 1e-6)) - shannon_entropy(w)) <= 1e-4);
  }
}

TEST_CASE("bhattacharyya fidelity") {
  const ProbVector p({0.9, 0.1}), q({0.8, 0.2});
  CHECK(bhattacharyya_fidelity(p, p) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bhattacharyya_fidelity(ProbVector({1, 0}), ProbVector({0, 1})) == 0.0);
  CHECK(bhattacharyya_fidelity(p, q) == doctest::Approx(0.98994949366116653416).epsilon(1e-14));
  CHECK_THROWS(bhattacharyya_fidelity(p, ProbVector::uniform(3)));
}

TEST_CASE("bhattacharyya fidelity equals matrix fidelity of diagonal states") {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 6;
    const ProbVector p = test::random_prob_vector(rng, d), q = test::random_prob_vector(rng, d);
    Eigen::MatrixXcd rp = Eigen::MatrixXcd::Zero(d, d), rq = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      rp(i, i) = p[i];
      rq(i, i) = q[i];
    }
    CHECK(std::abs(bhattacharyya_fidelity(p, q) - matrix_fidelity(rp, rq)) <= 1e-10);
  }
}

TEST_CASE("continuity bound") {
  CHECK(fcont(ContinuityInput(0.0, 2)) == 0.0);
  CHECK(fcont(ContinuityInput(0.0, 17)) == 0.0);
  CHECK(fcont(ContinuityInput(1.0, 2)) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(fcont(ContinuityInput(1e-3, 2)) == doctest::Approx(0.31108131553191482531).epsilon(1e-12));
  CHECK_THROWS_AS(ContinuityInput(-0.1, 2), DomainError);
  CHECK_THROWS_AS(ContinuityInput(0.1, 1), DomainError);
}

TEST_CASE("continuity bound is monotone") {
  for (int d = 2; d <= 16; ++d) {
    double prev = -1.0;
    for (int k = 0; k <= 200; ++k) {
      const double delta = k / 200.0;
      const double v = fcont(ContinuityInput(delta, d));
      CHECK(v >= prev);
      CHECK(v <= fcont(ContinuityInput(delta, d + 1)));
      prev = v;
    }
  }
}

TEST_CASE("smf values and bound") {
  CHECK(smf(1.0) == 0.0);
  CHECK(smf(0.1) == doctest::Approx(7.6402358512694408627).epsilon(1e-12));
  CHECK_THROWS_AS(smf(0.0), DomainError);
  CHECK_THROWS_AS(smf(1.5), DomainError);
  for (double lg = -6.0; lg <= 0.0; lg += 0.01) {
    const double p = std::pow(10.0, lg);
    CHECK(smf(p) <= std::log2(2.0 / (p * p)) + 1e-12);
  }
}

TEST_CASE("gentle witness on product and orthogonal states") {
  Eigen::MatrixXcd sigma(2, 2);
  sigma << 0.7, std::complex<double>(0.1, 0.2), std::complex<double>(0.1, -0.2), 0.3;
  Eigen::MatrixXcd ket0 = Eigen::MatrixXcd::Zero(2, 2), ket1 = Eigen::MatrixXcd::Zero(2, 2);
  ket0(0, 0) = 1.0;
  ket1(1, 1) = 1.0;
  const auto w0 = gentle_fidelity_witness(test::kron(ket0, sigma), 2, 0);
  CHECK(w0.ground_weight == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w0.fidelity == doctest::Approx(1.0).epsilon(1e-9));
  const auto w1 = gentle_fidelity_witness(test::kron(ket1, sigma), 2, 0);
  CHECK(w1.ground_weight == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(w1.fidelity == doctest::Approx(0.0).epsilon(1e-9));

  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Identity(4, 4);
  CHECK_THROWS_AS(gentle_fidelity_witness(bad, 2, 0), DomainError);
  bad(0, 0) = -1.0;
  bad /= 2.0;
  CHECK_THROWS_AS(gentle_fidelity_witness(bad, 2, 0), DomainError);
}

TEST_CASE("gentle witness: fidelity at least the ground weight") {
  std::mt19937 rng(14);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::MatrixXcd rho = test::random_density_matrix(rng, 4, 1 + trial % 4);
    const auto w = gentle_fidelity_witness(rho, 2, 0);
    CHECK(w.fidelity >= w.ground_weight - 1e-10);
  }
}
