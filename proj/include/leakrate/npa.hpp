#pragma once

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leakrate/scenario.hpp"

namespace leakrate {

enum class Party : int { A = 0, B = 1 };

// Projector P_{outcome|input} of one party. Only outcomes below the last are
// represented; the last one is eliminated through completeness.
struct Letter {
  Party party;
  int input;
  int outcome;

  auto operator<=>(const Letter&) const = default;
  std::string to_string() const;
};

// Operator word in canonical form: all A letters before all B letters and no
// two adjacent letters of one party sharing an input. May also be Zero.
class Monomial {
 public:
  Monomial() = default;  // identity
  static Monomial identity() { return Monomial(); }
  static Monomial zero();

  bool is_zero() const { return zero_; }
  bool is_identity() const { return !zero_ && word_.empty(); }
  std::span<const Letter> letters() const { return word_; }
  std::size_t length() const { return word_.size(); }
  std::size_t length(Party p) const;

  // Adjoint, i.e. the reversed word within each party.
  Monomial adjoint() const;
  std::string to_string() const;

  auto operator<=>(const Monomial&) const = default;

 private:
  friend Monomial canonicalize(std::span<const Letter> word);
  std::vector<Letter> word_;
  bool zero_ = false;
};

Monomial canonicalize(std::span<const Letter> word);
Monomial multiply(const Monomial& lhs, const Monomial& rhs);

std::vector<Monomial> local_level_basis(const BellScenario& s, int level);

// Linear form over moment classes; the identity class plays the role of 1.
using MomentForm = std::vector<std::pair<int, double>>;

struct MomentStructure {
  static constexpr int kZeroClass = -1;
  static constexpr int kIdentityClass = 0;

  BellScenario scenario;
  std::vector<Monomial> basis;
  // Representative of each class (the smaller of a word and its adjoint).
  std::vector<Monomial> classes;
  std::vector<std::vector<int>> entry_class;

  std::size_t size() const { return basis.size(); }
  int num_classes() const { return static_cast<int>(classes.size()); }
  std::optional<int> class_of(const Monomial& m) const;

  // p(a,b|x,y) for any outcomes, including eliminated ones.
  MomentForm probability_form(int a, int b, int x, int y) const;
  // p_A(a|x) and p_B(b|y).
  MomentForm marginal_a_form(int a, int x) const;
  MomentForm marginal_b_form(int b, int y) const;

 private:
  friend MomentStructure moment_structure(const BellScenario&, std::vector<Monomial>);
  std::map<Monomial, int> lookup_;
};

// Real symmetric moment-matrix structure: entry (i,j) is the class of
// canonicalize(adjoint(u_i) u_j), with a word and its adjoint merged.
MomentStructure moment_structure(const BellScenario& s, std::vector<Monomial> basis);

// Stable text dump of basis, classes and the class table.
std::string dump(const MomentStructure& m);

}  // namespace leakrate
