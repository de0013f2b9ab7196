#include "leakrate/npa.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "leakrate/errors.hpp"

namespace leakrate {

std::string Letter::to_string() const {
  return std::string(party == Party::A ? "A" : "B") + "(" + std::to_string(outcome) + "|" +
         std::to_string(input) + ")";
}

Monomial Monomial::zero() {
  Monomial m;
  m.zero_ = true;
  return m;
}

std::size_t Monomial::length(Party p) const {
  return static_cast<std::size_t>(
      std::count_if(word_.begin(), word_.end(), [p](const Letter& l) { return l.party == p; }));
}

Monomial Monomial::adjoint() const {
  if (zero_) return *this;
  Monomial out;
  const auto split = std::find_if(word_.begin(), word_.end(), [](const Letter& l) { return l.party == Party::B; });
  out.word_.assign(std::make_reverse_iterator(split), word_.rend());
  out.word_.insert(out.word_.end(), word_.rbegin(), std::make_reverse_iterator(split));
  return out;
}

std::string Monomial::to_string() const {
  if (zero_) return "0";
  if (word_.empty()) return "1";
  std::string s;
  for (std::size_t i = 0; i < word_.size(); ++i) {
    if (i) s += ' ';
    s += word_[i].to_string();
  }
  return s;
}

Monomial canonicalize(std::span<const Letter> word) {
  std::vector<Letter> ordered(word.begin(), word.end());
  std::stable_partition(ordered.begin(), ordered.end(), [](const Letter& l) { return l.party == Party::A; });
  Monomial out;
  for (const Letter& l : ordered) {
    if (l.input < 0 || l.outcome < 0) throw std::invalid_argument("letter with negative index");
    if (!out.word_.empty()) {
      const Letter& top = out.word_.back();
      if (top.party == l.party && top.input == l.input) {
        if (top.outcome == l.outcome) continue;  // P P = P
        return Monomial::zero();                 // orthogonal outcomes
      }
    }
    out.word_.push_back(l);
  }
  return out;
}

Monomial multiply(const Monomial& lhs, const Monomial& rhs) {
  if (lhs.is_zero() || rhs.is_zero()) return Monomial::zero();
  std::vector<Letter> w(lhs.letters().begin(), lhs.letters().end());
  w.insert(w.end(), rhs.letters().begin(), rhs.letters().end());
  return canonicalize(w);
}

namespace {

void party_words(Party p, int inputs, int outputs, int level, std::vector<Letter>& prefix,
                 std::vector<std::vector<Letter>>& out) {
  out.push_back(prefix);
  if (static_cast<int>(prefix.size()) == level) return;
  for (int x = 0; x < inputs; ++x) {
    if (!prefix.empty() && prefix.back().input == x) continue;
    for (int a = 0; a + 1 < outputs; ++a) {
      prefix.push_back(Letter{p, x, a});
      party_words(p, inputs, outputs, level, prefix, out);
      prefix.pop_back();
    }
  }
}

bool basis_less(const Monomial& l, const Monomial& r) {
  if (l.length(Party::A) != r.length(Party::A)) return l.length(Party::A) < r.length(Party::A);
  if (l.length(Party::B) != r.length(Party::B)) return l.length(Party::B) < r.length(Party::B);
  return std::lexicographical_compare(l.letters().begin(), l.letters().end(), r.letters().begin(),
                                      r.letters().end());
}

}  // namespace

std::vector<Monomial> local_level_basis(const BellScenario& s, int level) {
  s.validate();
  if (level != 1 && level != 2) throw ConfigError("only local levels 1 and 2 are supported");
  std::vector<std::vector<Letter>> words_a, words_b;
  std::vector<Letter> prefix;
  party_words(Party::A, s.inputs_a, s.outputs_a, level, prefix, words_a);
  party_words(Party::B, s.inputs_b, s.outputs_b, level, prefix, words_b);
  std::vector<Monomial> basis;
  for (const auto& wa : words_a)
    for (const auto& wb : words_b) {
      std::vector<Letter> w = wa;
      w.insert(w.end(), wb.begin(), wb.end());
      Monomial m = canonicalize(w);
      if (!m.is_zero()) basis.push_back(std::move(m));
    }
  std::sort(basis.begin(), basis.end(), basis_less);
  basis.erase(std::unique(basis.begin(), basis.end()), basis.end());
  return basis;
}

std::optional<int> MomentStructure::class_of(const Monomial& m) const {
  if (m.is_zero()) return kZeroClass;
  const Monomial adj = m.adjoint();
  auto it = lookup_.find(std::min(m, adj));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

namespace {

using Expansion = std::vector<std::pair<Monomial, double>>;

Expansion projector_expansion(Party p, int outcome, int input, int outputs) {
  if (outcome < outputs - 1) {
    const Letter l{p, input, outcome};
    return {{canonicalize(std::span<const Letter>(&l, 1)), 1.0}};
  }
  Expansion e{{Monomial::identity(), 1.0}};
  for (int k = 0; k + 1 < outputs; ++k) {
    const Letter l{p, input, k};
    e.emplace_back(canonicalize(std::span<const Letter>(&l, 1)), -1.0);
  }
  return e;
}

MomentForm to_form(const MomentStructure& m, const Expansion& terms) {
  std::map<int, double> acc;
  for (const auto& [word, coef] : terms) {
    auto c = m.class_of(word);
    if (!c) throw std::logic_error("moment " + word.to_string() + " missing from the moment matrix");
    if (*c == MomentStructure::kZeroClass) continue;
    acc[*c] += coef;
  }
  MomentForm out;
  for (const auto& [c, v] : acc)
    if (v != 0.0) out.emplace_back(c, v);
  return out;
}

}  // namespace

MomentForm MomentStructure::probability_form(int a, int b, int x, int y) const {
  const Expansion ea = projector_expansion(Party::A, a, x, scenario.outputs_a);
  const Expansion eb = projector_expansion(Party::B, b, y, scenario.outputs_b);
  Expansion prod;
  for (const auto& [wa, ca] : ea)
    for (const auto& [wb, cb] : eb) prod.emplace_back(multiply(wa, wb), ca * cb);
  return to_form(*this, prod);
}

MomentForm MomentStructure::marginal_a_form(int a, int x) const {
  return to_form(*this, projector_expansion(Party::A, a, x, scenario.outputs_a));
}

MomentForm MomentStructure::marginal_b_form(int b, int y) const {
  return to_form(*this, projector_expansion(Party::B, b, y, scenario.outputs_b));
}

MomentStructure moment_structure(const BellScenario& s, std::vector<Monomial> basis) {
  if (basis.empty() || !basis.front().is_identity())
    throw ConfigError("moment basis must start with the identity");
  MomentStructure m;
  m.scenario = s;
  m.basis = std::move(basis);
  const std::size_t n = m.basis.size();
  m.entry_class.assign(n, std::vector<int>(n, MomentStructure::kZeroClass));
  m.lookup_[Monomial::identity()] = MomentStructure::kIdentityClass;
  m.classes.push_back(Monomial::identity());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const Monomial w = multiply(m.basis[i].adjoint(), m.basis[j]);
      int c = MomentStructure::kZeroClass;
      if (!w.is_zero()) {
        const Monomial key = std::min(w, w.adjoint());
        auto [it, inserted] = m.lookup_.emplace(key, static_cast<int>(m.classes.size()));
        if (inserted) m.classes.push_back(key);
        c = it->second;
      }
      m.entry_class[i][j] = c;
      m.entry_class[j][i] = c;
    }
  return m;
}

std::string dump(const MomentStructure& m) {
  std::ostringstream os;
  os << "basis " << m.basis.size() << '\n';
  for (std::size_t i = 0; i < m.basis.size(); ++i) os << i << ' ' << m.basis[i].to_string() << '\n';
  os << "classes " << m.classes.size() << '\n';
  for (std::size_t c = 0; c < m.classes.size(); ++c) os << c << ' ' << m.classes[c].to_string() << '\n';
  os << "table\n";
  for (const auto& row : m.entry_class) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) os << ' ';
      os << row[j];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace leakrate
