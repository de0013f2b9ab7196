// Infeasible-start primal-dual interior-point method (HKM search direction,
// Mehrotra predictor-corrector) for
//
//   (D)  max b.y   s.t.  Z = C - sum_i y_i A_i >= 0,   E y = e
//   (P)  min <C,X> + e.u   s.t.  A(X) + E^T u = b,   X >= 0
//
// A ConicProblem maps onto (D) with C = F0 and A_i = -F_i; linear
// inequalities become one diagonal block.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include <Eigen/Sparse>

#include "leakrate/errors.hpp"
#include "leakrate/sdp.hpp"

namespace leakrate {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Coef {
  int block;
  int row;
  int col;
  double value;
};

// Per-block matrices; diagonal blocks are stored as n x 1 columns.
using Blocks = std::vector<MatrixXd>;

struct Model {
  int m = 0;
  std::vector<int> dim;
  std::vector<bool> diag;
  Blocks c;
  std::vector<std::vector<Coef>> a;
  std::vector<std::vector<int>> block_vars;
  VectorXd b;
  MatrixXd eq;
  VectorXd eq_rhs;
  std::vector<int> kept_rows;
  int total_dim = 0;
};

MatrixXd zero_block(const Model& md, int k) {
  return md.diag[k] ? MatrixXd::Zero(md.dim[k], 1) : MatrixXd::Zero(md.dim[k], md.dim[k]);
}

Blocks zero_blocks(const Model& md) {
  Blocks out;
  for (std::size_t k = 0; k < md.dim.size(); ++k) out.push_back(zero_block(md, static_cast<int>(k)));
  return out;
}

double inner(const Blocks& x, const Blocks& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k].cwiseProduct(y[k]).sum();
  return s;
}

double frob(const Blocks& x) { return std::sqrt(inner(x, x)); }

void axpy(Blocks& y, double alpha, const Blocks& x) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += alpha * x[k];
}

// <A_i, S> for every variable; S need not be symmetric.
VectorXd apply_a(const Model& md, const Blocks& s) {
  VectorXd out = VectorXd::Zero(md.m);
  for (int i = 0; i < md.m; ++i) {
    double acc = 0.0;
    for (const Coef& e : md.a[i]) {
      const MatrixXd& sk = s[e.block];
      if (md.diag[e.block]) acc += e.value * sk(e.row, 0);
      else if (e.row == e.col) acc += e.value * sk(e.row, e.row);
      else acc += e.value * (sk(e.row, e.col) + sk(e.col, e.row));
    }
    out(i) = acc;
  }
  return out;
}

Blocks apply_at(const Model& md, const VectorXd& y) {
  Blocks out = zero_blocks(md);
  for (int i = 0; i < md.m; ++i) {
    if (y(i) == 0.0) continue;
    for (const Coef& e : md.a[i]) {
      MatrixXd& o = out[e.block];
      const double v = e.value * y(i);
      if (md.diag[e.block]) {
        o(e.row, 0) += v;
      } else {
        o(e.row, e.col) += v;
        if (e.row != e.col) o(e.col, e.row) += v;
      }
    }
  }
  return out;
}

MatrixXd sym(const MatrixXd& g) { return 0.5 * (g + g.transpose()); }

// X G Zinv symmetrized, blockwise; for diagonal blocks the elementwise analogue.
Blocks sym_product(const Model& md, const Blocks& x, const Blocks& g, const Blocks& zinv) {
  Blocks out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (md.diag[k]) out[k] = x[k].cwiseProduct(g[k]).cwiseProduct(zinv[k]);
    else out[k] = sym(x[k] * g[k] * zinv[k]);
  }
  return out;
}

Blocks product(const Model& md, const Blocks& g, const Blocks& h, const Blocks& zinv) {
  Blocks out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (md.diag[k]) out[k] = g[k].cwiseProduct(h[k]).cwiseProduct(zinv[k]);
    else out[k] = sym(g[k] * h[k] * zinv[k]);
  }
  return out;
}

// Largest step alpha with x + alpha*dx still PSD (infinity if unbounded).
double max_step(const Model& md, const Blocks& x, const Blocks& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (md.diag[k]) {
      for (int l = 0; l < x[k].rows(); ++l)
        if (dx[k](l, 0) < 0.0) alpha = std::min(alpha, -x[k](l, 0) / dx[k](l, 0));
      continue;
    }
    Eigen::LLT<MatrixXd> llt(x[k]);
    if (llt.info() != Eigen::Success) return 0.0;
    MatrixXd w = llt.matrixL().solve(dx[k]);
    w = llt.matrixL().solve(w.transpose().eval());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(w), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

bool invert_blocks(const Model& md, const Blocks& z, Blocks& zinv) {
  zinv.resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (md.diag[k]) {
      if ((z[k].array() <= 0.0).any()) return false;
      zinv[k] = z[k].cwiseInverse();
      continue;
    }
    Eigen::LLT<MatrixXd> llt(z[k]);
    if (llt.info() != Eigen::Success) return false;
    zinv[k] = sym(llt.solve(MatrixXd::Identity(md.dim[k], md.dim[k])));
  }
  return true;
}

MatrixXd schur(const Model& md, const Blocks& x, const Blocks& zinv) {
  MatrixXd mat = MatrixXd::Zero(md.m, md.m);
  for (std::size_t k = 0; k < md.dim.size(); ++k) {
    const auto& vars = md.block_vars[k];
    if (md.diag[k]) {
      const VectorXd w = x[k].col(0).cwiseProduct(zinv[k].col(0));
      std::vector<std::vector<std::pair<int, double>>> by_row(md.dim[k]);
      for (int i : vars)
        for (const Coef& e : md.a[i])
          if (e.block == static_cast<int>(k)) by_row[e.row].emplace_back(i, e.value);
      for (int l = 0; l < md.dim[k]; ++l)
        for (const auto& [i, vi] : by_row[l])
          for (const auto& [j, vj] : by_row[l]) mat(i, j) += vi * vj * w(l);
      continue;
    }
    const int n = md.dim[k];
    const MatrixXd& xk = x[k];
    const MatrixXd& zk = zinv[k];
    MatrixXd xa(n, n);
    for (int i : vars) {
      xa.setZero();
      std::vector<int> cols;
      for (const Coef& e : md.a[i]) {
        if (e.block != static_cast<int>(k)) continue;
        xa.col(e.col) += e.value * xk.col(e.row);
        cols.push_back(e.col);
        if (e.row != e.col) {
          xa.col(e.row) += e.value * xk.col(e.col);
          cols.push_back(e.row);
        }
      }
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      MatrixXd g = MatrixXd::Zero(n, n);
      for (int c : cols) g.noalias() += xa.col(c) * zk.row(c);
      for (int j : vars) {
        if (j < i) continue;
        double acc = 0.0;
        for (const Coef& e : md.a[j]) {
          if (e.block != static_cast<int>(k)) continue;
          acc += e.row == e.col ? e.value * g(e.row, e.row) : e.value * (g(e.row, e.col) + g(e.col, e.row));
        }
        mat(i, j) += acc;
        if (j != i) mat(j, i) += acc;
      }
    }
  }
  return mat;
}

// Solves [[M, E^T], [E, 0]] [dy; du] = [r1; r2] through the Schur
// complement of M, with Jacobi scaling of M.
class NewtonSystem {
 public:
  bool factor(const MatrixXd& m, const MatrixXd& e) {
    const int n = static_cast<int>(m.rows());
    m_ = m;
    scale_ = VectorXd::Ones(n);
    for (int i = 0; i < n; ++i)
      if (m(i, i) > 0.0) scale_(i) = 1.0 / std::sqrt(m(i, i));
    MatrixXd ms = scale_.asDiagonal() * m * scale_.asDiagonal();
    llt_.compute(ms);
    use_ldlt_ = llt_.info() != Eigen::Success;
    if (use_ldlt_) {
      ms.diagonal().array() += 1e-13;
      ldlt_.compute(ms);
      if (ldlt_.info() != Eigen::Success) return false;
    }
    e_ = e;
    if (e.rows() > 0) {
      minv_et_ = solve_m(e.transpose());
      MatrixXd s = e * minv_et_;
      s = sym(s);
      s_ldlt_.compute(s);
      if (s_ldlt_.info() != Eigen::Success) return false;
    }
    return true;
  }

  // Two rounds of iterative refinement against the unscaled system; near the
  // optimum M is badly conditioned and one solve drifts off A(X) = b.
  void solve(const VectorXd& r1, const VectorXd& r2, VectorXd& dy, VectorXd& du) const {
    solve_once(r1, r2, dy, du);
    for (int round = 0; round < 2; ++round) {
      VectorXd res1 = r1 - m_ * dy;
      VectorXd res2;
      if (e_.rows() > 0) {
        res1 -= e_.transpose() * du;
        res2 = r2 - e_ * dy;
      }
      VectorXd ddy, ddu;
      solve_once(res1, res2, ddy, ddu);
      dy += ddy;
      if (e_.rows() > 0) du += ddu;
    }
  }

 private:
  void solve_once(const VectorXd& r1, const VectorXd& r2, VectorXd& dy, VectorXd& du) const {
    const VectorXd base = solve_m(r1);
    if (e_.rows() == 0) {
      dy = base;
      du.resize(0);
      return;
    }
    du = s_ldlt_.solve(e_ * base - r2);
    dy = base - minv_et_ * du;
  }

  MatrixXd solve_m(const MatrixXd& rhs) const {
    MatrixXd scaled = scale_.asDiagonal() * rhs;
    MatrixXd sol = use_ldlt_ ? MatrixXd(ldlt_.solve(scaled)) : MatrixXd(llt_.solve(scaled));
    return scale_.asDiagonal() * sol;
  }

  MatrixXd m_;
  VectorXd scale_;
  Eigen::LLT<MatrixXd> llt_;
  Eigen::LDLT<MatrixXd> ldlt_;
  bool use_ldlt_ = false;
  MatrixXd e_;
  MatrixXd minv_et_;
  Eigen::LDLT<MatrixXd> s_ldlt_;
};

Model build_model(const ConicProblem& p) {
  Model md;
  md.m = p.num_vars;
  md.a.assign(md.m, {});
  md.b = VectorXd::Zero(md.m);
  for (const auto& [v, c] : p.objective) md.b(v) += c;
  md.block_vars.resize(p.blocks.size());
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    const PsdBlock& blk = p.blocks[k];
    md.dim.push_back(blk.size);
    md.diag.push_back(blk.diagonal);
    md.total_dim += blk.size;
    MatrixXd ck = blk.diagonal ? MatrixXd::Zero(blk.size, 1) : MatrixXd::Zero(blk.size, blk.size);
    for (const BlockEntry& e : blk.entries) {
      if (e.var == kConstantTerm) {
        if (blk.diagonal) {
          ck(e.row, 0) += e.value;
        } else {
          ck(e.row, e.col) += e.value;
          if (e.row != e.col) ck(e.col, e.row) += e.value;
        }
      } else {
        md.a[e.var].push_back(Coef{static_cast<int>(k), e.row, e.col, -e.value});
        md.block_vars[k].push_back(e.var);
      }
    }
    auto& bv = md.block_vars[k];
    std::sort(bv.begin(), bv.end());
    bv.erase(std::unique(bv.begin(), bv.end()), bv.end());
    md.c.push_back(std::move(ck));
  }
  return md;
}

// Keeps a maximal independent subset of equality rows; returns false if the
// dropped rows are inconsistent with the kept ones.
bool reduce_equalities(const ConicProblem& p, Model& md) {
  const int rows = static_cast<int>(p.equalities.size());
  md.eq.resize(0, md.m);
  md.eq_rhs.resize(0);
  if (rows == 0) return true;
  MatrixXd full = MatrixXd::Zero(rows, md.m);
  VectorXd rhs(rows);
  for (int l = 0; l < rows; ++l) {
    for (const auto& [v, c] : p.equalities[l].coeffs) full(l, v) += c;
    rhs(l) = p.equalities[l].rhs;
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(full.transpose());
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  std::vector<int> kept;
  for (int r = 0; r < rank; ++r) kept.push_back(qr.colsPermutation().indices()(r));
  std::sort(kept.begin(), kept.end());
  md.kept_rows = kept;
  md.eq.resize(rank, md.m);
  md.eq_rhs.resize(rank);
  for (int r = 0; r < rank; ++r) {
    md.eq.row(r) = full.row(kept[r]);
    md.eq_rhs(r) = rhs(kept[r]);
  }
  if (rank == rows) return true;
  const VectorXd y0 = md.eq.transpose() * (md.eq * md.eq.transpose()).ldlt().solve(md.eq_rhs);
  const double mismatch = (full * y0 - rhs).cwiseAbs().maxCoeff();
  return mismatch <= 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff());
}

// Equalities are removed by writing y = y0 + N w with N an orthonormal basis
// of ker E; the reduced problem has conic constraints only.
struct Reduction {
  bool active = false;
  VectorXd y0;
  MatrixXd null;
  MatrixXd eq;
  VectorXd eq_rhs;
  VectorXd b_full;
  double offset = 0.0;
};

Reduction eliminate_equalities(Model& md) {
  Reduction red;
  if (md.eq.rows() == 0) return red;
  red.active = true;
  red.eq = md.eq;
  red.eq_rhs = md.eq_rhs;
  red.b_full = md.b;
  const int m = md.m;
  const int r = static_cast<int>(md.eq.rows());
  Eigen::HouseholderQR<MatrixXd> qr(md.eq.transpose());
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(m, m);
  const MatrixXd rt = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  // E = R^T Q1^T, so y0 = Q1 R^{-T} e.
  const VectorXd t = rt.transpose().triangularView<Eigen::Lower>().solve(md.eq_rhs);
  red.y0 = q.leftCols(r) * t;
  red.null = q.rightCols(m - r);
  red.offset = md.b.dot(red.y0);

  Blocks shift = zero_blocks(md);
  for (int i = 0; i < m; ++i) {
    if (red.y0(i) == 0.0) continue;
    for (const Coef& e : md.a[i]) {
      MatrixXd& s = shift[e.block];
      if (md.diag[e.block]) {
        s(e.row, 0) += e.value * red.y0(i);
      } else {
        s(e.row, e.col) += e.value * red.y0(i);
        if (e.row != e.col) s(e.col, e.row) += e.value * red.y0(i);
      }
    }
  }
  axpy(md.c, -1.0, shift);

  const int mr = m - r;
  std::vector<std::vector<Coef>> reduced(mr);
  std::vector<std::vector<int>> block_vars(md.dim.size());
  double scale = 0.0;
  for (const auto& coefs : md.a)
    for (const Coef& e : coefs) scale = std::max(scale, std::abs(e.value));
  const double drop = 1e-15 * std::max(1.0, scale);
  for (std::size_t k = 0; k < md.dim.size(); ++k) {
    const int n = md.dim[k];
    const bool dg = md.diag[k];
    // Column per new variable over the upper-triangle entries of block k.
    const int len = dg ? n : n * (n + 1) / 2;
    auto slot = [&](int row, int col) { return dg ? row : col * (col + 1) / 2 + row; };
    Eigen::SparseMatrix<double> a_block(len, m);
    std::vector<Eigen::Triplet<double>> trip;
    for (int i : md.block_vars[k])
      for (const Coef& e : md.a[i])
        if (e.block == static_cast<int>(k)) trip.emplace_back(slot(e.row, e.col), i, e.value);
    a_block.setFromTriplets(trip.begin(), trip.end());
    const MatrixXd combined = a_block * red.null;
    for (int j = 0; j < mr; ++j) {
      bool used = false;
      for (int col = 0; col < (dg ? 1 : n); ++col)
        for (int row = 0; row < (dg ? n : col + 1); ++row) {
          const int idx = dg ? row : slot(row, col);
          const double v = combined(idx, j);
          if (std::abs(v) <= drop) continue;
          reduced[j].push_back(Coef{static_cast<int>(k), row, dg ? row : col, v});
          used = true;
        }
      if (used) block_vars[k].push_back(j);
    }
  }
  md.a = std::move(reduced);
  md.block_vars = std::move(block_vars);
  md.b = red.null.transpose() * md.b;
  md.m = mr;
  md.eq.resize(0, mr);
  md.eq_rhs.resize(0);
  return red;
}

struct Iterate {
  Blocks x, z;
  VectorXd y, u;
};

// Moves X towards A(X) = b along X S X, damped so that X stays positive
// definite. Returns the remaining residual (infinity if the system is
// singular).
double repair_dual(const Model& md, Blocks& x) {
  const double target = 1e-12 * (1.0 + md.b.lpNorm<Eigen::Infinity>());
  double left = (md.b - apply_a(md, x)).lpNorm<Eigen::Infinity>();
  for (int pass = 0; pass < 12 && left > target; ++pass) {
    const VectorXd r = md.b - apply_a(md, x);
    NewtonSystem sys;
    if (!sys.factor(schur(md, x, x), MatrixXd(0, md.m))) return std::numeric_limits<double>::infinity();
    VectorXd w, unused;
    sys.solve(r, VectorXd(0), w, unused);
    const Blocks s = apply_at(md, w);
    Blocks dx = x;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (md.diag[k]) dx[k] = x[k].cwiseProduct(s[k]).cwiseProduct(x[k]);
      else dx[k] = sym(x[k] * s[k] * x[k]);
    }
    const double step = std::min(1.0, 0.95 * max_step(md, x, dx));
    if (!(step > 1e-6)) break;
    axpy(x, step, dx);
    left = (md.b - apply_a(md, x)).lpNorm<Eigen::Infinity>();
  }
  return left;
}

double trace(const Model& md, const Blocks& x) {
  double t = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) t += md.diag[k] ? x[k].sum() : x[k].trace();
  return t;
}

struct Measures {
  double pobj = 0, dobj = 0, pinf = 0, dinf = 0, gap = 0, mu = 0;
  double merit() const { return std::max({pinf, dinf, gap}); }
};

Measures measure(const Model& md, const Iterate& it, Blocks& rd, VectorXd& rp, VectorXd& re) {
  Measures ms;
  const double norm_b = md.b.norm();
  const double norm_c = frob(md.c);
  rd = md.c;
  axpy(rd, -1.0, it.z);
  axpy(rd, -1.0, apply_at(md, it.y));
  rp = md.b - apply_a(md, it.x);
  if (md.eq.rows() > 0) {
    rp -= md.eq.transpose() * it.u;
    re = md.eq_rhs - md.eq * it.y;
  } else {
    re.resize(0);
  }
  ms.pobj = inner(md.c, it.x) + (md.eq.rows() > 0 ? md.eq_rhs.dot(it.u) : 0.0);
  ms.dobj = md.b.dot(it.y);
  ms.mu = inner(it.x, it.z) / std::max(1, md.total_dim);
  ms.pinf = rp.norm() / (1.0 + norm_b);
  ms.dinf = frob(rd) / (1.0 + norm_c);
  if (re.size() > 0) ms.dinf = std::max(ms.dinf, re.norm() / (1.0 + md.eq_rhs.norm()));
  ms.gap = std::abs(ms.pobj - ms.dobj) / (1.0 + std::abs(ms.pobj) + std::abs(ms.dobj));
  return ms;
}

Solution package(const ConicProblem& original, const ConicProblem& p, const Model& md, const Iterate& it,
                 const Measures& ms) {
  Solution s;
  s.engine = "embedded";
  s.primal.assign(it.y.data(), it.y.data() + it.y.size());
  const std::size_t nblocks = original.blocks.size();
  for (std::size_t k = 0; k < nblocks; ++k) {
    if (md.diag[k]) s.block_duals.push_back(MatrixXd(it.x[k].col(0).asDiagonal()));
    else s.block_duals.push_back(it.x[k]);
  }
  if (!original.inequalities.empty()) {
    const MatrixXd& slack = it.x[p.blocks.size() - 1];
    s.ineq_duals.assign(slack.data(), slack.data() + slack.rows());
  }
  s.eq_duals.assign(original.equalities.size(), 0.0);
  for (std::size_t r = 0; r < md.kept_rows.size(); ++r) s.eq_duals[md.kept_rows[r]] = it.u(static_cast<int>(r));
  s.objective_value = ms.dobj + original.objective_constant;
  s.dual_objective = ms.pobj + original.objective_constant;
  s.duality_gap = ms.pobj - ms.dobj;
  s.primal_infeasibility = ms.dinf;
  s.dual_infeasibility = ms.pinf;
  return s;
}


// Dual point with the smallest certified value among everything offered.
class CertificateTracker {
 public:
  explicit CertificateTracker(const Model& md) : md_(md) {}

  void offer(const Blocks& x) {
    Blocks fixed = x;
    const double left = repair_dual(md_, fixed);
    // The certificate charges leftover residuals against the variable bounds;
    // keep them well inside its tolerance.
    if (!(left <= 1e-3 * kDefaultCertificateTolerance)) return;
    const double score = inner(md_.c, fixed) + kDefaultCertificateTolerance * (1.0 + trace(md_, fixed)) +
                         left * static_cast<double>(md_.m);
    if (std::isfinite(score) && score < score_) {
      score_ = score;
      best_ = std::move(fixed);
    }
  }

  const std::optional<Blocks>& best() const { return best_; }

 private:
  const Model& md_;
  std::optional<Blocks> best_;
  double score_ = std::numeric_limits<double>::infinity();
};

struct RunResult {
  Iterate final_iterate;
  Iterate best;
  Measures best_ms;
  int iterations = 0;
  bool converged = false;
  bool infeasible = false;
  bool unbounded = false;
  std::string stop_reason = "iteration limit reached";
};

Iterate initial_point(const Model& md) {
  Iterate it;
  it.y = VectorXd::Zero(md.m);
  it.u = VectorXd::Zero(md.eq.rows());
  for (std::size_t k = 0; k < md.dim.size(); ++k) {
    const double n = md.dim[k];
    double amax = 0.0, ratio = 0.0;
    for (int i : md.block_vars[k]) {
      double nrm = 0.0;
      for (const Coef& e : md.a[i])
        if (e.block == static_cast<int>(k)) nrm += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
      nrm = std::sqrt(nrm);
      amax = std::max(amax, nrm);
      ratio = std::max(ratio, (1.0 + std::abs(md.b(i))) / (1.0 + nrm));
    }
    const double xi = std::max({10.0, std::sqrt(n), n * ratio});
    const double eta = std::max({10.0, std::sqrt(n), amax, md.c[k].norm()});
    if (md.diag[k]) {
      it.x.push_back(MatrixXd::Constant(md.dim[k], 1, xi));
      it.z.push_back(MatrixXd::Constant(md.dim[k], 1, eta));
    } else {
      it.x.push_back(xi * MatrixXd::Identity(md.dim[k], md.dim[k]));
      it.z.push_back(eta * MatrixXd::Identity(md.dim[k], md.dim[k]));
    }
  }
  return it;
}

RunResult run_ipm(const Model& md, const SolverOptions& opts, CertificateTracker& tracker) {
  RunResult res;
  Iterate it = initial_point(md);
  Blocks rd, zinv;
  VectorXd rp, re;
  res.best = it;
  res.best_ms.pinf = res.best_ms.dinf = res.best_ms.gap = std::numeric_limits<double>::infinity();
  int stalled = 0;
  int iter = 0;

  for (; iter < opts.max_iterations; ++iter) {
    const Measures ms = measure(md, it, rd, rp, re);
    if (opts.verbose)
      std::fprintf(stderr, "%3d pobj %+.10e dobj %+.10e pinf %.2e dinf %.2e gap %.2e mu %.2e\n", iter, ms.pobj,
                   ms.dobj, ms.pinf, ms.dinf, ms.gap, ms.mu);
    if (std::isfinite(ms.merit()) && ms.merit() <= res.best_ms.merit()) {
      res.best = it;
      res.best_ms = ms;
    }
    if (ms.pinf < 1e-3 && ms.gap < 1e-3) tracker.offer(it.x);
    if (ms.pinf < opts.tol && ms.dinf < opts.tol && ms.gap < opts.tol) {
      res.converged = true;
      break;
    }
    // Ray tests: an improving primal ray of (P) certifies infeasibility of
    // (D); an improving ray of (D) means it is unbounded.
    const double ray_p = -(ms.pobj);
    if (ray_p > 0.0) {
      VectorXd ax = apply_a(md, it.x);
      if (md.eq.rows() > 0) ax += md.eq.transpose() * it.u;
      if (ax.norm() / ray_p < 1e-8 && frob(it.x) > 1e6) {
        res.infeasible = true;
        res.stop_reason = "primal ray found: constraints are infeasible";
        break;
      }
    }
    if (ms.dobj > 0.0) {
      Blocks aty = apply_at(md, it.y);
      axpy(aty, 1.0, it.z);
      double r = frob(aty);
      if (md.eq.rows() > 0) r = std::max(r, (md.eq * it.y).norm());
      if (r / ms.dobj < 1e-8 && it.y.norm() > 1e6) {
        res.unbounded = true;
        res.stop_reason = "dual ray found: objective is unbounded";
        break;
      }
    }

    if (!invert_blocks(md, it.z, zinv)) {
      res.stop_reason = "slack matrix lost definiteness";
      break;
    }
    NewtonSystem sys;
    if (!sys.factor(schur(md, it.x, zinv), md.eq)) {
      res.stop_reason = "Schur complement factorization failed";
      break;
    }

    const VectorXd a_zinv = apply_a(md, zinv);
    const Blocks x_rd = sym_product(md, it.x, rd, zinv);
    const VectorXd base_rhs = md.b - (md.eq.rows() > 0 ? VectorXd(md.eq.transpose() * it.u) : VectorXd::Zero(md.m)) +
                              apply_a(md, x_rd);

    auto direction = [&](double sigma, const Blocks* corr, VectorXd& dy, VectorXd& du, Blocks& dx, Blocks& dz) {
      VectorXd rhs = base_rhs - sigma * ms.mu * a_zinv;
      if (corr) rhs += apply_a(md, *corr);
      sys.solve(rhs, re, dy, du);
      dz = rd;
      axpy(dz, -1.0, apply_at(md, dy));
      dx = sym_product(md, it.x, dz, zinv);
      for (std::size_t k = 0; k < dx.size(); ++k) dx[k] = sigma * ms.mu * zinv[k] - it.x[k] - dx[k];
      if (corr) axpy(dx, -1.0, *corr);
    };

    VectorXd dy, du;
    Blocks dx, dz;
    direction(0.0, nullptr, dy, du, dx, dz);
    const double ap_aff = std::min(1.0, max_step(md, it.x, dx));
    const double ad_aff = std::min(1.0, max_step(md, it.z, dz));
    Blocks xa = it.x, za = it.z;
    axpy(xa, ap_aff, dx);
    axpy(za, ad_aff, dz);
    const double ratio = std::max(0.0, inner(xa, za)) / std::max(inner(it.x, it.z), 1e-300);
    const double expon = std::max(1.0, 3.0 * std::pow(std::min(ap_aff, ad_aff), 2));
    const double sigma = std::clamp(std::pow(ratio, expon), 0.0, 1.0);

    const Blocks corr = product(md, dx, dz, zinv);
    direction(sigma, &corr, dy, du, dx, dz);
    const double gamma = 0.9 + 0.09 * std::min(ap_aff, ad_aff);
    const double ap = std::min(1.0, gamma * max_step(md, it.x, dx));
    const double ad = std::min(1.0, gamma * max_step(md, it.z, dz));
    if (!(ap > 0.0) || !(ad > 0.0) || !std::isfinite(ap) || !std::isfinite(ad)) {
      res.stop_reason = "zero step length";
      break;
    }
    axpy(it.x, ap, dx);
    if (du.size() > 0) it.u += ap * du;
    axpy(it.z, ad, dz);
    it.y += ad * dy;

    stalled = std::max(ap, ad) < 1e-8 ? stalled + 1 : 0;
    if (stalled >= 3) {
      res.stop_reason = "step lengths stalled";
      break;
    }
  }
  res.iterations = iter;
  res.final_iterate = it;
  return res;
}

// Same data with C shifted by rho I: its (P) side trades objective against
// trace, which is what the certificate pays for.
Model trace_regularized(const Model& md, double rho) {
  Model out = md;
  for (std::size_t k = 0; k < out.c.size(); ++k) {
    if (out.diag[k]) out.c[k].array() += rho;
    else out.c[k].diagonal().array() += rho;
  }
  return out;
}

}  // namespace

Solution solve_embedded(const ConicProblem& original_in, const SolverOptions& opts) {
  const ConicProblem original = normalized(original_in);
  const ConicProblem p = with_inequalities_as_slack_block(original);
  for (const auto& b : p.blocks)
    if (!b.diagonal && b.size > 64) throw SolverError("embedded solver supports dense blocks up to 64");

  Model md = build_model(p);
  Solution fail;
  fail.engine = "embedded";
  if (!reduce_equalities(p, md)) {
    fail.status = SolveStatus::Infeasible;
    fail.diagnostic = "inconsistent equality constraints";
    return fail;
  }
  if (md.dim.empty()) {
    fail.status = SolveStatus::Failed;
    fail.diagnostic = "problem has no conic blocks";
    return fail;
  }
  const Model full = md;
  const Reduction red = eliminate_equalities(md);

  CertificateTracker tracker(md);
  const RunResult run = run_ipm(md, opts, tracker);
  if (!run.infeasible) {
    tracker.offer(run.final_iterate.x);
    // The central path ends in the middle of the optimal dual face, which can
    // carry a large trace; a second run on the shifted problem finds a
    // cheaper certificate.
    SolverOptions quiet = opts;
    quiet.verbose = false;
    const RunResult shifted = run_ipm(trace_regularized(md, kDefaultCertificateTolerance), quiet, tracker);
    tracker.offer(shifted.final_iterate.x);
  }

  SolveStatus status;
  const Iterate* primal = &run.final_iterate;
  std::string why = run.stop_reason;
  if (run.converged) {
    status = SolveStatus::Optimal;
    why.clear();
  } else if (run.infeasible) {
    status = SolveStatus::Infeasible;
  } else if (run.unbounded) {
    status = SolveStatus::Failed;
  } else {
    const double loose = std::max(1e-6, std::sqrt(opts.tol) * 0.1);
    status = run.best_ms.merit() <= loose ? SolveStatus::Inaccurate : SolveStatus::Failed;
    primal = &run.best;
  }

  Iterate chosen = *primal;
  if (status != SolveStatus::Infeasible && tracker.best()) chosen.x = *tracker.best();
  // Back to the original variables: y = y0 + N w, and u from E^T u = b - A(X)
  // in the least-squares sense.
  if (red.active) {
    chosen.y = red.y0 + red.null * chosen.y;
    const VectorXd rest = full.b - apply_a(full, chosen.x);
    chosen.u = (red.eq * red.eq.transpose()).ldlt().solve(red.eq * rest);
  }
  Blocks rd;
  VectorXd rp, re;
  const Measures ms = measure(full, chosen, rd, rp, re);
  Solution s = package(original, p, full, chosen, ms);
  s.status = status;
  s.diagnostic = why;
  s.iterations = run.iterations;
  return s;
}

}  // namespace leakrate
