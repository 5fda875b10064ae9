// Small dense semidefinite programming:
//
//   minimize  <c, x>   subject to  <a_i, x> = b_i,  x in K
//
// where K is a product of dense PSD blocks (real symmetric; complex
// Hermitian data enters through the standard 2x2 real embedding) and one
// optional nonnegative-orthant block. Primal-dual interior point iteration
// with Nesterov-Todd scaling and a Mehrotra predictor-corrector step.

#pragma once

#include <rulab/qlinalg.hpp>

#include <Eigen/Cholesky>

#include <functional>
#include <vector>

namespace rulab::optim {

// ---------------------------------------------------------------------------
// Complex Hermitian <-> real symmetric embedding. E(A + iB) = [[A, -B], [B, A]].
// The embedding doubles traces and inner products: <E(X), E(Y)> = 2 Re<X, Y>.

inline RMat embed_hermitian(const Mat& h) {
  const int n = static_cast<int>(h.rows());
  RMat out(2 * n, 2 * n);
  const RMat re = h.real(), im = h.imag();
  out.topLeftCorner(n, n) = re;
  out.bottomRightCorner(n, n) = re;
  out.topRightCorner(n, n) = -im;
  out.bottomLeftCorner(n, n) = im;
  return out;
}

inline Mat unembed_hermitian(const RMat& s) {
  const int n = static_cast<int>(s.rows()) / 2;
  RMat re = (s.topLeftCorner(n, n) + s.bottomRightCorner(n, n)) / 2.0;
  RMat im = (s.bottomLeftCorner(n, n) - s.topRightCorner(n, n)) / 2.0;
  Mat h = re.cast<Complex>() + Complex(0, 1) * im.cast<Complex>();
  return (h + h.adjoint()) / 2.0;
}

/// Real basis of the d x d Hermitian matrices, d^2 elements:
/// E_kk, then (E_ij + E_ji), then i(E_ij - E_ji) for i < j.
inline std::vector<Mat> hermitian_basis(int d) {
  std::vector<Mat> basis;
  basis.reserve(d * d);
  for (int k = 0; k < d; ++k) {
    Mat m = Mat::Zero(d, d);
    m(k, k) = 1.0;
    basis.push_back(m);
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Mat m = Mat::Zero(d, d);
      m(i, j) = 1.0;
      m(j, i) = 1.0;
      basis.push_back(m);
      Mat a = Mat::Zero(d, d);
      a(i, j) = Complex(0, 1);
      a(j, i) = Complex(0, -1);
      basis.push_back(a);
    }
  return basis;
}

// ---------------------------------------------------------------------------
// Block vectors over the cone structure

struct BlockSpec {
  std::vector<int> dense;  // sizes of real symmetric blocks
  int nonneg = 0;          // size of the nonnegative-orthant block

  int barrier_degree() const {
    int n = nonneg;
    for (int d : dense) n += d;
    return n;
  }
};

struct BlockVec {
  std::vector<RMat> dense;
  RVec nonneg;

  static BlockVec zero(const BlockSpec& spec) {
    BlockVec v;
    for (int d : spec.dense) v.dense.push_back(RMat::Zero(d, d));
    v.nonneg = RVec::Zero(spec.nonneg);
    return v;
  }

  static BlockVec identity(const BlockSpec& spec, double scale = 1.0) {
    BlockVec v;
    for (int d : spec.dense) v.dense.push_back(scale * RMat::Identity(d, d));
    v.nonneg = RVec::Constant(spec.nonneg, scale);
    return v;
  }

  double dot(const BlockVec& o) const {
    double s = 0.0;
    for (size_t k = 0; k < dense.size(); ++k)
      s += (dense[k].array() * o.dense[k].array()).sum();
    if (nonneg.size()) s += nonneg.dot(o.nonneg);
    return s;
  }

  double norm() const { return std::sqrt(std::max(0.0, dot(*this))); }

  BlockVec& axpy(double alpha, const BlockVec& o) {
    for (size_t k = 0; k < dense.size(); ++k) dense[k] += alpha * o.dense[k];
    if (nonneg.size()) nonneg += alpha * o.nonneg;
    return *this;
  }

  BlockVec& scale(double alpha) {
    for (auto& m : dense) m *= alpha;
    nonneg *= alpha;
    return *this;
  }

  void symmetrize() {
    for (auto& m : dense) m = ((m + m.transpose()) / 2.0).eval();
  }
};

// ---------------------------------------------------------------------------
// Problem / solution records

struct SdpProblem {
  BlockSpec blocks;
  BlockVec objective;            // c
  std::vector<BlockVec> constraints;  // a_i
  RVec rhs;                      // b
};

enum class SdpStatus { Optimal, MaxIter, Infeasible };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::MaxIter: return "max_iter";
    default: return "infeasible";
  }
}

struct SdpSolution {
  SdpStatus status = SdpStatus::MaxIter;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = kInf;  // normalized |primal - dual|
  int iterations = 0;
  double primal_residual = kInf;
  double dual_residual = kInf;
  BlockVec x, z;
  RVec y;
};

struct SdpOptions {
  int max_iterations = 200;
  double gap_tol = 1e-9;
  double feas_tol = 1e-9;
  double step_fraction = 0.98;
  // spec bar for reporting a solve as optimal
  double accept_gap = 1e-6;
  double accept_feas = 1e-7;
};

class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Solver internals

namespace detail {

struct NtScaling {
  // per dense block: R with X = R lam R^T, Z = R^{-T} lam R^{-1}, lam diagonal
  std::vector<RMat> r, r_inv;
  std::vector<RVec> lam;
  // nonneg block
  RVec w_sqrt;    // sqrt(x / z)
  RVec lam_diag;  // sqrt(x * z)
};

inline NtScaling compute_scaling(const BlockVec& x, const BlockVec& z) {
  NtScaling s;
  for (size_t k = 0; k < x.dense.size(); ++k) {
    Eigen::LLT<RMat> llt(x.dense[k]);
    if (llt.info() != Eigen::Success) throw SolverError("NT scaling: X not positive definite");
    RMat l = llt.matrixL();
    RMat m = l.transpose() * z.dense[k] * l;
    Eigen::SelfAdjointEigenSolver<RMat> es((m + m.transpose()) / 2.0);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw SolverError("NT scaling: Z not positive definite");
    RVec d4 = es.eigenvalues().array().pow(-0.25);
    RMat r = l * es.eigenvectors() * d4.asDiagonal();
    s.r.push_back(r);
    s.r_inv.push_back(r.inverse());
    s.lam.push_back(es.eigenvalues().cwiseSqrt());
  }
  if (x.nonneg.size()) {
    s.w_sqrt = (x.nonneg.array() / z.nonneg.array()).sqrt().matrix().cwiseSqrt();
    s.lam_diag = (x.nonneg.array() * z.nonneg.array()).sqrt();
  }
  return s;
}

// scaled-space transforms: hat(A) = R^T A R (dense), w .* a (nonneg)
inline BlockVec to_scaled(const NtScaling& s, const BlockVec& v) {
  BlockVec out = v;
  for (size_t k = 0; k < v.dense.size(); ++k)
    out.dense[k] = s.r[k].transpose() * v.dense[k] * s.r[k];
  if (v.nonneg.size())
    out.nonneg = (s.w_sqrt.array().square() * v.nonneg.array()).matrix();
  return out;
}

// dx = R dxhat R^T
inline BlockVec x_from_scaled(const NtScaling& s, const BlockVec& v) {
  BlockVec out = v;
  for (size_t k = 0; k < v.dense.size(); ++k)
    out.dense[k] = s.r[k] * v.dense[k] * s.r[k].transpose();
  if (v.nonneg.size())
    out.nonneg = (s.w_sqrt.array().square() * v.nonneg.array()).matrix();
  return out;
}

// dz = R^{-T} dzhat R^{-1}
inline BlockVec z_from_scaled(const NtScaling& s, const BlockVec& v) {
  BlockVec out = v;
  for (size_t k = 0; k < v.dense.size(); ++k)
    out.dense[k] = s.r_inv[k].transpose() * v.dense[k] * s.r_inv[k];
  if (v.nonneg.size())
    out.nonneg = (v.nonneg.array() / s.w_sqrt.array().square()).matrix();
  return out;
}

/// Largest step alpha with v + alpha dv staying in the cone, capped at 1.
inline double max_step(const BlockVec& v, const BlockVec& dv) {
  double alpha = 1.0;
  for (size_t k = 0; k < v.dense.size(); ++k) {
    Eigen::LLT<RMat> llt(v.dense[k]);
    if (llt.info() != Eigen::Success) throw SolverError("max_step: point left the cone");
    RMat l = llt.matrixL();
    RMat s = l.template triangularView<Eigen::Lower>().solve(dv.dense[k]);
    s = l.template triangularView<Eigen::Lower>().solve(RMat(s.transpose()));
    Eigen::SelfAdjointEigenSolver<RMat> es((s + s.transpose()) / 2.0, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
  }
  for (Eigen::Index i = 0; i < v.nonneg.size(); ++i)
    if (dv.nonneg(i) < 0) alpha = std::min(alpha, -v.nonneg(i) / dv.nonneg(i));
  return alpha;
}

}  // namespace detail

inline SdpSolution solve_sdp(const SdpProblem& p, const SdpOptions& opts = {}) {
  const int m = static_cast<int>(p.constraints.size());
  require(p.rhs.size() == m, "solve_sdp: rhs size must match constraint count");
  for (int d : p.blocks.dense)
    require(d >= 1 && d <= 128, "solve_sdp: dense block sizes must be in 1..128");
  const int nu = p.blocks.barrier_degree();

  // identity-based strictly feasible-cone start
  double c_scale = std::max(1.0, p.objective.norm());
  double b_scale = m ? std::max(1.0, p.rhs.cwiseAbs().maxCoeff()) : 1.0;
  BlockVec x = BlockVec::identity(p.blocks, b_scale);
  BlockVec z = BlockVec::identity(p.blocks, c_scale);
  RVec y = RVec::Zero(m);

  SdpSolution sol;
  sol.x = x;
  sol.z = z;
  sol.y = y;

  RMat normal(m, m);
  std::vector<BlockVec> a_hat(m, BlockVec::zero(p.blocks));

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // residuals
    RVec r_p = p.rhs;
    for (int i = 0; i < m; ++i) r_p(i) -= p.constraints[i].dot(x);
    BlockVec r_d = p.objective;  // c - z - A^T y
    r_d.axpy(-1.0, z);
    for (int i = 0; i < m; ++i) r_d.axpy(-y(i), p.constraints[i]);

    const double mu = x.dot(z) / nu;
    const double pobj = p.objective.dot(x);
    const double dobj = m ? p.rhs.dot(y) : 0.0;
    const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double pres = (m ? r_p.norm() : 0.0) / (1.0 + p.rhs.norm());
    const double dres = r_d.norm() / (1.0 + p.objective.norm());

    sol.iterations = iter;
    sol.primal_value = pobj;
    sol.dual_value = dobj;
    sol.gap = rel_gap;
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.x = x;
    sol.z = z;
    sol.y = y;

    auto classify = [&] {
      sol.status = (sol.gap <= opts.accept_gap && sol.primal_residual <= opts.accept_feas &&
                    sol.dual_residual <= opts.accept_feas)
                       ? SdpStatus::Optimal
                       : SdpStatus::MaxIter;
    };

    if (rel_gap <= opts.gap_tol && pres <= opts.feas_tol && dres <= opts.feas_tol) {
      sol.status = SdpStatus::Optimal;
      return sol;
    }

    // crude infeasibility certificate: a diverging dual improving ray
    if (m && y.norm() > 1e10 * b_scale && dobj > 1e6 * (1 + c_scale)) {
      sol.status = SdpStatus::Infeasible;
      return sol;
    }

    detail::NtScaling sc;
    try {
      sc = detail::compute_scaling(x, z);
    } catch (const SolverError&) {
      classify();
      return sol;
    }
    (void)mu;

    for (int i = 0; i < m; ++i) a_hat[i] = detail::to_scaled(sc, p.constraints[i]);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) normal(i, j) = normal(j, i) = a_hat[i].dot(a_hat[j]);
    // tiny ridge keeps the Cholesky stable when constraints are near-dependent
    for (int i = 0; i < m; ++i) normal(i, i) += 1e-13 * (1.0 + normal(i, i));

    Eigen::LDLT<RMat> ldlt(normal);
    if (ldlt.info() != Eigen::Success) {
      classify();
      return sol;
    }

    BlockVec r_d_hat = detail::to_scaled(sc, r_d);

    // lambda as a block vector (diagonal in scaled space)
    auto lam_vec = [&]() {
      BlockVec l = BlockVec::zero(p.blocks);
      for (size_t k = 0; k < sc.lam.size(); ++k) l.dense[k] = sc.lam[k].asDiagonal();
      l.nonneg = sc.lam_diag;
      return l;
    }();

    auto solve_direction = [&](const BlockVec& v_hat, RVec& dy, BlockVec& dx_hat,
                               BlockVec& dz_hat) {
      RVec rhs(m);
      for (int i = 0; i < m; ++i) rhs(i) = r_p(i) - a_hat[i].dot(v_hat) + a_hat[i].dot(r_d_hat);
      dy = m ? RVec(ldlt.solve(rhs)) : RVec();
      dz_hat = r_d_hat;
      for (int i = 0; i < m; ++i) dz_hat.axpy(-dy(i), a_hat[i]);
      dx_hat = v_hat;
      dx_hat.axpy(-1.0, dz_hat);
    };

    // predictor: sigma = 0, V = L_lam^{-1}(-lam^2) = -lam
    BlockVec v_aff = lam_vec;
    v_aff.scale(-1.0);
    RVec dy_a;
    BlockVec dxh_a, dzh_a;
    solve_direction(v_aff, dy_a, dxh_a, dzh_a);

    BlockVec dx_a = detail::x_from_scaled(sc, dxh_a);
    BlockVec dz_a = detail::z_from_scaled(sc, dzh_a);
    dx_a.symmetrize();
    dz_a.symmetrize();
    double ap_a = detail::max_step(x, dx_a);
    double ad_a = detail::max_step(z, dz_a);

    BlockVec x_aff = x;
    x_aff.axpy(0.99 * ap_a, dx_a);
    BlockVec z_aff = z;
    z_aff.axpy(0.99 * ad_a, dz_a);
    const double mu_aff = x_aff.dot(z_aff) / nu;
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);
    sigma = std::clamp(sigma, 1e-10, 1.0);

    // corrector: V = L_lam^{-1}(sigma mu I - lam^2 - sym(dXhat_a dZhat_a))
    BlockVec v = BlockVec::zero(p.blocks);
    for (size_t k = 0; k < sc.lam.size(); ++k) {
      const RVec& l = sc.lam[k];
      RMat corr = dxh_a.dense[k] * dzh_a.dense[k];
      corr = (corr + corr.transpose()) / 2.0;
      RMat num = -corr;
      num.diagonal().array() += sigma * mu;
      num -= RMat(l.cwiseProduct(l).asDiagonal());
      RMat out(l.size(), l.size());
      for (Eigen::Index i = 0; i < l.size(); ++i)
        for (Eigen::Index j = 0; j < l.size(); ++j) out(i, j) = 2.0 * num(i, j) / (l(i) + l(j));
      v.dense[k] = out;
    }
    if (x.nonneg.size()) {
      v.nonneg = ((sigma * mu - dxh_a.nonneg.array() * dzh_a.nonneg.array() -
                   sc.lam_diag.array().square()) /
                  sc.lam_diag.array())
                     .matrix();
    }

    RVec dy;
    BlockVec dxh, dzh;
    solve_direction(v, dy, dxh, dzh);
    BlockVec dx = detail::x_from_scaled(sc, dxh);
    BlockVec dz = detail::z_from_scaled(sc, dzh);
    dx.symmetrize();
    dz.symmetrize();

    double ap = opts.step_fraction * detail::max_step(x, dx);
    double ad = opts.step_fraction * detail::max_step(z, dz);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    if (ap < 1e-10 && ad < 1e-10) {
      classify();
      return sol;
    }

    x.axpy(ap, dx);
    z.axpy(ad, dz);
    if (m) y += ad * dy;
    x.symmetrize();
    z.symmetrize();
  }

  sol.status = (sol.gap <= opts.accept_gap && sol.primal_residual <= opts.accept_feas &&
                sol.dual_residual <= opts.accept_feas)
                   ? SdpStatus::Optimal
                   : SdpStatus::MaxIter;
  sol.iterations = opts.max_iterations;
  return sol;
}

}  // namespace rulab::optim
