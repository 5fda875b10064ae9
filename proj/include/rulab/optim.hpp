// Optimization kernels on top of the SDP solver: max-relative entropy of
// magic (vertex primal + dual certificate), stabilizer extent by complex L1
// basis pursuit, the diamond-norm SDP, and the multi-restart local searcher
// used by the dynamics and search modules.

#pragma once

#include <rulab/sdp.hpp>
#include <rulab/stab.hpp>

#include <atomic>
#include <cstdlib>
#include <functional>
#include <optional>
#include <ostream>
#include <thread>

namespace rulab::optim {

// ---------------------------------------------------------------------------
// Plain-text dump of an SDP instance (debugging aid).
// Header: "rulab-sdp <num_dense> <dense sizes...> <nonneg size> <m>"
// then one "c"/"a <i>"/"b" section per datum with triplet lines
// "<block> <row> <col> <value>" (block -1 is the nonneg block, col ignored).

inline void dump_sdp(const SdpProblem& p, std::ostream& os) {
  os << "rulab-sdp " << p.blocks.dense.size();
  for (int d : p.blocks.dense) os << ' ' << d;
  os << ' ' << p.blocks.nonneg << ' ' << p.constraints.size() << '\n';
  auto dump_vec = [&os](const BlockVec& v) {
    for (size_t k = 0; k < v.dense.size(); ++k)
      for (int i = 0; i < v.dense[k].rows(); ++i)
        for (int j = 0; j < v.dense[k].cols(); ++j)
          if (v.dense[k](i, j) != 0.0)
            os << k << ' ' << i << ' ' << j << ' ' << v.dense[k](i, j) << '\n';
    for (Eigen::Index i = 0; i < v.nonneg.size(); ++i)
      if (v.nonneg(i) != 0.0) os << -1 << ' ' << i << " 0 " << v.nonneg(i) << '\n';
  };
  os << "c\n";
  dump_vec(p.objective);
  for (size_t i = 0; i < p.constraints.size(); ++i) {
    os << "a " << i << '\n';
    dump_vec(p.constraints[i]);
  }
  os << "b\n";
  for (Eigen::Index i = 0; i < p.rhs.size(); ++i) os << i << ' ' << p.rhs(i) << '\n';
}

// ---------------------------------------------------------------------------
// Max-relative entropy of magic, D_max(rho) = min { log2 t : rho <= t sigma,
// sigma in STAB }. Solved over the enumerated vertex set: the primal below
// searches mixtures sum_k w_k |phi_k><phi_k| >= rho with minimal total weight.

struct DmaxResult {
  double value = 0.0;        // log2(primal weight)
  double dual_value = 0.0;   // log2(tr(rho Y)) for the dual certificate Y
  double gap = 0.0;          // primal/dual agreement on the log scale
  SdpSolution solution;
};

inline DmaxResult dmax(const DensityMatrix& rho, const stab::StabilizerStateSet& dict) {
  require(rho.dim() == dict.dim(), "dmax: state and dictionary dimensions differ");
  const int d = rho.dim();
  const int n_vert = dict.size();
  const std::vector<Mat> basis = hermitian_basis(d);

  SdpProblem p;
  p.blocks.dense = {2 * d};  // slack Q = sum w phi - rho, embedded
  p.blocks.nonneg = n_vert;
  p.objective = BlockVec::zero(p.blocks);
  p.objective.nonneg.setOnes();

  p.rhs.resize(basis.size());
  for (size_t i = 0; i < basis.size(); ++i) {
    BlockVec a = BlockVec::zero(p.blocks);
    a.dense[0] = -embed_hermitian(basis[i]) / 2.0;
    for (int k = 0; k < n_vert; ++k)
      a.nonneg(k) = (basis[i].adjoint() * dict.states[k] * dict.states[k].adjoint())
                        .trace().real();
    p.constraints.push_back(std::move(a));
    p.rhs(i) = (basis[i].adjoint() * rho.matrix()).trace().real();
  }

  SdpSolution sol = solve_sdp(p);
  if (sol.status != SdpStatus::Optimal)
    throw SolverError(std::string("dmax SDP did not converge: status ") +
                      to_string(sol.status) + ", gap " + std::to_string(sol.gap));

  DmaxResult out;
  out.solution = sol;
  out.value = std::log2(std::max(sol.primal_value, 1e-300));
  out.dual_value = std::log2(std::max(sol.dual_value, 1e-300));
  out.gap = std::abs(out.value - out.dual_value);
  out.value = std::max(0.0, out.value);
  out.dual_value = std::max(0.0, out.dual_value);
  return out;
}

/// The dual program solved independently: max log2 tr(rho X) over X >= 0
/// with tr(phi_k X) <= 1 on every dictionary vertex.
inline DmaxResult dmax_dual_program(const DensityMatrix& rho,
                                    const stab::StabilizerStateSet& dict) {
  require(rho.dim() == dict.dim(), "dmax dual: state and dictionary dimensions differ");
  const int d = rho.dim();
  const int n_vert = dict.size();

  SdpProblem p;
  p.blocks.dense = {2 * d};  // X embedded
  p.blocks.nonneg = n_vert;  // slacks of tr(phi_k X) <= 1
  p.objective = BlockVec::zero(p.blocks);
  p.objective.dense[0] = -embed_hermitian(rho.matrix()) / 2.0;  // maximize tr(rho X)

  p.rhs = RVec::Ones(n_vert);
  for (int k = 0; k < n_vert; ++k) {
    BlockVec a = BlockVec::zero(p.blocks);
    a.dense[0] = embed_hermitian(Mat(dict.states[k] * dict.states[k].adjoint())) / 2.0;
    a.nonneg(k) = 1.0;
    p.constraints.push_back(std::move(a));
  }

  SdpSolution sol = solve_sdp(p);
  if (sol.status != SdpStatus::Optimal)
    throw SolverError(std::string("dmax dual SDP did not converge: status ") +
                      to_string(sol.status));
  DmaxResult out;
  out.solution = sol;
  out.value = std::log2(std::max(-sol.primal_value, 1e-300));
  out.dual_value = std::log2(std::max(-sol.dual_value, 1e-300));
  out.gap = std::abs(out.value - out.dual_value);
  out.value = std::max(0.0, out.value);
  return out;
}

// ---------------------------------------------------------------------------
// Stabilizer extent: xi(psi) = min (sum_i |c_i|)^2 over decompositions
// psi = sum_i c_i phi_i. Complex L1 basis pursuit by ADMM with over-relaxation
// and a dual certificate for the stopping rule.

struct ExtentResult {
  double extent = 1.0;     // (sum |c_i|)^2
  double l1 = 1.0;         // sum |c_i|
  double gap = 0.0;        // primal - dual certificate value
  int iterations = 0;
  bool converged = false;
  double feasibility = 0.0;  // || Phi c - psi ||_2
  Vec coefficients;
};

inline ExtentResult stabilizer_extent(const PureState& psi,
                                      const stab::StabilizerStateSet& dict,
                                      double gap_tol = 1e-7, int max_iters = 200000) {
  require(psi.dim() == dict.dim(), "stabilizer_extent: dimension mismatch");
  const int d = psi.dim();
  const int n = dict.size();

  Mat phi(d, n);
  for (int k = 0; k < n; ++k) phi.col(k) = dict.states[k];
  const Mat gram = phi * phi.adjoint();  // d x d, full rank
  Eigen::LLT<Mat> llt(gram);

  const Vec target = psi.amplitudes();
  auto project_affine = [&](const Vec& v) -> Vec {
    return v - phi.adjoint() * llt.solve(phi * v - target);
  };

  const double rho_admm = 1.0, relax = 1.7;
  Vec z = project_affine(Vec::Zero(n));
  Vec u = Vec::Zero(n);
  Vec c = z;

  ExtentResult out;
  auto soft = [&](const Vec& w, double kappa) {
    Vec r(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double a = std::abs(w(i));
      r(i) = (a <= kappa) ? Complex(0, 0) : w(i) * (1.0 - kappa / a);
    }
    return r;
  };

  int it = 0;
  for (; it < max_iters; ++it) {
    c = project_affine(z - u);
    Vec c_rel = relax * c + (1.0 - relax) * z;
    z = soft(c_rel + u, 1.0 / rho_admm);
    u += c_rel - z;

    if (it % 25 == 0 || it == max_iters - 1) {
      const double primal = c.cwiseAbs().sum();
      // dual candidate from the scaled multiplier: u in range(Phi^dagger)
      Vec y = rho_admm * llt.solve(phi * u);
      const double inf_norm = (phi.adjoint() * y).cwiseAbs().maxCoeff();
      if (inf_norm > 1.0) y /= inf_norm;
      const double dual = (target.adjoint() * y)(0, 0).real();
      out.gap = primal - dual;
      if (out.gap <= gap_tol && out.gap >= -1e-9) {
        out.converged = true;
        ++it;
        break;
      }
    }
  }

  out.iterations = it;
  out.l1 = c.cwiseAbs().sum();
  out.extent = out.l1 * out.l1;
  out.feasibility = (phi * c - target).norm();
  out.coefficients = c;
  return out;
}

// ---------------------------------------------------------------------------
// Choi matrices and the diamond norm
//
// Convention: J(Phi) = sum_ij E_ij (x) Phi(E_ij) on H_A (x) H_B, so a channel
// has tr_B J = I_A and J/d_A is the normalized Choi state.

inline Mat choi_of_channel(const std::function<Mat(const Mat&)>& channel, int d_in) {
  Mat e = Mat::Zero(d_in, d_in);
  Mat first = channel(e);  // probe output dimension with the zero matrix
  const int d_out = static_cast<int>(first.rows());
  Mat j = Mat::Zero(d_in * d_out, d_in * d_out);
  for (int i = 0; i < d_in; ++i)
    for (int k = 0; k < d_in; ++k) {
      Mat eik = Mat::Zero(d_in, d_in);
      eik(i, k) = 1.0;
      Mat out = channel(eik);
      for (int r = 0; r < d_out; ++r)
        for (int s = 0; s < d_out; ++s) j(i * d_out + r, k * d_out + s) = out(r, s);
    }
  return j;
}

inline Mat choi_of_unitary(const Mat& u) {
  return choi_of_channel([&u](const Mat& x) { return Mat(u * x * u.adjoint()); },
                         static_cast<int>(u.rows()));
}

/// Apply the map with Choi matrix j to input x: Phi(X) = tr_A[(X^T (x) I_B) J].
inline Mat apply_choi(const Mat& j, const Mat& x, int d_in, int d_out) {
  Mat out = Mat::Zero(d_out, d_out);
  for (int i = 0; i < d_in; ++i)
    for (int k = 0; k < d_in; ++k)
      out += x(i, k) * j.block(i * d_out, k * d_out, d_out, d_out);
  return out;
}

struct DiamondResult {
  double value = 0.0;
  double gap = 0.0;
  SdpSolution solution;
  double lower_bound = 0.0;  // entangled-input bound ||J||_1 / d_in
  double upper_bound = 0.0;  // d_in * || normalized Choi difference ||_1 = ||J||_1
};

/// Diamond norm of a Hermitian-preserving, trace-annihilating map given by
/// its Choi matrix (the difference of two channels). Watrous-style SDP:
///   || Phi ||_diamond = 2 max { <J, W> : 0 <= W <= rho (x) I_B, tr rho = 1 }.
inline DiamondResult diamond_norm(const Mat& choi_diff, int d_in, int d_out) {
  require(choi_diff.rows() == Eigen::Index(d_in) * d_out, "diamond_norm: Choi size mismatch");
  require(d_in >= 1 && d_in <= 8, "diamond_norm supports input dimensions 1..8");
  require(hermiticity_defect(choi_diff) <= 1e-9,
          "diamond_norm needs a Hermitian Choi matrix (difference of channels)");
  Mat tr_b = partial_trace(choi_diff, Subsystem::A, d_in, d_out);
  require(max_abs(tr_b) <= 1e-8,
          "diamond_norm expects a difference of trace-preserving maps");

  const int dd = d_in * d_out;
  const std::vector<Mat> basis = hermitian_basis(dd);

  SdpProblem p;
  p.blocks.dense = {2 * dd, 2 * dd, 2 * d_in};  // W, S = rho (x) I - W, rho
  p.objective = BlockVec::zero(p.blocks);
  p.objective.dense[0] = -embed_hermitian(choi_diff) / 2.0;  // maximize <J, W>

  p.rhs = RVec::Zero(basis.size() + 1);
  for (size_t i = 0; i < basis.size(); ++i) {
    BlockVec a = BlockVec::zero(p.blocks);
    a.dense[0] = embed_hermitian(basis[i]) / 2.0;
    a.dense[1] = embed_hermitian(basis[i]) / 2.0;
    a.dense[2] = -embed_hermitian(partial_trace(basis[i], Subsystem::A, d_in, d_out)) / 2.0;
    p.constraints.push_back(std::move(a));
  }
  {
    BlockVec a = BlockVec::zero(p.blocks);
    a.dense[2] = embed_hermitian(Mat::Identity(d_in, d_in)) / 2.0;
    p.constraints.push_back(std::move(a));
    p.rhs(basis.size()) = 1.0;
  }

  SdpSolution sol = solve_sdp(p);
  if (sol.status != SdpStatus::Optimal)
    throw SolverError(std::string("diamond norm SDP did not converge: status ") +
                      to_string(sol.status) + ", gap " + std::to_string(sol.gap));

  DiamondResult out;
  out.solution = sol;
  out.value = std::max(0.0, -2.0 * sol.primal_value);
  out.gap = 2.0 * std::abs(sol.primal_value - sol.dual_value);
  const double j_trace_norm = trace_norm(choi_diff);
  out.lower_bound = j_trace_norm / d_in;
  out.upper_bound = j_trace_norm;
  return out;
}

// ---------------------------------------------------------------------------
// Multi-restart local search
//
// Minimizes a black-box objective on a real chart. Continuous charts run a
// Barzilai-Borwein gradient descent with Armijo backtracking (finite
// differences unless an analytic gradient is supplied); integer charts run
// greedy coordinate improvement. Deterministic given the seed; restarts are
// independent and merged by (value, restart index).

struct SearchOptions {
  int restarts = 32;
  std::uint64_t seed = 0;
  int max_iters = 400;
  double tol = 1e-9;
  double init_scale = 1.0;
  std::function<RVec(Rng&)> sampler;                  // defaults to N(0, scale)
  std::function<RVec(const RVec&)> gradient;          // optional analytic gradient
  std::vector<int> integer_range;                     // nonempty => integer chart
  bool include_origin = true;                         // restart 0 starts at 0
};

struct RestartTrace {
  int restart = 0;
  double value = 0.0;
  int iterations = 0;
};

struct SearchResult {
  RVec best_point;
  double best_value = kInf;
  int best_restart = -1;
  std::vector<RestartTrace> traces;
};

namespace detail {

inline RVec fd_gradient(const std::function<double(const RVec&)>& f, const RVec& x,
                        double f0) {
  RVec g(x.size());
  RVec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2 * h);
    (void)f0;
  }
  return g;
}

inline std::pair<RVec, double> descend(const std::function<double(const RVec&)>& f,
                                       RVec x, const SearchOptions& o, int& iters) {
  double fx = f(x);
  RVec g = o.gradient ? o.gradient(x) : fd_gradient(f, x, fx);
  double alpha = 1.0 / std::max(1e-12, g.norm());
  int stall = 0;
  for (iters = 0; iters < o.max_iters; ++iters) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-10) break;
    // Armijo backtracking from the BB step
    double step = alpha;
    RVec x_new;
    double f_new = kInf;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      x_new = x - step * g;
      f_new = f(x_new);
      if (f_new <= fx - 1e-4 * step * g.squaredNorm()) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    RVec g_new = o.gradient ? o.gradient(x_new) : fd_gradient(f, x_new, f_new);
    const RVec dx = x_new - x;
    const RVec dg = g_new - g;
    const double dgg = dg.squaredNorm();
    alpha = (dgg > 1e-18) ? std::abs(dx.dot(dg)) / dgg : step * 2.0;
    alpha = std::clamp(alpha, 1e-12, 1e6);
    if (std::abs(fx - f_new) < o.tol * (1.0 + std::abs(fx))) ++stall;
    else stall = 0;
    x = std::move(x_new);
    fx = f_new;
    g = std::move(g_new);
    if (stall >= 3) break;
  }
  return {x, fx};
}

inline std::pair<RVec, double> integer_descend(const std::function<double(const RVec&)>& f,
                                               RVec x, const SearchOptions& o, int& iters) {
  double fx = f(x);
  bool improved = true;
  iters = 0;
  while (improved && iters < o.max_iters) {
    improved = false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const int range = o.integer_range[std::min<size_t>(i, o.integer_range.size() - 1)];
      const double keep = x(i);
      double best_v = keep, best_f = fx;
      for (int v = 0; v < range; ++v) {
        if (double(v) == keep) continue;
        x(i) = double(v);
        const double fv = f(x);
        if (fv < best_f - 1e-15) {
          best_f = fv;
          best_v = double(v);
        }
      }
      x(i) = best_v;
      if (best_f < fx - 1e-15) {
        fx = best_f;
        improved = true;
      }
      ++iters;
    }
  }
  return {x, fx};
}

inline unsigned worker_threads() {
  if (const char* env = std::getenv("RULAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace detail

inline SearchResult multi_restart_search(const std::function<double(const RVec&)>& f,
                                         int dim, const SearchOptions& o) {
  SearchResult result;
  result.traces.resize(std::max(0, o.restarts));

  std::vector<RVec> points(o.restarts);
  std::vector<double> values(o.restarts, kInf);

  auto run_one = [&](int r) {
    Rng rng(o.seed ^ (0x9e3779b97f4a7c15ULL * (r + 1)));
    RVec x0;
    if (o.include_origin && r == 0) {
      x0 = RVec::Zero(dim);
    } else if (o.sampler) {
      x0 = o.sampler(rng);
    } else if (!o.integer_range.empty()) {
      x0 = RVec(dim);
      for (int i = 0; i < dim; ++i) {
        std::uniform_int_distribution<int> u(0, o.integer_range[std::min<size_t>(
                                                    i, o.integer_range.size() - 1)] - 1);
        x0(i) = double(u(rng));
      }
    } else {
      std::normal_distribution<double> n(0.0, o.init_scale);
      x0 = RVec(dim);
      for (int i = 0; i < dim; ++i) x0(i) = n(rng);
    }
    int iters = 0;
    auto [x, fx] = o.integer_range.empty() ? detail::descend(f, std::move(x0), o, iters)
                                           : detail::integer_descend(f, std::move(x0), o, iters);
    points[r] = std::move(x);
    values[r] = fx;
    result.traces[r] = {r, fx, iters};
  };

  const unsigned nthreads = std::min<unsigned>(detail::worker_threads(), o.restarts);
  if (nthreads <= 1) {
    for (int r = 0; r < o.restarts; ++r) run_one(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (unsigned t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < o.restarts; r = next.fetch_add(1)) run_one(r);
      });
    for (auto& th : pool) th.join();
  }

  for (int r = 0; r < o.restarts; ++r) {
    if (values[r] < result.best_value) {
      result.best_value = values[r];
      result.best_point = points[r];
      result.best_restart = r;
    }
  }
  return result;
}

}  // namespace rulab::optim
