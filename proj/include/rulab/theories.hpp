// Free-unitary theories: energy-conserving, incoherent, local-bipartite,
// Clifford on qubits, Clifford on odd-prime qudits. Each comes with a
// membership test (boolean + residual), seeded sampling, and a real
// coordinate chart (decode / project) used by the search harness.

#pragma once

#include <rulab/stab.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include <map>
#include <numeric>
#include <variant>

namespace rulab::theories {

// ---------------------------------------------------------------------------
// Theory specifications

struct EnergyConserving {
  Mat h_system;
  Mat h_ancilla;  // 0x0 for a system-only theory
};

struct Incoherent {
  int dim = 2;  // dimension carrying the preferred product basis
};

struct LocalBipartite {
  int d_sa = 2, d_sb = 2, d_ea = 1, d_eb = 1;
};

struct CliffordQubit {
  int n_system = 1, n_ancilla = 0;
};

struct CliffordQupit {
  int d = 3;
  int n_system = 1, n_ancilla = 0;
};

using TheorySpec =
    std::variant<EnergyConserving, Incoherent, LocalBipartite, CliffordQubit, CliffordQupit>;

inline std::string theory_name(const TheorySpec& t) {
  struct V {
    std::string operator()(const EnergyConserving&) const { return "energy_conserving"; }
    std::string operator()(const Incoherent&) const { return "incoherent"; }
    std::string operator()(const LocalBipartite&) const { return "local_bipartite"; }
    std::string operator()(const CliffordQubit&) const { return "clifford_qubit"; }
    std::string operator()(const CliffordQupit&) const { return "clifford_qupit"; }
  };
  return std::visit(V{}, t);
}

inline int system_dim(const TheorySpec& t) {
  struct V {
    int operator()(const EnergyConserving& e) const { return int(e.h_system.rows()); }
    int operator()(const Incoherent& i) const { return i.dim; }
    int operator()(const LocalBipartite& l) const { return l.d_sa * l.d_sb; }
    int operator()(const CliffordQubit& c) const { return 1 << c.n_system; }
    int operator()(const CliffordQupit& c) const {
      return int(std::lround(std::pow(double(c.d), c.n_system)));
    }
  };
  return std::visit(V{}, t);
}

inline int ancilla_dim(const TheorySpec& t) {
  struct V {
    int operator()(const EnergyConserving& e) const {
      return e.h_ancilla.rows() ? int(e.h_ancilla.rows()) : 1;
    }
    int operator()(const Incoherent&) const { return 1; }
    int operator()(const LocalBipartite& l) const { return l.d_ea * l.d_eb; }
    int operator()(const CliffordQubit& c) const { return 1 << c.n_ancilla; }
    int operator()(const CliffordQupit& c) const {
      return int(std::lround(std::pow(double(c.d), c.n_ancilla)));
    }
  };
  return std::visit(V{}, t);
}

inline int joint_dim(const TheorySpec& t) {
  if (const auto* i = std::get_if<Incoherent>(&t)) return i->dim;
  return system_dim(t) * ancilla_dim(t);
}

inline void validate(const TheorySpec& t) {
  if (const auto* e = std::get_if<EnergyConserving>(&t)) {
    require(e->h_system.rows() >= 1 && e->h_system.rows() == e->h_system.cols(),
            "energy theory: system Hamiltonian must be square and nonempty");
    require(hermiticity_defect(e->h_system) <= 1e-9, "system Hamiltonian must be Hermitian");
    if (e->h_ancilla.rows())
      require(hermiticity_defect(e->h_ancilla) <= 1e-9, "ancilla Hamiltonian must be Hermitian");
  } else if (const auto* i = std::get_if<Incoherent>(&t)) {
    require(i->dim >= 1, "incoherent theory: dimension must be positive");
  } else if (const auto* l = std::get_if<LocalBipartite>(&t)) {
    require(l->d_sa >= 1 && l->d_sb >= 1 && l->d_ea >= 1 && l->d_eb >= 1,
            "local bipartite theory: dimensions must be positive");
  } else if (const auto* c = std::get_if<CliffordQubit>(&t)) {
    require(c->n_system >= 1 && c->n_ancilla >= 0, "clifford theory: invalid qubit counts");
  } else if (const auto* q = std::get_if<CliffordQupit>(&t)) {
    require(q->d == 3 || q->d == 5 || q->d == 7, "clifford qupit theory needs d in {3,5,7}");
    require(q->n_system >= 1 && q->n_ancilla >= 0, "clifford theory: invalid qudit counts");
  }
}

// ---------------------------------------------------------------------------
// Joint Hamiltonian and eigenblock structure for the energy theory

inline Mat joint_hamiltonian(const EnergyConserving& e) {
  if (!e.h_ancilla.rows()) return e.h_system;
  const int ds = int(e.h_system.rows()), de = int(e.h_ancilla.rows());
  return tensor(e.h_system, Mat::Identity(de, de)) +
         tensor(Mat::Identity(ds, ds), e.h_ancilla);
}

struct EnergyBlocks {
  Mat basis;                    // columns: H_tot eigenvectors, blocks contiguous
  std::vector<int> block_size;  // eigenvalues grouped with tolerance 1e-9
};

inline EnergyBlocks energy_blocks(const EnergyConserving& e) {
  EighResult eg = eigh(joint_hamiltonian(e));
  EnergyBlocks out;
  out.basis = eg.eigenvectors;
  int start = 0;
  for (int i = 1; i <= eg.eigenvalues.size(); ++i) {
    if (i == eg.eigenvalues.size() || eg.eigenvalues(i) - eg.eigenvalues(i - 1) > 1e-9) {
      out.block_size.push_back(i - start);
      start = i;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Wire reordering for the local-bipartite theory. The joint space is ordered
// S_A (x) S_B (x) E_A (x) E_B; free unitaries act on (S_A E_A) and (S_B E_B).
// group_permutation maps |s_a s_b e_a e_b> -> |s_a e_a ; s_b e_b>.

inline Mat group_permutation(const LocalBipartite& l) {
  const int d = l.d_sa * l.d_sb * l.d_ea * l.d_eb;
  Mat p = Mat::Zero(d, d);
  for (int sa = 0; sa < l.d_sa; ++sa)
    for (int sb = 0; sb < l.d_sb; ++sb)
      for (int ea = 0; ea < l.d_ea; ++ea)
        for (int eb = 0; eb < l.d_eb; ++eb) {
          const int joint = ((sa * l.d_sb + sb) * l.d_ea + ea) * l.d_eb + eb;
          const int grouped = ((sa * l.d_ea + ea) * l.d_sb + sb) * l.d_eb + eb;
          p(grouped, joint) = 1.0;
        }
  return p;
}

// ---------------------------------------------------------------------------
// Membership

struct FreeCheck {
  bool free = false;
  double residual = kInf;
};

namespace detail {

// residual of "C is proportional to a single Weyl string":
// sqrt(1 - max_W |tr(W^dag C)|^2 / dim^2), using sum_W |c_W|^2 = 1.
inline double weyl_concentration_residual(const Mat& c, int d, int n) {
  const double dim = double(c.rows());
  double best = 0.0;
  for (const auto& [a, b] : stab::weyl_labels(d, n)) {
    const stab::WeylString w = stab::weyl_string(d, n, a, b);
    best = std::max(best, std::norm(stab::weyl_overlap(w, c) / dim));
  }
  return std::sqrt(std::max(0.0, 1.0 - best));
}

inline double clifford_residual(const Mat& u, int d, int n) {
  double worst = 0.0;
  for (int site = 0; site < n; ++site) {
    for (int which = 0; which < 2; ++which) {
      std::vector<int> a(n, 0), b(n, 0);
      (which == 0 ? a : b)[site] = 1;
      const stab::WeylString w = stab::weyl_string(d, n, a, b);
      // U W U^dagger with the sparse W applied by columns
      Mat uw(u.rows(), u.cols());
      for (int j = 0; j < int(u.cols()); ++j) uw.col(j) = w.phase[j] * u.col(w.perm[j]);
      // (W U^dag)_{jk}: row j of W picks row perm^{-1}... use uw = U W, then C = uw U^dag
      Mat c = uw * u.adjoint();
      worst = std::max(worst, weyl_concentration_residual(c, d, n));
    }
  }
  return worst;
}

}  // namespace detail

inline FreeCheck is_free(const UnitaryOperator& u, const TheorySpec& t) {
  validate(t);
  require(u.dim() == joint_dim(t),
          "is_free: unitary dimension " + std::to_string(u.dim()) +
              " does not match the theory's joint dimension " + std::to_string(joint_dim(t)));

  if (const auto* e = std::get_if<EnergyConserving>(&t)) {
    const Mat h = joint_hamiltonian(*e);
    const double r = trace_norm(h * u.matrix() - u.matrix() * h);
    return {r <= 1e-8, r};
  }
  if (std::get_if<Incoherent>(&t)) {
    // permutation with phases: one unit-modulus entry per column
    double worst = 0.0;
    for (int j = 0; j < u.dim(); ++j) {
      Eigen::Index arg = 0;
      const double top = u.matrix().col(j).cwiseAbs().maxCoeff(&arg);
      double off = 0.0;
      for (int i = 0; i < u.dim(); ++i)
        if (i != arg) off = std::max(off, std::abs(u.matrix()(i, j)));
      worst = std::max({worst, std::abs(top - 1.0), off});
    }
    return {worst <= 1e-8, worst};
  }
  if (const auto* l = std::get_if<LocalBipartite>(&t)) {
    const Mat p = group_permutation(*l);
    const Mat g = p * u.matrix() * p.adjoint();
    const int d1 = l->d_sa * l->d_ea, d2 = l->d_sb * l->d_eb;
    // operator-Schmidt: residual Frobenius mass beyond the leading term
    Mat m(d1 * d1, d2 * d2);
    for (int i1 = 0; i1 < d1; ++i1)
      for (int j1 = 0; j1 < d1; ++j1)
        for (int i2 = 0; i2 < d2; ++i2)
          for (int j2 = 0; j2 < d2; ++j2)
            m(i1 * d1 + j1, i2 * d2 + j2) = g(i1 * d2 + i2, j1 * d2 + j2);
    Eigen::JacobiSVD<Mat> svd(m);
    const double total = m.squaredNorm();
    const double lead = svd.singularValues()(0) * svd.singularValues()(0);
    const double r = std::sqrt(std::max(0.0, total - lead));
    return {r <= 1e-8, r};
  }
  if (const auto* c = std::get_if<CliffordQubit>(&t)) {
    const double r = detail::clifford_residual(u.matrix(), 2, c->n_system + c->n_ancilla);
    return {r <= 1e-8, r};
  }
  const auto& q = std::get<CliffordQupit>(t);
  const double r = detail::clifford_residual(u.matrix(), q.d, q.n_system + q.n_ancilla);
  return {r <= 1e-8, r};
}

// ---------------------------------------------------------------------------
// Sampling
//
// Distributions: energy-conserving draws Haar on each total-energy eigenblock;
// incoherent draws a uniform permutation with uniform phases; local-bipartite
// draws independent Haar factors; Clifford draws a uniform word of length 10 n
// over the generator set.

inline std::vector<stab::NamedGate> clifford_gate_set(const TheorySpec& t) {
  if (const auto* c = std::get_if<CliffordQubit>(&t))
    return stab::clifford_generators(c->n_system + c->n_ancilla);
  const auto& q = std::get<CliffordQupit>(t);
  return stab::quopit_clifford_generators(q.d, q.n_system + q.n_ancilla);
}

inline UnitaryOperator sample_free(const TheorySpec& t, std::uint64_t seed) {
  validate(t);
  Rng rng(seed);
  const int d = joint_dim(t);

  if (const auto* e = std::get_if<EnergyConserving>(&t)) {
    EnergyBlocks blocks = energy_blocks(*e);
    Mat u = Mat::Zero(d, d);
    int off = 0;
    for (int m : blocks.block_size) {
      u.block(off, off, m, m) = haar_unitary(m, rng);
      off += m;
    }
    return UnitaryOperator(blocks.basis * u * blocks.basis.adjoint());
  }
  if (std::get_if<Incoherent>(&t)) {
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    Mat u = Mat::Zero(d, d);
    for (int j = 0; j < d; ++j) u(perm[j], j) = std::polar(1.0, angle(rng));
    return UnitaryOperator(u);
  }
  if (const auto* l = std::get_if<LocalBipartite>(&t)) {
    const Mat u1 = haar_unitary(l->d_sa * l->d_ea, rng);
    const Mat u2 = haar_unitary(l->d_sb * l->d_eb, rng);
    const Mat p = group_permutation(*l);
    return UnitaryOperator(p.adjoint() * tensor(u1, u2) * p);
  }
  std::vector<stab::NamedGate> gates = clifford_gate_set(t);
  int n = 0;
  if (const auto* c = std::get_if<CliffordQubit>(&t)) n = c->n_system + c->n_ancilla;
  else n = std::get<CliffordQupit>(t).n_system + std::get<CliffordQupit>(t).n_ancilla;
  std::uniform_int_distribution<size_t> pick(0, gates.size() - 1);
  Mat u = Mat::Identity(d, d);
  for (int step = 0; step < 10 * n; ++step) u = gates[pick(rng)].matrix * u;
  return UnitaryOperator(u);
}

// ---------------------------------------------------------------------------
// Coordinate charts

struct FreeUnitaryParam {
  TheorySpec theory;
  RVec coordinates;
};

namespace detail {

// Hermitian matrix from m^2 reals: diagonal first, then (re, im) pairs i < j.
inline Mat hermitian_from_coords(const double* c, int m) {
  Mat k = Mat::Zero(m, m);
  int idx = 0;
  for (int i = 0; i < m; ++i) k(i, i) = c[idx++];
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      k(i, j) = Complex(c[idx], c[idx + 1]);
      k(j, i) = std::conj(k(i, j));
      idx += 2;
    }
  return k;
}

inline void coords_from_hermitian(const Mat& k, double* c) {
  const int m = int(k.rows());
  int idx = 0;
  for (int i = 0; i < m; ++i) c[idx++] = k(i, i).real();
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      c[idx++] = k(i, j).real();
      c[idx++] = k(i, j).imag();
    }
}

inline Mat expi(const Mat& k) {
  EighResult e = eigh(k);
  Vec phases(e.eigenvalues.size());
  for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i)
    phases(i) = std::polar(1.0, e.eigenvalues(i));
  return e.eigenvectors * phases.asDiagonal() * e.eigenvectors.adjoint();
}

/// Hermitian K with exp(iK) = u, eigenphases in (-pi, pi].
inline Mat principal_log_unitary(const Mat& u) {
  Eigen::ComplexSchur<Mat> schur(u);
  const Mat& q = schur.matrixU();
  Vec phases(u.rows());
  for (int i = 0; i < u.rows(); ++i) phases(i) = std::arg(schur.matrixT()(i, i));
  Mat k = q * phases.asDiagonal() * q.adjoint();
  return (k + k.adjoint()) / 2.0;
}

/// closest unitary in Frobenius norm (polar factor)
inline Mat polar_unitary(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

inline long factorial(int n) {
  long f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline std::vector<int> lehmer_decode(long index, int n) {
  std::vector<int> pool(n), perm(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < n; ++i) {
    const long f = factorial(n - 1 - i);
    long digit = index / f;
    index %= f;
    perm[i] = pool[digit];
    pool.erase(pool.begin() + digit);
  }
  return perm;
}

inline long lehmer_encode(const std::vector<int>& perm) {
  const int n = int(perm.size());
  long index = 0;
  for (int i = 0; i < n; ++i) {
    int smaller = 0;
    for (int j = i + 1; j < n; ++j)
      if (perm[j] < perm[i]) ++smaller;
    index += smaller * factorial(n - 1 - i);
  }
  return index;
}

}  // namespace detail

inline int default_word_length(const TheorySpec& t) {
  if (const auto* c = std::get_if<CliffordQubit>(&t)) return 10 * (c->n_system + c->n_ancilla);
  if (const auto* q = std::get_if<CliffordQupit>(&t)) return 10 * (q->n_system + q->n_ancilla);
  return 0;
}

/// Chart dimension per variant (Clifford charts use the default word length;
/// decode accepts words of any length).
inline int chart_dim(const TheorySpec& t) {
  if (const auto* e = std::get_if<EnergyConserving>(&t)) {
    int n = 0;
    for (int m : energy_blocks(*e).block_size) n += m * m;
    return n;
  }
  if (const auto* i = std::get_if<Incoherent>(&t)) return 1 + i->dim;
  if (const auto* l = std::get_if<LocalBipartite>(&t)) {
    const int m1 = l->d_sa * l->d_ea, m2 = l->d_sb * l->d_eb;
    return m1 * m1 + m2 * m2;
  }
  return default_word_length(t);
}

inline UnitaryOperator decode(const FreeUnitaryParam& p) {
  const TheorySpec& t = p.theory;
  validate(t);
  const int d = joint_dim(t);

  if (const auto* e = std::get_if<EnergyConserving>(&t)) {
    EnergyBlocks blocks = energy_blocks(*e);
    require(p.coordinates.size() == chart_dim(t), "energy chart: wrong coordinate count");
    Mat u = Mat::Zero(d, d);
    int off = 0, coff = 0;
    for (int m : blocks.block_size) {
      const Mat k = detail::hermitian_from_coords(p.coordinates.data() + coff, m);
      u.block(off, off, m, m) = detail::expi(k);
      off += m;
      coff += m * m;
    }
    return UnitaryOperator(blocks.basis * u * blocks.basis.adjoint());
  }
  if (const auto* inc = std::get_if<Incoherent>(&t)) {
    const int n = inc->dim;
    require(n <= 16, "incoherent chart supports dimensions up to 16");
    require(p.coordinates.size() == n + 1, "incoherent chart: wrong coordinate count");
    long index = std::lround(p.coordinates(0));
    const long nf = detail::factorial(n);
    index = ((index % nf) + nf) % nf;
    std::vector<int> perm = detail::lehmer_decode(index, n);
    Mat u = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j) u(perm[j], j) = std::polar(1.0, p.coordinates(1 + j));
    return UnitaryOperator(u);
  }
  if (const auto* l = std::get_if<LocalBipartite>(&t)) {
    const int m1 = l->d_sa * l->d_ea, m2 = l->d_sb * l->d_eb;
    require(p.coordinates.size() == m1 * m1 + m2 * m2,
            "local bipartite chart: wrong coordinate count");
    const Mat u1 = detail::expi(detail::hermitian_from_coords(p.coordinates.data(), m1));
    const Mat u2 =
        detail::expi(detail::hermitian_from_coords(p.coordinates.data() + m1 * m1, m2));
    const Mat perm = group_permutation(*l);
    return UnitaryOperator(perm.adjoint() * tensor(u1, u2) * perm);
  }

  // Clifford word: each coordinate rounds to a gate index, 0 = identity
  std::vector<stab::NamedGate> gates = clifford_gate_set(t);
  Mat u = Mat::Identity(d, d);
  for (Eigen::Index i = 0; i < p.coordinates.size(); ++i) {
    long g = std::lround(p.coordinates(i));
    const long m = long(gates.size()) + 1;
    g = ((g % m) + m) % m;
    if (g > 0) u = gates[g - 1].matrix * u;
  }
  return UnitaryOperator(u);
}

// ---------------------------------------------------------------------------
// Clifford synthesis (tableau reduction over Z_p), used by project()

namespace detail {

struct SymplecticTableau {
  int d = 2, n = 1;
  // column c in 0..2n-1: image of X_c (c < n) or Z_{c-n}; rows: x parts then z parts
  std::vector<std::vector<int>> m;

  int& at(int r, int c) { return m[r][c]; }
};

inline int mod_inverse(int a, int p) { return stab::inverse_mod(a, p); }

// gate actions on a label column v = (x_0..x_{n-1}, z_0..z_{n-1})
struct TableauOps {
  SymplecticTableau t;
  std::vector<std::string> gates;  // applied left-to-right (later = later left mult)

  void apply_f(int site) {
    for (auto col = 0; col < 2 * t.n; ++col) {
      int& x = t.m[site][col];
      int& z = t.m[t.n + site][col];
      const int nx = ((t.d - z) % t.d + t.d) % t.d;
      z = x;
      x = nx;
    }
    gates.push_back("F" + std::to_string(site));
  }
  void apply_p(int site) {
    for (auto col = 0; col < 2 * t.n; ++col)
      t.m[t.n + site][col] = (t.m[t.n + site][col] + t.m[site][col]) % t.d;
    gates.push_back("P" + std::to_string(site));
  }
  void apply_mult(int site, int a) {
    const int ainv = mod_inverse(a, t.d);
    for (auto col = 0; col < 2 * t.n; ++col) {
      t.m[site][col] = (t.m[site][col] * a) % t.d;
      t.m[t.n + site][col] = (t.m[t.n + site][col] * ainv) % t.d;
    }
    gates.push_back("M" + std::to_string(a) + "_" + std::to_string(site));
  }
  void apply_sum(int c, int tgt) {
    for (auto col = 0; col < 2 * t.n; ++col) {
      t.m[tgt][col] = (t.m[tgt][col] + t.m[c][col]) % t.d;
      t.m[t.n + c][col] = ((t.m[t.n + c][col] - t.m[t.n + tgt][col]) % t.d + t.d) % t.d;
    }
    gates.push_back("SUM" + std::to_string(c) + std::to_string(tgt));
  }
};

/// Extract the symplectic tableau of a Clifford unitary; throws if some
/// conjugated generator is not a Weyl string.
inline SymplecticTableau tableau_of(const Mat& u, int d, int n) {
  SymplecticTableau t;
  t.d = d;
  t.n = n;
  t.m.assign(2 * n, std::vector<int>(2 * n, 0));
  const auto labels = stab::weyl_labels(d, n);
  const double dim = double(u.rows());
  for (int col = 0; col < 2 * n; ++col) {
    std::vector<int> a(n, 0), b(n, 0);
    (col < n ? a[col] : b[col - n]) = 1;
    const stab::WeylString w = stab::weyl_string(d, n, a, b);
    Mat uw(u.rows(), u.cols());
    for (int j = 0; j < int(u.cols()); ++j) uw.col(j) = w.phase[j] * u.col(w.perm[j]);
    const Mat c = uw * u.adjoint();
    bool found = false;
    for (const auto& [la, lb] : labels) {
      const stab::WeylString ws = stab::weyl_string(d, n, la, lb);
      if (std::abs(std::abs(stab::weyl_overlap(ws, c) / dim) - 1.0) < 1e-7) {
        for (int s = 0; s < n; ++s) {
          t.m[s][col] = la[s];
          t.m[n + s][col] = lb[s];
        }
        found = true;
        break;
      }
    }
    require(found, "project: unitary is not Clifford (generator image is not a Weyl string)");
  }
  return t;
}

/// Reduce the tableau to the identity with generator left-multiplications;
/// returns the applied gate names in application order.
inline std::vector<std::string> reduce_tableau(SymplecticTableau tab) {
  TableauOps ops;
  ops.t = std::move(tab);
  const int n = ops.t.n, p = ops.t.d;
  auto col_x = [&](int i) { return i; };
  auto col_z = [&](int i) { return n + i; };

  for (int i = 0; i < n; ++i) {
    // --- make column X_i equal e_i^x ---
    {
      const int c = col_x(i);
      if (ops.t.m[i][c] == 0) {
        bool fixed = false;
        for (int j = i + 1; j < n && !fixed; ++j)
          if (ops.t.m[j][c] != 0) {
            ops.apply_sum(j, i);
            fixed = true;
          }
        if (!fixed && ops.t.m[n + i][c] != 0) {
          ops.apply_f(i);
          fixed = true;
        }
        for (int j = i + 1; j < n && !fixed; ++j)
          if (ops.t.m[n + j][c] != 0) {
            ops.apply_f(j);
            ops.apply_sum(j, i);
            fixed = true;
          }
        require(fixed, "tableau reduction: singular column");
      }
      if (ops.t.m[i][c] != 1) ops.apply_mult(i, mod_inverse(ops.t.m[i][c], p));
      for (int j = i + 1; j < n; ++j) {
        const int v = ops.t.m[j][c];
        for (int k = 0; k < (p - v) % p; ++k) ops.apply_sum(i, j);
      }
      for (int j = i + 1; j < n; ++j) {
        if (ops.t.m[n + j][c] != 0) {
          ops.apply_f(j);  // x_j was 0, so this moves z_j into x_j cleanly
          const int v = ops.t.m[j][c];
          for (int k = 0; k < (p - v) % p; ++k) ops.apply_sum(i, j);
        }
      }
      const int zi = ops.t.m[n + i][c];
      for (int k = 0; k < (p - zi) % p; ++k) ops.apply_p(i);
    }
    // --- make column Z_i equal e_i^z, preserving X_i = e_i^x ---
    // (the symplectic form pins z_i = 1 and x_i is cleared at the end by a
    //  shear F^{-1} P^{x_i} F that leaves e_i^x invariant)
    {
      const int c = col_z(i);
      for (int j = i + 1; j < n; ++j) {
        if (ops.t.m[j][c] != 0) {
          const int xj = ops.t.m[j][c], zj = ops.t.m[n + j][c];
          if (zj != 0) {
            const int k = ((p - zj) * mod_inverse(xj, p)) % p;
            for (int x = 0; x < k; ++x) ops.apply_p(j);
          }
          ops.apply_f(j);  // (x_j, 0) -> (0, x_j)
        }
        const int zj = ops.t.m[n + j][c];
        for (int k = 0; k < zj; ++k) ops.apply_sum(j, i);  // z_j -= z_i (=1) each time
      }
      const int xi = ops.t.m[i][c];
      if (xi != 0) {
        ops.apply_f(i);
        for (int k = 0; k < xi; ++k) ops.apply_p(i);
        for (int k = 0; k < (p == 2 ? 1 : 3); ++k) ops.apply_f(i);
      }
    }
  }
  return ops.gates;
}

}  // namespace detail

inline FreeUnitaryParam project(const UnitaryOperator& u, const TheorySpec& t) {
  validate(t);
  require(u.dim() == joint_dim(t), "project: dimension mismatch");
  FreeUnitaryParam out{t, RVec()};

  if (const auto* e = std::get_if<EnergyConserving>(&t)) {
    EnergyBlocks blocks = energy_blocks(*e);
    out.coordinates = RVec::Zero(chart_dim(t));
    const Mat v = blocks.basis.adjoint() * u.matrix() * blocks.basis;
    int off = 0, coff = 0;
    for (int m : blocks.block_size) {
      const Mat ub = detail::polar_unitary(v.block(off, off, m, m));
      detail::coords_from_hermitian(detail::principal_log_unitary(ub),
                                    out.coordinates.data() + coff);
      off += m;
      coff += m * m;
    }
    return out;
  }
  if (const auto* inc = std::get_if<Incoherent>(&t)) {
    const int n = inc->dim;
    require(n <= 16, "incoherent chart supports dimensions up to 16");
    out.coordinates = RVec::Zero(n + 1);
    std::vector<int> perm(n);
    for (int j = 0; j < n; ++j) {
      Eigen::Index arg = 0;
      u.matrix().col(j).cwiseAbs().maxCoeff(&arg);
      perm[j] = int(arg);
      out.coordinates(1 + j) = std::arg(u.matrix()(arg, j));
    }
    out.coordinates(0) = double(detail::lehmer_encode(perm));
    return out;
  }
  if (const auto* l = std::get_if<LocalBipartite>(&t)) {
    const Mat p = group_permutation(*l);
    const Mat g = p * u.matrix() * p.adjoint();
    const int d1 = l->d_sa * l->d_ea, d2 = l->d_sb * l->d_eb;
    Mat m(d1 * d1, d2 * d2);
    for (int i1 = 0; i1 < d1; ++i1)
      for (int j1 = 0; j1 < d1; ++j1)
        for (int i2 = 0; i2 < d2; ++i2)
          for (int j2 = 0; j2 < d2; ++j2)
            m(i1 * d1 + j1, i2 * d2 + j2) = g(i1 * d2 + i2, j1 * d2 + j2);
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Mat a1(d1, d1), b1(d2, d2);
    for (int i1 = 0; i1 < d1; ++i1)
      for (int j1 = 0; j1 < d1; ++j1) a1(i1, j1) = svd.matrixU()(i1 * d1 + j1, 0);
    for (int i2 = 0; i2 < d2; ++i2)
      for (int j2 = 0; j2 < d2; ++j2) b1(i2, j2) = std::conj(svd.matrixV()(i2 * d2 + j2, 0));
    Mat u1 = detail::polar_unitary(a1);
    Mat u2 = detail::polar_unitary(b1);
    // fix the relative phase gauge against the original unitary
    const Complex tr = (tensor(u1, u2).adjoint() * g).trace();
    u1 *= tr / std::abs(tr);
    out.coordinates = RVec::Zero(d1 * d1 + d2 * d2);
    detail::coords_from_hermitian(detail::principal_log_unitary(u1), out.coordinates.data());
    detail::coords_from_hermitian(detail::principal_log_unitary(u2),
                                  out.coordinates.data() + d1 * d1);
    return out;
  }

  // Clifford synthesis: reduce the tableau, then fix the residual Weyl
  // displacement numerically.
  int d = 2, n = 0;
  if (const auto* c = std::get_if<CliffordQubit>(&t)) {
    n = c->n_system + c->n_ancilla;
  } else {
    const auto& q = std::get<CliffordQupit>(t);
    d = q.d;
    n = q.n_system + q.n_ancilla;
  }
  std::vector<stab::NamedGate> gates = clifford_gate_set(t);
  std::map<std::string, int> gate_index;
  for (size_t k = 0; k < gates.size(); ++k) gate_index[gates[k].name] = int(k) + 1;

  auto name_for = [&](const std::string& raw) -> std::vector<std::string> {
    // qubit gate set uses H (= F) and S (= P); expand inverses into words
    if (d == 2) {
      if (raw[0] == 'F') return {"H" + raw.substr(1)};
      if (raw[0] == 'P') return {"S" + raw.substr(1)};
      if (raw.rfind("SUM", 0) == 0) return {"CNOT" + raw.substr(3)};
    }
    return {raw};
  };

  detail::SymplecticTableau tab = detail::tableau_of(u.matrix(), d, n);
  std::vector<std::string> reduction = detail::reduce_tableau(tab);

  // C = g_K ... g_1 U is a phase times a Weyl string
  Mat cmat = u.matrix();
  for (const std::string& raw : reduction)
    for (const std::string& g : name_for(raw)) cmat = gates[gate_index.at(g) - 1].matrix * cmat;

  std::vector<int> disp_a(n, 0), disp_b(n, 0);
  bool found = false;
  for (const auto& [la, lb] : stab::weyl_labels(d, n)) {
    const stab::WeylString ws = stab::weyl_string(d, n, la, lb);
    if (std::abs(std::abs(stab::weyl_overlap(ws, cmat) / double(cmat.rows())) - 1.0) < 1e-7) {
      disp_a = la;
      disp_b = lb;
      found = true;
      break;
    }
  }
  require(found, "project: residual after tableau reduction is not a Weyl string");

  // word = (Z parts, X parts of the displacement) then reversed inverses
  std::vector<int> word;
  for (int s = 0; s < n; ++s) {
    const std::string zn = (d == 2) ? "S" + std::to_string(s) : "Z" + std::to_string(s);
    for (int k = 0; k < disp_b[s]; ++k) {
      if (d == 2) {  // Z = S S in the qubit gate set
        word.push_back(gate_index.at(zn));
        word.push_back(gate_index.at(zn));
      } else {
        word.push_back(gate_index.at(zn));
      }
    }
  }
  for (int s = 0; s < n; ++s) {
    for (int k = 0; k < disp_a[s]; ++k) {
      if (d == 2) {  // X = H Z H = H S S H
        const std::string h = "H" + std::to_string(s), sg = "S" + std::to_string(s);
        for (const std::string& g : {h, sg, sg, h}) word.push_back(gate_index.at(g));
      } else {
        word.push_back(gate_index.at("X" + std::to_string(s)));
      }
    }
  }
  for (auto it = reduction.rbegin(); it != reduction.rend(); ++it) {
    const std::string& raw = *it;
    // append the inverse of each reduction gate as a word over the gate set
    std::vector<std::string> inv;
    if (raw[0] == 'F' || raw[0] == 'H') {
      const std::string g = name_for(raw)[0];
      for (int k = 0; k < (d == 2 ? 1 : 3); ++k) inv.push_back(g);
    } else if (raw[0] == 'P' || raw[0] == 'S') {
      const std::string g = name_for(raw)[0];
      for (int k = 0; k < (d == 2 ? 3 : d - 1); ++k) inv.push_back(g);
    } else if (raw[0] == 'M') {
      const size_t us = raw.find('_');
      const int a = std::stoi(raw.substr(1, us - 1));
      inv.push_back("M" + std::to_string(detail::mod_inverse(a, d)) + raw.substr(us));
    } else {  // SUM / CNOT
      const std::string g = name_for(raw)[0];
      for (int k = 0; k < (d == 2 ? 1 : d - 1); ++k) inv.push_back(g);
    }
    for (const std::string& g : inv) word.push_back(gate_index.at(g));
  }

  out.coordinates = RVec::Zero(word.size());
  for (size_t i = 0; i < word.size(); ++i) out.coordinates(i) = double(word[i]);
  return out;
}

}  // namespace rulab::theories
