// Stabilizer formalism machinery: pure stabilizer state enumeration for
// 1-3 qubits, Clifford generators for qubits and odd-prime qudits, and
// discrete Wigner functions.

#pragma once

#include <rulab/qlinalg.hpp>

#include <algorithm>
#include <cstdint>
#include <deque>
#include <numbers>
#include <string>
#include <unordered_set>
#include <vector>

namespace rulab::stab {

// ---------------------------------------------------------------------------
// Elementary qubit gates (qubit 0 is the most significant tensor factor)

inline Mat pauli_x() { return (Mat(2, 2) << 0, 1, 1, 0).finished(); }
inline Mat pauli_y() {
  return (Mat(2, 2) << 0, Complex(0, -1), Complex(0, 1), 0).finished();
}
inline Mat pauli_z() { return (Mat(2, 2) << 1, 0, 0, -1).finished(); }
inline Mat gate_h() {
  const double s = 1.0 / std::sqrt(2.0);
  return (Mat(2, 2) << s, s, s, -s).finished();
}
inline Mat gate_s() { return (Mat(2, 2) << 1, 0, 0, Complex(0, 1)).finished(); }

/// Embed a single-site gate at site k of an n-site register of local dim d.
inline Mat embed_gate(const Mat& g, int n, int k, int d) {
  Mat out = Mat::Identity(1, 1);
  for (int i = 0; i < n; ++i)
    out = tensor(out, i == k ? g : Mat::Identity(d, d));
  return out;
}

inline Mat gate_cnot(int n, int control, int target) {
  const int dim = 1 << n;
  Mat out = Mat::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const int cb = (i >> (n - 1 - control)) & 1;
    int j = i;
    if (cb) j ^= 1 << (n - 1 - target);
    out(j, i) = 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pauli / Weyl strings as sparse (permutation, phase) pairs.
// W(a, b) acts per site as X^a Z^b, so W|j> = omega^{b.j} |j + a>.

struct WeylString {
  std::vector<int> perm;       // column j maps to row perm[j]
  std::vector<Complex> phase;  // with weight phase[j]
};

inline WeylString weyl_string(int d, int n, const std::vector<int>& a,
                              const std::vector<int>& b) {
  const double two_pi = 2.0 * std::numbers::pi;
  const int dim = static_cast<int>(std::pow(double(d), n) + 0.5);
  WeylString w;
  w.perm.resize(dim);
  w.phase.resize(dim);
  std::vector<int> digits(n);
  for (int j = 0; j < dim; ++j) {
    int rem = j;
    for (int s = n - 1; s >= 0; --s) {
      digits[s] = rem % d;
      rem /= d;
    }
    int out = 0;
    long expo = 0;
    for (int s = 0; s < n; ++s) {
      expo += long(b[s]) * digits[s];
      out = out * d + (digits[s] + a[s]) % d;
    }
    w.perm[j] = out;
    w.phase[j] = std::polar(1.0, two_pi * double(expo % d) / double(d));
  }
  return w;
}

/// tr(W^dagger C) without forming W densely.
inline Complex weyl_overlap(const WeylString& w, const Mat& c) {
  Complex s = 0.0;
  for (size_t j = 0; j < w.perm.size(); ++j)
    s += std::conj(w.phase[j]) * c(w.perm[j], j);
  return s;
}

/// All d^{2n} exponent tuples (a, b), in lexicographic order.
inline std::vector<std::pair<std::vector<int>, std::vector<int>>> weyl_labels(int d, int n) {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
  const long total = std::lround(std::pow(double(d), 2 * n));
  out.reserve(total);
  std::vector<int> a(n), b(n);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int s = n - 1; s >= 0; --s) {
      b[s] = rem % d;
      rem /= d;
    }
    for (int s = n - 1; s >= 0; --s) {
      a[s] = rem % d;
      rem /= d;
    }
    out.emplace_back(a, b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Clifford generators

struct NamedGate {
  std::string name;
  Mat matrix;
};

/// H and S on each qubit, CNOT on each ordered pair.
inline std::vector<NamedGate> clifford_generators(int n) {
  require(n >= 1 && n <= 3, "clifford_generators supports 1..3 qubits");
  std::vector<NamedGate> gates;
  for (int i = 0; i < n; ++i)
    gates.push_back({"H" + std::to_string(i), embed_gate(gate_h(), n, i, 2)});
  for (int i = 0; i < n; ++i)
    gates.push_back({"S" + std::to_string(i), embed_gate(gate_s(), n, i, 2)});
  for (int c = 0; c < n; ++c)
    for (int t = 0; t < n; ++t)
      if (c != t)
        gates.push_back({"CNOT" + std::to_string(c) + std::to_string(t),
                         gate_cnot(n, c, t)});
  return gates;
}

// Qudit gates for odd prime d.

inline Mat qudit_x(int d) {
  Mat out = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j) out((j + 1) % d, j) = 1.0;
  return out;
}

inline Mat qudit_z(int d) {
  const double two_pi = 2.0 * std::numbers::pi;
  Mat out = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j) out(j, j) = std::polar(1.0, two_pi * j / d);
  return out;
}

inline Mat qudit_fourier(int d) {
  const double two_pi = 2.0 * std::numbers::pi;
  Mat out(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      out(j, k) = std::polar(1.0 / std::sqrt(double(d)), two_pi * j * k / d);
  return out;
}

/// Quadratic phase gate P|j> = omega^{j(j-1)/2} |j>; P X P^dag = X Z.
inline Mat qudit_phase(int d) {
  const double two_pi = 2.0 * std::numbers::pi;
  Mat out = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j)
    out(j, j) = std::polar(1.0, two_pi * double((j * (j - 1) / 2) % d) / d);
  return out;
}

/// Multiplication gate M_a|j> = |a j mod d> for a coprime to d.
inline Mat qudit_mult(int d, int a) {
  Mat out = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j) out((a * j) % d, j) = 1.0;
  return out;
}

/// SUM (qudit CNOT): |i, j> -> |i, j + i mod d> on an n-site register.
inline Mat gate_sum(int d, int n, int control, int target) {
  const int dim = static_cast<int>(std::pow(double(d), n) + 0.5);
  Mat out = Mat::Zero(dim, dim);
  std::vector<int> digits(n);
  std::vector<long> weight(n, 1);
  for (int s = n - 2; s >= 0; --s) weight[s] = weight[s + 1] * d;
  for (int i = 0; i < dim; ++i) {
    int rem = i;
    for (int s = n - 1; s >= 0; --s) {
      digits[s] = rem % d;
      rem /= d;
    }
    const int ctrl = digits[control];
    long j = i + (((digits[target] + ctrl) % d) - digits[target]) * weight[target];
    out(j, i) = 1.0;
  }
  return out;
}

/// Generating set for the n-quopit Clifford group (with displacements).
inline std::vector<NamedGate> quopit_clifford_generators(int d, int n) {
  std::vector<NamedGate> gates;
  for (int i = 0; i < n; ++i) {
    gates.push_back({"F" + std::to_string(i), embed_gate(qudit_fourier(d), n, i, d)});
    gates.push_back({"P" + std::to_string(i), embed_gate(qudit_phase(d), n, i, d)});
    gates.push_back({"X" + std::to_string(i), embed_gate(qudit_x(d), n, i, d)});
    gates.push_back({"Z" + std::to_string(i), embed_gate(qudit_z(d), n, i, d)});
    for (int a = 2; a < d; ++a)
      gates.push_back({"M" + std::to_string(a) + "_" + std::to_string(i),
                       embed_gate(qudit_mult(d, a), n, i, d)});
  }
  for (int c = 0; c < n; ++c)
    for (int t = 0; t < n; ++t)
      if (c != t)
        gates.push_back({"SUM" + std::to_string(c) + std::to_string(t),
                         gate_sum(d, n, c, t)});
  return gates;
}

// ---------------------------------------------------------------------------
// Stabilizer state enumeration (breadth-first Clifford orbit of |0...0>)

/// Canonical representative up to global phase: first nonzero amplitude
/// rotated to the positive real axis, vector normalized.
inline Vec canonical_phase(const Vec& v) {
  Vec out = v / v.norm();
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (std::abs(out(i)) > 1e-8) {
      out *= std::conj(out(i)) / std::abs(out(i));
      break;
    }
  }
  return out;
}

namespace detail {
inline std::string state_key(const Vec& v) {
  std::string key;
  key.reserve(v.size() * 8);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const long re = std::lround(v(i).real() * 1e6);
    const long im = std::lround(v(i).imag() * 1e6);
    key.append(reinterpret_cast<const char*>(&re), sizeof(re));
    key.append(reinterpret_cast<const char*>(&im), sizeof(im));
  }
  return key;
}
}  // namespace detail

struct StabilizerStateSet {
  int n = 0;
  std::vector<Vec> states;  // canonical phase, deterministic order

  int dim() const { return 1 << n; }
  int size() const { return static_cast<int>(states.size()); }

  bool contains(const Vec& v) const {
    const Vec c = canonical_phase(v);
    for (const Vec& s : states)
      if ((s - c).norm() < 1e-6) return true;
    return false;
  }
};

/// Expected cardinality 2^n prod_{k=1..n} (2^k + 1).
inline long stabilizer_count_formula(int n) {
  long count = 1L << n;
  for (int k = 1; k <= n; ++k) count *= (1L << k) + 1;
  return count;
}

inline StabilizerStateSet enumerate_stabilizer_states(int n) {
  require(n >= 1 && n <= 3, "stabilizer enumeration supports 1..3 qubits");
  const int dim = 1 << n;
  std::vector<NamedGate> gens = clifford_generators(n);

  Vec start = Vec::Zero(dim);
  start(0) = 1.0;
  start = canonical_phase(start);

  std::deque<Vec> frontier{start};
  std::unordered_set<std::string> seen{detail::state_key(start)};
  std::vector<Vec> found{start};

  while (!frontier.empty()) {
    Vec cur = frontier.front();
    frontier.pop_front();
    for (const NamedGate& g : gens) {
      Vec next = canonical_phase(g.matrix * cur);
      std::string key = detail::state_key(next);
      if (seen.insert(std::move(key)).second) {
        found.push_back(next);
        frontier.push_back(next);
      }
    }
  }

  std::sort(found.begin(), found.end(), [](const Vec& a, const Vec& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const long ar = std::lround(a(i).real() * 1e6), br = std::lround(b(i).real() * 1e6);
      if (ar != br) return ar < br;
      const long ai = std::lround(a(i).imag() * 1e6), bi = std::lround(b(i).imag() * 1e6);
      if (ai != bi) return ai < bi;
    }
    return false;
  });

  StabilizerStateSet set;
  set.n = n;
  set.states = std::move(found);
  require(set.size() == stabilizer_count_formula(n),
          "stabilizer enumeration produced " + std::to_string(set.size()) +
              " states, formula expects " + std::to_string(stabilizer_count_formula(n)));
  return set;
}

/// Single-quopit pure stabilizer states: eigenbases of Z and of X Z^k,
/// k = 0..d-1, giving the d(d+1) mutually unbiased basis vectors.
inline std::vector<Vec> quopit_stabilizer_states(int d) {
  require(d == 3 || d == 5 || d == 7, "quopit stabilizer states need d in {3,5,7}");
  std::vector<Vec> out;
  for (int j = 0; j < d; ++j) {
    Vec v = Vec::Zero(d);
    v(j) = 1.0;
    out.push_back(v);
  }
  const Mat z = qudit_z(d);
  Mat xzk = qudit_x(d);
  for (int k = 0; k < d; ++k) {
    // eigenvectors of the unitary X Z^k (nondegenerate for prime d)
    Eigen::ComplexEigenSolver<Mat> es(xzk);
    for (int c = 0; c < d; ++c) out.push_back(canonical_phase(es.eigenvectors().col(c)));
    xzk = xzk * z;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discrete Wigner function for odd prime d
//
// Convention: omega = exp(2 pi i / d), D_(a,b) = omega^{2^{-1} a b} X^a Z^b
// (equivalently omega^{-2^{-1} a b} Z^b X^a), A_0 = (1/d) sum_u D_u,
// A_u = D_u A_0 D_u^dagger. Under this convention A_0 is the parity operator
// and the discrete Hudson property holds.

inline int inverse_mod(int a, int d) {
  a %= d;
  for (int x = 1; x < d; ++x)
    if ((a * x) % d == 1) return x;
  throw std::invalid_argument("inverse_mod: not invertible");
}

struct PhasePointOperators {
  int d = 0;
  std::vector<Mat> ops;  // indexed u = a * d + b

  const Mat& at(int a, int b) const { return ops[a * d + b]; }
};

inline Mat displacement_operator(int d, int a, int b) {
  const double two_pi = 2.0 * std::numbers::pi;
  const int half = inverse_mod(2, d);
  const Mat x = qudit_x(d), z = qudit_z(d);
  Mat xa = Mat::Identity(d, d), zb = Mat::Identity(d, d);
  for (int i = 0; i < a; ++i) xa = xa * x;
  for (int i = 0; i < b; ++i) zb = zb * z;
  const Complex phase = std::polar(1.0, two_pi * double((half * a * b) % d) / d);
  return phase * xa * zb;
}

inline PhasePointOperators phase_point_operators(int d) {
  require(d == 3 || d == 5 || d == 7, "phase point operators need d odd prime in {3,5,7}");
  std::vector<Mat> disp(d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) disp[a * d + b] = displacement_operator(d, a, b);

  Mat a0 = Mat::Zero(d, d);
  for (const Mat& m : disp) a0 += m;
  a0 /= double(d);

  PhasePointOperators out;
  out.d = d;
  out.ops.resize(d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      Mat m = disp[a * d + b] * a0 * disp[a * d + b].adjoint();
      out.ops[a * d + b] = (m + m.adjoint()) / 2.0;
    }
  return out;
}

/// W_rho(u) = tr(A_u rho) / d; sums to 1.
inline RVec discrete_wigner(const DensityMatrix& rho, const PhasePointOperators& ops) {
  require(rho.dim() == ops.d, "discrete_wigner dimension mismatch");
  RVec w(ops.d * ops.d);
  for (size_t u = 0; u < ops.ops.size(); ++u)
    w(u) = (ops.ops[u] * rho.matrix()).trace().real() / ops.d;
  return w;
}

/// Phase point operators for n quopits are tensor products of the local ones;
/// the Wigner function of the joint state is indexed by u = (u_1, ..., u_n).
inline RVec discrete_wigner_multi(const DensityMatrix& rho, const PhasePointOperators& ops,
                                  int n) {
  const int d = ops.d;
  const long points = std::lround(std::pow(double(d * d), n));
  require(rho.dim() == std::lround(std::pow(double(d), n)),
          "discrete_wigner_multi dimension mismatch");
  RVec w(points);
  std::vector<int> us(n);
  for (long idx = 0; idx < points; ++idx) {
    long rem = idx;
    for (int s = n - 1; s >= 0; --s) {
      us[s] = rem % (d * d);
      rem /= d * d;
    }
    Mat a = Mat::Identity(1, 1);
    for (int s = 0; s < n; ++s) a = tensor(a, ops.ops[us[s]]);
    w(idx) = (a * rho.matrix()).trace().real() / std::pow(double(d), n);
  }
  return w;
}

}  // namespace rulab::stab
