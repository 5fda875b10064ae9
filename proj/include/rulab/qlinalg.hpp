// Dense complex linear algebra and quantum-information primitives.
// Everything here is a pure function of its inputs; values are immutable
// after construction and safe to share across threads.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rulab {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

namespace tol {
inline constexpr double hermitian = 1e-10;
inline constexpr double trace_one = 1e-10;
inline constexpr double unit_norm = 1e-10;
inline constexpr double unitarity = 1e-10;
inline constexpr double psd_clamp = 1e-10;   // eigenvalues in [-psd_clamp, 0) clamp to 0
inline constexpr double support_cut = 1e-12; // rank cutoff for support projections
}  // namespace tol

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double log2_safe(double x) { return std::log2(x); }

/// Binary entropy b(x) = -x log2 x - (1-x) log2 (1-x), with b(0)=b(1)=0.
inline double binary_entropy(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

inline bool all_finite(const Mat& m) {
  return m.allFinite();
}

inline double hermiticity_defect(const Mat& m) {
  return max_abs(m - m.adjoint());
}

// ---------------------------------------------------------------------------
// Validated quantum objects

class DensityMatrix {
 public:
  explicit DensityMatrix(Mat m) : mat_(std::move(m)) {
    require(mat_.rows() == mat_.cols(), "density matrix must be square");
    require(all_finite(mat_), "density matrix entries must be finite");
    require(hermiticity_defect(mat_) <= tol::hermitian,
            "density matrix must be Hermitian within 1e-10 (defect " +
                std::to_string(hermiticity_defect(mat_)) + ")");
    Eigen::SelfAdjointEigenSolver<Mat> es(mat_, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    require(lmin >= -tol::psd_clamp,
            "density matrix must be positive semidefinite within 1e-10 "
            "(min eigenvalue " + std::to_string(lmin) + ")");
    const double tr = mat_.trace().real();
    require(std::abs(tr - 1.0) <= tol::trace_one,
            "density matrix trace must be 1 within 1e-10 (got " +
                std::to_string(tr) + ")");
  }

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Mat& matrix() const { return mat_; }

 private:
  Mat mat_;
};

class PureState {
 public:
  explicit PureState(Vec amps) : amps_(std::move(amps)) {
    require(amps_.allFinite(), "pure state amplitudes must be finite");
    const double n = amps_.norm();
    require(std::abs(n - 1.0) <= tol::unit_norm,
            "pure state must have unit norm within 1e-10 (got " +
                std::to_string(n) + ")");
  }

  int dim() const { return static_cast<int>(amps_.size()); }
  const Vec& amplitudes() const { return amps_; }
  Mat projector() const { return amps_ * amps_.adjoint(); }
  DensityMatrix to_density() const { return DensityMatrix(projector()); }

 private:
  Vec amps_;
};

class UnitaryOperator {
 public:
  explicit UnitaryOperator(Mat m) : mat_(std::move(m)) {
    require(mat_.rows() == mat_.cols(), "unitary must be square");
    require(all_finite(mat_), "unitary entries must be finite");
    const Mat defect = mat_.adjoint() * mat_ - Mat::Identity(mat_.rows(), mat_.cols());
    require(max_abs(defect) <= 100 * tol::unitarity * std::sqrt(double(mat_.rows())),
            "operator must be unitary within tolerance (max |U'U - I| = " +
                std::to_string(max_abs(defect)) + ")");
  }

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Mat& matrix() const { return mat_; }

 private:
  Mat mat_;
};

// ---------------------------------------------------------------------------
// Tensor products and partial traces

/// Kronecker product with row-major index convention: index = i_a * d_b + i_b.
/// Column vectors produce a column vector, matrices a matrix.
template <typename DA, typename DB>
auto tensor(const Eigen::MatrixBase<DA>& a_, const Eigen::MatrixBase<DB>& b_) {
  if constexpr (DA::ColsAtCompileTime == 1 && DB::ColsAtCompileTime == 1) {
    const Vec a = a_, b = b_;
    Vec out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
      out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
  } else {
    const Mat a = a_, b = b_;
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
  }
}

enum class Subsystem { A, B };

/// Trace out one factor of a bipartite operator on H_A (x) H_B.
inline Mat partial_trace(const Mat& m, Subsystem keep, int dim_a, int dim_b) {
  require(m.rows() == m.cols(), "partial trace needs a square matrix");
  require(m.rows() == Eigen::Index(dim_a) * dim_b,
          "partial trace dimension mismatch: matrix is " +
              std::to_string(m.rows()) + ", expected " +
              std::to_string(dim_a * dim_b));
  if (keep == Subsystem::A) {
    Mat out = Mat::Zero(dim_a, dim_a);
    for (int i = 0; i < dim_a; ++i)
      for (int j = 0; j < dim_a; ++j)
        for (int k = 0; k < dim_b; ++k)
          out(i, j) += m(i * dim_b + k, j * dim_b + k);
    return out;
  }
  Mat out = Mat::Zero(dim_b, dim_b);
  for (int i = 0; i < dim_b; ++i)
    for (int j = 0; j < dim_b; ++j)
      for (int k = 0; k < dim_a; ++k)
        out(i, j) += m(k * dim_b + i, k * dim_b + j);
  return out;
}

// ---------------------------------------------------------------------------
// Hermitian eigen-decompositions, square roots and logarithms

struct EighResult {
  RVec eigenvalues;  // ascending
  Mat eigenvectors;  // columns match eigenvalue order
};

inline EighResult eigh(const Mat& h) {
  require(h.rows() == h.cols(), "eigh needs a square matrix");
  require(hermiticity_defect(h) <= 1e-8 * std::max(1.0, max_abs(h)),
          "eigh requires a Hermitian matrix (defect " +
              std::to_string(hermiticity_defect(h)) + ")");
  Eigen::SelfAdjointEigenSolver<Mat> es((h + h.adjoint()) / 2.0);
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Eigenvalues in [-1e-10, 0) clamp to 0; more negative values are an error.
inline RVec clamp_psd_spectrum(const RVec& lam, double scale = 1.0) {
  RVec out = lam;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out(i) < 0.0) {
      require(out(i) >= -tol::psd_clamp * std::max(1.0, scale) * 100,
              "matrix is not PSD after tolerance clamping (eigenvalue " +
                  std::to_string(out(i)) + ")");
      out(i) = 0.0;
    }
  }
  return out;
}

inline Mat matrix_sqrt(const Mat& h) {
  EighResult e = eigh(h);
  RVec lam = clamp_psd_spectrum(e.eigenvalues, e.eigenvalues.cwiseAbs().maxCoeff());
  // sqrt amplifies rounding noise near zero, so flatten the numerical nullspace
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) < tol::support_cut) lam(i) = 0.0;
  RVec s = lam.cwiseSqrt();
  return e.eigenvectors * s.asDiagonal() * e.eigenvectors.adjoint();
}

/// Base-2 logarithm of a strictly positive definite Hermitian matrix.
inline Mat matrix_log2(const Mat& h) {
  EighResult e = eigh(h);
  RVec lam = e.eigenvalues;
  RVec l(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    require(lam(i) > tol::support_cut, "matrix_log2 requires positive definite input");
    l(i) = std::log2(lam(i));
  }
  return e.eigenvectors * l.asDiagonal() * e.eigenvectors.adjoint();
}

// ---------------------------------------------------------------------------
// Norms and distances

/// Sum of singular values. SVD-based so non-Hermitian intermediates are fine.
inline double trace_norm(const Mat& m) {
  require(m.rows() == m.cols(), "trace_norm needs a square matrix");
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().sum();
}

inline double operator_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

/// Uhlmann fidelity F(rho, sigma) = || sqrt(rho) sqrt(sigma) ||_1, in [0, 1].
inline double uhlmann_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  require(rho.dim() == sigma.dim(), "fidelity needs equal dimensions");
  const Mat m = matrix_sqrt(rho.matrix()) * matrix_sqrt(sigma.matrix());
  Eigen::JacobiSVD<Mat> svd(m);
  double f = svd.singularValues().sum();
  return std::min(1.0, std::max(0.0, f));
}

/// Bures distance L(rho, sigma) = sqrt(2 (1 - F)), in [0, sqrt(2)].
inline double bures_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return std::sqrt(std::max(0.0, 2.0 * (1.0 - uhlmann_fidelity(rho, sigma))));
}

inline double bures_from_fidelity(double f) {
  return std::sqrt(std::max(0.0, 2.0 * (1.0 - std::min(1.0, f))));
}

// ---------------------------------------------------------------------------
// Entropies (all logarithms base 2)

/// von Neumann entropy, -sum lambda log2 lambda with 0 log 0 := 0.
inline double von_neumann_entropy(const DensityMatrix& rho) {
  EighResult e = eigh(rho.matrix());
  double s = 0.0;
  for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i) {
    const double l = e.eigenvalues(i);
    if (l > tol::support_cut) s -= l * std::log2(l);
  }
  return std::max(0.0, s);
}

/// Quantum relative entropy S(rho || sigma) in bits; +inf when
/// supp(rho) is not contained in supp(sigma).
inline double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
  require(rho.dim() == sigma.dim(), "relative entropy needs equal dimensions");
  EighResult er = eigh(rho.matrix());
  EighResult es = eigh(sigma.matrix());

  // support check: weight of rho outside supp(sigma)
  double outside = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues.size(); ++k) {
    if (es.eigenvalues(k) <= tol::support_cut) {
      const Vec v = es.eigenvectors.col(k);
      outside += std::real((v.adjoint() * rho.matrix() * v)(0, 0));
    }
  }
  if (outside > 1e-10) return kInf;

  double s = 0.0;
  for (Eigen::Index i = 0; i < er.eigenvalues.size(); ++i) {
    const double l = er.eigenvalues(i);
    if (l > tol::support_cut) s += l * std::log2(l);
  }
  for (Eigen::Index k = 0; k < es.eigenvalues.size(); ++k) {
    const double m = es.eigenvalues(k);
    if (m > tol::support_cut) {
      const Vec v = es.eigenvectors.col(k);
      const double w = std::real((v.adjoint() * rho.matrix() * v)(0, 0));
      s -= w * std::log2(m);
    }
  }
  return std::max(0.0, s);
}

// ---------------------------------------------------------------------------
// Random objects (explicit generator everywhere; no hidden RNG state)

using Rng = std::mt19937_64;

inline Complex randn_complex(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Complex(n(rng), n(rng));
}

inline Vec random_gaussian_vector(int dim, Rng& rng) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = randn_complex(rng);
  return v;
}

inline Mat random_gaussian_matrix(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = randn_complex(rng);
  return m;
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
inline Mat haar_unitary(int dim, Rng& rng) {
  Mat g = random_gaussian_matrix(dim, dim, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i) {
    Complex d = r(i, i);
    q.col(i) *= (std::abs(d) > 0 ? d / std::abs(d) : Complex(1, 0));
  }
  return q;
}

inline PureState random_pure_state(int dim, Rng& rng) {
  Vec v = random_gaussian_vector(dim, rng);
  return PureState(v / v.norm());
}

/// Full-rank random density matrix: normalized Wishart G G^dagger / tr.
inline DensityMatrix random_density_matrix(int dim, Rng& rng, int rank = 0) {
  if (rank <= 0 || rank > dim) rank = dim;
  Mat g = random_gaussian_matrix(dim, rank, rng);
  Mat w = g * g.adjoint();
  w /= w.trace().real();
  w = (w + w.adjoint()) / 2.0;
  return DensityMatrix(w);
}

inline Mat random_hermitian(int dim, Rng& rng) {
  Mat g = random_gaussian_matrix(dim, dim, rng);
  return (g + g.adjoint()) / 2.0;
}

/// Purification of rho on H_S (x) H_R with dim(R) = dim(S).
inline Vec purify(const DensityMatrix& rho) {
  EighResult e = eigh(rho.matrix());
  const int d = rho.dim();
  Vec psi = Vec::Zero(d * d);
  for (int k = 0; k < d; ++k) {
    const double l = std::max(0.0, e.eigenvalues(k));
    if (l <= 0) continue;
    const double s = std::sqrt(l);
    for (int i = 0; i < d; ++i) psi(i * d + k) += s * e.eigenvectors(i, k);
  }
  return psi;
}

}  // namespace rulab
