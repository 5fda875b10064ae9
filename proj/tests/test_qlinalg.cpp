#include <rulab/qlinalg.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace rulab;
using Catch::Approx;

namespace {

Mat ket(int dim, int i) {
  Mat m = Mat::Zero(dim, dim);
  m(i, i) = 1.0;
  return m;
}

Vec basis_vec(int dim, int i) {
  Vec v = Vec::Zero(dim);
  v(i) = 1.0;
  return v;
}

const Mat kPauliX = (Mat(2, 2) << 0, 1, 1, 0).finished();

DensityMatrix random_qubit(Rng& rng) { return random_density_matrix(2, rng); }

}  // namespace

TEST_CASE("tensor: identity, basis bookkeeping, bit flips") {
  CHECK(max_abs(tensor(Mat::Identity(2, 2), Mat::Identity(2, 2)) - Mat::Identity(4, 4)) == 0.0);

  // |0><0| (x) |1><1| has its single 1 at row/col index 0*2+1 = 1
  Mat t = tensor(ket(2, 0), ket(2, 1));
  CHECK(std::abs(t(1, 1) - 1.0) < 1e-15);
  CHECK(t.cwiseAbs().sum() == Approx(1.0));

  Vec v00 = tensor(basis_vec(2, 0), basis_vec(2, 0));
  Mat xx = tensor(kPauliX, kPauliX);
  Vec v11 = tensor(basis_vec(2, 1), basis_vec(2, 1));
  CHECK((xx * v00 - v11).norm() < 1e-15);
}

TEST_CASE("partial_trace: product states, Bell state, trace preservation") {
  Rng rng(42);
  DensityMatrix rho = random_density_matrix(3, rng);
  DensityMatrix sigma = random_density_matrix(2, rng);

  Mat joint = tensor(rho.matrix(), sigma.matrix());
  Mat back = partial_trace(joint, Subsystem::A, 3, 2);
  CHECK(max_abs(back - rho.matrix()) < 1e-10);
  Mat back_b = partial_trace(joint, Subsystem::B, 3, 2);
  CHECK(max_abs(back_b - sigma.matrix()) < 1e-10);

  Vec bell = (tensor(basis_vec(2, 0), basis_vec(2, 0)) +
              tensor(basis_vec(2, 1), basis_vec(2, 1))) /
             std::sqrt(2.0);
  Mat red = partial_trace(bell * bell.adjoint(), Subsystem::B, 2, 2);
  CHECK(max_abs(red - Mat::Identity(2, 2) / 2.0) < 1e-12);

  // oracle: trace of the reduced matrix equals the full trace
  Mat h = random_hermitian(6, rng);
  Mat ta = partial_trace(h, Subsystem::A, 2, 3);
  CHECK(std::abs(ta.trace() - h.trace()) < 1e-12);

  CHECK_THROWS_AS(partial_trace(h, Subsystem::A, 2, 2), std::invalid_argument);
}

TEST_CASE("uhlmann_fidelity: fixed points and derived value") {
  Rng rng(7);
  DensityMatrix rho = random_qubit(rng);
  CHECK(uhlmann_fidelity(rho, rho) == Approx(1.0).margin(1e-10));

  DensityMatrix p0(ket(2, 0)), p1(ket(2, 1));
  CHECK(uhlmann_fidelity(p0, p1) == Approx(0.0).margin(1e-10));

  // derived by direct eigendecomposition: F(|0><0|, I/2) = sqrt(<0|I/2|0>)
  DensityMatrix mixed(Mat::Identity(2, 2) / 2.0);
  CHECK(uhlmann_fidelity(p0, mixed) == Approx(1.0 / std::sqrt(2.0)).margin(1e-10));

  for (int t = 0; t < 20; ++t) {
    DensityMatrix a = random_qubit(rng), b = random_qubit(rng);
    CHECK(std::abs(uhlmann_fidelity(a, b) - uhlmann_fidelity(b, a)) < 1e-9);
  }
}

TEST_CASE("bures_distance: range and Fuchs-van de Graaf sandwich") {
  DensityMatrix p0(ket(2, 0)), p1(ket(2, 1));
  CHECK(bures_distance(p0, p0) == Approx(0.0).margin(1e-10));
  CHECK(bures_distance(p0, p1) == Approx(std::sqrt(2.0)).margin(1e-10));

  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    DensityMatrix a = random_qubit(rng), b = random_qubit(rng);
    double l = bures_distance(a, b);
    double td = trace_norm(a.matrix() - b.matrix());
    CHECK(0.5 * l * l <= 0.5 * td + 1e-9);
    CHECK(0.5 * td <= l + 1e-9);
  }
}

TEST_CASE("trace_norm: zero, orthogonal projectors, classical oracle") {
  CHECK(trace_norm(Mat::Zero(3, 3)) == Approx(0.0).margin(1e-15));
  CHECK(trace_norm(ket(2, 0) - ket(2, 1)) == Approx(2.0).margin(1e-12));

  // commuting diagonal states: trace distance is the L1 distance of spectra
  RVec p(3), q(3);
  p << 0.5, 0.3, 0.2;
  q << 0.1, 0.6, 0.3;
  Mat d = Mat::Zero(3, 3);
  double l1 = 0;
  for (int i = 0; i < 3; ++i) {
    d(i, i) = p(i) - q(i);
    l1 += std::abs(p(i) - q(i));
  }
  CHECK(trace_norm(d) == Approx(l1).margin(1e-12));
}

TEST_CASE("von_neumann_entropy: pure, maximally mixed, binary oracle") {
  Rng rng(3);
  PureState psi = random_pure_state(4, rng);
  CHECK(von_neumann_entropy(psi.to_density()) == Approx(0.0).margin(1e-9));

  for (int d = 2; d <= 5; ++d) {
    DensityMatrix mm(Mat::Identity(d, d) / double(d));
    CHECK(von_neumann_entropy(mm) == Approx(std::log2(double(d))).margin(1e-10));
  }

  Mat diag = Mat::Zero(2, 2);
  diag(0, 0) = 0.75;
  diag(1, 1) = 0.25;
  CHECK(von_neumann_entropy(DensityMatrix(diag)) == Approx(binary_entropy(0.25)).margin(1e-12));
}

TEST_CASE("relative_entropy: zero, infinity, plus state") {
  Rng rng(5);
  DensityMatrix rho = random_density_matrix(3, rng);
  CHECK(relative_entropy(rho, rho) == Approx(0.0).margin(1e-9));

  DensityMatrix p0(ket(2, 0)), p1(ket(2, 1));
  CHECK(std::isinf(relative_entropy(p0, p1)));

  Vec plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  DensityMatrix plus_dm = PureState(plus).to_density();
  DensityMatrix mixed(Mat::Identity(2, 2) / 2.0);
  CHECK(relative_entropy(plus_dm, mixed) == Approx(1.0).margin(1e-10));
}

TEST_CASE("matrix_sqrt, matrix_log2, eigh contracts") {
  CHECK(max_abs(matrix_sqrt(Mat::Identity(3, 3)) - Mat::Identity(3, 3)) < 1e-12);

  Rng rng(9);
  PureState psi = random_pure_state(3, rng);
  Mat proj = psi.projector();
  CHECK(max_abs(matrix_sqrt(proj) - proj) < 1e-9);

  Mat d21 = Mat::Zero(2, 2);
  d21(0, 0) = 2;
  d21(1, 1) = 1;
  EighResult e = eigh(d21);
  CHECK(e.eigenvalues(0) == Approx(1.0));  // ascending order contract
  CHECK(e.eigenvalues(1) == Approx(2.0));

  for (int t = 0; t < 10; ++t) {
    int d = 2 + (t % 4);
    Mat h = random_hermitian(d, rng);
    EighResult r = eigh(h);
    Mat rec = r.eigenvectors * r.eigenvalues.asDiagonal().toDenseMatrix().cast<Complex>() *
              r.eigenvectors.adjoint();
    CHECK(trace_norm(rec - h) <= 1e-8 * d);
  }

  Mat pd = Mat::Identity(2, 2) * 2.0;
  CHECK(max_abs(matrix_log2(pd) - Mat::Identity(2, 2)) < 1e-12);
  CHECK_THROWS_AS(eigh(kPauliX + Mat::Identity(2, 2) * Complex(0, 1)), std::invalid_argument);
}

TEST_CASE("validation errors name the violated invariant") {
  Mat bad_trace = ket(2, 0) * 0.9;
  CHECK_THROWS_WITH(DensityMatrix(bad_trace), Catch::Matchers::ContainsSubstring("trace"));

  Mat non_herm = Mat::Zero(2, 2);
  non_herm(0, 1) = 1.0;
  CHECK_THROWS_WITH(DensityMatrix(non_herm), Catch::Matchers::ContainsSubstring("Hermitian"));

  Mat neg = Mat::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_WITH(DensityMatrix(neg), Catch::Matchers::ContainsSubstring("semidefinite"));

  Vec unnorm(2);
  unnorm << 1.0, 1.0;
  CHECK_THROWS_WITH(PureState(unnorm), Catch::Matchers::ContainsSubstring("norm"));

  CHECK_THROWS_AS(UnitaryOperator(ket(2, 0)), std::invalid_argument);
}

TEST_CASE("module invariants: entropy additivity, joint convexity, purification") {
  Rng rng(13);
  for (int t = 0; t < 10; ++t) {
    DensityMatrix a = random_density_matrix(2, rng);
    DensityMatrix b = random_density_matrix(3, rng);
    DensityMatrix ab(tensor(a.matrix(), b.matrix()));
    CHECK(std::abs(von_neumann_entropy(ab) -
                   von_neumann_entropy(a) - von_neumann_entropy(b)) < 1e-8);
  }

  // joint convexity spot check
  for (int t = 0; t < 10; ++t) {
    DensityMatrix r1 = random_density_matrix(2, rng), r2 = random_density_matrix(2, rng);
    DensityMatrix s1 = random_density_matrix(2, rng), s2 = random_density_matrix(2, rng);
    double lam = 0.3;
    DensityMatrix rm(lam * r1.matrix() + (1 - lam) * r2.matrix());
    DensityMatrix sm(lam * s1.matrix() + (1 - lam) * s2.matrix());
    double lhs = relative_entropy(rm, sm);
    double rhs = lam * relative_entropy(r1, s1) + (1 - lam) * relative_entropy(r2, s2);
    CHECK(lhs <= rhs + 1e-8);
  }

  for (int t = 0; t < 5; ++t) {
    DensityMatrix rho = random_density_matrix(3, rng);
    Vec psi = purify(rho);
    CHECK(std::abs(psi.norm() - 1.0) < 1e-10);
    Mat red = partial_trace(psi * psi.adjoint(), Subsystem::A, 3, 3);
    CHECK(max_abs(red - rho.matrix()) < 1e-10);
  }

  // Haar unitaries are unitary
  for (int t = 0; t < 5; ++t) {
    Mat u = haar_unitary(4, rng);
    CHECK(max_abs(u.adjoint() * u - Mat::Identity(4, 4)) < 1e-12);
  }
}
