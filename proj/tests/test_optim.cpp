#include <rulab/optim.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <sstream>

using namespace rulab;
using namespace rulab::optim;
using Catch::Approx;

namespace {

Vec basis_vec(int dim, int i) {
  Vec v = Vec::Zero(dim);
  v(i) = 1.0;
  return v;
}

PureState t_state() {
  Vec v(2);
  v << 1.0 / std::sqrt(2.0), std::polar(1.0 / std::sqrt(2.0), std::numbers::pi / 4);
  return PureState(v);
}

// Exhaustive small-support oracle for single-qubit stabilizer extent:
// brute force over all sub-dictionaries of size <= 3, minimizing
// (sum |c_i|)^2 over exact decompositions.
double extent_oracle_1q(const PureState& psi, const stab::StabilizerStateSet& dict) {
  const Vec target = psi.amplitudes();
  double best = kInf;
  const int n = dict.size();

  for (int i = 0; i < n; ++i) {
    if (std::abs(std::abs(dict.states[i].dot(target)) - 1.0) < 1e-10) best = std::min(best, 1.0);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Mat a(2, 2);
      a.col(0) = dict.states[i];
      a.col(1) = dict.states[j];
      if (std::abs(a.determinant()) < 1e-9) continue;
      Vec c = a.colPivHouseholderQr().solve(target);
      if ((a * c - target).norm() > 1e-10) continue;
      const double l1 = c.cwiseAbs().sum();
      best = std::min(best, l1 * l1);
    }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        Mat a(2, 3);
        a.col(0) = dict.states[i];
        a.col(1) = dict.states[j];
        a.col(2) = dict.states[k];
        // particular solution and (complex) null direction
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(a);
        if (cod.rank() < 2) continue;
        Vec c0 = cod.solve(target);
        Eigen::FullPivLU<Mat> lu(a);
        Mat null_space = lu.kernel();
        if (null_space.cols() != 1) continue;
        Vec nv = null_space.col(0);
        auto objective = [&](const RVec& t) {
          Vec c = c0 + Complex(t(0), t(1)) * nv;
          return c.cwiseAbs().sum();
        };
        SearchOptions so;
        so.restarts = 8;
        so.seed = 99;
        so.init_scale = 1.0;
        SearchResult r = multi_restart_search(objective, 2, so);
        best = std::min(best, r.best_value * r.best_value);
      }
  return best;
}

// distance from the origin to the convex hull of the eigenvalues of a
// normal matrix (= its numerical range)
double numerical_range_distance(const Mat& w) {
  Eigen::ComplexSchur<Mat> schur(w);
  std::vector<Complex> pts;
  for (int i = 0; i < w.rows(); ++i) pts.push_back(schur.matrixT()(i, i));
  // distance from 0 to conv(pts): minimize |sum q_i p_i| over the simplex;
  // for a small point set, scan segment pairs (hull edges are enough)
  double best = kInf;
  for (size_t i = 0; i < pts.size(); ++i) {
    best = std::min(best, std::abs(pts[i]));
    for (size_t j = i + 1; j < pts.size(); ++j) {
      const Complex a = pts[i], b = pts[j];
      const Complex d = b - a;
      double t = 0.0;
      const double dn = std::norm(d);
      if (dn > 1e-18) t = std::clamp(-((a.real() * d.real()) + (a.imag() * d.imag())) / dn, 0.0, 1.0);
      best = std::min(best, std::abs(a + t * d));
    }
  }
  // interior test: if 0 is inside the hull, the distance is 0
  // (check via linear programming on a coarse angular sweep)
  bool outside = false;
  for (int ang = 0; ang < 720; ++ang) {
    const double th = ang * std::numbers::pi / 360.0;
    const Complex dir = std::polar(1.0, th);
    bool all_positive = true;
    for (const Complex& p : pts)
      if (p.real() * dir.real() + p.imag() * dir.imag() < 1e-12) {
        all_positive = false;
        break;
      }
    if (all_positive) {
      outside = true;
      break;
    }
  }
  return outside ? best : 0.0;
}

Mat random_channel_choi(int d, Rng& rng, int num_kraus = 3) {
  // mixed-unitary channel
  std::vector<double> p(num_kraus);
  double s = 0;
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (auto& x : p) s += (x = u(rng));
  Mat j = Mat::Zero(d * d, d * d);
  for (int k = 0; k < num_kraus; ++k) j += (p[k] / s) * choi_of_unitary(haar_unitary(d, rng));
  return j;
}

}  // namespace

TEST_CASE("embedding round-trips exactly") {
  Rng rng(4);
  Mat h = random_hermitian(3, rng);
  RMat e = embed_hermitian(h);
  CHECK(max_abs(unembed_hermitian(e) - h) == 0.0);
  CHECK((e - e.transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("trivial SDP: min t with t I >= I gives t = 1") {
  SdpProblem p;
  p.blocks.dense = {2};
  p.blocks.nonneg = 1;
  p.objective = BlockVec::zero(p.blocks);
  p.objective.nonneg(0) = 1.0;

  std::vector<RMat> basis;
  basis.push_back((RMat(2, 2) << 1, 0, 0, 0).finished());
  basis.push_back((RMat(2, 2) << 0, 0, 0, 1).finished());
  basis.push_back((RMat(2, 2) << 0, 1, 1, 0).finished());
  p.rhs.resize(3);
  for (int i = 0; i < 3; ++i) {
    BlockVec a = BlockVec::zero(p.blocks);
    a.dense[0] = -basis[i];
    a.nonneg(0) = basis[i].trace();
    p.constraints.push_back(a);
    p.rhs(i) = basis[i].trace() == 0 ? 0.0 : 1.0;
  }
  p.rhs(2) = 0.0;

  SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SdpStatus::Optimal);
  CHECK(sol.primal_value == Approx(1.0).margin(1e-7));
  CHECK(sol.primal_value >= sol.dual_value - 1e-9);  // weak duality
}

TEST_CASE("dmax: stabilizer states and the maximally mixed state sit at zero") {
  stab::StabilizerStateSet dict = stab::enumerate_stabilizer_states(1);

  DensityMatrix mixed(Mat::Identity(2, 2) / 2.0);
  CHECK(dmax(mixed, dict).value == Approx(0.0).margin(1e-6));

  DensityMatrix stab0(basis_vec(2, 0) * basis_vec(2, 0).adjoint());
  CHECK(dmax(stab0, dict).value == Approx(0.0).margin(1e-6));
}

TEST_CASE("dmax: vertex primal agrees with the independent dual program") {
  stab::StabilizerStateSet dict1 = stab::enumerate_stabilizer_states(1);
  stab::StabilizerStateSet dict2 = stab::enumerate_stabilizer_states(2);
  Rng rng(17);
  for (int t = 0; t < 30; ++t) {
    DensityMatrix rho = random_density_matrix(2, rng);
    DmaxResult primal = dmax(rho, dict1);
    DmaxResult dual = dmax_dual_program(rho, dict1);
    CHECK(std::abs(primal.value - dual.value) < 1e-6);
    CHECK(primal.gap < 1e-6);  // internal certificate
  }
  for (int t = 0; t < 5; ++t) {
    DensityMatrix rho = random_density_matrix(4, rng);
    DmaxResult primal = dmax(rho, dict2);
    DmaxResult dual = dmax_dual_program(rho, dict2);
    CHECK(std::abs(primal.value - dual.value) < 1e-6);
  }
}

TEST_CASE("stabilizer extent: dictionary members, T state oracle, feasibility") {
  stab::StabilizerStateSet dict = stab::enumerate_stabilizer_states(1);

  for (const Vec& s : dict.states) {
    ExtentResult r = stabilizer_extent(PureState(s), dict);
    CHECK(r.converged);
    CHECK(r.extent == Approx(1.0).margin(1e-6));
  }

  PureState t = t_state();
  ExtentResult rt = stabilizer_extent(t, dict);
  REQUIRE(rt.converged);
  const double oracle = extent_oracle_1q(t, dict);
  CHECK(rt.extent == Approx(oracle).margin(1e-6));
  CHECK(rt.feasibility < 1e-8);

  // the T state extent is strictly greater than one
  CHECK(rt.extent > 1.05);

  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    PureState psi = random_pure_state(2, rng);
    ExtentResult r = stabilizer_extent(psi, dict);
    REQUIRE(r.converged);
    CHECK(r.extent == Approx(extent_oracle_1q(psi, dict)).margin(1e-5));
    CHECK(r.feasibility < 1e-8);
    CHECK(r.extent >= 1.0 - 1e-9);
  }
}

TEST_CASE("stabilizer extent is multiplicative on small tensor products") {
  stab::StabilizerStateSet dict1 = stab::enumerate_stabilizer_states(1);
  stab::StabilizerStateSet dict2 = stab::enumerate_stabilizer_states(2);
  Rng rng(29);
  for (int trial = 0; trial < 3; ++trial) {
    PureState a = random_pure_state(2, rng);
    PureState b = random_pure_state(2, rng);
    PureState ab(tensor(a.amplitudes(), b.amplitudes()));
    double xa = stabilizer_extent(a, dict1).extent;
    double xb = stabilizer_extent(b, dict1).extent;
    double xab = stabilizer_extent(ab, dict2).extent;
    CHECK(xab == Approx(xa * xb).margin(1e-5));
  }
}

TEST_CASE("diamond norm: zero map, unitary closed form, sandwich") {
  Mat zero_choi = Mat::Zero(4, 4);
  CHECK(diamond_norm(zero_choi, 2, 2).value == Approx(0.0).margin(1e-8));

  // identity vs Z on a qubit: numerical range of Z covers 0, so the norm is 2
  Mat ji = choi_of_unitary(Mat::Identity(2, 2));
  Mat jz = choi_of_unitary(stab::pauli_z());
  DiamondResult r = diamond_norm(ji - jz, 2, 2);
  CHECK(r.value == Approx(2.0).margin(1e-6));
  CHECK(r.gap < 1e-6);

  Rng rng(31);
  for (int d : {2, 3}) {
    for (int trial = 0; trial < 4; ++trial) {
      Mat u = haar_unitary(d, rng), v = haar_unitary(d, rng);
      const double nu = numerical_range_distance(u.adjoint() * v);
      const double closed_form = 2.0 * std::sqrt(std::max(0.0, 1.0 - nu * nu));
      DiamondResult dr = diamond_norm(choi_of_unitary(u) - choi_of_unitary(v), d, d);
      CHECK(dr.value == Approx(closed_form).margin(1e-6));

      // sampled numerical-range consistency: sampled points lie no closer
      double sampled = kInf;
      Mat w = u.adjoint() * v;
      for (int s = 0; s < 2000; ++s) {
        Vec psi = random_pure_state(d, rng).amplitudes();
        sampled = std::min(sampled, std::abs((psi.adjoint() * w * psi)(0, 0)));
      }
      CHECK(sampled >= nu - 1e-9);
    }
  }

  for (int trial = 0; trial < 5; ++trial) {
    Mat j1 = random_channel_choi(2, rng), j2 = random_channel_choi(2, rng);
    DiamondResult dr = diamond_norm(j1 - j2, 2, 2);
    CHECK(dr.lower_bound <= dr.value + 1e-7);
    CHECK(dr.value <= dr.upper_bound + 1e-7);
  }
}

TEST_CASE("apply_choi reproduces the channel") {
  Rng rng(37);
  Mat u = haar_unitary(3, rng);
  Mat j = choi_of_unitary(u);
  DensityMatrix rho = random_density_matrix(3, rng);
  Mat out = apply_choi(j, rho.matrix(), 3, 3);
  CHECK(max_abs(out - u * rho.matrix() * u.adjoint()) < 1e-12);
}

TEST_CASE("multi-restart search: convex quadratic and determinism") {
  auto f = [](const RVec& x) {
    RVec c(3);
    c << 1.0, -2.0, 0.5;
    return (x - c).squaredNorm() + 3.0;
  };
  SearchOptions o;
  o.restarts = 4;
  o.seed = 5;
  SearchResult r1 = multi_restart_search(f, 3, o);
  CHECK(r1.best_value == Approx(3.0).margin(1e-8));
  CHECK(std::abs(r1.best_point(1) + 2.0) < 1e-4);

  SearchResult r2 = multi_restart_search(f, 3, o);
  REQUIRE(r1.traces.size() == r2.traces.size());
  for (size_t i = 0; i < r1.traces.size(); ++i) {
    CHECK(r1.traces[i].value == r2.traces[i].value);  // bit-identical per restart
    CHECK(r1.traces[i].iterations == r2.traces[i].iterations);
  }

  // integer chart: minimize distance to a target word
  auto g = [](const RVec& x) {
    double s = 0;
    for (int i = 0; i < x.size(); ++i) s += std::abs(x(i) - double(i % 3));
    return s;
  };
  SearchOptions oi;
  oi.restarts = 3;
  oi.seed = 8;
  oi.integer_range = {3};
  SearchResult ri = multi_restart_search(g, 5, oi);
  CHECK(ri.best_value == Approx(0.0).margin(1e-12));
}

TEST_CASE("sdp instance dump is parseable text") {
  SdpProblem p;
  p.blocks.dense = {2};
  p.blocks.nonneg = 1;
  p.objective = BlockVec::zero(p.blocks);
  p.objective.nonneg(0) = 1.0;
  BlockVec a = BlockVec::zero(p.blocks);
  a.dense[0] = RMat::Identity(2, 2);
  p.constraints.push_back(a);
  p.rhs = RVec::Ones(1);

  std::ostringstream os;
  dump_sdp(p, os);
  CHECK(os.str().rfind("rulab-sdp 1 2 1 1", 0) == 0);
  CHECK(os.str().find("\nc\n") != std::string::npos);
}
