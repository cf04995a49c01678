#include "tu1/norms.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <cmath>
#include <random>

using namespace tu1;
using tu1::testing::rand_matrix;
using tu1::testing::rand_tensor;

namespace {

TransformFamily identity_family(int order) { return TransformFamily(order); }

TransformFamily dfm_family(const std::vector<Index>& shape) {
  TransformFamily fam(static_cast<int>(shape.size()));
  for (std::size_t k = 0; k < shape.size(); ++k) {
    fam.set_fixed(static_cast<int>(k), dfm(shape[k]));
  }
  return fam;
}

TransformFamily dcm_family(const std::vector<Index>& shape) {
  TransformFamily fam(static_cast<int>(shape.size()));
  for (std::size_t k = 0; k < shape.size(); ++k) {
    fam.set_fixed(static_cast<int>(k), dcm(shape[k]));
  }
  return fam;
}

}  // namespace

TEST_CASE("u0 counts transformed nonzeros above the relative cut", "[norms]") {
  const TransformFamily id = identity_family(2);
  CHECK(u0_norm(RTensor({3, 3}), id) == 0);

  RTensor one({3, 3});
  one(1, 2) = -4.0;
  CHECK(u0_norm(one, id) == 1);

  // A delta spreads over every Fourier coefficient.
  CTensor delta({4, 4});
  delta(0, 0) = 1.0;
  CHECK(u0_norm(delta, dfm_family({4, 4})) == 16);
}

TEST_CASE("u1 equals the transformed l1 norm", "[norms]") {
  const RTensor a = rand_tensor({3, 3, 3}, 301);
  const TransformFamily id = identity_family(3);
  CHECK(u1_norm(a, id) == elementwise_norms(a).l1);
  CHECK(u1_norm(RTensor({2, 2, 2}), dcm_family({2, 2, 2})) == 0.0);

  RTensor oracle = a;
  for (int k = 0; k < 3; ++k) oracle = mode_product(oracle, dcm(3), k);
  CHECK(u1_norm(a, dcm_family({3, 3, 3})) == Catch::Approx(elementwise_norms(oracle).l1).epsilon(1e-12));
}

TEST_CASE("uinf equals the transformed max modulus", "[norms]") {
  const RTensor a = rand_tensor({4, 3, 2}, 311);
  CHECK(uinf_norm(a, identity_family(3)) == elementwise_norms(a).linf);
  CHECK(uinf_norm(RTensor({2, 2, 2}), identity_family(3)) == 0.0);
}

TEST_CASE("max-modulus norm is dual to the transformed l1 norm", "[norms]") {
  std::mt19937_64 rng(317);
  for (int trial = 0; trial < 100; ++trial) {
    const CTensor a = rand_tensor<cplx>({3, 4, 2}, rng());
    const CTensor b = rand_tensor<cplx>({3, 4, 2}, rng());
    TransformFamily fam = dfm_family({3, 4, 2});
    const double pairing = std::abs(inner(a, b));
    CHECK(pairing <= u1_norm(a, fam) * uinf_norm(b, fam) + 1e-9);

    // The phase witness achieves the bound.
    const CTensor w = u1_subgradient_witness(a, fam);
    const double lhs = inner(a, w).real();
    const double rhs = u1_norm(a, fam) * uinf_norm(w, fam);
    CHECK(std::abs(uinf_norm(w, fam) - 1.0) < 1e-10);
    CHECK(std::abs(lhs - rhs) < 1e-8 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("slice nuclear norm sums per-slice singular values", "[norms]") {
  const RTensor m2 = rand_tensor({4, 5}, 331);
  const Matrix<double> m = mode_unfold(m2, 0);
  const double nuc = singular_values(m).sum();
  CHECK(slice_nuclear_norm(m2, identity_family(2), SliceModePair{0, 1}) ==
        Catch::Approx(nuc).epsilon(1e-12));

  RTensor stack({3, 3, 3});
  for (Index s = 0; s < 3; ++s) stack(0, 0, s) = 1.0;  // rank-1 unit slices
  CHECK(slice_nuclear_norm(stack, identity_family(3), SliceModePair{0, 1}) ==
        Catch::Approx(3.0).epsilon(1e-12));

  const CTensor a = rand_tensor<cplx>({4, 4, 3}, 337);
  const TransformFamily fam = dfm_family({4, 4, 3});
  const CTensor t = apply_U(a, fam);
  double oracle = 0;
  for (Index s = 0; s < 3; ++s) {
    oracle += singular_values(slice(t, {{2, s}})).sum();
  }
  CHECK(slice_nuclear_norm(a, fam, SliceModePair{0, 1}) == Catch::Approx(oracle).epsilon(1e-9));

  CHECK_THROWS_AS(slice_nuclear_norm(a, fam, SliceModePair{1, 1}), std::invalid_argument);
}

TEST_CASE("slice spectral norm takes the max over slices", "[norms]") {
  CHECK(slice_spectral_norm(RTensor({3, 3, 2}), identity_family(3), SliceModePair{0, 1}) == 0.0);

  RTensor eyes({3, 3, 4});
  for (Index s = 0; s < 4; ++s) {
    for (Index i = 0; i < 3; ++i) eyes(i, i, s) = 1.0;
  }
  CHECK(slice_spectral_norm(eyes, identity_family(3), SliceModePair{0, 1}) ==
        Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("slice norms satisfy the nuclear-spectral duality pairing", "[norms]") {
  std::mt19937_64 rng(347);
  const SliceModePair pair{0, 1};
  for (int trial = 0; trial < 50; ++trial) {
    const CTensor a = rand_tensor<cplx>({4, 3, 3}, rng());
    const CTensor b = rand_tensor<cplx>({4, 3, 3}, rng());
    const TransformFamily fam = dfm_family({4, 3, 3});
    const double pairing = std::abs(inner(a, b));
    const double bound = slice_nuclear_norm(a, fam, pair) * slice_spectral_norm(b, fam, pair);
    CHECK(pairing <= bound + 1e-9);

    // Per-slice polar witness: U(b) slice = U_s V_s^H from the SVD of U(a).
    CTensor t = apply_U(a, fam);
    SliceScan scan(t, pair.k1, pair.k2);
    Matrix<cplx> sl;
    for (Index s = 0; s < scan.count(); ++s) {
      scan.gather(t, s, sl);
      Eigen::JacobiSVD<Matrix<cplx>> svd(sl, Eigen::ComputeThinU | Eigen::ComputeThinV);
      sl = svd.matrixU() * svd.matrixV().adjoint();
      scan.scatter(sl, s, t);
    }
    const CTensor wit = apply_U_inverse(t, fam);
    const double lhs = inner(a, wit).real();
    const double nuc = slice_nuclear_norm(a, fam, pair);
    CHECK(std::abs(slice_spectral_norm(wit, fam, pair) - 1.0) < 1e-8);
    CHECK(std::abs(lhs - nuc) < 1e-8 * std::max(1.0, nuc));
  }
}

TEST_CASE("soft threshold shrinks moduli and keeps phases", "[norms]") {
  RTensor a({3});
  a(0) = 3.0;
  a(1) = -0.5;
  a(2) = 0.0;
  const RTensor s = soft_threshold(a, 1.0);
  CHECK(s(0) == Catch::Approx(2.0));
  CHECK(s(1) == 0.0);
  CHECK(s(2) == 0.0);

  CTensor c({1});
  c(0) = cplx(3.0, 4.0);
  const CTensor cs = soft_threshold(c, 1.0);
  CHECK(std::abs(cs(0) - cplx(2.4, 3.2)) < 1e-12);

  CHECK_THROWS_AS(soft_threshold(a, 0.0), std::invalid_argument);
}

TEST_CASE("soft threshold solves the scalar shrinkage problem", "[norms]") {
  std::mt19937_64 rng(353);
  for (int trial = 0; trial < 10; ++trial) {
    const double v = 4.0 * tu1::testing::randn(rng);
    const double tau = 0.3 + std::abs(tu1::testing::randn(rng));
    RTensor a({1});
    a(0) = v;
    const double x = soft_threshold(a, tau)(0);
    auto objective = [&](double z) { return tau * std::abs(z) + 0.5 * (z - v) * (z - v); };
    double best = objective(-6.0);
    for (double z = -6.0; z <= 6.0; z += 1e-4) best = std::min(best, objective(z));
    CHECK(objective(x) <= best + 1e-6);
  }
}

TEST_CASE("singular value thresholding matches its closed-form edge cases", "[norms]") {
  const Matrix<double> m = rand_matrix<double>(4, 3, 359);
  const auto sv = singular_values(m);
  for (Index i = 1; i < sv.size(); ++i) CHECK(sv(i - 1) >= sv(i));

  CHECK(svt(m, sv(0) + 1.0).norm() == 0.0);
  CHECK((svt(m, 1e-300) - m).norm() < 1e-10);

  auto [shrunk, nuc] = svt_with_norm(m, 0.5);
  CHECK(nuc == Catch::Approx(singular_values(shrunk).sum()).margin(1e-9));
}

TEST_CASE("singular value thresholding minimizes the nuclear prox objective", "[norms]") {
  std::mt19937_64 rng(367);
  auto objective = [](const Matrix<double>& x, const Matrix<double>& m, double tau) {
    return tau * singular_values(x).sum() + 0.5 * (x - m).squaredNorm();
  };
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix<double> m = rand_matrix<double>(3, 3, rng());
    const double tau = 0.5 + std::abs(tu1::testing::randn(rng));
    const Matrix<double> x = svt(m, tau);
    const double fx = objective(x, m, tau);
    for (int c = 0; c < 200; ++c) {
      const Matrix<double> cand = x + 0.3 * rand_matrix<double>(3, 3, rng());
      CHECK(fx <= objective(cand, m, tau) + 1e-9);
    }
  }
}

TEST_CASE("prox operators are nonexpansive", "[norms]") {
  std::mt19937_64 rng(373);
  for (int trial = 0; trial < 20; ++trial) {
    const CTensor a = rand_tensor<cplx>({3, 3}, rng());
    const CTensor b = rand_tensor<cplx>({3, 3}, rng());
    CTensor d = a;
    d -= b;
    CTensor pd = soft_threshold(a, 0.7);
    pd -= soft_threshold(b, 0.7);
    CHECK(frobenius_norm(pd) <= frobenius_norm(d) + 1e-10);

    const Matrix<double> ma = rand_matrix<double>(4, 3, rng());
    const Matrix<double> mb = rand_matrix<double>(4, 3, rng());
    CHECK((svt(ma, 0.7) - svt(mb, 0.7)).norm() <= (ma - mb).norm() + 1e-10);
  }
}

TEST_CASE("phase witness reduces to the sign tensor for identity families", "[norms]") {
  RTensor a({4});
  a(0) = 2.0;
  a(1) = -3.0;
  a(2) = 0.0;
  a(3) = 1e-9;
  const RTensor w = u1_subgradient_witness(a, identity_family(1));
  CHECK(w(0) == 1.0);
  CHECK(w(1) == -1.0);
  CHECK(w(2) == 0.0);
  CHECK(w(3) == 1.0);
}

TEST_CASE("subgradient inequality holds for the phase witness", "[norms]") {
  std::mt19937_64 rng(379);
  const TransformFamily fam = dfm_family({3, 3, 2});
  for (int trial = 0; trial < 100; ++trial) {
    const CTensor a = rand_tensor<cplx>({3, 3, 2}, rng());
    const CTensor b = rand_tensor<cplx>({3, 3, 2}, rng());
    const CTensor w = u1_subgradient_witness(a, fam);
    CTensor d = b;
    d -= a;
    const double gain = inner(d, w).real();
    CHECK(u1_norm(b, fam) + 1e-9 >= u1_norm(a, fam) + gain);
  }
}

TEST_CASE("membership test accepts the subdifferential and rejects outsiders", "[norms]") {
  const TransformFamily fam = dfm_family({3, 3});
  const CTensor a = rand_tensor<cplx>({3, 3}, 383);
  const CTensor w = u1_subgradient_witness(a, fam);
  CHECK(u1_subgradient_member(w, a, fam));

  // Adding a small off-support bump stays inside; scaling the witness up
  // violates the on-support equality.
  CTensor big = w;
  big *= cplx(1.5, 0.0);
  CHECK(!u1_subgradient_member(big, a, fam));

  // For the zero tensor every bounded candidate is a subgradient.
  const CTensor zero({3, 3});
  CTensor f = u1_subgradient_witness(rand_tensor<cplx>({3, 3}, 389), fam);
  f *= cplx(0.99, 0.0);
  CHECK(u1_subgradient_member(f, zero, fam));
}

TEST_CASE("transformed norms satisfy the norm axioms", "[norms]") {
  std::mt19937_64 rng(397);
  const TransformFamily fam = dfm_family({3, 4, 2});
  const SliceModePair pair{0, 1};
  for (int trial = 0; trial < 25; ++trial) {
    const CTensor a = rand_tensor<cplx>({3, 4, 2}, rng());
    const CTensor b = rand_tensor<cplx>({3, 4, 2}, rng());
    const double alpha = 2.0 * tu1::testing::randn(rng);
    CTensor sa = a;
    sa *= cplx(alpha, 0.0);
    CTensor sum = a;
    sum += b;

    CHECK(u1_norm(sa, fam) == Catch::Approx(std::abs(alpha) * u1_norm(a, fam)).margin(1e-9));
    CHECK(uinf_norm(sa, fam) == Catch::Approx(std::abs(alpha) * uinf_norm(a, fam)).margin(1e-9));
    CHECK(slice_nuclear_norm(sa, fam, pair) ==
          Catch::Approx(std::abs(alpha) * slice_nuclear_norm(a, fam, pair)).margin(1e-9));

    CHECK(u1_norm(sum, fam) <= u1_norm(a, fam) + u1_norm(b, fam) + 1e-9);
    CHECK(uinf_norm(sum, fam) <= uinf_norm(a, fam) + uinf_norm(b, fam) + 1e-9);
    CHECK(slice_nuclear_norm(sum, fam, pair) <=
          slice_nuclear_norm(a, fam, pair) + slice_nuclear_norm(b, fam, pair) + 1e-9);
  }
}

TEST_CASE("u1 is invariant under permuting transform columns with the data", "[norms]") {
  const RTensor a = rand_tensor({4, 3}, 401);
  TransformFamily fam(2);
  fam.set_fixed(0, dcm(4));

  // Permute mode 0: new transform dcm(4)*P, new data A x0 P^T.
  Matrix<double> p = Matrix<double>::Zero(4, 4);
  p(0, 2) = p(1, 0) = p(2, 3) = p(3, 1) = 1.0;
  TransformFamily fam_p(2);
  fam_p.set_fixed(0, Matrix<double>(dcm(4) * p));
  const RTensor a_p = mode_product(a, Matrix<double>(p.transpose()), 0);
  CHECK(u1_norm(a, fam) == Catch::Approx(u1_norm(a_p, fam_p)).epsilon(1e-12));
}

TEST_CASE("u1 is bounded by u0 times uinf", "[norms]") {
  std::mt19937_64 rng(409);
  const TransformFamily fam = dfm_family({3, 3, 3});
  for (int trial = 0; trial < 25; ++trial) {
    const CTensor a = rand_tensor<cplx>({3, 3, 3}, rng());
    CHECK(u1_norm(a, fam) <=
          static_cast<double>(u0_norm(a, fam)) * uinf_norm(a, fam) + 1e-9);
  }
}
