#include "tu1/solver.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "tu1/synthetic.hpp"

#include <cmath>
#include <random>

using namespace tu1;
using tu1::testing::rand_tensor;

namespace {

struct Fixture {
  RTensor m;
  MaskIndexSet mask = MaskIndexSet::full({2});
  TransformFamily fam{1};
  SolverConfig cfg;
};

Fixture synthetic_fixture(std::vector<Index> shape, Index r, double p, std::uint64_t seed,
                          int n_fixed = -1) {
  SyntheticSpec spec;
  spec.shape = std::move(shape);
  spec.R = r;
  spec.seed = seed;
  spec.basis_seed = seed;
  Fixture f;
  f.m = gen_synthetic(spec);
  f.mask = gen_mask(spec.shape, p, seed + 1);
  f.fam = matched_family(spec, n_fixed);
  return f;
}

double core_objective(const PadmmSolver<double>& solver, const Tensor<double>& cand,
                      const SolverState<double>& st, const Tensor<double>& p_hat) {
  const SolverConfig& cfg = solver.config();
  double norm_term = 0;
  if (cfg.model == Model::TCU1) {
    norm_term = u1_norm(cand, solver.family());
  } else {
    norm_term = slice_nuclear_norm(cand, solver.family(), cfg.pair);
  }
  RTensor r = p_hat;
  r -= solver.to_data(cand, st.U);
  RTensor dz = cand;
  dz -= st.Z;
  const double fr = frobenius_norm(r);
  const double fz = frobenius_norm(dz);
  return norm_term + 0.5 * st.mu * fr * fr + 0.5 * st.eta * fz * fz;
}

}  // namespace

TEST_CASE("penalty schedule grows geometrically up to the caps", "[solver]") {
  SolverConfig cfg;
  cfg.rho_mu = 1.1;
  cfg.rho_eta = 1.25;
  cfg.mu_bar = 10.0;
  cfg.eta_bar = 10.0;
  auto [mu1, eta1] = update_penalties(1.0, 1.0, cfg);
  CHECK(mu1 == Catch::Approx(1.1));
  CHECK(eta1 == Catch::Approx(1.25));
  auto [mu2, eta2] = update_penalties(10.0, 10.0, cfg);
  CHECK(mu2 == 10.0);
  CHECK(eta2 == 10.0);

  double mu = 0.5, eta = 0.5;
  for (int t = 0; t < 60; ++t) {
    auto [nmu, neta] = update_penalties(mu, eta, cfg);
    CHECK(nmu >= mu);
    CHECK(neta >= eta);
    CHECK(nmu <= cfg.mu_bar);
    CHECK(neta <= cfg.eta_bar);
    mu = nmu;
    eta = neta;
  }
}

TEST_CASE("solver configuration is validated up front", "[solver]") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  SolverConfig bad = cfg;
  bad.rho_mu = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.mu_bar = bad.mu0 / 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.rho_mu = 1.2;
  bad.rho_eta = 1.3;  // 1.3 < 1.44
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.theorem_mode = false;
  CHECK_NOTHROW(bad.validate());
}

TEST_CASE("solver rejects inconsistent problem setups", "[solver]") {
  const RTensor m = rand_tensor({4, 4, 4}, 433);
  SolverConfig cfg;

  CHECK_THROWS_AS(PadmmSolver<double>(m, MaskIndexSet({4, 4, 4}, std::vector<std::uint8_t>(64, 0)),
                                      TransformFamily(3), cfg),
                  std::invalid_argument);
  CHECK_THROWS_AS(PadmmSolver<double>(m, MaskIndexSet::full({4, 4}), TransformFamily(2), cfg),
                  std::invalid_argument);

  TransformFamily wrong(3);
  wrong.set_fixed(0, dcm(5));
  CHECK_THROWS_AS(PadmmSolver<double>(m, MaskIndexSet::full({4, 4, 4}), wrong, cfg),
                  std::invalid_argument);

  SolverConfig sl = cfg;
  sl.model = Model::TCSL;
  sl.pair = SliceModePair{0, 1};
  TransformFamily fam(3);
  fam.set_learnable(1);
  CHECK_THROWS_AS(PadmmSolver<double>(m, MaskIndexSet::full({4, 4, 4}), fam, sl),
                  std::invalid_argument);
}

TEST_CASE("full observation with fixed transforms reproduces the data", "[solver]") {
  const RTensor m = rand_tensor({6, 6, 6}, 439);
  TransformFamily fam(3);
  for (int k = 0; k < 3; ++k) fam.set_fixed(k, dcm(6));
  SolverConfig cfg;
  // Dense fully observed data needs no completion phase, so weight feasibility
  // heavily from the start; the first multiplier step then cancels the
  // shrinkage bias exactly.
  cfg.mu0 = 1e4;
  const CompletionResult res = complete(m, MaskIndexSet::full({6, 6, 6}), fam, cfg);
  CHECK(res.converged);
  CHECK(relative_error(m, res.recovered) < 1e-5);
  CHECK(res.max_support_violation == 0.0);
}

TEST_CASE("core update obeys first-order optimality", "[solver]") {
  for (const Model model : {Model::TCU1, Model::TCSL}) {
    Fixture f = synthetic_fixture({5, 5, 5, 5}, 2, 0.7, 443, 2);
    f.cfg.model = model;
    if (model == Model::TCSL) f.cfg.pair = SliceModePair{0, 1};
    PadmmSolver<double> solver(f.m, f.mask, f.fam, f.cfg);

    SolverState<double> st = solver.initial_state();
    st.mu = 0.7;
    st.eta = 0.2;
    st.E = psi_project_complement(rand_tensor({5, 5, 5, 5}, 449), f.mask);
    st.Y = rand_tensor({5, 5, 5, 5}, 457);

    const RTensor p = solver.p_hat(st);
    auto [z_next, objective] = solver.update_z(st, p);

    const double norm_check = model == Model::TCU1
                                  ? u1_norm(z_next, f.fam)
                                  : slice_nuclear_norm(z_next, f.fam, f.cfg.pair);
    CHECK(objective == Catch::Approx(norm_check).margin(1e-9));

    const double fbest = core_objective(solver, z_next, st, p);
    std::mt19937_64 rng(461);
    for (int c = 0; c < 100; ++c) {
      RTensor delta = rand_tensor({5, 5, 5, 5}, rng());
      delta *= 1e-3;
      RTensor cand = z_next;
      cand += delta;
      CHECK(fbest <= core_objective(solver, cand, st, p) + 1e-9 * std::max(1.0, fbest));
    }
  }
}

TEST_CASE("huge data weight turns the core update into a projection", "[solver]") {
  Fixture f = synthetic_fixture({5, 5, 5}, 2, 1.0, 463);
  f.cfg.mu0 = 1e8;
  f.cfg.eta0 = 1e-8;
  PadmmSolver<double> solver(f.m, f.mask, f.fam, f.cfg);
  SolverState<double> st = solver.initial_state();
  const RTensor p = solver.p_hat(st);
  auto [z_next, objective] = solver.update_z(st, p);
  (void)objective;
  const RTensor target = solver.to_core(p, st.U);
  CHECK(max_abs_diff(z_next, target) <= 1e-6 * (1.0 + max_abs(target)));
}

TEST_CASE("sparse transformed cores move by at most the threshold", "[solver]") {
  // All modes fixed: the analysis transform of the synthetic data is exactly
  // sparse, so shrinkage only rescales the occupied coefficients.
  Fixture f = synthetic_fixture({6, 6, 6}, 2, 1.0, 467, 3);
  PadmmSolver<double> solver(f.m, f.mask, f.fam, f.cfg);
  SolverState<double> st = solver.initial_state();
  const RTensor p = solver.p_hat(st);
  auto [z_next, objective] = solver.update_z(st, p);
  (void)objective;
  const double tau = 1.0 / (st.mu + st.eta);
  CHECK(max_abs_diff(apply_U(z_next, f.fam), apply_U(st.Z, f.fam)) <= tau + 1e-12);
  CHECK(u0_norm(z_next, f.fam) <= u0_norm(st.Z, f.fam));
}

TEST_CASE("factor update solves the regularized alignment problem", "[solver]") {
  Fixture f = synthetic_fixture({4, 4, 4}, 2, 0.8, 479, 1);
  f.cfg.track_procrustes = true;
  PadmmSolver<double> solver(f.m, f.mask, f.fam, f.cfg);
  REQUIRE(solver.learnable_modes().size() == 2);

  SolverState<double> st = solver.initial_state();
  st.mu = 1.3;
  st.eta = 0.4;
  const RTensor p = solver.p_hat(st);
  auto [z_next, obj] = solver.update_z(st, p);
  (void)obj;

  std::vector<Matrix<double>> u_partial = st.U;
  std::mt19937_64 rng(487);
  for (std::size_t li = 0; li < solver.learnable_modes().size(); ++li) {
    const auto up = solver.update_u(st, p, z_next, li, u_partial);
    CHECK(unitarity_defect(up.u) <= 1e-10);
    CHECK(up.obj_after <= up.obj_before + 1e-9 * std::max(1.0, up.obj_before));

    // Rebuild the quadratic pieces to score random unitary candidates.
    const int kn = solver.learnable_modes()[li];
    RTensor a = z_next;
    for (std::size_t mi = li + 1; mi < solver.learnable_modes().size(); ++mi) {
      a = mode_product(a, Matrix<double>(st.U[mi].adjoint()), solver.learnable_modes()[mi]);
    }
    RTensor b = p;
    for (std::size_t mi = 0; mi < li; ++mi) {
      b = mode_product(b, u_partial[mi], solver.learnable_modes()[mi]);
    }
    const Matrix<double> ak = mode_unfold(a, kn);
    const Matrix<double> bk = mode_unfold(b, kn);
    auto objective = [&](const Matrix<double>& u) {
      return 0.5 * st.mu * (u * bk - ak).squaredNorm() +
             0.5 * st.eta * (u - st.U[li]).squaredNorm();
    };
    CHECK(up.obj_after == Catch::Approx(objective(up.u)).margin(1e-9));
    for (int c = 0; c < 200; ++c) {
      const Matrix<double> cand = random_orthogonal(4, rng());
      CHECK(objective(up.u) <= objective(cand) + 1e-9);
    }
    u_partial[li] = up.u;
  }
}

TEST_CASE("aligned data with no proximal pull keeps the identity factor", "[solver]") {
  Fixture f = synthetic_fixture({4, 4, 4}, 2, 0.8, 491, 1);
  PadmmSolver<double> solver(f.m, f.mask, f.fam, f.cfg);
  const RTensor a = rand_tensor({4, 4, 4}, 499);
  const auto up = solver.update_u_from_pair(a, a, Matrix<double>::Identity(4, 4), 1, 2.0, 1e-12);
  CHECK((up.u - Matrix<double>::Identity(4, 4)).norm() < 1e-8);
}

TEST_CASE("error update lives on the unobserved set and minimizes its objective", "[solver]") {
  Fixture f = synthetic_fixture({5, 4, 3}, 2, 0.5, 503, 1);
  PadmmSolver<double> solver(f.m, f.mask, f.fam, f.cfg);
  SolverState<double> st = solver.initial_state();
  st.mu = 0.9;
  st.eta = 0.3;
  st.E = psi_project_complement(rand_tensor({5, 4, 3}, 509), f.mask);
  st.Y = rand_tensor({5, 4, 3}, 521);
  const RTensor x_next = rand_tensor({5, 4, 3}, 523);

  const RTensor e_next = solver.update_e(st, x_next);
  CHECK(max_abs(psi_project(e_next, f.mask)) == 0.0);

  const RTensor& psi_m = solver.observed();
  for (Index i = 0; i < e_next.numel(); ++i) {
    if (f.mask.observed(i)) continue;
    const double expect =
        (st.mu * (psi_m[i] - x_next[i] + st.Y[i] / st.mu) + st.eta * st.E[i]) / (st.mu + st.eta);
    CHECK(e_next[i] == Catch::Approx(expect).margin(1e-12));
  }

  auto objective = [&](const RTensor& e) {
    RTensor r = psi_m;
    r -= x_next;
    r -= e;
    RTensor y = st.Y;
    y *= 1.0 / st.mu;
    r += y;
    RTensor de = e;
    de -= st.E;
    const double fr = frobenius_norm(r);
    const double fe = frobenius_norm(de);
    return 0.5 * st.mu * fr * fr + 0.5 * st.eta * fe * fe;
  };
  std::mt19937_64 rng(541);
  const double fbest = objective(e_next);
  for (int c = 0; c < 100; ++c) {
    RTensor delta = psi_project_complement(rand_tensor({5, 4, 3}, rng()), f.mask);
    delta *= 1e-3;
    RTensor cand = e_next;
    cand += delta;
    CHECK(fbest <= objective(cand) + 1e-9 * std::max(1.0, fbest));
  }

  // Full observation leaves no room for an error term.
  Fixture g = synthetic_fixture({4, 4, 4}, 2, 1.0, 547, 1);
  PadmmSolver<double> full(g.m, g.mask, g.fam, g.cfg);
  SolverState<double> fst = full.initial_state();
  CHECK(max_abs(full.update_e(fst, rand_tensor({4, 4, 4}, 557))) == 0.0);
}

TEST_CASE("multiplier update applies the exact affine formula", "[solver]") {
  RTensor m({2, 2, 2});
  for (Index i = 0; i < 8; ++i) m[i] = static_cast<double>(i + 1);
  TransformFamily fam(3);
  SolverConfig cfg;
  PadmmSolver<double> solver(m, MaskIndexSet::full({2, 2, 2}), fam, cfg);

  SolverState<double> st = solver.initial_state();
  st.mu = 2.0;
  for (Index i = 0; i < 8; ++i) st.Y[i] = 2.0;

  RTensor x = m;
  x *= 0.5;
  RTensor e = m;
  e *= 0.25;
  const RTensor y_next = solver.update_y(st, x, e);
  for (Index i = 0; i < 8; ++i) {
    CHECK(y_next[i] == Catch::Approx(2.0 * (m[i] - x[i] - e[i]) + 2.0).margin(1e-12));
  }

  // Zero residual leaves the multiplier alone.
  RTensor e0({2, 2, 2});
  const RTensor y_same = solver.update_y(st, m, e0);
  CHECK(max_abs_diff(y_same, st.Y) == 0.0);

  // From a zero multiplier one step gives mu times the residual.
  SolverState<double> st0 = solver.initial_state();
  st0.mu = 3.0;
  const RTensor y1 = solver.update_y(st0, x, e0);
  for (Index i = 0; i < 8; ++i) CHECK(y1[i] == Catch::Approx(3.0 * (m[i] - x[i])).margin(1e-12));
}

TEST_CASE("solver recovers a synthetic low-rank instance", "[solver]") {
  Fixture f = synthetic_fixture({16, 16, 16}, 2, 0.6, 563);
  f.cfg.track_procrustes = true;
  const CompletionResult res = complete(f.m, f.mask, f.fam, f.cfg);

  CHECK(res.converged);
  CHECK(relative_error(f.m, res.recovered) <= 1e-2);
  CHECK(res.terminal_relative_residual <= 1e-6);
  CHECK(res.max_support_violation == 0.0);
  CHECK(res.max_unitarity_defect <= 1e-8);
  CHECK(res.y_bounded);
  CHECK(res.procrustes_monotone);

  double prev_mu = 0, prev_eta = 0;
  double total = 0;
  std::vector<double> terms;
  for (const IterationRecord& rec : res.history) {
    CHECK(rec.mu >= prev_mu);
    CHECK(rec.eta >= prev_eta);
    prev_mu = rec.mu;
    prev_eta = rec.eta;
    const double s =
        rec.eta * (rec.dZ * rec.dZ + rec.dX * rec.dX + rec.dU_max * rec.dU_max);
    terms.push_back(s);
    total += s;
  }
  REQUIRE(std::isfinite(total));
  double tail = 0;
  for (std::size_t i = terms.size() - terms.size() / 4; i < terms.size(); ++i) tail += terms[i];
  CHECK(tail <= 0.1 * total);

  // Feasibility falls below the relative target and stays there at the end.
  const double ref = frobenius_norm(psi_project(f.m, f.mask));
  CHECK(res.history.back().residual <= 1e-6 * ref);
}

TEST_CASE("slice-rank solver recovers a synthetic low-rank instance", "[solver]") {
  // Slice-wise nuclear completion needs far more samples than the sparse-core
  // model: each transformed slice is completed as its own small low-rank
  // matrix, so stay in the generously observed regime.
  Fixture f = synthetic_fixture({12, 12, 12, 12}, 1, 0.9, 569, 2);
  f.cfg.model = Model::TCSL;
  f.cfg.pair = SliceModePair{0, 1};
  const CompletionResult res = complete(f.m, f.mask, f.fam, f.cfg);
  CHECK(res.converged);
  CHECK(relative_error(f.m, res.recovered) <= 1e-2);
  CHECK(res.terminal_relative_residual <= 1e-6);
  CHECK(res.max_support_violation == 0.0);
  CHECK(res.max_unitarity_defect <= 1e-8);
}

TEST_CASE("complex fixed transforms run end to end on real data", "[solver]") {
  const RTensor m = rand_tensor({6, 5, 4}, 571);
  TransformFamily fam(3);
  fam.set_fixed(0, Matrix<cplx>(dfm(6)));
  fam.set_learnable(2);
  REQUIRE(!fam.is_real());

  SolverConfig cfg;
  cfg.max_iter = 80;
  const CompletionResult res = complete(m, gen_mask({6, 5, 4}, 0.8, 577), fam, cfg);
  CHECK(res.iterations <= 80);
  if (!res.converged) CHECK(res.iterations == 80);
  CHECK(res.max_support_violation <= 1e-12);
  CHECK(res.max_unitarity_defect <= 1e-8);
  CHECK(res.recovered.shape() == std::vector<Index>{6, 5, 4});
}

TEST_CASE("random orthogonal initialization is deterministic per seed", "[solver]") {
  Fixture f = synthetic_fixture({5, 5, 5}, 2, 0.8, 587);
  f.cfg.u_init = SolverConfig::UInit::RandomOrthogonal;
  f.cfg.seed = 11;
  PadmmSolver<double> s1(f.m, f.mask, f.fam, f.cfg);
  PadmmSolver<double> s2(f.m, f.mask, f.fam, f.cfg);
  f.cfg.seed = 12;
  PadmmSolver<double> s3(f.m, f.mask, f.fam, f.cfg);

  const auto u1 = s1.initial_state().U;
  const auto u2 = s2.initial_state().U;
  const auto u3 = s3.initial_state().U;
  REQUIRE(!u1.empty());
  for (std::size_t i = 0; i < u1.size(); ++i) {
    CHECK((u1[i] - u2[i]).norm() == 0.0);
    CHECK(unitarity_defect(u1[i]) <= 1e-10);
  }
  CHECK((u1[0] - u3[0]).norm() > 1e-3);
}
