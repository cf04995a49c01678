#pragma once

#include "tu1/mask.hpp"
#include "tu1/norms.hpp"
#include "tu1/tensor.hpp"
#include "tu1/transforms.hpp"

#include <Eigen/SVD>

#include <cstdint>
#include <utility>
#include <vector>

namespace tu1 {

enum class Model { TCU1, TCSL };

// Defaults are calibrated on scale-normalized data (see PadmmSolver::solve):
// mu0 sets the first shrinkage threshold 1/(mu0+eta0) just below the peak
// transformed magnitude, eta0 keeps the proximal anchor inert through the
// active phase, and rho_eta sits close to its theorem-mode floor rho_mu^2 so
// mu has grown enough for tight feasibility by the time eta freezes the
// iterates.
struct SolverConfig {
  double rho_mu = 1.10;   // penalty growth factor for mu
  double rho_eta = 1.22;  // proximal weight growth factor
  double mu_bar = 1e8;    // cap on mu
  double eta_bar = 1e12;  // cap on eta
  double mu0 = 3.0;
  double eta0 = 1e-4;
  double eps = 1e-8;  // max-modulus tolerance on iterate changes, in scale-normalized units
  int max_iter = 500;
  Model model = Model::TCU1;
  SliceModePair pair{};  // slice modes for Model::TCSL

  // Convergence-analysis conditions require eta to outgrow mu squared in the
  // pre-cap regime; theorem_mode enforces rho_eta > rho_mu^2 up front.
  bool theorem_mode = true;
  // The boundedness of the multiplier sequence is a hypothesis of the
  // analysis, surfaced as a runtime diagnostic against this bound.
  double y_norm_bound = 1e12;
  bool track_procrustes = false;

  enum class UInit { Identity, RandomOrthogonal };
  UInit u_init = UInit::Identity;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(rho_mu > 1.0) || !(rho_eta > 1.0)) {
      throw std::invalid_argument("penalty growth factors must exceed 1");
    }
    if (!(mu0 > 0) || !(eta0 > 0)) throw std::invalid_argument("initial penalties must be positive");
    if (mu_bar < mu0 || eta_bar < eta0) {
      throw std::invalid_argument("penalty caps must be at least the initial values");
    }
    if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
    if (theorem_mode && !(rho_eta > rho_mu * rho_mu)) {
      throw std::invalid_argument("theorem mode requires rho_eta > rho_mu^2");
    }
  }
};

template <typename S>
struct SolverState {
  Tensor<S> Z;                // core iterate
  std::vector<Matrix<S>> U;   // learnable factors, aligned with learnable modes ascending
  Tensor<S> E;                // auxiliary variable supported on the unobserved set
  Tensor<S> Y;                // Lagrange multiplier
  double mu = 0;
  double eta = 0;
  int t = 0;
};

struct IterationRecord {
  int t = 0;
  double objective = 0;  // U1 norm (or slice-wise nuclear norm) of Z
  double residual = 0;   // ||Psi_I(M) - X - E||_F
  double mu = 0;
  double eta = 0;
  double dZ = 0;
  double dX = 0;
  double dU_max = 0;
};

template <typename S>
struct SolveResult {
  Tensor<S> X;
  Tensor<S> Z;
  std::vector<Matrix<S>> U;
  bool converged = false;
  int iterations = 0;
  double objective = 0;
  double terminal_residual = 0;
  double terminal_relative_residual = 0;
  std::vector<IterationRecord> history;

  // Diagnostics mirroring the convergence analysis.
  double max_y_norm = 0;
  bool y_bounded = true;
  bool eta_cap_warning = false;
  double max_unitarity_defect = 0;
  double max_support_violation = 0;  // max modulus of E on the observed set
  bool procrustes_monotone = true;   // only meaningful with track_procrustes
  double procrustes_worst_increase = 0;
};

inline std::pair<double, double> update_penalties(double mu, double eta, const SolverConfig& cfg) {
  return {std::min(cfg.mu_bar, cfg.rho_mu * mu), std::min(cfg.eta_bar, cfg.rho_eta * eta)};
}

/// Proximal ADMM solver for the TC-U1 and TC-SL completion models.
///
/// The observed tensor is held as Psi_I(M); the iteration alternates a
/// shrinkage step on the core, orthogonal Procrustes updates of the learnable
/// factors, a projection step for the unobserved-set variable and a multiplier
/// ascent, with geometrically growing penalty and proximal weights.
template <typename S>
class PadmmSolver {
 public:
  PadmmSolver(const Tensor<S>& observed, MaskIndexSet mask, TransformFamily family,
              SolverConfig config)
      : mask_(std::move(mask)), fam_(std::move(family)), cfg_(std::move(config)) {
    cfg_.validate();
    mask_.check_compatible(observed);
    if (fam_.order() != observed.order()) throw std::invalid_argument("family order mismatch");
    if (mask_.observed_count() == 0) throw std::invalid_argument("mask has no observed entries");
    learnable_ = fam_.learnable_modes();
    if (cfg_.model == Model::TCSL) {
      cfg_.pair.validate(observed.order());
      for (int m : learnable_) {
        if (m == cfg_.pair.k1 || m == cfg_.pair.k2) {
          throw std::invalid_argument("slice modes of TC-SL cannot be learnable");
        }
      }
    }
    for (int m : fam_.fixed_modes()) {
      if (fam_.fixed_matrix_complex(m).cols() != observed.extent(m)) {
        throw std::invalid_argument("fixed transform size does not match tensor extent");
      }
    }
    psi_m_ = psi_project(observed, mask_);
    psi_m_norm_ = frobenius_norm(psi_m_);
  }

  const Tensor<S>& observed() const { return psi_m_; }
  const MaskIndexSet& mask() const { return mask_; }
  const TransformFamily& family() const { return fam_; }
  const SolverConfig& config() const { return cfg_; }
  const std::vector<int>& learnable_modes() const { return learnable_; }

  SolverState<S> initial_state() const {
    SolverState<S> st;
    st.U.reserve(learnable_.size());
    for (std::size_t i = 0; i < learnable_.size(); ++i) {
      const Index n = psi_m_.extent(learnable_[i]);
      if (cfg_.u_init == SolverConfig::UInit::RandomOrthogonal) {
        const Matrix<double> q = random_orthogonal(n, cfg_.seed + i);
        st.U.push_back(q.template cast<S>());
      } else {
        st.U.push_back(Matrix<S>::Identity(n, n));
      }
    }
    st.Z = to_core(psi_m_, st.U);
    st.E = Tensor<S>(psi_m_.shape());
    st.Y = Tensor<S>(psi_m_.shape());
    st.mu = cfg_.mu0;
    st.eta = cfg_.eta0;
    st.t = 0;
    return st;
  }

  /// Core -> data: applies the conjugate-transposed learnable factors.
  Tensor<S> to_data(const Tensor<S>& z, const std::vector<Matrix<S>>& u) const {
    Tensor<S> x = z;
    for (std::size_t i = 0; i < learnable_.size(); ++i) {
      x = mode_product(x, Matrix<S>(u[i].adjoint()), learnable_[i]);
    }
    return x;
  }

  /// Data -> core: applies the learnable factors.
  Tensor<S> to_core(const Tensor<S>& x, const std::vector<Matrix<S>>& u) const {
    Tensor<S> z = x;
    for (std::size_t i = 0; i < learnable_.size(); ++i) {
      z = mode_product(z, u[i], learnable_[i]);
    }
    return z;
  }

  Tensor<S> p_hat(const SolverState<S>& st) const {
    Tensor<S> p = psi_m_;
    p -= st.E;
    Tensor<S> y = st.Y;
    y *= S(1.0 / st.mu);
    p += y;
    return p;
  }

  /// Shrinkage step on the core. Returns the new core together with the value
  /// of the regularizer at the new core (a byproduct of the thresholding).
  std::pair<Tensor<S>, double> update_z(const SolverState<S>& st, const Tensor<S>& p_hat) const {
    const double denom = st.mu + st.eta;
    const double tau = 1.0 / denom;
    Tensor<S> w = to_core(p_hat, st.U);
    w *= S(st.mu / denom);
    Tensor<S> zprev = st.Z;
    zprev *= S(st.eta / denom);
    w += zprev;

    Tensor<S> t = apply_U(w, fam_);
    double objective = 0;
    if (cfg_.model == Model::TCU1) {
      for (S& v : t.data()) {
        const double m = detail::modulus(v);
        if (m > tau) {
          v *= S((m - tau) / m);
          objective += m - tau;
        } else {
          v = S(0);
        }
      }
    } else {
      SliceScan scan(t, cfg_.pair.k1, cfg_.pair.k2);
      Matrix<S> sl;
      for (Index s = 0; s < scan.count(); ++s) {
        scan.gather(t, s, sl);
        auto [shrunk, nuc] = svt_with_norm(sl, tau);
        objective += nuc;
        scan.scatter(shrunk, s, t);
      }
    }
    return {apply_U_inverse(t, fam_), objective};
  }

  struct ProcrustesUpdate {
    Matrix<S> u;
    double obj_before = 0;
    double obj_after = 0;
  };

  /// Procrustes update of the learnable factor at position `li` (ascending
  /// order). `u_partial` carries already-updated factors for positions < li
  /// and the incumbent factors elsewhere.
  ProcrustesUpdate update_u(const SolverState<S>& st, const Tensor<S>& p_hat,
                            const Tensor<S>& z_next, std::size_t li,
                            const std::vector<Matrix<S>>& u_partial) const {
    const int kn = learnable_[li];
    Tensor<S> a = z_next;
    for (std::size_t mi = li + 1; mi < learnable_.size(); ++mi) {
      a = mode_product(a, Matrix<S>(st.U[mi].adjoint()), learnable_[mi]);
    }
    Tensor<S> b = p_hat;
    for (std::size_t mi = 0; mi < li; ++mi) {
      b = mode_product(b, u_partial[mi], learnable_[mi]);
    }
    return update_u_from_pair(a, b, st.U[li], kn, st.mu, st.eta);
  }

  /// min over unitary U of mu/2 ||U B_(kn) - A_(kn)||_F^2 + eta/2 ||U - U_old||_F^2,
  /// solved by the polar factor of mu A_(kn) B_(kn)^H + eta U_old.
  ProcrustesUpdate update_u_from_pair(const Tensor<S>& a, const Tensor<S>& b,
                                      const Matrix<S>& u_old, int kn, double mu,
                                      double eta) const {
    const Matrix<S> ak = mode_unfold(a, kn);
    const Matrix<S> bk = mode_unfold(b, kn);
    Matrix<S> g = Matrix<S>(mu * (ak * bk.adjoint()));
    g += S(eta) * u_old;
    ProcrustesUpdate out;
    out.u = polar_unitary(g);
    if (cfg_.track_procrustes) {
      auto objective = [&](const Matrix<S>& u) {
        return 0.5 * mu * (u * bk - ak).squaredNorm() + 0.5 * eta * (u - u_old).squaredNorm();
      };
      out.obj_before = objective(u_old);
      out.obj_after = objective(out.u);
    }
    return out;
  }

  Tensor<S> update_e(const SolverState<S>& st, const Tensor<S>& x_next) const {
    const double denom = st.mu + st.eta;
    Tensor<S> r = psi_m_;
    r -= x_next;
    Tensor<S> y = st.Y;
    y *= S(1.0 / st.mu);
    r += y;
    r *= S(st.mu / denom);
    Tensor<S> eprev = st.E;
    eprev *= S(st.eta / denom);
    r += eprev;
    return psi_project_complement(r, mask_);
  }

  Tensor<S> update_y(const SolverState<S>& st, const Tensor<S>& x_next,
                     const Tensor<S>& e_next) const {
    Tensor<S> r = psi_m_;
    r -= x_next;
    r -= e_next;
    r *= S(st.mu);
    r += st.Y;
    return r;
  }

  /// Runs the iteration on data normalized so the transformed observed tensor
  /// has unit peak modulus, then scales the solution back. The objective is
  /// positively homogeneous, so the path is equivalent and the fixed defaults
  /// for mu0/eta0/eps keep their meaning regardless of the data's scale.
  SolveResult<S> solve() const {
    const double s = max_abs(apply_U(psi_m_, fam_));
    if (s <= 0.0 || s == 1.0) return solve_loop();
    Tensor<S> scaled = psi_m_;
    scaled *= S(1.0 / s);
    const PadmmSolver normalized(scaled, mask_, fam_, cfg_);
    SolveResult<S> res = normalized.solve_loop();
    res.X *= S(s);
    res.Z *= S(s);
    res.objective *= s;
    res.terminal_residual *= s;
    res.max_support_violation *= s;
    for (IterationRecord& rec : res.history) {
      rec.objective *= s;
      rec.residual *= s;
    }
    return res;
  }

  SolveResult<S> solve_loop() const {
    SolverState<S> st = initial_state();
    SolveResult<S> res;
    res.history.reserve(static_cast<std::size_t>(cfg_.max_iter));

    Tensor<S> x_prev = to_data(st.Z, st.U);
    for (int t = 0; t < cfg_.max_iter; ++t) {
      const Tensor<S> p = p_hat(st);
      auto [z_next, objective] = update_z(st, p);

      std::vector<Matrix<S>> u_next = st.U;
      double du_max = 0;
      for (std::size_t li = 0; li < learnable_.size(); ++li) {
        ProcrustesUpdate up = update_u(st, p, z_next, li, u_next);
        if (cfg_.track_procrustes) {
          const double increase = up.obj_after - up.obj_before;
          res.procrustes_worst_increase = std::max(res.procrustes_worst_increase, increase);
          const double scale = std::max(1.0, std::abs(up.obj_before));
          if (increase > 1e-9 * scale) res.procrustes_monotone = false;
        }
        res.max_unitarity_defect = std::max(res.max_unitarity_defect, unitarity_defect(up.u));
        du_max = std::max(du_max, (up.u - st.U[li]).cwiseAbs().maxCoeff());
        u_next[li] = std::move(up.u);
      }

      const Tensor<S> x_next = to_data(z_next, u_next);
      const Tensor<S> e_next = update_e(st, x_next);
      const Tensor<S> y_next = update_y(st, x_next, e_next);

      IterationRecord rec;
      rec.t = t;
      rec.objective = objective;
      {
        Tensor<S> r = psi_m_;
        r -= x_next;
        r -= e_next;
        rec.residual = frobenius_norm(r);
      }
      rec.mu = st.mu;
      rec.eta = st.eta;
      rec.dZ = max_abs_diff(z_next, st.Z);
      rec.dX = max_abs_diff(x_next, x_prev);
      rec.dU_max = du_max;

      res.max_support_violation =
          std::max(res.max_support_violation, max_abs(psi_project(e_next, mask_)));
      const double y_norm = frobenius_norm(y_next);
      res.max_y_norm = std::max(res.max_y_norm, y_norm);

      auto [mu_next, eta_next] = update_penalties(st.mu, st.eta, cfg_);

      st.Z = std::move(z_next);
      st.U = std::move(u_next);
      st.E = e_next;
      st.Y = y_next;
      st.mu = mu_next;
      st.eta = eta_next;
      st.t = t + 1;
      x_prev = x_next;
      res.history.push_back(rec);
      res.objective = rec.objective;
      res.terminal_residual = rec.residual;

      const bool converged = rec.dZ < cfg_.eps && rec.dX < cfg_.eps && rec.dU_max < cfg_.eps;
      if (converged) {
        res.converged = true;
        break;
      }
      if (st.eta >= cfg_.eta_bar) res.eta_cap_warning = true;
    }

    res.iterations = st.t;
    res.X = std::move(x_prev);
    res.Z = std::move(st.Z);
    res.U = std::move(st.U);
    res.terminal_relative_residual =
        psi_m_norm_ > 0 ? res.terminal_residual / psi_m_norm_ : res.terminal_residual;
    res.y_bounded = res.max_y_norm <= cfg_.y_norm_bound;
    return res;
  }

 private:
  Tensor<S> psi_m_;
  MaskIndexSet mask_;
  TransformFamily fam_;
  SolverConfig cfg_;
  std::vector<int> learnable_;
  double psi_m_norm_ = 0;
};

/// Scalar-erased completion summary for real-valued inputs.
struct CompletionResult {
  RTensor recovered;
  bool converged = false;
  int iterations = 0;
  double objective = 0;
  double terminal_residual = 0;
  double terminal_relative_residual = 0;
  std::vector<IterationRecord> history;
  double max_y_norm = 0;
  bool y_bounded = true;
  bool eta_cap_warning = false;
  double max_unitarity_defect = 0;
  double max_support_violation = 0;
  bool procrustes_monotone = true;
  double procrustes_worst_increase = 0;
};

/// Runs the solver on a real observed tensor, staying in real arithmetic when
/// every fixed transform is real and otherwise promoting to complex and
/// re-projecting the recovered tensor to real at the end.
inline CompletionResult complete(const RTensor& observed, const MaskIndexSet& mask,
                                 const TransformFamily& fam, const SolverConfig& cfg) {
  CompletionResult out;
  auto copy_common = [&out](const auto& res) {
    out.converged = res.converged;
    out.iterations = res.iterations;
    out.objective = res.objective;
    out.terminal_residual = res.terminal_residual;
    out.terminal_relative_residual = res.terminal_relative_residual;
    out.history = res.history;
    out.max_y_norm = res.max_y_norm;
    out.y_bounded = res.y_bounded;
    out.eta_cap_warning = res.eta_cap_warning;
    out.max_unitarity_defect = res.max_unitarity_defect;
    out.max_support_violation = res.max_support_violation;
    out.procrustes_monotone = res.procrustes_monotone;
    out.procrustes_worst_increase = res.procrustes_worst_increase;
  };
  if (fam.is_real()) {
    PadmmSolver<double> solver(observed, mask, fam, cfg);
    SolveResult<double> res = solver.solve();
    copy_common(res);
    out.recovered = std::move(res.X);
  } else {
    PadmmSolver<cplx> solver(to_complex(observed), mask, fam, cfg);
    SolveResult<cplx> res = solver.solve();
    copy_common(res);
    out.recovered = to_real(res.X, 1e-8);
  }
  return out;
}

}  // namespace tu1
