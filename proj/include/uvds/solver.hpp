#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "uvds/dataset.hpp"
#include "uvds/error.hpp"
#include "uvds/graphs.hpp"
#include "uvds/matrix_kernels.hpp"
#include "uvds/types.hpp"

namespace uvds {

struct SolverConfig {
  double lambda = 0.01;  // graph structure weight
  double beta = 0.01;    // diffusion (column-spread) weight
  double gamma = 1.0;    // centering penalty weight
  double alpha = 1.0;    // attribute-fit weight
  Index outer_iters = 10;
  Index q_max_iters = 50;
  double q_tol = 1e-6;
  double tau_init = 0.1;
  double eps_pi = 1e-10;
  double conv_tol = 1e-8;  // early-stop threshold on |J_t - J_{t-1}|
  bool refresh_e_inner = true;
  uint64_t seed = 0;
};

inline void validate(const SolverConfig& cfg) {
  const auto bad = [](const std::string& what) {
    fail(ErrorKind::InvalidArgument, "solver config: " + what);
  };
  if (!(cfg.lambda >= 0.0)) bad("lambda must be >= 0");
  if (!(cfg.beta >= 0.0)) bad("beta must be >= 0");
  if (!(cfg.gamma >= 0.0)) bad("gamma must be >= 0");
  if (!(cfg.alpha > 0.0)) bad("alpha must be > 0");
  if (cfg.outer_iters < 0) bad("outer_iters must be >= 0");
  if (cfg.q_max_iters < 1) bad("q_max_iters must be >= 1");
  if (!(cfg.q_tol > 0.0)) bad("q_tol must be > 0");
  if (!(cfg.tau_init > 0.0)) bad("tau_init must be > 0");
  if (!(cfg.eps_pi > 0.0)) bad("eps_pi must be > 0");
  if (!(cfg.conv_tol > 0.0)) bad("conv_tol must be > 0");
}

/// Learned parameters: V is the latent embedding, Q rotates it onto the
/// feature space, P regresses attributes onto V.
struct ModelParams {
  Matrix P;  // M x D
  Matrix Q;  // D x D, orthogonal
  Matrix V;  // N x D, column-centered
};

/// Per-dimension variance accounting of X = VQ.
struct DiffusionStats {
  Vector sigma;        // per-dimension variances sigma'_d
  Vector pi;           // per-dimension standard deviations
  double pi_variance;  // spread of the standard deviations
  double gamma_total;  // N * total variance
};

namespace detail {

/// e_d = 1 / (sqrt(N) * max(pi_d, eps_pi)) = 1 / max(||col_d(VQ)||, ...).
inline Vector diffusion_weight_vector(const Matrix& v, const Matrix& q,
                                      double eps_pi) {
  const double n = static_cast<double>(v.rows());
  const Matrix x = v * q;
  Vector pi = (x.colwise().squaredNorm() / n).cwiseSqrt().transpose();
  Vector e(pi.size());
  for (Index d = 0; d < pi.size(); ++d)
    e(d) = 1.0 / (std::sqrt(n) * std::max(pi(d), eps_pi));
  return e;
}

inline void check_orthogonal(const Matrix& q, double tol,
                             const std::string& who) {
  const Index d = q.rows();
  if (q.cols() != d)
    fail(ErrorKind::ShapeMismatch, who + ": rotation must be square");
  const double drift =
      (q * q.transpose() - Matrix::Identity(d, d)).norm();
  if (!(drift <= tol))
    fail(ErrorKind::InvalidArgument,
         who + ": rotation drifted from orthogonality by " +
             std::to_string(drift));
}

/// Deterministic re-orthonormalization: QR with the sign of each R diagonal
/// pinned positive, so the factor is unique.
inline Matrix reorthonormalize(const Matrix& q) {
  Eigen::HouseholderQR<Matrix> qr(q);
  Matrix ortho = qr.householderQ() * Matrix::Identity(q.rows(), q.cols());
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0.0) ortho.col(j) = -ortho.col(j);
  return ortho;
}

}  // namespace detail

/// Diagonal reweighting matrix E of the column-spread term.
inline Matrix diffusion_weights(const Matrix& v, const Matrix& q,
                                double eps_pi) {
  if (v.cols() != q.rows())
    fail(ErrorKind::ShapeMismatch, "diffusion_weights: V is " +
                                       std::to_string(v.cols()) +
                                       "-wide but Q has " +
                                       std::to_string(q.rows()) + " rows");
  return Matrix(detail::diffusion_weight_vector(v, q, eps_pi).asDiagonal());
}

/// J = ||X - VQ||_F^2 + alpha*||V - AP||_F^2 + lambda*Tr(V^T L V)
///     - beta * (sum of column norms of VQ).
inline double loss(const Dataset& ds, const GraphSet& gs,
                   const ModelParams& params, const SolverConfig& cfg) {
  const Index n = ds.n();
  const Index d = ds.feature_dim();
  const Index m = ds.attribute_dim();
  if (params.V.rows() != n || params.V.cols() != d)
    fail(ErrorKind::ShapeMismatch, "loss: V shape mismatch");
  if (params.Q.rows() != d || params.Q.cols() != d)
    fail(ErrorKind::ShapeMismatch, "loss: Q shape mismatch");
  if (params.P.rows() != m || params.P.cols() != d)
    fail(ErrorKind::ShapeMismatch, "loss: P shape mismatch");
  double j = (ds.features - params.V * params.Q).squaredNorm() +
             cfg.alpha * (params.V - ds.attributes * params.P).squaredNorm();
  if (cfg.lambda != 0.0) {
    if (gs.laplacian.rows() != n)
      fail(ErrorKind::ShapeMismatch, "loss: Laplacian shape mismatch");
    j += cfg.lambda *
         (params.V.transpose() * gs.laplacian * params.V).trace();
  }
  if (cfg.beta != 0.0) j -= cfg.beta * column_l21(params.V * params.Q);
  if (!std::isfinite(j)) fail(ErrorKind::NonFinite, "loss is not finite");
  return j;
}

/// The Sylvester system whose solution is the V update:
/// V * right + left * V = rhs.
struct VStepSystem {
  Matrix left;   // N x N: 2*lambda*L + gamma * ones
  Matrix right;  // D x D: 2QQ^T + 2*alpha*I - beta*QEQ^T
  Matrix rhs;    // N x D: 2*X*Q^T + 2*alpha*A*P
};

inline Matrix v_left_operand(const GraphSet& gs, const SolverConfig& cfg,
                             Index n) {
  Matrix left = Matrix::Constant(n, n, cfg.gamma);
  if (cfg.lambda != 0.0) {
    if (gs.laplacian.rows() != n || gs.laplacian.cols() != n)
      fail(ErrorKind::ShapeMismatch, "v_step: Laplacian shape mismatch");
    left += 2.0 * cfg.lambda * gs.laplacian;
  }
  return left;
}

inline VStepSystem assemble_v_system(const Dataset& ds, const GraphSet& gs,
                                     const ModelParams& params,
                                     const SolverConfig& cfg) {
  const Index d = ds.feature_dim();
  VStepSystem sys;
  sys.left = v_left_operand(gs, cfg, ds.n());
  const Vector e =
      detail::diffusion_weight_vector(params.V, params.Q, cfg.eps_pi);
  sys.right = 2.0 * params.Q * params.Q.transpose() +
              2.0 * cfg.alpha * Matrix::Identity(d, d) -
              cfg.beta * params.Q * e.asDiagonal() * params.Q.transpose();
  sys.rhs = 2.0 * ds.features * params.Q.transpose() +
            2.0 * cfg.alpha * ds.attributes * params.P;
  return sys;
}

/// Solves the V stationarity system, then re-centers the columns. The
/// left-operand eigendecomposition may be supplied when it is reused across
/// iterations (it depends only on the graph, lambda, and gamma).
inline Matrix v_step(const Dataset& ds, const GraphSet& gs,
                     const ModelParams& params, const SolverConfig& cfg,
                     const SymEig* left_eig = nullptr) {
  const VStepSystem sys = assemble_v_system(ds, gs, params, cfg);
  Matrix v = left_eig ? solve_sylvester_symmetric(*left_eig,
                                                  sym_eig(sys.right), sys.rhs)
                      : solve_sylvester_symmetric(sys.left, sys.right, sys.rhs);
  return center_columns(v).first;
}

/// Gradient of the rotation objective with the reweighting matrix frozen at
/// the current iterate: Delta = V^T(VQ - X) - beta * V^T V Q E.
inline Matrix q_gradient(const Matrix& v, const Matrix& q, const Matrix& x,
                         double beta, double eps_pi) {
  if (v.rows() != x.rows() || v.cols() != x.cols() || v.cols() != q.rows() ||
      q.rows() != q.cols())
    fail(ErrorKind::ShapeMismatch, "q_gradient: inconsistent shapes");
  const Vector e = detail::diffusion_weight_vector(v, q, eps_pi);
  return v.transpose() * (v * q - x) -
         beta * (v.transpose() * (v * q)) * e.asDiagonal();
}

struct QStepResult {
  Matrix Q;
  Index iterations = 0;
  bool line_search_failed = false;
};

/// Minimizes h(Q) = ||X - VQ||_F^2 - beta * (sum of column norms of VQ) over
/// orthogonal Q by a Cayley flow: Phi = G Q^T - Q G^T, candidate
/// Q(tau) = (I + tau/2 Phi)^(-1) (I - tau/2 Phi) Q, with backtracking on tau
/// until the Armijo decrease h(Q(tau)) <= h(Q) - 1e-4 * tau * ||Phi||_F^2 / 2
/// holds. h is evaluated exactly, so it never increases across the step.
inline QStepResult q_step(const Matrix& v, const Matrix& q0, const Matrix& x,
                          const SolverConfig& cfg) {
  detail::check_orthogonal(q0, 1e-8, "q_step");
  if (v.rows() != x.rows() || v.cols() != x.cols() || v.cols() != q0.rows())
    fail(ErrorKind::ShapeMismatch, "q_step: inconsistent shapes");
  const Index d = q0.rows();
  const Matrix vtv = v.transpose() * v;
  const Matrix vtx = v.transpose() * x;

  const auto objective = [&](const Matrix& q) {
    return (x - v * q).squaredNorm() - cfg.beta * column_l21(v * q);
  };
  const Vector e_frozen = detail::diffusion_weight_vector(v, q0, cfg.eps_pi);

  QStepResult out;
  out.Q = q0;
  double h = objective(out.Q);
  for (Index t = 0; t < cfg.q_max_iters; ++t) {
    const Vector e =
        cfg.refresh_e_inner
            ? detail::diffusion_weight_vector(v, out.Q, cfg.eps_pi)
            : e_frozen;
    const Matrix grad = 2.0 * (vtv * out.Q - vtx) -
                        cfg.beta * (vtv * out.Q) * e.asDiagonal();
    const Matrix phi =
        grad * out.Q.transpose() - out.Q * grad.transpose();
    const double slope = 0.5 * phi.squaredNorm();

    double tau = cfg.tau_init;
    bool accepted = false;
    Matrix candidate;
    double h_candidate = 0.0;
    for (int halving = 0; halving <= 20; ++halving) {
      const Matrix a = Matrix::Identity(d, d) + (0.5 * tau) * phi;
      candidate = a.partialPivLu().solve(
          (Matrix::Identity(d, d) - (0.5 * tau) * phi) * out.Q);
      h_candidate = objective(candidate);
      if (h_candidate <= h - 1e-4 * tau * slope) {
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) {
      out.line_search_failed = true;
      return out;
    }
    const double move = (candidate - out.Q).norm();
    out.Q = std::move(candidate);
    h = h_candidate;
    out.iterations = t + 1;
    const double drift =
        (out.Q * out.Q.transpose() - Matrix::Identity(d, d)).norm();
    if (drift > 1e-10) {
      out.Q = detail::reorthonormalize(out.Q);
      h = objective(out.Q);
    }
    if (move <= cfg.q_tol) break;
  }
  return out;
}

/// Exactly the least-squares regression of V on the attributes.
inline Matrix p_step(const Matrix& a, const Matrix& v) { return lstsq(a, v); }

struct FitResult {
  ModelParams params;
  std::vector<double> loss_trace;  // J at init, then after each iteration
  Index iterations = 0;
  bool early_stopped = false;
  bool line_search_warned = false;
};

/// Alternating optimization: init Q = I, V = X, P = regression of X on A;
/// then T rounds of (V update, Q update, P update). Records the loss after
/// every round and stops early once successive losses agree to conv_tol.
inline FitResult fit(const Dataset& ds, const GraphSet& gs,
                     const SolverConfig& cfg,
                     const SymEig* left_eig = nullptr) {
  validate(cfg);
  require_finite(ds.features, "fit features");
  require_finite(ds.attributes, "fit attributes");
  const Index d = ds.feature_dim();

  FitResult result;
  result.params.Q = Matrix::Identity(d, d);
  result.params.V = ds.features;
  result.params.P = lstsq_or_ridge(ds.attributes, ds.features);
  result.loss_trace.push_back(loss(ds, gs, result.params, cfg));

  SymEig local_left;
  if (!left_eig && cfg.outer_iters > 0) {
    local_left = sym_eig(v_left_operand(gs, cfg, ds.n()));
    left_eig = &local_left;
  }

  for (Index t = 0; t < cfg.outer_iters; ++t) {
    result.params.V = v_step(ds, gs, result.params, cfg, left_eig);
    QStepResult q = q_step(result.params.V, result.params.Q, ds.features, cfg);
    result.params.Q = std::move(q.Q);
    result.line_search_warned |= q.line_search_failed;
    result.params.P = lstsq_or_ridge(ds.attributes, result.params.V);

    const double j = loss(ds, gs, result.params, cfg);
    if (!std::isfinite(j))
      fail(ErrorKind::Diverged, "loss became non-finite at iteration " +
                                    std::to_string(t + 1));
    const double j_prev = result.loss_trace.back();
    result.loss_trace.push_back(j);
    result.iterations = t + 1;
    if (std::abs(j - j_prev) <= cfg.conv_tol * (1.0 + std::abs(j_prev))) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

/// Variance accounting of X = VQ; V must be column-centered.
inline DiffusionStats diffusion_stats(const Matrix& v, const Matrix& q) {
  if (v.cols() != q.rows() || q.rows() != q.cols())
    fail(ErrorKind::ShapeMismatch, "diffusion_stats: inconsistent shapes");
  const double n = static_cast<double>(v.rows());
  const Matrix x = v * q;
  DiffusionStats stats;
  stats.sigma = (x.colwise().squaredNorm() / n).transpose();
  stats.pi = stats.sigma.cwiseSqrt();
  const double pi_mean = stats.pi.mean();
  stats.pi_variance =
      (stats.pi.array() - pi_mean).square().sum() / stats.pi.size();
  stats.gamma_total = n * stats.sigma.sum();
  return stats;
}

}  // namespace uvds
