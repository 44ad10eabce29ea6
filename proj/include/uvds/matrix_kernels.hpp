#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>

#include "uvds/error.hpp"
#include "uvds/types.hpp"

namespace uvds {

/// Symmetric eigendecomposition, eigenvalues sorted descending and
/// eigenvector columns aligned with them. Satisfies U*diag(l)*U^T = A and
/// U^T*U = I to 1e-10 relative.
struct SymEig {
  Vector eigenvalues;
  Matrix eigenvectors;

  /// Largest |eigenvalue| (the spectral norm of the decomposed matrix).
  double spectral_norm() const {
    if (eigenvalues.size() == 0) return 0.0;
    return std::max(std::abs(eigenvalues(0)),
                    std::abs(eigenvalues(eigenvalues.size() - 1)));
  }
};

/// Eigendecomposition of a symmetric matrix. The input is symmetrized as
/// (A + A^T)/2 before factoring, so slightly asymmetric inputs are accepted.
inline SymEig sym_eig(const Matrix& a) {
  if (a.rows() != a.cols())
    fail(ErrorKind::ShapeMismatch, "sym_eig expects a square matrix, got " +
                                       std::to_string(a.rows()) + "x" +
                                       std::to_string(a.cols()));
  require_finite(a, "sym_eig input");
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    fail(ErrorKind::NoConvergence, "sym_eig iteration exceeded its cap");
  SymEig out;
  // Eigen sorts ascending; flip to descending.
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

/// Solves V*M_R + M_L*V = C for V, with both operands symmetric, by
/// diagonalizing each side and dividing by eigenvalue sums:
///   V = U_L * (U_L^T C U_R ./ (l_L,i + l_R,j)) * U_R^T.
/// Throws SingularPencil when any eigenvalue-sum denominator falls below
/// 1e-12 * (||M_L|| + ||M_R||) (spectral norms).
inline Matrix solve_sylvester_symmetric(const SymEig& left, const SymEig& right,
                                        const Matrix& c) {
  const Index n = left.eigenvalues.size();
  const Index d = right.eigenvalues.size();
  if (c.rows() != n || c.cols() != d)
    fail(ErrorKind::ShapeMismatch,
         "sylvester rhs is " + std::to_string(c.rows()) + "x" +
             std::to_string(c.cols()) + ", expected " + std::to_string(n) +
             "x" + std::to_string(d));
  require_finite(c, "sylvester rhs");
  const double guard = 1e-12 * (left.spectral_norm() + right.spectral_norm());
  Matrix ct = left.eigenvectors.transpose() * c * right.eigenvectors;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      const double denom = left.eigenvalues(i) + right.eigenvalues(j);
      if (std::abs(denom) <= guard)
        fail(ErrorKind::SingularPencil,
             "eigenvalue sum " + std::to_string(denom) +
                 " underflows the pencil guard");
      ct(i, j) /= denom;
    }
  }
  return left.eigenvectors * ct * right.eigenvectors.transpose();
}

inline Matrix solve_sylvester_symmetric(const Matrix& m_left,
                                        const Matrix& m_right,
                                        const Matrix& c) {
  require_finite(m_left, "sylvester left operand");
  require_finite(m_right, "sylvester right operand");
  return solve_sylvester_symmetric(sym_eig(m_left), sym_eig(m_right), c);
}

/// Ridge-regularized least squares: (A^T A + ridge*I)^-1 A^T B via the
/// symmetric eigendecomposition of the Gram matrix. ridge = 0 gives the
/// plain normal-equation solution.
inline Matrix ridge_regression(const Matrix& a, const Matrix& b, double ridge) {
  if (a.rows() != b.rows())
    fail(ErrorKind::ShapeMismatch,
         "lstsq operands have " + std::to_string(a.rows()) + " vs " +
             std::to_string(b.rows()) + " rows");
  require_finite(a, "lstsq design matrix");
  require_finite(b, "lstsq targets");
  const SymEig eig = sym_eig(a.transpose() * a);
  Vector inv = (eig.eigenvalues.array() + ridge).inverse().matrix();
  return eig.eigenvectors * inv.asDiagonal() * eig.eigenvectors.transpose() *
         (a.transpose() * b);
}

/// argmin_P ||B - A P||_F^2 via the normal equations. Requires n >= m and a
/// well-conditioned Gram matrix (smallest eigenvalue >= 1e-10 * largest),
/// otherwise RankDeficient.
inline Matrix lstsq(const Matrix& a, const Matrix& b) {
  if (a.rows() < a.cols())
    fail(ErrorKind::RankDeficient,
         "underdetermined system: " + std::to_string(a.rows()) + " rows < " +
             std::to_string(a.cols()) + " columns");
  if (a.rows() != b.rows())
    fail(ErrorKind::ShapeMismatch,
         "lstsq operands have " + std::to_string(a.rows()) + " vs " +
             std::to_string(b.rows()) + " rows");
  require_finite(a, "lstsq design matrix");
  require_finite(b, "lstsq targets");
  const SymEig eig = sym_eig(a.transpose() * a);
  const double largest = eig.eigenvalues(0);
  const double smallest = eig.eigenvalues(eig.eigenvalues.size() - 1);
  if (largest <= 0.0 || smallest < 1e-10 * largest)
    fail(ErrorKind::RankDeficient,
         "Gram matrix eigenvalue ratio below 1e-10");
  Vector inv = eig.eigenvalues.array().inverse().matrix();
  return eig.eigenvectors * inv.asDiagonal() * eig.eigenvectors.transpose() *
         (a.transpose() * b);
}

/// lstsq with the RankDeficient fallback: retries once with ridge
/// eps = 1e-8 * trace(A^T A) / m added to the Gram diagonal.
inline Matrix lstsq_or_ridge(const Matrix& a, const Matrix& b) {
  try {
    return lstsq(a, b);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::RankDeficient) throw;
    const double eps =
        1e-8 * (a.transpose() * a).trace() / static_cast<double>(a.cols());
    return ridge_regression(a, b, eps);
  }
}

/// Sum of column 2-norms: ||M^T||_2,1 = sum_d ||column_d(M)||_2.
inline double column_l21(const Matrix& m) {
  require_finite(m, "column_l21 input");
  return m.colwise().norm().sum();
}

/// Subtracts the column mean from every row. Returns the centered matrix and
/// the subtracted mean (for reuse on test data).
inline std::pair<Matrix, Vector> center_columns(const Matrix& m) {
  if (m.rows() < 1)
    fail(ErrorKind::ShapeMismatch, "center_columns needs at least one row");
  require_finite(m, "center_columns input");
  Vector mean = m.colwise().mean().transpose();
  Matrix centered = m.rowwise() - mean.transpose();
  return {std::move(centered), std::move(mean)};
}

}  // namespace uvds
