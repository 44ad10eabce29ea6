#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "uvds/matrix_kernels.hpp"
#include "uvds/rng.hpp"

using uvds::Index;
using uvds::Matrix;
using uvds::Vector;

namespace {

Matrix random_matrix(uvds::Rng& rng, Index n, Index d) {
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

Matrix random_symmetric(uvds::Rng& rng, Index n) {
  Matrix m = random_matrix(rng, n, n);
  return 0.5 * (m + m.transpose());
}

// Orthogonal factor of a random square matrix, via a QR route that shares no
// code with the library under test.
Matrix random_orthogonal(uvds::Rng& rng, Index n) {
  Matrix m = random_matrix(rng, n, n);
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(n, n);
}

// Brute-force Sylvester oracle: vectorize V*M_R + M_L*V = C column-major as
// (M_R kron I_n + I_d kron M_L) vec(V) = vec(C) and solve the dense nd x nd
// system with full-pivot LU.
Matrix kron_solve_sylvester(const Matrix& m_left, const Matrix& m_right,
                            const Matrix& c) {
  const Index n = m_left.rows();
  const Index d = m_right.rows();
  Matrix big = Matrix::Zero(n * d, n * d);
  for (Index j = 0; j < d; ++j)
    for (Index l = 0; l < d; ++l)
      for (Index i = 0; i < n; ++i) {
        // M_R^T kron I_n term; M_R symmetric so transpose is free.
        big(l * n + i, j * n + i) += m_right(j, l);
      }
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < n; ++k) big(j * n + i, j * n + k) += m_left(i, k);
  Eigen::VectorXd vec_c(n * d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < n; ++i) vec_c(j * n + i) = c(i, j);
  Eigen::VectorXd vec_v = Eigen::FullPivLU<Matrix>(big).solve(vec_c);
  Matrix v(n, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < n; ++i) v(i, j) = vec_v(j * n + i);
  return v;
}

// Normal-equation oracle through Eigen's LU inverse, independent of the
// eigendecomposition route the library uses.
Matrix normal_eq_solve(const Matrix& a, const Matrix& b) {
  return (a.transpose() * a).inverse() * (a.transpose() * b);
}

// Scalar-loop oracle for the sum of column 2-norms.
double loop_column_l21(const Matrix& m) {
  double total = 0.0;
  for (Index j = 0; j < m.cols(); ++j) {
    double sq = 0.0;
    for (Index i = 0; i < m.rows(); ++i) sq += m(i, j) * m(i, j);
    total += std::sqrt(sq);
  }
  return total;
}

}  // namespace

TEST_CASE("sym_eig on a diagonal matrix returns it verbatim",
          "[matrix-kernels]") {
  Matrix a(2, 2);
  a << 2, 0, 0, 1;
  const uvds::SymEig eig = uvds::sym_eig(a);
  CHECK(eig.eigenvalues(0) == Catch::Approx(2.0).margin(1e-12));
  CHECK(eig.eigenvalues(1) == Catch::Approx(1.0).margin(1e-12));
  // Columns are determined up to sign.
  CHECK(std::abs(eig.eigenvectors(0, 0)) == Catch::Approx(1.0).margin(1e-12));
  CHECK(std::abs(eig.eigenvectors(1, 1)) == Catch::Approx(1.0).margin(1e-12));
  CHECK(std::abs(eig.eigenvectors(1, 0)) <= 1e-12);
  CHECK(std::abs(eig.eigenvectors(0, 1)) <= 1e-12);
}

TEST_CASE("sym_eig resolves the symmetry-forced 2x2 exchange matrix",
          "[matrix-kernels]") {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const uvds::SymEig eig = uvds::sym_eig(a);
  REQUIRE(eig.eigenvalues.size() == 2);
  CHECK(eig.eigenvalues(0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(eig.eigenvalues(1) == Catch::Approx(-1.0).margin(1e-12));
  const double s = 1.0 / std::sqrt(2.0);
  Vector plus(2), minus(2);
  plus << s, s;
  minus << s, -s;
  CHECK(std::abs(plus.dot(eig.eigenvectors.col(0))) ==
        Catch::Approx(1.0).margin(1e-12));
  CHECK(std::abs(minus.dot(eig.eigenvectors.col(1))) ==
        Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sym_eig reconstructs a random 5x5 symmetric matrix",
          "[matrix-kernels]") {
  uvds::Rng rng(7);
  const Matrix a = random_symmetric(rng, 5);
  const uvds::SymEig eig = uvds::sym_eig(a);
  const Matrix rebuilt = eig.eigenvectors * eig.eigenvalues.asDiagonal() *
                         eig.eigenvectors.transpose();
  CHECK((rebuilt - a).norm() <= 1e-10 * a.norm());
}

TEST_CASE("sym_eig reconstruction and orthonormality on 100 random matrices",
          "[matrix-kernels]") {
  uvds::Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(49));  // up to 50x50
    const Matrix a = random_symmetric(rng, n);
    const uvds::SymEig eig = uvds::sym_eig(a);
    const Matrix rebuilt = eig.eigenvectors * eig.eigenvalues.asDiagonal() *
                           eig.eigenvectors.transpose();
    REQUIRE((rebuilt - a).norm() <= 1e-10 * std::max(1.0, a.norm()));
    const Matrix gram = eig.eigenvectors.transpose() * eig.eigenvectors;
    REQUIRE((gram - Matrix::Identity(n, n)).norm() <= 1e-10 * std::sqrt(n));
    for (Index i = 0; i + 1 < n; ++i)
      REQUIRE(eig.eigenvalues(i) >= eig.eigenvalues(i + 1));
  }
}

TEST_CASE("sym_eig rejects non-finite and non-square input",
          "[matrix-kernels]") {
  Matrix bad(2, 2);
  bad << 1, 0, 0, std::nan("");
  CHECK_THROWS_MATCHES(uvds::sym_eig(bad), uvds::Error,
                       Catch::Matchers::Predicate<uvds::Error>(
                           [](const uvds::Error& e) {
                             return e.kind() == uvds::ErrorKind::NonFinite;
                           }));
  CHECK_THROWS_MATCHES(uvds::sym_eig(Matrix::Zero(2, 3)), uvds::Error,
                       Catch::Matchers::Predicate<uvds::Error>(
                           [](const uvds::Error& e) {
                             return e.kind() == uvds::ErrorKind::ShapeMismatch;
                           }));
}

TEST_CASE("sylvester solve handles the scalar case", "[matrix-kernels]") {
  Matrix ml(1, 1), mr(1, 1), c(1, 1);
  ml << 2;
  mr << 3;
  c << 10;
  const Matrix v = uvds::solve_sylvester_symmetric(ml, mr, c);
  CHECK(v(0, 0) == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("sylvester solve with zero left operand and identity right factor",
          "[matrix-kernels]") {
  uvds::Rng rng(3);
  const Matrix c = random_matrix(rng, 4, 3);
  const Matrix v = uvds::solve_sylvester_symmetric(
      Matrix::Zero(4, 4), Matrix::Identity(3, 3), c);
  CHECK((v - c).norm() <= 1e-12 * std::max(1.0, c.norm()));
}

TEST_CASE("sylvester solve matches the Kronecker brute-force oracle",
          "[matrix-kernels]") {
  uvds::Rng rng(19);
  Matrix ml = random_symmetric(rng, 4);
  Matrix mr = random_symmetric(rng, 3);
  // Shift both spectra positive so every eigenvalue sum is safely nonzero.
  ml += 5.0 * Matrix::Identity(4, 4);
  mr += 5.0 * Matrix::Identity(3, 3);
  const Matrix c = random_matrix(rng, 4, 3);
  const Matrix v = uvds::solve_sylvester_symmetric(ml, mr, c);
  const Matrix oracle = kron_solve_sylvester(ml, mr, c);
  CHECK((v - oracle).norm() <= 1e-8);
}

TEST_CASE("sylvester residual bound on 100 well-conditioned instances",
          "[matrix-kernels]") {
  uvds::Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(6));
    const Index d = 1 + static_cast<Index>(rng.below(6));
    Matrix ml = random_symmetric(rng, n);
    Matrix mr = random_symmetric(rng, d);
    const double shift = static_cast<double>(n + d);
    ml += shift * Matrix::Identity(n, n);
    mr += shift * Matrix::Identity(d, d);
    const Matrix c = random_matrix(rng, n, d);
    const Matrix v = uvds::solve_sylvester_symmetric(ml, mr, c);
    const double residual = (v * mr + ml * v - c).norm();
    REQUIRE(residual <= 1e-8 * std::max(1.0, c.norm()));
    const Matrix oracle = kron_solve_sylvester(ml, mr, c);
    REQUIRE((v - oracle).norm() <= 1e-8);
  }
}

TEST_CASE("sylvester solve reports a singular pencil", "[matrix-kernels]") {
  Matrix ml(2, 2), mr(2, 2);
  ml << 1, 0, 0, -1;
  mr << 1, 0, 0, -1;  // eigenvalue sums include 1 + (-1) = 0
  const Matrix c = Matrix::Ones(2, 2);
  CHECK_THROWS_MATCHES(uvds::solve_sylvester_symmetric(ml, mr, c), uvds::Error,
                       Catch::Matchers::Predicate<uvds::Error>(
                           [](const uvds::Error& e) {
                             return e.kind() ==
                                    uvds::ErrorKind::SingularPencil;
                           }));
}

TEST_CASE("lstsq with identity design matrix returns the targets",
          "[matrix-kernels]") {
  uvds::Rng rng(29);
  const Matrix b = random_matrix(rng, 5, 3);
  const Matrix p = uvds::lstsq(Matrix::Identity(5, 5), b);
  CHECK((p - b).norm() <= 1e-10 * std::max(1.0, b.norm()));
}

TEST_CASE("lstsq with orthonormal columns reduces to a projection",
          "[matrix-kernels]") {
  uvds::Rng rng(31);
  const Matrix q = random_orthogonal(rng, 6);
  const Matrix a = q.leftCols(4);
  const Matrix b = random_matrix(rng, 6, 2);
  const Matrix p = uvds::lstsq(a, b);
  const Matrix expected = a.transpose() * b;
  CHECK((p - expected).norm() <= 1e-9 * std::max(1.0, expected.norm()));
}

TEST_CASE("lstsq matches the explicit normal-equation oracle",
          "[matrix-kernels]") {
  uvds::Rng rng(37);
  const Matrix a = random_matrix(rng, 8, 3);
  const Matrix b = random_matrix(rng, 8, 2);
  const Matrix p = uvds::lstsq(a, b);
  const Matrix oracle = normal_eq_solve(a, b);
  CHECK((p - oracle).norm() <= 1e-9);
  const double ne_residual = (a.transpose() * (a * p - b)).norm();
  CHECK(ne_residual <= 1e-8 * (a.transpose() * b).norm());
}

TEST_CASE("lstsq solution beats 100 random perturbations",
          "[matrix-kernels]") {
  uvds::Rng rng(41);
  const Matrix a = random_matrix(rng, 12, 4);
  const Matrix b = random_matrix(rng, 12, 3);
  const Matrix p = uvds::lstsq(a, b);
  const double best = (b - a * p).squaredNorm();
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix delta = 0.1 * random_matrix(rng, 4, 3);
    REQUIRE(best <= (b - a * (p + delta)).squaredNorm() + 1e-12);
  }
}

TEST_CASE("lstsq rejects rank-deficient and underdetermined systems",
          "[matrix-kernels]") {
  uvds::Rng rng(43);
  Matrix a = random_matrix(rng, 6, 3);
  a.col(2) = a.col(1);  // exact rank deficiency
  const Matrix b = random_matrix(rng, 6, 2);
  CHECK_THROWS_MATCHES(uvds::lstsq(a, b), uvds::Error,
                       Catch::Matchers::Predicate<uvds::Error>(
                           [](const uvds::Error& e) {
                             return e.kind() == uvds::ErrorKind::RankDeficient;
                           }));
  CHECK_THROWS_MATCHES(uvds::lstsq(random_matrix(rng, 2, 5),
                                   random_matrix(rng, 2, 1)),
                       uvds::Error,
                       Catch::Matchers::Predicate<uvds::Error>(
                           [](const uvds::Error& e) {
                             return e.kind() == uvds::ErrorKind::RankDeficient;
                           }));
}

TEST_CASE("lstsq_or_ridge recovers from rank deficiency", "[matrix-kernels]") {
  uvds::Rng rng(47);
  Matrix a = random_matrix(rng, 6, 3);
  a.col(2) = a.col(1);
  const Matrix b = random_matrix(rng, 6, 2);
  const Matrix p = uvds::lstsq_or_ridge(a, b);
  // The ridge solution must still fit essentially as well as any perturbation.
  const double fit = (b - a * p).squaredNorm();
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix delta = 0.1 * random_matrix(rng, 3, 2);
    REQUIRE(fit <= (b - a * (p + delta)).squaredNorm() + 1e-6);
  }
  // On a clean system it matches lstsq.
  const Matrix a2 = random_matrix(rng, 7, 3);
  const Matrix b2 = random_matrix(rng, 7, 2);
  CHECK((uvds::lstsq_or_ridge(a2, b2) - uvds::lstsq(a2, b2)).norm() <= 1e-12);
}

TEST_CASE("ridge_regression with zero ridge matches lstsq",
          "[matrix-kernels]") {
  uvds::Rng rng(53);
  const Matrix a = random_matrix(rng, 9, 4);
  const Matrix b = random_matrix(rng, 9, 2);
  const Matrix p0 = uvds::ridge_regression(a, b, 0.0);
  const Matrix p1 = uvds::lstsq(a, b);
  CHECK((p0 - p1).norm() <= 1e-9 * std::max(1.0, p1.norm()));
}

TEST_CASE("column_l21 on hand-checked matrices", "[matrix-kernels]") {
  Matrix m(2, 2);
  m << 3, 0, 4, 0;
  CHECK(uvds::column_l21(m) == Catch::Approx(5.0).margin(1e-12));
  CHECK(uvds::column_l21(Matrix::Identity(2, 2)) ==
        Catch::Approx(2.0).margin(1e-12));
  CHECK(uvds::column_l21(Matrix::Zero(3, 4)) == 0.0);
}

TEST_CASE("column_l21 matches the scalar-loop oracle", "[matrix-kernels]") {
  uvds::Rng rng(59);
  const Matrix m = random_matrix(rng, 6, 4);
  CHECK(std::abs(uvds::column_l21(m) - loop_column_l21(m)) <= 1e-12);
}

TEST_CASE("frobenius norm is invariant under rotation", "[matrix-kernels]") {
  uvds::Rng rng(61);
  const Matrix m = random_matrix(rng, 10, 6);
  const Matrix q = random_orthogonal(rng, 6);
  CHECK(std::abs((m * q).norm() - m.norm()) <= 1e-9);
}

TEST_CASE("center_columns zeroes a constant matrix", "[matrix-kernels]") {
  Matrix m = Matrix::Constant(4, 3, 2.5);
  const auto [centered, mean] = uvds::center_columns(m);
  CHECK(centered.norm() <= 1e-12);
  CHECK((mean - Vector::Constant(3, 2.5)).norm() <= 1e-12);
}

TEST_CASE("center_columns is idempotent on centered input",
          "[matrix-kernels]") {
  uvds::Rng rng(67);
  Matrix m = random_matrix(rng, 6, 3);
  const auto [once, mean1] = uvds::center_columns(m);
  const auto [twice, mean2] = uvds::center_columns(once);
  CHECK((twice - once).norm() <= 1e-12 * std::max(1.0, once.norm()));
  CHECK(mean2.norm() <= 1e-12);
  (void)mean1;
}

TEST_CASE("center_columns drives column sums to zero", "[matrix-kernels]") {
  uvds::Rng rng(71);
  const Matrix m = random_matrix(rng, 5, 3);
  const auto [centered, mean] = uvds::center_columns(m);
  CHECK(centered.colwise().sum().cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((centered.rowwise() + mean.transpose() - m).norm() <= 1e-12);
}
