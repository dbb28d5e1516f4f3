#include "xicoal/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace xicoal {

Matrix<Rational> solve_exact(const Matrix<Rational>& A, const Matrix<Rational>& B) {
  const std::size_t n = A.size();
  const std::size_t m = n ? B[0].size() : 0;
  if (B.size() != n) throw ParameterError("solve_exact: shape mismatch");
  // Integer augmented matrix [A | B], one scale factor per row.
  std::vector<std::vector<mpz_class>> M(n, std::vector<mpz_class>(n + m));
  for (std::size_t i = 0; i < n; ++i) {
    if (A[i].size() != n || B[i].size() != m) throw ParameterError("solve_exact: shape mismatch");
    mpz_class scale = 1;
    for (const auto& v : A[i]) mpz_lcm(scale.get_mpz_t(), scale.get_mpz_t(), v.get_den_mpz_t());
    for (const auto& v : B[i]) mpz_lcm(scale.get_mpz_t(), scale.get_mpz_t(), v.get_den_mpz_t());
    for (std::size_t j = 0; j < n; ++j) M[i][j] = A[i][j].get_num() * (scale / A[i][j].get_den());
    for (std::size_t j = 0; j < m; ++j) M[i][n + j] = B[i][j].get_num() * (scale / B[i][j].get_den());
  }
  mpz_class previous = 1;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    while (pivot < n && M[pivot][k] == 0) ++pivot;
    if (pivot == n) throw NumericalError("solve_exact: singular matrix");
    if (pivot != k) std::swap(M[pivot], M[k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n + m; ++j) {
        M[i][j] = M[i][j] * M[k][k] - M[i][k] * M[k][j];
        mpz_divexact(M[i][j].get_mpz_t(), M[i][j].get_mpz_t(), previous.get_mpz_t());
      }
      M[i][k] = 0;
    }
    previous = M[k][k];
  }
  Matrix<Rational> X(n, std::vector<Rational>(m));
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t i = n; i-- > 0;) {
      Rational sum(M[i][n + c]);
      for (std::size_t j = i + 1; j < n; ++j) sum -= Rational(M[i][j]) * X[j][c];
      X[i][c] = sum / Rational(M[i][i]);
    }
  }
  return X;
}

SolveResult solve_refined(const Matrix<double>& A, const Matrix<double>& B, double residual_tol, int max_steps) {
  const Eigen::Index n = static_cast<Eigen::Index>(A.size());
  const Eigen::Index m = n ? static_cast<Eigen::Index>(B[0].size()) : 0;
  Eigen::MatrixXd a(n, n), b(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = A[i][j];
    for (Eigen::Index j = 0; j < m; ++j) b(i, j) = B[i][j];
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::MatrixXd x = lu.solve(b);
  SolveResult result;
  double residual = (a * x - b).cwiseAbs().maxCoeff();
  while (residual > residual_tol && result.refinement_steps < max_steps) {
    Eigen::MatrixXd r = b - a * x;
    x += lu.solve(r);
    ++result.refinement_steps;
    double next = (a * x - b).cwiseAbs().maxCoeff();
    if (!(next < residual)) {
      residual = next;
      break;
    }
    residual = next;
  }
  if (!std::isfinite(residual)) throw NumericalError("solve_refined: singular or ill-conditioned matrix");
  result.residual = n ? residual : 0.0;
  result.X.assign(n, std::vector<double>(m));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) result.X[i][j] = x(i, j);
  return result;
}

}  // namespace xicoal
