#pragma once

#include <vector>

#include "xicoal/numeric.hpp"

namespace xicoal {

template <class T>
using Matrix = std::vector<std::vector<T>>;

/// Solves A X = B exactly. Rows of [A | B] are scaled to integers and reduced
/// with Bareiss' fraction-free elimination; only back substitution divides.
Matrix<Rational> solve_exact(const Matrix<Rational>& A, const Matrix<Rational>& B);

struct SolveResult {
  Matrix<double> X;
  /// max |A X - B| after refinement.
  double residual = 0.0;
  int refinement_steps = 0;
};

/// Solves A X = B with partial-pivot LU and iterative refinement until the
/// residual is below residual_tol (at most max_steps refinements).
SolveResult solve_refined(const Matrix<double>& A, const Matrix<double>& B, double residual_tol = 1e-12,
                          int max_steps = 5);

template <class T>
Matrix<T> identity_matrix(std::size_t n) {
  Matrix<T> I(n, std::vector<T>(n, T(0)));
  for (std::size_t i = 0; i < n; ++i) I[i][i] = T(1);
  return I;
}

}  // namespace xicoal
