#include "doctest.h"
#include "xicoal/linalg.hpp"

using namespace xicoal;

namespace {

template <class T>
Matrix<T> multiply(const Matrix<T>& A, const Matrix<T>& B) {
  Matrix<T> C(A.size(), std::vector<T>(B[0].size(), T(0)));
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t k = 0; k < B.size(); ++k)
      for (std::size_t j = 0; j < B[0].size(); ++j) C[i][j] += A[i][k] * B[k][j];
  return C;
}

Matrix<Rational> hilbert(int n) {
  Matrix<Rational> H(n, std::vector<Rational>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) H[i][j] = Rational(1, i + j + 1);
  return H;
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("exact solve inverts a hilbert matrix") {
    for (int n : {1, 3, 8}) {
      auto H = hilbert(n);
      auto X = solve_exact(H, identity_matrix<Rational>(n));
      CHECK(multiply(H, X) == identity_matrix<Rational>(n));
    }
  }

  TEST_CASE("exact solve needs pivoting and rejects singular systems") {
    Matrix<Rational> A{{0, 1}, {1, 0}};
    Matrix<Rational> B{{2}, {Rational(1, 3)}};
    auto X = solve_exact(A, B);
    CHECK(X[0][0] == Rational(1, 3));
    CHECK(X[1][0] == 2);
    Matrix<Rational> S{{1, 2}, {2, 4}};
    CHECK_THROWS_AS(solve_exact(S, identity_matrix<Rational>(2)), NumericalError);
  }

  TEST_CASE("refined float solve agrees with the exact one") {
    auto H = hilbert(7);
    auto exact = solve_exact(H, identity_matrix<Rational>(7));
    Matrix<double> Hd(7, std::vector<double>(7));
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j) Hd[i][j] = to_double(H[i][j]);
    Matrix<double> Bd{{1}, {0}, {0}, {0}, {0}, {0}, {0}};
    auto r = solve_refined(Hd, Bd, 1e-12);
    CHECK(r.residual <= 1e-10);
    for (int i = 0; i < 7; ++i) CHECK(r.X[i][0] == doctest::Approx(to_double(exact[i][0])).epsilon(1e-5));
  }

  TEST_CASE("triangular generator block") {
    // -Q restricted to {2, 3, 4} for Kingman is upper bidiagonal; its inverse has 1/C(j,2) entries.
    Matrix<Rational> A{{1, 0, 0}, {-3, 3, 0}, {0, -6, 6}};
    auto G = solve_exact(A, identity_matrix<Rational>(3));
    CHECK(G[2][0] == 1);
    CHECK(G[2][1] == Rational(1, 3));
    CHECK(G[2][2] == Rational(1, 6));
    CHECK(G[0][2] == 0);
  }
}
