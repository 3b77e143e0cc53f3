#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "eqstream/linalg.hpp"
#include "eqstream/rng.hpp"

using namespace eqstream;

TEST_CASE("matvec basics", "[linalg]") {
  CHECK(matvec(Matrix::identity(2), Vector{3.0, 4.0}) == Vector{3.0, 4.0});
  CHECK(matvec(Matrix::from(2, 2, {2, 0, 0, 1}), Vector{1.0, 5.0}) == Vector{2.0, 5.0});
  CHECK(matvec(Matrix::from(2, 2, {1, 1, 0, 1}), Vector{1.0, 1.0}) == Vector{2.0, 1.0});
  CHECK_THROWS_AS(matvec(Matrix::identity(2), Vector{1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("matvec is linear", "[linalg]") {
  Rng rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix m = Matrix::from(5, 4, rng.normals(20));
    const Vector a = Vector::raw(rng.normals(4));
    const Vector b = Vector::raw(rng.normals(4));
    const double alpha = rng.normal(), beta = rng.normal();
    const Vector lhs = matvec(m, alpha * a + beta * b);
    const Vector rhs = alpha * matvec(m, a) + beta * matvec(m, b);
    const double scale = std::max(l2_norm(lhs), 1.0);
    CHECK(l2_norm(lhs - rhs) <= 1e-12 * scale);
  }
}

TEST_CASE("sq_distance", "[linalg]") {
  CHECK(sq_distance(Vector{1.0, 2.0}, Vector{1.0, 2.0}) == 0.0);
  CHECK(sq_distance(Vector{0.0, 0.0}, Vector{3.0, 4.0}) == 25.0);
  CHECK(sq_distance(Vector{1.0}, Vector{-1.0}) == 4.0);
  CHECK_THROWS_AS(sq_distance(Vector{1.0}, Vector{1.0, 2.0}), std::invalid_argument);

  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector a = Vector::raw(rng.normals(6));
    const Vector b = Vector::raw(rng.normals(6));
    CHECK(sq_distance(a, b) == sq_distance(b, a));
  }
}

TEST_CASE("l2_norm", "[linalg]") {
  CHECK(l2_norm(Vector{0.0, 0.0, 0.0}) == 0.0);
  CHECK(l2_norm(Vector{3.0, 4.0}) == 5.0);
  CHECK(l2_norm(Vector{1.0, 1.0, 1.0, 1.0}) == 2.0);

  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector v = Vector::raw(rng.normals(8));
    const double n = l2_norm(v);
    CHECK(std::fabs(n * n - sq_distance(v, Vector::zeros(8))) <= 1e-12 * n * n);
  }
}

TEST_CASE("spectral norm estimates", "[linalg]") {
  CHECK(spectral_norm_estimate(Matrix::from(2, 2, {2, 0, 0, 1})) ==
        Catch::Approx(2.0).margin(1e-9));
  CHECK(spectral_norm_estimate(Matrix::identity(5)) == Catch::Approx(1.0).margin(1e-9));
  // Nilpotent 2x2: A'A = diag(0, 9), largest singular value 3.
  CHECK(spectral_norm_estimate(Matrix::from(2, 2, {0, 3, 0, 0})) ==
        Catch::Approx(3.0).margin(1e-6));
  CHECK(spectral_norm_estimate(Matrix::zeros(3, 3)) == 0.0);
  CHECK_THROWS_AS(spectral_norm_estimate(Matrix::identity(2), 0), std::invalid_argument);
}

TEST_CASE("spectral norm never exceeds the Frobenius norm", "[linalg]") {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t rows = 1 + rng.below(6), cols = 1 + rng.below(6);
    const Matrix m = Matrix::from(rows, cols, rng.normals(rows * cols));
    double frob_sq = 0.0;
    for (double v : m.data()) frob_sq += v * v;
    CHECK(spectral_norm_estimate(m) <= std::sqrt(frob_sq) + 1e-12);
  }
}

TEST_CASE("random orthonormal columns", "[linalg]") {
  Rng rng(17);
  const Matrix q = random_orthonormal(rng, 8, 8);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 8; ++k) acc += q(k, i) * q(k, j);
      CHECK(acc == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-12));
    }
  const Matrix thin = random_orthonormal(rng, 9, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 9; ++k) acc += thin(k, i) * thin(k, j);
      CHECK(acc == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-12));
    }
}

TEST_CASE("solve_linear against known systems", "[linalg]") {
  const Vector x = solve_linear(Matrix::from(2, 2, {2, 1, 1, 3}), Vector{5.0, 10.0});
  CHECK(x[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(x[1] == Catch::Approx(3.0).margin(1e-12));
  CHECK_THROWS_AS(solve_linear(Matrix::zeros(2, 2), Vector{1.0, 1.0}), std::runtime_error);

  Rng rng(19);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix m = Matrix::from(6, 6, rng.normals(36));
    const Vector rhs = Vector::raw(rng.normals(6));
    const Vector sol = solve_linear(m, rhs);
    CHECK(l2_norm(matvec(m, sol) - rhs) <= 1e-9 * std::max(1.0, l2_norm(rhs)));
  }
}

TEST_CASE("validated constructors reject non-finite values", "[linalg]") {
  CHECK_THROWS_AS(Vector::from({1.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(Matrix::from(1, 2, {1.0, INFINITY}), std::invalid_argument);
  CHECK_THROWS_AS(Matrix::from(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);
}
