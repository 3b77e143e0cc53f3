#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "eqstream/cell.hpp"
#include "eqstream/rng.hpp"

using namespace eqstream;

namespace {

// Spec'd contraction check: 100 seeded random (z1, z2, x) triples, no slack.
void check_contraction(const EquilibriumCell& cell, std::uint64_t seed) {
  Rng rng(seed);
  for (int pair = 0; pair < 100; ++pair) {
    const Vector z1 = Vector::raw(rng.normals(cell.state_dim()));
    const Vector z2 = Vector::raw(rng.normals(cell.state_dim()));
    const Vector x = Vector::raw(rng.normals(cell.input_dim()));
    const double lhs = l2_norm(cell_apply(cell, z1, x) - cell_apply(cell, z2, x));
    REQUIRE(lhs <= cell.gamma * l2_norm(z1 - z2));
  }
}

EquilibriumCell scalar_cell(double a, double u, double b, ActivationKind activation) {
  return EquilibriumCell{Matrix::from(1, 1, {a}), Matrix::from(1, 1, {u}), Vector{b},
                         activation, 0.9, std::nullopt};
}

}  // namespace

TEST_CASE("make_random_cell is deterministic and spectrally bounded", "[cell]") {
  const auto a = make_random_cell(7, 4, 2, 0.9, ActivationKind::Tanh);
  const auto b = make_random_cell(7, 4, 2, 0.9, ActivationKind::Tanh);
  CHECK(a.A == b.A);
  CHECK(a.U == b.U);
  CHECK(a.b == b.b);

  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    const auto cell = make_random_cell(seed, 6, 3, 0.9, ActivationKind::Tanh);
    const double sigma = spectral_norm_estimate(cell.A);
    CHECK(sigma >= 0.9 - 1e-6);
    CHECK(sigma <= 0.9 + 1e-6);
  }
  CHECK_THROWS_AS(make_random_cell(1, 4, 2, 1.0, ActivationKind::Tanh),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_random_cell(1, 4, 2, 0.0, ActivationKind::Tanh),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_random_cell(1, 0, 2, 0.5, ActivationKind::Tanh),
                  std::invalid_argument);
}

TEST_CASE("random cells contract", "[cell]") {
  check_contraction(make_random_cell(7, 4, 2, 0.9, ActivationKind::Tanh), 100);
  check_contraction(make_random_cell(8, 16, 4, 0.9, ActivationKind::Identity), 101);
  check_contraction(make_random_cell(9, 3, 5, 0.5, ActivationKind::Tanh), 102);
  check_contraction(make_random_cell(10, 1, 1, 0.9, ActivationKind::Tanh), 103);
}

TEST_CASE("cell_apply", "[cell]") {
  const auto id = scalar_cell(0.5, 1.0, 0.0, ActivationKind::Identity);
  CHECK(cell_apply(id, Vector{0.0}, Vector{2.0}) == Vector{2.0});
  CHECK(cell_apply(id, Vector{4.0}, Vector{2.0}) == Vector{4.0});  // fixed point

  const auto dead = scalar_cell(0.0, 0.0, 0.0, ActivationKind::Tanh);
  CHECK(cell_apply(dead, Vector{3.0}, Vector{-2.0}) == Vector{0.0});

  CHECK_THROWS_AS(cell_apply(id, Vector{1.0, 2.0}, Vector{0.0}), std::invalid_argument);
  CHECK_THROWS_AS(cell_apply(id, Vector{1.0}, Vector{0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("residual", "[cell]") {
  const auto id = scalar_cell(0.5, 1.0, 0.0, ActivationKind::Identity);
  CHECK(residual(id, Vector{4.0}, Vector{2.0}) == Vector{0.0});
  CHECK(residual(id, Vector{0.0}, Vector{2.0}) == Vector{2.0});
  CHECK(residual(id, Vector{2.0}, Vector{2.0}) == Vector{1.0});
}

TEST_CASE("analytic_fixed_point", "[cell]") {
  const auto id = scalar_cell(0.5, 1.0, 0.0, ActivationKind::Identity);
  CHECK(analytic_fixed_point(id, Vector{2.0}) == Vector{4.0});
  CHECK(l2_norm(analytic_fixed_point(id, Vector{0.0})) == 0.0);

  const auto cell = make_random_cell(21, 8, 3, 0.9, ActivationKind::Identity);
  Rng rng(22);
  const Vector x = Vector::raw(rng.normals(3));
  const Vector z = analytic_fixed_point(cell, x);
  CHECK(l2_norm(residual(cell, z, x)) <= 1e-10);

  const auto tanh_cell = make_random_cell(23, 4, 2, 0.9, ActivationKind::Tanh);
  CHECK_THROWS_AS(analytic_fixed_point(tanh_cell, Vector::zeros(2)), std::invalid_argument);
}

TEST_CASE("multiscale layout validation", "[cell]") {
  CHECK_NOTHROW(MultiscaleLayout({ScaleDims{4, 4, 1}, ScaleDims{2, 2, 1}}));
  CHECK_NOTHROW(MultiscaleLayout({ScaleDims{5, 7, 2}, ScaleDims{3, 4, 2}}));
  CHECK_THROWS_AS(MultiscaleLayout({ScaleDims{4, 4, 1}, ScaleDims{3, 2, 1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(MultiscaleLayout({}), std::invalid_argument);
  CHECK(MultiscaleLayout({ScaleDims{4, 4, 1}, ScaleDims{2, 2, 1}}).state_dim() == 20);
}

TEST_CASE("single-scale multiscale cell equals make_random_cell", "[cell]") {
  const MultiscaleLayout layout({ScaleDims{2, 2, 1}});
  const auto ms = make_multiscale_cell(11, layout, 2, 0.9, ActivationKind::Tanh);
  const auto plain = make_random_cell(11, 4, 2, 0.9, ActivationKind::Tanh);
  CHECK(ms.A == plain.A);
  CHECK(ms.U == plain.U);
  CHECK(ms.b == plain.b);
  REQUIRE(ms.layout.has_value());
}

TEST_CASE("multiscale cells contract and respect the bound", "[cell]") {
  const MultiscaleLayout layout({ScaleDims{4, 4, 1}, ScaleDims{2, 2, 1}});
  const auto cell = make_multiscale_cell(12, layout, 2, 0.9, ActivationKind::Tanh);
  CHECK(cell.state_dim() == 20);
  const double sigma = spectral_norm_estimate(cell.A);
  CHECK(sigma >= 0.9 - 1e-6);
  CHECK(sigma <= 0.9 + 1e-6);
  check_contraction(cell, 104);

  const MultiscaleLayout three({ScaleDims{5, 6, 2}, ScaleDims{3, 3, 2}, ScaleDims{2, 2, 2}});
  check_contraction(make_multiscale_cell(13, three, 3, 0.9, ActivationKind::Identity), 105);
}

TEST_CASE("pool and upsample cross links", "[cell]") {
  const ScaleDims fine{4, 4, 1}, coarse{2, 2, 1};
  const Matrix pool = average_pool_matrix(fine, coarse);
  REQUIRE(pool.rows() == 4);
  REQUIRE(pool.cols() == 16);
  for (std::size_t i = 0; i < pool.rows(); ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < pool.cols(); ++j) row_sum += pool(i, j);
    CHECK(row_sum == Catch::Approx(1.0).margin(1e-12));
  }
  // Pooling a constant image gives the same constant.
  CHECK(matvec(pool, Vector::from(std::vector<double>(16, 3.0))) ==
        Vector{3.0, 3.0, 3.0, 3.0});

  const Matrix up = nearest_upsample_matrix(fine, coarse);
  REQUIRE(up.rows() == 16);
  REQUIRE(up.cols() == 4);
  for (std::size_t i = 0; i < up.rows(); ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < up.cols(); ++j) row_sum += up(i, j);
    CHECK(row_sum == 1.0);  // exactly one source pixel
  }
  // Odd dims: 3x3 -> 2x2 pools the boundary cells over smaller windows.
  const Matrix odd = average_pool_matrix(ScaleDims{3, 3, 1}, ScaleDims{2, 2, 1});
  for (std::size_t i = 0; i < odd.rows(); ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < odd.cols(); ++j) row_sum += odd(i, j);
    CHECK(row_sum == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("cell serialization round trip is bitwise", "[cell]") {
  for (const auto& cell :
       {make_random_cell(31, 6, 3, 0.9, ActivationKind::Tanh),
        make_random_cell(32, 4, 7, 0.75, ActivationKind::Identity),
        make_multiscale_cell(33, MultiscaleLayout({ScaleDims{4, 4, 2}, ScaleDims{2, 2, 2}}),
                             3, 0.9, ActivationKind::Tanh)}) {
    std::stringstream buffer;
    save_cell(cell, buffer, 31);
    const EquilibriumCell loaded = load_cell(buffer);
    CHECK(loaded.A == cell.A);
    CHECK(loaded.U == cell.U);
    CHECK(loaded.b == cell.b);
    CHECK(loaded.activation == cell.activation);
    CHECK(loaded.gamma == cell.gamma);
    CHECK(loaded.layout.has_value() == cell.layout.has_value());
    if (cell.layout) CHECK(*loaded.layout == *cell.layout);
  }
}

TEST_CASE("load_cell rejects malformed and non-contractive files", "[cell]") {
  std::stringstream bad_header("nonsense\n");
  CHECK_THROWS_AS(load_cell(bad_header), std::runtime_error);

  // A cell whose stored state map violates the gamma bound.
  std::stringstream violating(
      "eqstream-cell 1\nseed 0\ndz 1\ndx 1\ngamma 0.5\nactivation identity\nscales 0\n"
      "A\n0.9\nU\n1\nb\n0\n");
  CHECK_THROWS_AS(load_cell(violating), std::runtime_error);
}
