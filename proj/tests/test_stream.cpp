#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "eqstream/cell.hpp"
#include "eqstream/sequence.hpp"
#include "eqstream/solver.hpp"
#include "eqstream/stream.hpp"

using namespace eqstream;

namespace {

SolverConfig picard_cfg(double tol = 0.0) {
  return SolverConfig{SolverMethod::Picard, 1, tol, 1};
}

std::vector<Vector> walk_frames(std::size_t dx, std::size_t length, double epsilon,
                                std::uint64_t seed,
                                std::vector<std::size_t> shots = {}) {
  SequenceSpec spec;
  spec.mode = SequenceMode::RandomWalk;
  spec.dx = dx;
  spec.length = length;
  spec.epsilon = epsilon;
  spec.seed = seed;
  spec.shot_frames = std::move(shots);
  return generate_sequence(spec);
}

}  // namespace

TEST_CASE("static scene streaming equals one long solve bitwise", "[stream]") {
  const auto cell = make_random_cell(81, 12, 4, 0.9, ActivationKind::Tanh);
  const auto frames = walk_frames(4, 7, 0.0, 82);
  StreamOptions opts;
  opts.retain_z = true;
  const auto records = stream_infer(cell, frames, WarmStartPolicy::StreamFromZero,
                                    BudgetSchedule::constant(3), picard_cfg(), opts);
  const auto oracle = picard_solve(cell, frames[0], Vector::zeros(12),
                                   SolverConfig{SolverMethod::Picard, 21, 0.0, 1});
  REQUIRE(records.back().z_final.has_value());
  CHECK(*records.back().z_final == oracle.z);
}

TEST_CASE("scalar stream hand example", "[stream]") {
  const EquilibriumCell cell{Matrix::from(1, 1, {0.5}), Matrix::from(1, 1, {1.0}),
                             Vector{0.0}, ActivationKind::Identity, 0.9, std::nullopt};
  const std::vector<Vector> frames(3, Vector{2.0});
  StreamOptions opts;
  opts.retain_z = true;
  const auto records = stream_infer(cell, frames, WarmStartPolicy::StreamFromZero,
                                    BudgetSchedule::constant(1), picard_cfg(), opts);
  REQUIRE(records.size() == 3);
  CHECK(*records[2].z_final == Vector{3.5});
}

TEST_CASE("cold start is order independent", "[stream]") {
  const auto cell = make_random_cell(83, 8, 3, 0.9, ActivationKind::Tanh);
  auto frames = walk_frames(3, 6, 0.2, 84);
  StreamOptions opts;
  opts.compute_references = true;
  opts.retain_z = true;
  const auto cfg = picard_cfg();
  const auto records = stream_infer(cell, frames, WarmStartPolicy::ColdStart,
                                    BudgetSchedule::constant(4), cfg, opts);
  std::reverse(frames.begin(), frames.end());
  const auto reversed = stream_infer(cell, frames, WarmStartPolicy::ColdStart,
                                     BudgetSchedule::constant(4), cfg, opts);
  for (std::size_t t = 0; t < records.size(); ++t) {
    const auto& mirror = reversed[records.size() - 1 - t];
    CHECK(*records[t].z_final == *mirror.z_final);
    CHECK(records[t].residual_norm == mirror.residual_norm);
    CHECK(*records[t].sq_dist_to_reference == *mirror.sq_dist_to_reference);
  }
}

TEST_CASE("streaming is causal under truncation", "[stream]") {
  const auto cell = make_random_cell(85, 10, 4, 0.9, ActivationKind::Tanh);
  const auto frames = walk_frames(4, 12, 0.05, 86);
  StreamOptions opts;
  opts.compute_references = true;
  opts.retain_z = true;
  for (const auto policy :
       {WarmStartPolicy::StreamFromZero, WarmStartPolicy::ReferenceChain,
        WarmStartPolicy::StreamFromReference, WarmStartPolicy::ColdStart}) {
    const auto full = stream_infer(cell, frames, policy, BudgetSchedule::constant(2),
                                   picard_cfg(), opts);
    const std::vector<Vector> head(frames.begin(), frames.begin() + 5);
    const auto truncated =
        stream_infer(cell, head, policy, BudgetSchedule::constant(2), picard_cfg(), opts);
    for (std::size_t t = 0; t < truncated.size(); ++t) {
      CHECK(*truncated[t].z_final == *full[t].z_final);
      CHECK(truncated[t].residual_norm == full[t].residual_norm);
      CHECK(*truncated[t].sq_dist_to_reference == *full[t].sq_dist_to_reference);
    }
  }
}

TEST_CASE("per-frame error recursion bound", "[stream]") {
  const auto cell = make_random_cell(87, 16, 4, 0.9, ActivationKind::Tanh);
  const auto frames = walk_frames(4, 25, 0.05, 88);
  StreamOptions opts;
  opts.compute_references = true;
  opts.retain_z = true;
  opts.retain_references = true;
  for (const std::size_t m : {1, 2, 4}) {
    const auto records = stream_infer(cell, frames, WarmStartPolicy::StreamFromZero,
                                      BudgetSchedule::constant(m), picard_cfg(), opts);
    const double rate = std::pow(cell.gamma, static_cast<double>(m));
    for (std::size_t t = 1; t < records.size(); ++t) {
      const double d_t = std::sqrt(*records[t].sq_dist_to_reference);
      const double d_prev = std::sqrt(*records[t - 1].sq_dist_to_reference);
      const double delta =
          l2_norm(*records[t].z_reference - *records[t - 1].z_reference);
      CHECK(d_t <= rate * (d_prev + delta) + 1e-9);
    }
  }
}

TEST_CASE("plateau stays under the recursion fixed point", "[stream]") {
  // gamma = 0.5 and M = 2 make the transient term decay below the 1e-6
  // slack well before frame 20, so the bound is provable, not statistical.
  const auto cell = make_random_cell(89, 12, 4, 0.5, ActivationKind::Tanh);
  const auto frames = walk_frames(4, 40, 0.05, 90);
  StreamOptions opts;
  opts.compute_references = true;
  opts.retain_references = true;
  const std::size_t m = 2;
  const auto records = stream_infer(cell, frames, WarmStartPolicy::StreamFromZero,
                                    BudgetSchedule::constant(m), picard_cfg(), opts);
  double delta_max = 0.0;
  for (std::size_t t = 1; t < records.size(); ++t)
    delta_max = std::max(delta_max,
                         l2_norm(*records[t].z_reference - *records[t - 1].z_reference));
  const double rate = std::pow(cell.gamma, static_cast<double>(m));
  const double plateau_bound = rate * delta_max / (1.0 - rate);
  for (std::size_t t = 20; t < records.size(); ++t)
    CHECK(std::sqrt(*records[t].sq_dist_to_reference) <= plateau_bound + 1e-6);
}

TEST_CASE("all policies agree at a generous budget", "[stream]") {
  // gamma = 0.5 turns the residual threshold into a distance bound of at
  // most 2 tol, so every policy must land within 2 tol of the reference.
  const auto cell = make_random_cell(91, 10, 3, 0.5, ActivationKind::Tanh);
  const auto frames = walk_frames(3, 8, 0.05, 92);
  const double tol = 1e-9;
  StreamOptions opts;
  opts.compute_references = true;
  opts.retain_z = true;
  opts.retain_references = true;
  const SolverConfig cfg{SolverMethod::Picard, 1, tol, 1};
  for (const auto policy :
       {WarmStartPolicy::ColdStart, WarmStartPolicy::ReferenceChain,
        WarmStartPolicy::StreamFromReference, WarmStartPolicy::StreamFromZero}) {
    const auto records =
        stream_infer(cell, frames, policy, BudgetSchedule::constant(200), cfg, opts);
    for (const auto& record : records)
      CHECK(l2_norm(*record.z_final - *record.z_reference) <= 2 * tol);
  }
}

TEST_CASE("init choice washes out of the plateau", "[stream]") {
  const std::size_t t_end = 40;
  double zero_sum = 0.0, ref_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto cell = make_random_cell(seed, 16, 4, 0.9, ActivationKind::Tanh);
    const auto frames = walk_frames(4, t_end, 0.05, seed + 500);
    std::vector<Vector> refs;
    for (const auto& frame : frames) refs.push_back(reference_fixed_point(cell, frame));
    StreamOptions opts;
    opts.compute_references = true;
    opts.references = &refs;
    for (const std::size_t m : {4}) {
      const auto zero = stream_infer(cell, frames, WarmStartPolicy::StreamFromZero,
                                     BudgetSchedule::constant(m), picard_cfg(), opts);
      const auto ref = stream_infer(cell, frames, WarmStartPolicy::StreamFromReference,
                                    BudgetSchedule::constant(m), picard_cfg(), opts);
      for (std::size_t t = 20; t < t_end; ++t) {
        zero_sum += *zero[t].sq_dist_to_reference;
        ref_sum += *ref[t].sq_dist_to_reference;
      }
    }
  }
  CHECK(std::fabs(zero_sum - ref_sum) <= 0.2 * std::max(zero_sum, ref_sum));
}

TEST_CASE("reference chain diagnostic", "[stream]") {
  const auto cell = make_random_cell(93, 8, 3, 0.9, ActivationKind::Tanh);

  SECTION("a static scene sits at its own fixed point from frame 1 on") {
    const auto frames = walk_frames(3, 5, 0.0, 94);
    const auto records =
        reference_chain_diagnostic(cell, frames, 1, picard_cfg());
    for (std::size_t t = 1; t < records.size(); ++t)
      CHECK(*records[t].sq_dist_to_reference <= 1e-18);
  }

  SECTION("a generous budget converges every frame") {
    const auto frames = walk_frames(3, 5, 0.2, 95);
    const SolverConfig cfg{SolverMethod::Picard, 1, 1e-9, 1};
    const auto records = reference_chain_diagnostic(cell, frames, 400, cfg);
    for (const auto& record : records) {
      // ||z - z*|| <= ||g(z)|| / (1 - gamma), squared.
      const double bound = 1e-9 / (1.0 - cell.gamma);
      CHECK(*record.sq_dist_to_reference <= bound * bound);
    }
  }
}

TEST_CASE("zero-budget frames pass the state through", "[stream]") {
  const auto cell = make_random_cell(96, 6, 2, 0.9, ActivationKind::Tanh);
  const auto frames = walk_frames(2, 4, 0.05, 97);
  StreamOptions opts;
  opts.retain_z = true;
  const auto records =
      stream_infer(cell, frames, WarmStartPolicy::StreamFromZero,
                   BudgetSchedule::per_frame({3, 0, 2, 0}), picard_cfg(), opts);
  CHECK(records[1].iterations_used == 0);
  CHECK(*records[1].z_final == *records[0].z_final);
  CHECK(records[1].residual_norm ==
        l2_norm(residual(cell, *records[0].z_final, frames[1])));
  CHECK(records[3].iterations_used == 0);
  CHECK(*records[3].z_final == *records[2].z_final);
}

TEST_CASE("front-loaded schedule converges frame 0 and coasts", "[stream]") {
  const auto cell = make_random_cell(98, 16, 4, 0.9, ActivationKind::Tanh);
  const auto frames = walk_frames(4, 4, 0.01, 99);
  StreamOptions opts;
  const auto records =
      stream_infer(cell, frames, WarmStartPolicy::StreamFromZero,
                   BudgetSchedule::per_frame({120, 1, 1, 1}), picard_cfg(), opts);
  CHECK(records[0].residual_norm <= 1e-6);
  for (std::size_t t = 1; t < records.size(); ++t) {
    CHECK(records[t].iterations_used == 1);
    CHECK(records[t].residual_norm <= 0.05);
  }
}

TEST_CASE("schedule length mismatches are rejected", "[stream]") {
  const auto cell = make_random_cell(100, 4, 2, 0.9, ActivationKind::Tanh);
  const auto frames = walk_frames(2, 5, 0.05, 101);
  CHECK_THROWS_AS(stream_infer(cell, frames, WarmStartPolicy::StreamFromZero,
                               BudgetSchedule::per_frame({1, 1}), picard_cfg(), {}),
                  std::invalid_argument);
}

TEST_CASE("solver divergence carries the frame index", "[stream]") {
  const EquilibriumCell runaway{Matrix::from(1, 1, {40.0}), Matrix::from(1, 1, {1.0}),
                                Vector{0.0}, ActivationKind::Identity, 0.9, std::nullopt};
  const std::vector<Vector> frames(4, Vector{1.0});
  try {
    stream_infer(runaway, frames, WarmStartPolicy::StreamFromZero,
                 BudgetSchedule::constant(300), picard_cfg(), {});
    FAIL("expected frame_error");
  } catch (const frame_error& e) {
    CHECK(e.frame() == 0);
  }
}

TEST_CASE("stream-from-reference seeds frame 0 with the oracle", "[stream]") {
  const auto cell = make_random_cell(102, 8, 3, 0.9, ActivationKind::Tanh);
  const auto frames = walk_frames(3, 3, 0.05, 103);
  StreamOptions opts;
  opts.compute_references = true;
  opts.retain_z = true;
  const auto records = stream_infer(cell, frames, WarmStartPolicy::StreamFromReference,
                                    BudgetSchedule::constant(2), picard_cfg(), opts);
  CHECK(records[0].iterations_used == 0);
  CHECK(*records[0].sq_dist_to_reference == 0.0);
  CHECK(records[0].residual_norm <= 1e-10);
  CHECK(*records[0].z_final == reference_fixed_point(cell, frames[0]));
  CHECK(records[1].iterations_used == 2);
}
