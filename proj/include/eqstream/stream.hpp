#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eqstream/cell.hpp"
#include "eqstream/linalg.hpp"
#include "eqstream/solver.hpp"

namespace eqstream {

/// How each frame's solve is initialized.
///
/// ColdStart           every frame from zeros (non-streaming baseline)
/// ReferenceChain      frame t from the previous frame's fully converged
///                     reference; diagnostic mode, needs the oracle
/// StreamFromReference frame 0 is the oracle reference itself, later frames
///                     start from the previous frame's budgeted estimate
/// StreamFromZero      frame 0 from zeros, later frames from the previous
///                     frame's budgeted estimate (streaming proper)
enum class WarmStartPolicy { ColdStart, ReferenceChain, StreamFromReference, StreamFromZero };

inline std::string to_string(WarmStartPolicy p) {
  switch (p) {
    case WarmStartPolicy::ColdStart: return "cold";
    case WarmStartPolicy::ReferenceChain: return "ref-chain";
    case WarmStartPolicy::StreamFromReference: return "stream-ref";
    default: return "stream-zero";
  }
}

inline WarmStartPolicy policy_from_string(const std::string& name) {
  if (name == "cold") return WarmStartPolicy::ColdStart;
  if (name == "ref-chain") return WarmStartPolicy::ReferenceChain;
  if (name == "stream-ref") return WarmStartPolicy::StreamFromReference;
  if (name == "stream-zero") return WarmStartPolicy::StreamFromZero;
  throw std::invalid_argument("unknown warm-start policy '" + name + "'");
}

/// Per-frame iteration budget: one constant M or an explicit per-frame list.
class BudgetSchedule {
 public:
  static BudgetSchedule constant(std::size_t m) {
    BudgetSchedule s;
    s.constant_ = m;
    return s;
  }
  static BudgetSchedule per_frame(std::vector<std::size_t> budgets) {
    BudgetSchedule s;
    s.per_frame_ = std::move(budgets);
    return s;
  }

  bool is_constant() const { return !per_frame_.has_value(); }

  std::size_t at(std::size_t t) const {
    return per_frame_ ? (*per_frame_)[t] : constant_;
  }

  void check_frame_count(std::size_t frames) const {
    if (per_frame_ && per_frame_->size() != frames)
      throw std::invalid_argument("BudgetSchedule: schedule has " +
                                  std::to_string(per_frame_->size()) + " entries for " +
                                  std::to_string(frames) + " frames");
  }

 private:
  std::size_t constant_ = 1;
  std::optional<std::vector<std::size_t>> per_frame_;
};

struct FrameRecord {
  std::size_t t = 0;
  std::size_t iterations_used = 0;
  double residual_norm = 0.0;
  std::optional<double> sq_dist_to_reference;
  std::optional<double> label_agreement;  // filled by the benchmark layer
  std::optional<Vector> z_final;
  std::optional<Vector> z_reference;
  double solve_seconds = 0.0;
};

struct StreamOptions {
  bool compute_references = false;  // distance metrics via the oracle pass
  bool retain_z = false;
  bool retain_references = false;
  /// Precomputed references z*_t (one per frame). Lets callers share the
  /// oracle pass across budgets; when null, references are solved on demand.
  const std::vector<Vector>* references = nullptr;
};

class frame_error : public std::runtime_error {
 public:
  frame_error(const std::string& message, std::size_t frame)
      : std::runtime_error("frame " + std::to_string(frame) + ": " + message),
        frame_(frame) {}
  std::size_t frame() const { return frame_; }

 private:
  std::size_t frame_;
};

/// Runs the per-frame budgeted solves over an input stream, threading the
/// representation causally: frame t's record depends only on frames 0..t.
/// The oracle pass (reference_fixed_point per frame) is opt-in and never
/// counts toward the streaming iteration budgets.
inline std::vector<FrameRecord> stream_infer(const EquilibriumCell& cell,
                                             const std::vector<Vector>& frames,
                                             WarmStartPolicy policy,
                                             const BudgetSchedule& schedule,
                                             const SolverConfig& solver_cfg,
                                             const StreamOptions& opts = {}) {
  schedule.check_frame_count(frames.size());
  if (opts.references && opts.references->size() != frames.size())
    throw std::invalid_argument("stream_infer: " + std::to_string(opts.references->size()) +
                                " precomputed references for " +
                                std::to_string(frames.size()) + " frames");

  std::vector<std::optional<Vector>> ref_cache(frames.size());
  const auto reference_at = [&](std::size_t t) -> const Vector& {
    if (opts.references) return (*opts.references)[t];
    if (!ref_cache[t]) ref_cache[t] = reference_fixed_point(cell, frames[t]);
    return *ref_cache[t];
  };

  std::vector<FrameRecord> records;
  records.reserve(frames.size());
  Vector previous_estimate;

  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto started = std::chrono::steady_clock::now();
    FrameRecord record;
    record.t = t;

    if (policy == WarmStartPolicy::StreamFromReference && t == 0) {
      // The stream is seeded with the frame-0 oracle; no budgeted steps run.
      Vector z = reference_at(0);
      record.iterations_used = 0;
      record.residual_norm = l2_norm(residual(cell, z, frames[0]));
      if (opts.compute_references)
        record.sq_dist_to_reference = sq_distance(z, reference_at(0));
      if (opts.retain_references) record.z_reference = reference_at(0);
      previous_estimate = std::move(z);
      if (opts.retain_z) record.z_final = previous_estimate;
      record.solve_seconds = std::chrono::duration<double>(
          std::chrono::steady_clock::now() - started).count();
      records.push_back(std::move(record));
      continue;
    }

    Vector z0;
    switch (policy) {
      case WarmStartPolicy::ColdStart:
        z0 = Vector::zeros(cell.state_dim());
        break;
      case WarmStartPolicy::ReferenceChain:
        z0 = t == 0 ? Vector::zeros(cell.state_dim()) : reference_at(t - 1);
        break;
      case WarmStartPolicy::StreamFromReference:
      case WarmStartPolicy::StreamFromZero:
        z0 = t == 0 ? Vector::zeros(cell.state_dim()) : previous_estimate;
        break;
    }

    SolverConfig cfg = solver_cfg;
    cfg.max_iters = schedule.at(t);
    SolveResult solved;
    try {
      solved = solve(cell, frames[t], z0, cfg);
    } catch (const divergence_error& e) {
      throw frame_error(e.what(), t);
    }

    record.iterations_used = solved.iterations;
    record.residual_norm = solved.iterations > 0
                               ? solved.residual_trace.back()
                               : l2_norm(residual(cell, solved.z, frames[t]));
    if (opts.compute_references)
      record.sq_dist_to_reference = sq_distance(solved.z, reference_at(t));
    if (opts.retain_references) record.z_reference = reference_at(t);
    previous_estimate = std::move(solved.z);
    if (opts.retain_z) record.z_final = previous_estimate;
    record.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    records.push_back(std::move(record));
  }
  return records;
}

/// Reference-chained diagnostic: every frame starts from the previous
/// frame's converged reference and runs M budgeted steps, with distance
/// metrics on.
inline std::vector<FrameRecord> reference_chain_diagnostic(const EquilibriumCell& cell,
                                                      const std::vector<Vector>& frames,
                                                      std::size_t m,
                                                      const SolverConfig& solver_cfg) {
  StreamOptions opts;
  opts.compute_references = true;
  return stream_infer(cell, frames, WarmStartPolicy::ReferenceChain,
                      BudgetSchedule::constant(m), solver_cfg, opts);
}

}  // namespace eqstream
