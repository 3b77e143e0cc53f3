#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eqstream/cell.hpp"
#include "eqstream/linalg.hpp"

namespace eqstream {

enum class SolverMethod { Picard, Broyden };

inline std::string to_string(SolverMethod m) {
  return m == SolverMethod::Picard ? "picard" : "broyden";
}

inline SolverMethod solver_method_from_string(const std::string& name) {
  if (name == "picard") return SolverMethod::Picard;
  if (name == "broyden") return SolverMethod::Broyden;
  throw std::invalid_argument("unknown solver method '" + name + "'");
}

/// tol_abs = 0 disables early stopping, so a run consumes exactly max_iters
/// steps; the benchmark curves rely on that. broyden_memory caps the stored
/// rank-1 update pairs (oldest dropped first).
struct SolverConfig {
  SolverMethod method = SolverMethod::Broyden;
  std::size_t max_iters = 26;
  double tol_abs = 1e-6;
  std::size_t broyden_memory = 26;
};

inline SolverConfig make_solver_config(SolverMethod method, std::size_t max_iters,
                                       double tol_abs) {
  return SolverConfig{method, max_iters, tol_abs, std::max<std::size_t>(max_iters, 1)};
}

struct SolveResult {
  Vector z;
  std::size_t iterations = 0;
  std::vector<double> residual_trace;  // ||g|| after each step
  bool converged = false;
};

class divergence_error : public std::runtime_error {
 public:
  divergence_error(const std::string& message, std::size_t step)
      : std::runtime_error(message + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

namespace detail {

inline void check_solver_config(const SolverConfig& cfg) {
  if (!(cfg.tol_abs >= 0.0) || !std::isfinite(cfg.tol_abs))
    throw std::invalid_argument("SolverConfig: tol_abs must be finite and >= 0");
  if (cfg.method == SolverMethod::Broyden && cfg.broyden_memory == 0)
    throw std::invalid_argument("SolverConfig: broyden_memory must be >= 1");
}

inline void check_start(const EquilibriumCell& cell, const Vector& z0) {
  if (z0.size() != cell.state_dim())
    throw std::invalid_argument("solve: start point has length " + std::to_string(z0.size()) +
                                ", cell expects " + std::to_string(cell.state_dim()));
}

}  // namespace detail

/// Repeated application z <- f(z; x). The residual norm ||f(z) - z|| at the
/// new iterate is recorded after every step; evaluating it doubles as the
/// next step's update, so the chain of iterates is exactly f^k(z0) and a
/// streamed run splits into per-frame budgets without changing a single bit.
inline SolveResult picard_solve(const EquilibriumCell& cell, const Vector& x, const Vector& z0,
                                const SolverConfig& cfg) {
  if (cfg.method != SolverMethod::Picard)
    throw std::invalid_argument("picard_solve called with a non-Picard config");
  detail::check_solver_config(cfg);
  detail::check_start(cell, z0);

  SolveResult result;
  result.z = z0;
  if (cfg.max_iters == 0) return result;

  Vector fz = cell_apply(cell, result.z, x);
  for (std::size_t step = 1; step <= cfg.max_iters; ++step) {
    Vector z_new = std::move(fz);
    fz = cell_apply(cell, z_new, x);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < z_new.size(); ++i) {
      const double d = fz[i] - z_new[i];
      norm_sq += d * d;
    }
    const double res_norm = std::sqrt(norm_sq);
    if (!std::isfinite(res_norm))
      throw divergence_error("picard_solve: non-finite iterate", step);
    result.residual_trace.push_back(res_norm);
    result.z = std::move(z_new);
    result.iterations = step;
    if (res_norm <= cfg.tol_abs) {
      result.converged = true;
      break;
    }
  }
  return result;
}

/// Quasi-Newton root finding on g(z) = f(z; x) - z.
///
/// The inverse Jacobian approximation starts at -I, which makes the first
/// step identical to a Picard step, and is maintained as -I plus a list of
/// rank-1 factor pairs (good Broyden updates via Sherman-Morrison). Full
/// steps, no line search. An update is skipped, freezing the approximation
/// for that step, when the secant denominator drops below 1e-12 times the
/// current state norm.
inline SolveResult broyden_solve(const EquilibriumCell& cell, const Vector& x, const Vector& z0,
                                 const SolverConfig& cfg) {
  if (cfg.method != SolverMethod::Broyden)
    throw std::invalid_argument("broyden_solve called with a non-Broyden config");
  detail::check_solver_config(cfg);
  detail::check_start(cell, z0);

  SolveResult result;
  result.z = z0;
  if (cfg.max_iters == 0) return result;

  const std::size_t n = z0.size();
  std::deque<std::pair<Vector, Vector>> pairs;  // H = -I + sum u v'

  const auto apply_h = [&](const Vector& w) {
    Vector out = Vector::raw(std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) out[i] = -w[i];
    for (const auto& [u, v] : pairs) {
      const double c = dot(v, w);
      for (std::size_t i = 0; i < n; ++i) out[i] += c * u[i];
    }
    return out;
  };
  const auto apply_h_transpose = [&](const Vector& w) {
    Vector out = Vector::raw(std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) out[i] = -w[i];
    for (const auto& [u, v] : pairs) {
      const double c = dot(u, w);
      for (std::size_t i = 0; i < n; ++i) out[i] += c * v[i];
    }
    return out;
  };

  Vector z = z0;
  Vector fz = cell_apply(cell, z, x);
  Vector g = fz;
  g -= z;

  for (std::size_t step = 1; step <= cfg.max_iters; ++step) {
    Vector z_new;
    if (pairs.empty()) {
      // H = -I exactly: the Newton step z - H g lands on f(z). Using the
      // cached application keeps the iterate bitwise equal to Picard's.
      z_new = std::move(fz);
    } else {
      Vector hg = apply_h(g);
      z_new = z;
      z_new -= hg;
    }

    Vector fz_new = cell_apply(cell, z_new, x);
    Vector g_new = fz_new;
    g_new -= z_new;
    const double res_norm = l2_norm(g_new);
    if (!std::isfinite(res_norm))
      throw divergence_error("broyden_solve: non-finite iterate", step);
    if (res_norm > 1e8)
      throw divergence_error("broyden_solve: residual norm " + format_g17(res_norm) +
                                 " exceeds the divergence guard",
                             step);
    result.residual_trace.push_back(res_norm);
    result.iterations = step;

    if (res_norm <= cfg.tol_abs) {
      result.z = std::move(z_new);
      result.converged = true;
      return result;
    }
    if (step == cfg.max_iters) {
      result.z = std::move(z_new);
      return result;
    }

    Vector dz = z_new;
    dz -= z;
    Vector dg = g_new;
    dg -= g;
    const Vector h_dg = apply_h(dg);
    const double denom = dot(dz, h_dg);
    const double state_norm = l2_norm(z_new);
    if (denom != 0.0 && std::fabs(denom) >= 1e-12 * state_norm) {
      Vector u = dz;
      u -= h_dg;
      u *= 1.0 / denom;
      Vector v = apply_h_transpose(dz);
      pairs.emplace_back(std::move(u), std::move(v));
      if (pairs.size() > cfg.broyden_memory) pairs.pop_front();
    }

    z = std::move(z_new);
    fz = std::move(fz_new);
    g = std::move(g_new);
  }
  return result;
}

inline SolveResult solve(const EquilibriumCell& cell, const Vector& x, const Vector& z0,
                         const SolverConfig& cfg) {
  return cfg.method == SolverMethod::Picard ? picard_solve(cell, x, z0, cfg)
                                            : broyden_solve(cell, x, z0, cfg);
}

/// Fully converged fixed point used as ground truth by all streaming
/// distance metrics. Deterministic; throws if the solve does not reach the
/// 1e-10 residual within 512 Broyden steps, which signals a cell violating
/// its contraction bound.
inline Vector reference_fixed_point(const EquilibriumCell& cell, const Vector& x) {
  const SolverConfig cfg{SolverMethod::Broyden, 512, 1e-10, 512};
  SolveResult result = broyden_solve(cell, x, Vector::zeros(cell.state_dim()), cfg);
  if (!result.converged)
    throw std::runtime_error(
        "reference_fixed_point did not converge; the cell appears non-contractive");
  return std::move(result.z);
}

}  // namespace eqstream
