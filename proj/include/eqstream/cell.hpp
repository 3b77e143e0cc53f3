#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eqstream/linalg.hpp"
#include "eqstream/rng.hpp"
#include "eqstream/textio.hpp"

namespace eqstream {

enum class ActivationKind { Tanh, Identity };

inline std::string to_string(ActivationKind a) {
  return a == ActivationKind::Tanh ? "tanh" : "identity";
}

inline ActivationKind activation_from_string(const std::string& name) {
  if (name == "tanh") return ActivationKind::Tanh;
  if (name == "identity") return ActivationKind::Identity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

struct ScaleDims {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::size_t size() const { return height * width * channels; }
};

/// Spatial pyramid for block-structured cells. Scale 0 is the finest; every
/// coarser scale halves the spatial dims (ceil division). State within a
/// scale is stored position-major with the channel block contiguous per
/// position: index = (row * width + col) * channels + channel.
class MultiscaleLayout {
 public:
  explicit MultiscaleLayout(std::vector<ScaleDims> scales) : scales_(std::move(scales)) {
    if (scales_.empty()) throw std::invalid_argument("MultiscaleLayout: no scales");
    for (const auto& s : scales_)
      if (s.height == 0 || s.width == 0 || s.channels == 0)
        throw std::invalid_argument("MultiscaleLayout: zero-sized scale");
    for (std::size_t i = 1; i < scales_.size(); ++i) {
      const auto& fine = scales_[i - 1];
      const auto& coarse = scales_[i];
      if (coarse.height != (fine.height + 1) / 2 || coarse.width != (fine.width + 1) / 2)
        throw std::invalid_argument(
            "MultiscaleLayout: scale " + std::to_string(i) + " is " +
            std::to_string(coarse.height) + "x" + std::to_string(coarse.width) +
            ", expected ceil-halved " + std::to_string((fine.height + 1) / 2) + "x" +
            std::to_string((fine.width + 1) / 2));
    }
  }

  const std::vector<ScaleDims>& scales() const { return scales_; }

  std::size_t state_dim() const {
    std::size_t total = 0;
    for (const auto& s : scales_) total += s.size();
    return total;
  }

  std::size_t scale_offset(std::size_t scale) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < scale; ++i) off += scales_[i].size();
    return off;
  }

  friend bool operator==(const MultiscaleLayout& a, const MultiscaleLayout& b) {
    if (a.scales_.size() != b.scales_.size()) return false;
    for (std::size_t i = 0; i < a.scales_.size(); ++i) {
      if (a.scales_[i].height != b.scales_[i].height ||
          a.scales_[i].width != b.scales_[i].width ||
          a.scales_[i].channels != b.scales_[i].channels)
        return false;
    }
    return true;
  }

 private:
  std::vector<ScaleDims> scales_;
};

/// Weight-tied transformation f(z; x) = phi(A z + U x + b) with the spectral
/// norm of A held at gamma < 1. Both activations are 1-Lipschitz, so every
/// cell is a strict contraction in z and has a unique fixed point per input.
/// Build through the factories below; they enforce the spectral bound.
struct EquilibriumCell {
  Matrix A;
  Matrix U;
  Vector b;
  ActivationKind activation = ActivationKind::Tanh;
  double gamma = 0.9;
  std::optional<MultiscaleLayout> layout;

  std::size_t state_dim() const { return A.rows(); }
  std::size_t input_dim() const { return U.cols(); }
};

namespace detail {

inline void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !(gamma < 1.0))
    throw std::invalid_argument("gamma must lie in (0, 1), got " + format_g17(gamma));
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  return Matrix::from(rows, cols, rng.normals(rows * cols));
}

// The zero-tolerance Lipschitz gate compares ||A dz|| against gamma ||dz||,
// which for an orthogonally based A is an equality up to rounding. Shaving
// a sliver off the target (well inside the documented 1e-6 window around
// gamma) keeps the bound strict against floating-point noise.
constexpr double kSpectralMargin = 1e-7;

/// Rescales A in place so its estimated spectral norm equals gamma (shy of
/// the margin above).
inline void normalize_spectral(Matrix& a, double gamma) {
  const double sigma = spectral_norm_estimate(a);
  if (sigma == 0.0) throw std::runtime_error("cannot normalize a zero state map");
  a.scale(gamma * (1.0 - kSpectralMargin) / sigma);
}

// Pre-activation scale targets. Fan-in scaling keeps tanh in its
// near-linear band, so the observed contraction rate tracks gamma instead of
// collapsing through saturation; unscaled normal injections would push
// pre-activations to magnitude ~sqrt(dx) and make every cell converge in a
// couple of steps. The bias is the larger term: it sets where the fixed
// point sits (and thus the cold-start transient) without feeding into the
// frame-to-frame sensitivity.
constexpr double kInputStd = 0.05;
constexpr double kBiasStd = 0.40;

// Eigen-angle band for the state mixing map, bounded away from 0 so no
// error mode sits near resonance with the identity: the fixed-point
// sensitivity (I - A)^-1 then has comparable gain in every direction and
// streaming plateaus do not wander with the input region.
constexpr double kMixAngleMin = 1.0471975511965976;  // pi/3
constexpr double kMixAngleSpan = 1.0471975511965976;

/// State mixing base: a random orthogonal map with rotation angles drawn
/// from the band above, V diag(R(theta_1), ..., [-1]) V^T. All singular
/// values are 1; the spectrum stays clear of +1.
inline Matrix state_mixing_matrix(Rng& rng, std::size_t n) {
  Matrix v = random_orthogonal(rng, n);
  Matrix w(n, n);
  const std::size_t pairs = n / 2;
  for (std::size_t p = 0; p < pairs; ++p) {
    const double theta = kMixAngleMin + rng.uniform() * kMixAngleSpan;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::size_t r = 0; r < n; ++r) {
      w(r, 2 * p) = c * v(r, 2 * p) + s * v(r, 2 * p + 1);
      w(r, 2 * p + 1) = -s * v(r, 2 * p) + c * v(r, 2 * p + 1);
    }
  }
  if (n % 2 == 1)
    for (std::size_t r = 0; r < n; ++r) w(r, n - 1) = -v(r, n - 1);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += w(i, k) * v(j, k);
      a(i, j) = acc;
    }
  return a;
}

/// Input injection with orthonormal columns: ||U dx|| is proportional to
/// ||dx|| for every direction, so the fixed-point sensitivity to input
/// changes does not wander with the input region. Falls back to a scaled
/// Gaussian when dx exceeds dz.
inline Matrix make_injection(Rng& rng, std::size_t dz, std::size_t dx) {
  Matrix u = dz >= dx ? random_orthonormal(rng, dz, dx) : random_matrix(rng, dz, dx);
  const double scale =
      dz >= dx ? kInputStd * std::sqrt(static_cast<double>(dz) / static_cast<double>(dx))
               : kInputStd / std::sqrt(static_cast<double>(dx));
  u.scale(scale);
  return u;
}

}  // namespace detail

inline EquilibriumCell make_random_cell(std::uint64_t seed, std::size_t dz, std::size_t dx,
                                        double gamma, ActivationKind activation) {
  if (dz == 0 || dx == 0) throw std::invalid_argument("make_random_cell: dz and dx must be >= 1");
  detail::check_gamma(gamma);
  Rng rng(seed);
  // Draw order (A's base, then U's, then b) is part of the reproducibility
  // contract; make_multiscale_cell relies on it for the single-scale case.
  Matrix a = detail::state_mixing_matrix(rng, dz);
  Matrix u = detail::make_injection(rng, dz, dx);
  Vector b = Vector::raw(rng.normals(dz));
  detail::normalize_spectral(a, gamma);
  b *= detail::kBiasStd;
  return EquilibriumCell{std::move(a), std::move(u), std::move(b), activation, gamma,
                         std::nullopt};
}

/// 2x2 average pooling from the finer grid to the ceil-halved coarser grid,
/// acting per channel. Boundary cells of odd dims average fewer pixels.
inline Matrix average_pool_matrix(const ScaleDims& fine, const ScaleDims& coarse) {
  Matrix p(coarse.size(), fine.size());
  const std::size_t ch = std::min(fine.channels, coarse.channels);
  for (std::size_t ci = 0; ci < coarse.height; ++ci) {
    const std::size_t i0 = 2 * ci;
    const std::size_t i1 = std::min(i0 + 2, fine.height);
    for (std::size_t cj = 0; cj < coarse.width; ++cj) {
      const std::size_t j0 = 2 * cj;
      const std::size_t j1 = std::min(j0 + 2, fine.width);
      const double w = 1.0 / static_cast<double>((i1 - i0) * (j1 - j0));
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t row = (ci * coarse.width + cj) * coarse.channels + c;
        for (std::size_t i = i0; i < i1; ++i)
          for (std::size_t j = j0; j < j1; ++j)
            p(row, (i * fine.width + j) * fine.channels + c) = w;
      }
    }
  }
  return p;
}

/// Nearest-neighbor upsampling from the coarser grid back to the finer one,
/// per channel, with weight 1.
inline Matrix nearest_upsample_matrix(const ScaleDims& fine, const ScaleDims& coarse) {
  Matrix q(fine.size(), coarse.size());
  const std::size_t ch = std::min(fine.channels, coarse.channels);
  for (std::size_t i = 0; i < fine.height; ++i) {
    const std::size_t ci = std::min(i / 2, coarse.height - 1);
    for (std::size_t j = 0; j < fine.width; ++j) {
      const std::size_t cj = std::min(j / 2, coarse.width - 1);
      for (std::size_t c = 0; c < ch; ++c)
        q((i * fine.width + j) * fine.channels + c,
          (ci * coarse.width + cj) * coarse.channels + c) = 1.0;
    }
  }
  return q;
}

/// Assembles the block state map: a random orthogonal mixing block per scale
/// on the diagonal, fixed pool/upsample links between adjacent scales, then
/// one global rescale to spectral norm gamma. The result behaves exactly
/// like a single-scale cell over the concatenated state.
inline EquilibriumCell make_multiscale_cell(std::uint64_t seed, const MultiscaleLayout& layout,
                                            std::size_t dx, double gamma,
                                            ActivationKind activation) {
  if (dx == 0) throw std::invalid_argument("make_multiscale_cell: dx must be >= 1");
  detail::check_gamma(gamma);
  const auto& scales = layout.scales();
  const std::size_t dz = layout.state_dim();
  Rng rng(seed);

  Matrix a(dz, dz);
  for (std::size_t s = 0; s < scales.size(); ++s) {
    const std::size_t n = scales[s].size();
    const std::size_t off = layout.scale_offset(s);
    Matrix block = detail::state_mixing_matrix(rng, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a(off + i, off + j) = block(i, j);
  }
  for (std::size_t s = 0; s + 1 < scales.size(); ++s) {
    const std::size_t fine_off = layout.scale_offset(s);
    const std::size_t coarse_off = layout.scale_offset(s + 1);
    const Matrix pool = average_pool_matrix(scales[s], scales[s + 1]);
    const Matrix up = nearest_upsample_matrix(scales[s], scales[s + 1]);
    for (std::size_t i = 0; i < pool.rows(); ++i)
      for (std::size_t j = 0; j < pool.cols(); ++j)
        a(coarse_off + i, fine_off + j) = pool(i, j);
    for (std::size_t i = 0; i < up.rows(); ++i)
      for (std::size_t j = 0; j < up.cols(); ++j)
        a(fine_off + i, coarse_off + j) = up(i, j);
  }

  Matrix u = detail::make_injection(rng, dz, dx);
  Vector b = Vector::raw(rng.normals(dz));
  detail::normalize_spectral(a, gamma);
  b *= detail::kBiasStd;
  return EquilibriumCell{std::move(a), std::move(u), std::move(b), activation, gamma, layout};
}

inline Vector cell_apply(const EquilibriumCell& cell, const Vector& z, const Vector& x) {
  if (z.size() != cell.state_dim())
    throw std::invalid_argument("cell_apply: state has length " + std::to_string(z.size()) +
                                ", cell expects " + std::to_string(cell.state_dim()));
  if (x.size() != cell.input_dim())
    throw std::invalid_argument("cell_apply: input has length " + std::to_string(x.size()) +
                                ", cell expects " + std::to_string(cell.input_dim()));
  Vector y = matvec(cell.A, z);
  const Vector ux = matvec(cell.U, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += ux[i] + cell.b[i];
  if (cell.activation == ActivationKind::Tanh)
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(y[i]);
  return y;
}

/// g(z; x) = f(z; x) - z. Fixed points are exactly the roots of g.
inline Vector residual(const EquilibriumCell& cell, const Vector& z, const Vector& x) {
  Vector g = cell_apply(cell, z, x);
  g -= z;
  return g;
}

/// Closed-form fixed point for Identity cells: solves (I - A) z = U x + b.
/// This is the independent oracle the solver tests are checked against.
inline Vector analytic_fixed_point(const EquilibriumCell& cell, const Vector& x) {
  if (cell.activation != ActivationKind::Identity)
    throw std::invalid_argument("analytic_fixed_point requires the Identity activation");
  const std::size_t n = cell.state_dim();
  Matrix system(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) system(i, j) = (i == j ? 1.0 : 0.0) - cell.A(i, j);
  Vector rhs = matvec(cell.U, x);
  rhs += cell.b;
  return solve_linear(std::move(system), std::move(rhs));
}

// --- serialization ---------------------------------------------------------
//
// Plain-text cell file, decimal with 17 significant digits so replay is
// bit-exact:
//
//   eqstream-cell 1
//   seed <u64>
//   dz <n>  dx <n>  gamma <g>  activation tanh|identity   (one key per line)
//   scales <count>            (0 for single-scale cells)
//   scale <h> <w> <c>         (repeated <count> times)
//   A                         (dz lines of dz values)
//   U                         (dz lines of dx values)
//   b                         (one line of dz values)

namespace detail {

inline void write_matrix_rows(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_g17(m(i, j));
    }
    out << '\n';
  }
}

inline std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(std::string("cell file: missing ") + what);
  return line;
}

inline std::vector<double> parse_values(const std::string& line, std::size_t expected,
                                        const char* what) {
  std::istringstream iss(line);
  std::vector<double> values;
  double v;
  while (iss >> v) values.push_back(v);
  if (values.size() != expected)
    throw std::runtime_error(std::string("cell file: ") + what + " row has " +
                             std::to_string(values.size()) + " values, expected " +
                             std::to_string(expected));
  return values;
}

inline std::string expect_key(const std::string& line, const std::string& key) {
  if (line.rfind(key + " ", 0) != 0)
    throw std::runtime_error("cell file: expected '" + key + " ...', got '" + line + "'");
  return line.substr(key.size() + 1);
}

}  // namespace detail

inline void save_cell(const EquilibriumCell& cell, std::ostream& out, std::uint64_t seed = 0) {
  out << "eqstream-cell 1\n";
  out << "seed " << seed << '\n';
  out << "dz " << cell.state_dim() << '\n';
  out << "dx " << cell.input_dim() << '\n';
  out << "gamma " << format_g17(cell.gamma) << '\n';
  out << "activation " << to_string(cell.activation) << '\n';
  if (cell.layout) {
    out << "scales " << cell.layout->scales().size() << '\n';
    for (const auto& s : cell.layout->scales())
      out << "scale " << s.height << ' ' << s.width << ' ' << s.channels << '\n';
  } else {
    out << "scales 0\n";
  }
  out << "A\n";
  detail::write_matrix_rows(out, cell.A);
  out << "U\n";
  detail::write_matrix_rows(out, cell.U);
  out << "b\n";
  for (std::size_t i = 0; i < cell.b.size(); ++i) {
    if (i) out << ' ';
    out << format_g17(cell.b[i]);
  }
  out << '\n';
}

inline EquilibriumCell load_cell(std::istream& in) {
  using detail::expect_key;
  using detail::next_line;
  if (next_line(in, "header") != "eqstream-cell 1")
    throw std::runtime_error("cell file: bad header");
  (void)parse_u64(expect_key(next_line(in, "seed"), "seed"), "cell file seed");
  const auto dz = parse_u64(expect_key(next_line(in, "dz"), "dz"), "cell file dz");
  const auto dx = parse_u64(expect_key(next_line(in, "dx"), "dx"), "cell file dx");
  const double gamma =
      parse_double(expect_key(next_line(in, "gamma"), "gamma"), "cell file gamma");
  const auto activation = activation_from_string(
      expect_key(next_line(in, "activation"), "activation"));
  const auto n_scales =
      parse_u64(expect_key(next_line(in, "scales"), "scales"), "cell file scales");
  std::optional<MultiscaleLayout> layout;
  if (n_scales > 0) {
    std::vector<ScaleDims> dims;
    for (std::size_t s = 0; s < n_scales; ++s) {
      const auto parts = split(expect_key(next_line(in, "scale"), "scale"), ' ');
      if (parts.size() != 3) throw std::runtime_error("cell file: malformed scale line");
      dims.push_back(ScaleDims{parse_u64(parts[0], "scale height"),
                               parse_u64(parts[1], "scale width"),
                               parse_u64(parts[2], "scale channels")});
    }
    layout.emplace(std::move(dims));
    if (layout->state_dim() != dz)
      throw std::runtime_error("cell file: layout dims do not add up to dz");
  }
  detail::check_gamma(gamma);

  if (next_line(in, "A marker") != "A") throw std::runtime_error("cell file: expected 'A'");
  std::vector<double> a_values;
  a_values.reserve(dz * dz);
  for (std::size_t i = 0; i < dz; ++i) {
    const auto row = detail::parse_values(next_line(in, "A row"), dz, "A");
    a_values.insert(a_values.end(), row.begin(), row.end());
  }
  if (next_line(in, "U marker") != "U") throw std::runtime_error("cell file: expected 'U'");
  std::vector<double> u_values;
  u_values.reserve(dz * dx);
  for (std::size_t i = 0; i < dz; ++i) {
    const auto row = detail::parse_values(next_line(in, "U row"), dx, "U");
    u_values.insert(u_values.end(), row.begin(), row.end());
  }
  if (next_line(in, "b marker") != "b") throw std::runtime_error("cell file: expected 'b'");
  const auto b_values = detail::parse_values(next_line(in, "b row"), dz, "b");

  EquilibriumCell cell{Matrix::from(dz, dz, std::move(a_values)),
                       Matrix::from(dz, dx, std::move(u_values)),
                       Vector::from(b_values), activation, gamma, std::move(layout)};
  if (spectral_norm_estimate(cell.A) > gamma + 1e-6)
    throw std::runtime_error("cell file: state map violates the spectral bound gamma");
  return cell;
}

inline void save_cell_file(const EquilibriumCell& cell, const std::string& path,
                           std::uint64_t seed = 0) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  save_cell(cell, out, seed);
}

inline EquilibriumCell load_cell_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return load_cell(in);
}

}  // namespace eqstream
