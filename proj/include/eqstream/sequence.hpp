#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eqstream/linalg.hpp"
#include "eqstream/rng.hpp"
#include "eqstream/textio.hpp"

namespace eqstream {

enum class SequenceMode { RandomWalk, MovingBlob };

inline std::string to_string(SequenceMode m) {
  return m == SequenceMode::RandomWalk ? "walk" : "blob";
}

inline SequenceMode sequence_mode_from_string(const std::string& name) {
  if (name == "walk") return SequenceMode::RandomWalk;
  if (name == "blob") return SequenceMode::MovingBlob;
  throw std::invalid_argument("unknown sequence mode '" + name + "'");
}

/// Generator description for a synthetic input stream.
///
/// RandomWalk: x_{t+1} = x_t + epsilon * unit(u_t), so the consecutive-frame
/// distance is exactly epsilon. MovingBlob: a unit-amplitude Gaussian bump
/// (sigma = width/8) drifting across a toroidal grid at `vel` pixels per
/// frame. Shot frames resample the walk state / teleport the blob center.
struct SequenceSpec {
  SequenceMode mode = SequenceMode::RandomWalk;
  std::size_t dx = 16;       // RandomWalk dimension
  std::size_t grid_h = 16;   // MovingBlob grid
  std::size_t grid_w = 16;
  std::size_t length = 40;
  double epsilon = 0.05;
  double vel_y = 0.125;
  double vel_x = 0.0625;
  std::vector<std::size_t> shot_frames;  // strictly increasing, within [1, length-1]
  std::uint64_t seed = 1;

  std::size_t frame_dim() const {
    return mode == SequenceMode::RandomWalk ? dx : grid_h * grid_w;
  }

  void validate() const {
    if (length == 0) throw std::invalid_argument("SequenceSpec: length must be >= 1");
    if (mode == SequenceMode::RandomWalk) {
      if (dx == 0) throw std::invalid_argument("SequenceSpec: dx must be >= 1");
      if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("SequenceSpec: epsilon must be finite and >= 0");
    } else {
      if (grid_h == 0 || grid_w == 0)
        throw std::invalid_argument("SequenceSpec: blob grid dims must be >= 1");
      if (!std::isfinite(vel_y) || !std::isfinite(vel_x))
        throw std::invalid_argument("SequenceSpec: blob velocity must be finite");
    }
    std::size_t prev = 0;
    for (std::size_t f : shot_frames) {
      if (f < 1 || f >= length)
        throw std::invalid_argument("SequenceSpec: shot frame " + std::to_string(f) +
                                    " outside [1, " + std::to_string(length - 1) + "]");
      if (f <= prev && prev != 0)
        throw std::invalid_argument("SequenceSpec: shot frames must be strictly increasing");
      prev = f;
    }
  }
};

namespace detail {

inline double wrap_period(double v, double period) {
  double r = std::fmod(v, period);
  if (r < 0.0) r += period;
  return r;
}

inline double toroidal_delta(double a, double b, double period) {
  double d = std::fabs(a - b);
  d = std::fmod(d, period);
  return std::min(d, period - d);
}

inline Vector blob_frame(std::size_t h, std::size_t w, double cy, double cx) {
  const double sigma = static_cast<double>(w) / 8.0;
  std::vector<double> values(h * w, 0.0);
  for (std::size_t i = 0; i < h; ++i) {
    const double dy = toroidal_delta(static_cast<double>(i), cy, static_cast<double>(h));
    for (std::size_t j = 0; j < w; ++j) {
      const double dx = toroidal_delta(static_cast<double>(j), cx, static_cast<double>(w));
      values[i * w + j] = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
    }
  }
  return Vector::raw(std::move(values));
}

}  // namespace detail

inline std::vector<Vector> generate_sequence(const SequenceSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<Vector> frames;
  frames.reserve(spec.length);
  const auto is_shot = [&](std::size_t t) {
    return std::find(spec.shot_frames.begin(), spec.shot_frames.end(), t) !=
           spec.shot_frames.end();
  };

  if (spec.mode == SequenceMode::RandomWalk) {
    frames.push_back(Vector::raw(rng.normals(spec.dx)));
    for (std::size_t t = 1; t < spec.length; ++t) {
      if (is_shot(t)) {
        frames.push_back(Vector::raw(rng.normals(spec.dx)));
        continue;
      }
      Vector step = Vector::raw(rng.normals(spec.dx));
      const double norm = l2_norm(step);
      // A zero draw has probability zero; fall back to the first axis.
      if (norm == 0.0) {
        step[0] = 1.0;
        frames.push_back(frames.back() + spec.epsilon * std::move(step));
        continue;
      }
      step *= spec.epsilon / norm;
      frames.push_back(frames.back() + step);
    }
    return frames;
  }

  // MovingBlob. Anchor centers sit on integer pixels so that integer
  // velocities translate the grid exactly and wraparound periods are exact.
  double anchor_y = static_cast<double>(rng.below(spec.grid_h));
  double anchor_x = static_cast<double>(rng.below(spec.grid_w));
  std::size_t anchor_t = 0;
  for (std::size_t t = 0; t < spec.length; ++t) {
    if (t > 0 && is_shot(t)) {
      anchor_y = static_cast<double>(rng.below(spec.grid_h));
      anchor_x = static_cast<double>(rng.below(spec.grid_w));
      anchor_t = t;
    }
    const double steps = static_cast<double>(t - anchor_t);
    const double cy =
        detail::wrap_period(anchor_y + steps * spec.vel_y, static_cast<double>(spec.grid_h));
    const double cx =
        detail::wrap_period(anchor_x + steps * spec.vel_x, static_cast<double>(spec.grid_w));
    frames.push_back(detail::blob_frame(spec.grid_h, spec.grid_w, cy, cx));
  }
  return frames;
}

// Frame dump: one frame per line, space-separated decimal values, bit-exact
// round trip. Used for replay and cross-implementation checks.

inline void write_frames(const std::vector<Vector>& frames, std::ostream& out) {
  for (const auto& frame : frames) {
    for (std::size_t i = 0; i < frame.size(); ++i) {
      if (i) out << ' ';
      out << format_g17(frame[i]);
    }
    out << '\n';
  }
}

inline std::vector<Vector> read_frames(std::istream& in) {
  std::vector<Vector> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::vector<double> values;
    double v;
    while (iss >> v) values.push_back(v);
    if (!iss.eof())
      throw std::runtime_error("frame dump: malformed value on line " +
                               std::to_string(frames.size() + 1));
    if (!frames.empty() && values.size() != frames.front().size())
      throw std::runtime_error("frame dump: line " + std::to_string(frames.size() + 1) +
                               " has " + std::to_string(values.size()) +
                               " values, expected " + std::to_string(frames.front().size()));
    frames.push_back(Vector::from(std::move(values)));
  }
  return frames;
}

inline void write_frames_file(const std::vector<Vector>& frames, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_frames(frames, out);
}

inline std::vector<Vector> read_frames_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_frames(in);
}

// Sequence spec file: `key value` lines, '#' comments. Keys: mode, dx,
// grid_h, grid_w, length, epsilon, vel_y, vel_x, shots (comma list), seed.

inline void save_sequence_spec(const SequenceSpec& spec, std::ostream& out) {
  out << "eqstream-sequence 1\n";
  out << "mode " << to_string(spec.mode) << '\n';
  if (spec.mode == SequenceMode::RandomWalk) {
    out << "dx " << spec.dx << '\n';
    out << "epsilon " << format_g17(spec.epsilon) << '\n';
  } else {
    out << "grid_h " << spec.grid_h << '\n';
    out << "grid_w " << spec.grid_w << '\n';
    out << "vel_y " << format_g17(spec.vel_y) << '\n';
    out << "vel_x " << format_g17(spec.vel_x) << '\n';
  }
  out << "length " << spec.length << '\n';
  if (!spec.shot_frames.empty()) {
    out << "shots ";
    for (std::size_t i = 0; i < spec.shot_frames.size(); ++i) {
      if (i) out << ',';
      out << spec.shot_frames[i];
    }
    out << '\n';
  }
  out << "seed " << spec.seed << '\n';
}

inline SequenceSpec load_sequence_spec(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "eqstream-sequence 1")
    throw std::runtime_error("sequence spec: bad header");
  SequenceSpec spec;
  spec.shot_frames.clear();
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.find(' ');
    if (pos == std::string::npos)
      throw std::runtime_error("sequence spec: malformed line '" + line + "'");
    const std::string key = line.substr(0, pos);
    const std::string value = line.substr(pos + 1);
    if (key == "mode") spec.mode = sequence_mode_from_string(value);
    else if (key == "dx") spec.dx = parse_u64(value, "sequence spec dx");
    else if (key == "grid_h") spec.grid_h = parse_u64(value, "sequence spec grid_h");
    else if (key == "grid_w") spec.grid_w = parse_u64(value, "sequence spec grid_w");
    else if (key == "length") spec.length = parse_u64(value, "sequence spec length");
    else if (key == "epsilon") spec.epsilon = parse_double(value, "sequence spec epsilon");
    else if (key == "vel_y") spec.vel_y = parse_double(value, "sequence spec vel_y");
    else if (key == "vel_x") spec.vel_x = parse_double(value, "sequence spec vel_x");
    else if (key == "seed") spec.seed = parse_u64(value, "sequence spec seed");
    else if (key == "shots") {
      for (const auto& token : split(value, ','))
        spec.shot_frames.push_back(parse_u64(token, "sequence spec shots"));
    } else {
      throw std::runtime_error("sequence spec: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

inline SequenceSpec load_sequence_spec_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return load_sequence_spec(in);
}

inline void save_sequence_spec_file(const SequenceSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  save_sequence_spec(spec, out);
}

}  // namespace eqstream
