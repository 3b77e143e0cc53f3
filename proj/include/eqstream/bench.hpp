#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eqstream/cell.hpp"
#include "eqstream/linalg.hpp"
#include "eqstream/rng.hpp"
#include "eqstream/sequence.hpp"
#include "eqstream/solver.hpp"
#include "eqstream/stream.hpp"
#include "eqstream/textio.hpp"

namespace eqstream {

/// Fixed random linear classifier head: a desk-scale stand-in for a task
/// readout. Class scores are R z; only the argmax matters.
struct ReadoutHead {
  Matrix R;  // k x dz
  std::size_t classes() const { return R.rows(); }
};

inline ReadoutHead make_readout_head(std::uint64_t seed, std::size_t k, std::size_t dz) {
  if (k < 2) throw std::invalid_argument("ReadoutHead: need at least 2 classes");
  if (k > dz)
    throw std::invalid_argument("ReadoutHead: " + std::to_string(k) +
                                " classes exceed state dimension " + std::to_string(dz));
  Rng rng(seed);
  return ReadoutHead{Matrix::from(k, dz, rng.normals(k * dz))};
}

namespace detail {
inline std::size_t argmax(const Vector& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}
}  // namespace detail

/// 1 if the head's argmax class agrees between the estimate and the
/// reference, else 0.
inline double label_agreement(const ReadoutHead& head, const Vector& z, const Vector& z_ref) {
  if (z.size() != head.R.cols() || z_ref.size() != head.R.cols())
    throw std::invalid_argument("label_agreement: state length " + std::to_string(z.size()) +
                                "/" + std::to_string(z_ref.size()) + " vs head width " +
                                std::to_string(head.R.cols()));
  return detail::argmax(matvec(head.R, z)) == detail::argmax(matvec(head.R, z_ref)) ? 1.0
                                                                                    : 0.0;
}

/// Multiscale variant: per-position argmax over the finest scale's channel
/// block; returns the fraction of positions that agree.
inline double label_agreement(const MultiscaleLayout& layout, const Vector& z,
                              const Vector& z_ref) {
  if (z.size() != layout.state_dim() || z_ref.size() != layout.state_dim())
    throw std::invalid_argument("label_agreement: state length does not match layout");
  const ScaleDims& finest = layout.scales().front();
  const std::size_t positions = finest.height * finest.width;
  const std::size_t c = finest.channels;
  std::size_t agree = 0;
  for (std::size_t p = 0; p < positions; ++p) {
    std::size_t best_a = 0, best_b = 0;
    for (std::size_t ch = 1; ch < c; ++ch) {
      if (z[p * c + ch] > z[p * c + best_a]) best_a = ch;
      if (z_ref[p * c + ch] > z_ref[p * c + best_b]) best_b = ch;
    }
    if (best_a == best_b) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(positions);
}

struct CellParams {
  std::size_t dz = 64;
  std::size_t dx = 16;
  double gamma = 0.9;
  ActivationKind activation = ActivationKind::Tanh;
};

/// One benchmark run: repetitions (seeds) x budgets x the preset's policies
/// over a generated sequence. The name selects the policy set and the
/// built-in checks; see make_suite_spec for the shipped presets.
struct ExperimentSpec {
  std::string name;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> budgets;
  SolverMethod method = SolverMethod::Picard;
  CellParams cell;
  SequenceSpec sequence;
  std::string out_dir = ".";
  std::size_t readout_classes = 10;

  void validate() const {
    if (seeds.empty()) throw std::invalid_argument("ExperimentSpec: need at least one seed");
    if (budgets.empty()) throw std::invalid_argument("ExperimentSpec: budgets must be nonempty");
    sequence.validate();
  }
};

struct MetricsRow {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string policy;
  std::size_t m = 0;
  std::size_t t = 0;
  std::size_t iterations_used = 0;
  double residual_norm = 0.0;
  std::optional<double> sq_dist_to_reference;
  std::optional<double> label_agreement;
  double wall_seconds = 0.0;  // timing side channel, not part of the CSV contract
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "fig2-analog", "fig3-ref-analog", "fig3-zero-analog", "shot-change-analog",
      "static-equivalence"};
  return names;
}

inline std::vector<WarmStartPolicy> suite_policies(const std::string& name) {
  if (name == "fig2-analog")
    return {WarmStartPolicy::ReferenceChain, WarmStartPolicy::ColdStart};
  if (name == "fig3-ref-analog") return {WarmStartPolicy::StreamFromReference};
  if (name == "fig3-zero-analog")
    return {WarmStartPolicy::StreamFromZero, WarmStartPolicy::ColdStart};
  if (name == "shot-change-analog") return {WarmStartPolicy::StreamFromZero};
  if (name == "static-equivalence") return {WarmStartPolicy::StreamFromZero};
  throw std::invalid_argument("unknown experiment preset '" + name + "'");
}

/// Shipped presets. All use the Tanh dz=64 dx=16 gamma=0.9 cell over a
/// smooth random walk; per-preset sequence length, budgets and shots vary.
inline ExperimentSpec make_suite_spec(const std::string& name, std::size_t seed_count = 20,
                                      std::uint64_t base_seed = 1) {
  suite_policies(name);  // validates the name
  if (seed_count == 0) throw std::invalid_argument("need at least one seed");
  ExperimentSpec spec;
  spec.name = name;
  for (std::size_t i = 0; i < seed_count; ++i) spec.seeds.push_back(base_seed + i);
  spec.budgets = {1, 2, 4, 8};
  spec.sequence.mode = SequenceMode::RandomWalk;
  spec.sequence.dx = spec.cell.dx;
  spec.sequence.epsilon = 0.05;
  spec.sequence.length = 40;
  if (name == "shot-change-analog") {
    spec.budgets = {4};
    spec.sequence.length = 60;
    spec.sequence.shot_frames = {30};
  } else if (name == "static-equivalence") {
    spec.budgets = {3};
    spec.sequence.length = 10;
    spec.sequence.epsilon = 0.0;
  }
  return spec;
}

// Sub-seed salts: cell, sequence and readout head draw from independent
// streams derived from each repetition seed.
namespace detail {
constexpr std::uint64_t kCellSalt = 1;
constexpr std::uint64_t kSequenceSalt = 2;
constexpr std::uint64_t kReadoutSalt = 3;
}  // namespace detail

inline EquilibriumCell experiment_cell(const ExperimentSpec& spec, std::uint64_t rep_seed) {
  return make_random_cell(mix_seed(rep_seed, detail::kCellSalt), spec.cell.dz, spec.cell.dx,
                          spec.cell.gamma, spec.cell.activation);
}

inline std::vector<Vector> experiment_sequence(const ExperimentSpec& spec,
                                               std::uint64_t rep_seed) {
  SequenceSpec seq = spec.sequence;
  seq.seed = mix_seed(rep_seed, detail::kSequenceSalt);
  return generate_sequence(seq);
}

/// Runs every (seed, policy, budget) combination of the preset and emits one
/// row per frame. References are solved once per seed and shared across
/// budgets and policies, so the oracle cost does not scale with |budgets|.
inline std::vector<MetricsRow> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto policies = suite_policies(spec.name);
  std::vector<MetricsRow> rows;

  for (const std::uint64_t seed : spec.seeds) {
    const EquilibriumCell cell = experiment_cell(spec, seed);
    const std::vector<Vector> frames = experiment_sequence(spec, seed);
    const ReadoutHead head =
        make_readout_head(mix_seed(seed, detail::kReadoutSalt), spec.readout_classes,
                          spec.cell.dz);

    std::vector<Vector> references;
    references.reserve(frames.size());
    for (const auto& frame : frames) references.push_back(reference_fixed_point(cell, frame));

    StreamOptions opts;
    opts.compute_references = true;
    opts.retain_z = true;
    opts.references = &references;

    for (const WarmStartPolicy policy : policies) {
      for (const std::size_t m : spec.budgets) {
        const SolverConfig cfg{spec.method, m, 0.0, std::max<std::size_t>(m, 1)};
        const auto records = stream_infer(cell, frames, policy, BudgetSchedule::constant(m),
                                          cfg, opts);
        for (const auto& record : records) {
          MetricsRow row;
          row.experiment = spec.name;
          row.seed = seed;
          row.policy = to_string(policy);
          row.m = m;
          row.t = record.t;
          row.iterations_used = record.iterations_used;
          row.residual_norm = record.residual_norm;
          row.sq_dist_to_reference = record.sq_dist_to_reference;
          if (record.z_final)
            row.label_agreement = label_agreement(head, *record.z_final, references[record.t]);
          row.wall_seconds = record.solve_seconds;
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

// --- CSV contract -----------------------------------------------------------
//
// Header (exact): experiment,seed,policy,M,t,iterations_used,residual_norm,
// sq_dist_to_reference,label_agreement. Floats carry 17 significant digits,
// absent optionals are empty fields, rows are sorted by (seed, policy, M, t),
// lines end in a single line feed.

inline const char* kMetricsCsvHeader =
    "experiment,seed,policy,M,t,iterations_used,residual_norm,sq_dist_to_reference,"
    "label_agreement";

namespace detail {
inline bool row_order(const MetricsRow& a, const MetricsRow& b) {
  if (a.seed != b.seed) return a.seed < b.seed;
  if (a.policy != b.policy) return a.policy < b.policy;
  if (a.m != b.m) return a.m < b.m;
  return a.t < b.t;
}
}  // namespace detail

inline void write_csv(std::vector<MetricsRow> rows, std::ostream& out) {
  if (rows.empty()) throw std::invalid_argument("write_csv: no rows");
  std::stable_sort(rows.begin(), rows.end(), detail::row_order);
  out << kMetricsCsvHeader << '\n';
  for (const auto& row : rows) {
    out << row.experiment << ',' << row.seed << ',' << row.policy << ',' << row.m << ','
        << row.t << ',' << row.iterations_used << ',' << format_g17(row.residual_norm) << ','
        << (row.sq_dist_to_reference ? format_g17(*row.sq_dist_to_reference) : "") << ','
        << (row.label_agreement ? format_g17(*row.label_agreement) : "") << '\n';
  }
}

inline void write_csv_file(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "' for writing");
  write_csv(rows, out);
  if (!out) throw std::runtime_error("write_csv: I/O failure on '" + path + "'");
}

inline std::vector<MetricsRow> parse_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader)
    throw std::runtime_error("metrics CSV: bad header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 9)
      throw std::runtime_error("metrics CSV: row " + std::to_string(rows.size() + 1) +
                               " has " + std::to_string(fields.size()) + " fields");
    MetricsRow row;
    row.experiment = fields[0];
    row.seed = parse_u64(fields[1], "metrics seed");
    row.policy = fields[2];
    row.m = parse_u64(fields[3], "metrics M");
    row.t = parse_u64(fields[4], "metrics t");
    row.iterations_used = parse_u64(fields[5], "metrics iterations_used");
    row.residual_norm = parse_double(fields[6], "metrics residual_norm");
    if (!fields[7].empty())
      row.sq_dist_to_reference = parse_double(fields[7], "metrics sq_dist");
    if (!fields[8].empty())
      row.label_agreement = parse_double(fields[8], "metrics label_agreement");
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Optional timing side channel; wall-clock values are machine-dependent and
/// carry no thresholds anywhere.
inline void write_timing_csv(std::vector<MetricsRow> rows, std::ostream& out) {
  std::stable_sort(rows.begin(), rows.end(), detail::row_order);
  out << "experiment,seed,policy,M,t,wall_seconds\n";
  for (const auto& row : rows)
    out << row.experiment << ',' << row.seed << ',' << row.policy << ',' << row.m << ','
        << row.t << ',' << format_g17(row.wall_seconds) << '\n';
}

// --- aggregation helpers ----------------------------------------------------

inline double mean_sq_dist_at(const std::vector<MetricsRow>& rows, const std::string& policy,
                              std::size_t m, std::size_t t) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& row : rows) {
    if (row.policy != policy || row.m != m || row.t != t || !row.sq_dist_to_reference)
      continue;
    sum += *row.sq_dist_to_reference;
    ++count;
  }
  if (count == 0)
    throw std::invalid_argument("no rows for policy=" + policy + " M=" + std::to_string(m) +
                                " t=" + std::to_string(t));
  return sum / static_cast<double>(count);
}

/// Mean over seeds and frames t in [t_begin, t_end).
inline double plateau_mean(const std::vector<MetricsRow>& rows, const std::string& policy,
                           std::size_t m, std::size_t t_begin, std::size_t t_end) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& row : rows) {
    if (row.policy != policy || row.m != m || row.t < t_begin || row.t >= t_end ||
        !row.sq_dist_to_reference)
      continue;
    sum += *row.sq_dist_to_reference;
    ++count;
  }
  if (count == 0)
    throw std::invalid_argument("no plateau rows for policy=" + policy +
                                " M=" + std::to_string(m));
  return sum / static_cast<double>(count);
}

inline double mean_label_agreement(const std::vector<MetricsRow>& rows,
                                   const std::string& policy, std::size_t m,
                                   std::size_t t_begin, std::size_t t_end) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& row : rows) {
    if (row.policy != policy || row.m != m || row.t < t_begin || row.t >= t_end ||
        !row.label_agreement)
      continue;
    sum += *row.label_agreement;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("no agreement rows for policy=" + policy);
  return sum / static_cast<double>(count);
}

// --- experiment spec files ----------------------------------------------------
//
// `key value` lines, '#' comments. Keys: name, seeds (comma list), budgets
// (comma list), solver, out_dir, readout_classes, cell.dz, cell.dx,
// cell.gamma, cell.activation, and the sequence.* keys mirroring
// SequenceSpec (sequence.mode, sequence.dx, sequence.grid_h, sequence.grid_w,
// sequence.length, sequence.epsilon, sequence.vel_y, sequence.vel_x,
// sequence.shots). Per-repetition sub-seeds are derived from each entry of
// `seeds`, so the sequence carries no seed key of its own here.

inline ExperimentSpec parse_experiment_spec(std::istream& in) {
  ExperimentSpec spec;
  spec.sequence.shot_frames.clear();
  std::string line;
  bool saw_name = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.find(' ');
    if (pos == std::string::npos)
      throw std::runtime_error("experiment spec: malformed line '" + line + "'");
    const std::string key = line.substr(0, pos);
    const std::string value = line.substr(pos + 1);
    if (key == "name") {
      spec.name = value;
      saw_name = true;
    } else if (key == "seeds") {
      spec.seeds.clear();
      for (const auto& token : split(value, ','))
        spec.seeds.push_back(parse_u64(token, "experiment seeds"));
    } else if (key == "budgets") {
      spec.budgets.clear();
      for (const auto& token : split(value, ','))
        spec.budgets.push_back(parse_u64(token, "experiment budgets"));
    } else if (key == "solver") {
      spec.method = solver_method_from_string(value);
    } else if (key == "out_dir") {
      spec.out_dir = value;
    } else if (key == "readout_classes") {
      spec.readout_classes = parse_u64(value, "experiment readout_classes");
    } else if (key == "cell.dz") {
      spec.cell.dz = parse_u64(value, "experiment cell.dz");
    } else if (key == "cell.dx") {
      spec.cell.dx = parse_u64(value, "experiment cell.dx");
    } else if (key == "cell.gamma") {
      spec.cell.gamma = parse_double(value, "experiment cell.gamma");
    } else if (key == "cell.activation") {
      spec.cell.activation = activation_from_string(value);
    } else if (key == "sequence.mode") {
      spec.sequence.mode = sequence_mode_from_string(value);
    } else if (key == "sequence.dx") {
      spec.sequence.dx = parse_u64(value, "experiment sequence.dx");
    } else if (key == "sequence.grid_h") {
      spec.sequence.grid_h = parse_u64(value, "experiment sequence.grid_h");
    } else if (key == "sequence.grid_w") {
      spec.sequence.grid_w = parse_u64(value, "experiment sequence.grid_w");
    } else if (key == "sequence.length") {
      spec.sequence.length = parse_u64(value, "experiment sequence.length");
    } else if (key == "sequence.epsilon") {
      spec.sequence.epsilon = parse_double(value, "experiment sequence.epsilon");
    } else if (key == "sequence.vel_y") {
      spec.sequence.vel_y = parse_double(value, "experiment sequence.vel_y");
    } else if (key == "sequence.vel_x") {
      spec.sequence.vel_x = parse_double(value, "experiment sequence.vel_x");
    } else if (key == "sequence.shots") {
      for (const auto& token : split(value, ','))
        spec.sequence.shot_frames.push_back(parse_u64(token, "experiment sequence.shots"));
    } else {
      throw std::runtime_error("experiment spec: unknown key '" + key + "'");
    }
  }
  if (!saw_name) throw std::runtime_error("experiment spec: missing 'name'");
  suite_policies(spec.name);  // must be a known preset
  spec.validate();
  return spec;
}

inline ExperimentSpec parse_experiment_spec_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parse_experiment_spec(in);
}

// --- built-in suite checks ---------------------------------------------------

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline CheckResult check_warm_dominates_cold(const std::vector<MetricsRow>& rows,
                                             std::size_t frame_count) {
  CheckResult check{"warm M=1 below cold M=8 at every frame t >= 1", true, ""};
  for (std::size_t t = 1; t < frame_count; ++t) {
    const double warm = mean_sq_dist_at(rows, "ref-chain", 1, t);
    const double cold = mean_sq_dist_at(rows, "cold", 8, t);
    if (!(warm < cold)) {
      check.pass = false;
      check.detail = "violated at t=" + std::to_string(t) + " (" + format_g17(warm) +
                     " vs " + format_g17(cold) + ")";
      return check;
    }
  }
  return check;
}

inline std::vector<CheckResult> check_plateau_family(const std::vector<MetricsRow>& rows,
                                                     const std::string& policy,
                                                     const std::vector<std::size_t>& budgets,
                                                     std::size_t t_end) {
  std::vector<CheckResult> checks;
  const std::size_t t0 = 20;
  CheckResult settle{policy + " plateau mean (t in [20," + std::to_string(t_end) +
                         ")) <= value at t=5 for every M",
                     true, ""};
  for (const std::size_t m : budgets) {
    const double plateau = plateau_mean(rows, policy, m, t0, t_end);
    const double early = mean_sq_dist_at(rows, policy, m, 5);
    if (!(plateau <= early)) {
      settle.pass = false;
      settle.detail = "M=" + std::to_string(m) + ": plateau " + format_g17(plateau) +
                      " > t=5 value " + format_g17(early);
      break;
    }
  }
  checks.push_back(settle);

  CheckResult ordering{policy + " plateau means strictly decrease as M grows", true, ""};
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    const double lo = plateau_mean(rows, policy, budgets[i], t0, t_end);
    const double hi = plateau_mean(rows, policy, budgets[i - 1], t0, t_end);
    if (!(lo < hi)) {
      ordering.pass = false;
      ordering.detail = "M=" + std::to_string(budgets[i]) + " plateau " + format_g17(lo) +
                        " not below M=" + std::to_string(budgets[i - 1]) + " plateau " +
                        format_g17(hi);
      break;
    }
  }
  if (budgets.size() > 1) checks.push_back(ordering);
  return checks;
}

struct ShotRecovery {
  std::uint64_t seed = 0;
  bool spiked = false;
  std::optional<std::size_t> recovery_frames;  // frames after the shot until recovered
};

inline std::vector<ShotRecovery> shot_recovery_per_seed(const std::vector<MetricsRow>& rows,
                                                        std::size_t m, std::size_t shot_frame,
                                                        std::size_t frame_count) {
  std::map<std::uint64_t, std::vector<const MetricsRow*>> by_seed;
  for (const auto& row : rows)
    if (row.policy == "stream-zero" && row.m == m) by_seed[row.seed].push_back(&row);

  std::vector<ShotRecovery> out;
  for (auto& [seed, seed_rows] : by_seed) {
    std::sort(seed_rows.begin(), seed_rows.end(),
              [](const MetricsRow* a, const MetricsRow* b) { return a->t < b->t; });
    double pre_sum = 0.0;
    std::size_t pre_count = 0;
    for (const auto* row : seed_rows)
      if (row->t >= shot_frame - 10 && row->t < shot_frame && row->sq_dist_to_reference) {
        pre_sum += *row->sq_dist_to_reference;
        ++pre_count;
      }
    ShotRecovery rec;
    rec.seed = seed;
    if (pre_count == 0) {
      out.push_back(rec);
      continue;
    }
    const double plateau = pre_sum / static_cast<double>(pre_count);
    if (seed_rows.size() <= shot_frame || !seed_rows[shot_frame]->sq_dist_to_reference) {
      out.push_back(rec);
      continue;
    }
    const double at_shot = *seed_rows[shot_frame]->sq_dist_to_reference;
    rec.spiked = at_shot > 2.0 * plateau;
    for (std::size_t t = shot_frame + 1; t < frame_count && t < seed_rows.size(); ++t) {
      if (seed_rows[t]->sq_dist_to_reference &&
          *seed_rows[t]->sq_dist_to_reference <= 1.2 * plateau) {
        rec.recovery_frames = t - shot_frame;
        break;
      }
    }
    out.push_back(rec);
  }
  return out;
}

}  // namespace detail

/// Recomputes the preset's streaming run against a single cold solve with
/// the whole iteration budget and demands bitwise equality. Only meaningful
/// for static sequences with the Picard method.
inline CheckResult check_static_equivalence(const ExperimentSpec& spec) {
  CheckResult check{"streaming over a static scene equals one long cold solve bitwise", true,
                    ""};
  for (const std::uint64_t seed : spec.seeds) {
    const EquilibriumCell cell = experiment_cell(spec, seed);
    const std::vector<Vector> frames = experiment_sequence(spec, seed);
    for (const std::size_t m : spec.budgets) {
      const SolverConfig cfg{SolverMethod::Picard, m, 0.0, 1};
      StreamOptions opts;
      opts.retain_z = true;
      const auto records = stream_infer(cell, frames, WarmStartPolicy::StreamFromZero,
                                        BudgetSchedule::constant(m), cfg, opts);
      const SolverConfig long_cfg{SolverMethod::Picard, m * frames.size(), 0.0, 1};
      const SolveResult oracle =
          picard_solve(cell, frames[0], Vector::zeros(cell.state_dim()), long_cfg);
      if (!(*records.back().z_final == oracle.z)) {
        check.pass = false;
        check.detail = "seed " + std::to_string(seed) + ", M=" + std::to_string(m);
        return check;
      }
    }
  }
  return check;
}

/// Built-in pass/fail checks per preset; what `bench` prints after a run.
inline std::vector<CheckResult> evaluate_suite(const ExperimentSpec& spec,
                                               const std::vector<MetricsRow>& rows) {
  const std::size_t t_count = spec.sequence.length;
  std::vector<CheckResult> checks;
  if (spec.name == "fig2-analog") {
    checks.push_back(detail::check_warm_dominates_cold(rows, t_count));
  } else if (spec.name == "fig3-ref-analog") {
    const auto family = detail::check_plateau_family(rows, "stream-ref", spec.budgets, t_count);
    checks.insert(checks.end(), family.begin(), family.end());
  } else if (spec.name == "fig3-zero-analog") {
    const auto family =
        detail::check_plateau_family(rows, "stream-zero", spec.budgets, t_count);
    checks.insert(checks.end(), family.begin(), family.end());
  } else if (spec.name == "shot-change-analog") {
    const std::size_t shot = spec.sequence.shot_frames.front();
    const auto recoveries =
        detail::shot_recovery_per_seed(rows, spec.budgets.front(), shot, t_count);
    std::size_t good = 0;
    std::string per_seed;
    for (const auto& rec : recoveries) {
      const bool ok = rec.spiked && rec.recovery_frames && *rec.recovery_frames <= 10;
      if (ok) ++good;
      per_seed += " seed " + std::to_string(rec.seed) + ": " +
                  (rec.recovery_frames ? std::to_string(*rec.recovery_frames) + " frames"
                                       : std::string("no recovery"));
    }
    const std::size_t needed = (recoveries.size() * 9 + 9) / 10;  // ceil(90%)
    checks.push_back(CheckResult{
        "spike at the shot and recovery within 10 frames for >= 90% of seeds",
        good >= needed,
        std::to_string(good) + "/" + std::to_string(recoveries.size()) + " seeds;" +
            per_seed});
  } else if (spec.name == "static-equivalence") {
    checks.push_back(check_static_equivalence(spec));
  } else {
    throw std::invalid_argument("unknown experiment preset '" + spec.name + "'");
  }
  return checks;
}

}  // namespace eqstream
