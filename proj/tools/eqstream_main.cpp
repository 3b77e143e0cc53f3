// Command-line front-end: single solves, streaming runs, benchmark suites
// and synthetic sequence generation. Data goes to files; stdout carries a
// short human-readable summary. Exit codes: 0 success, 1 runtime or solver
// failure, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eqstream/eqstream.hpp"

namespace {

using namespace eqstream;

// Sub-seed salts shared with the bench module so presets line up.
constexpr std::uint64_t kCellSalt = 1;
constexpr std::uint64_t kSequenceSalt = 2;
constexpr std::uint64_t kInputSalt = 4;

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_out_dir() {
  const char* env = std::getenv("EQSTREAM_OUT_DIR");
  return env && *env ? env : ".";
}

EquilibriumCell resolve_cell(const std::string& arg, std::uint64_t seed) {
  if (arg == "default") return make_random_cell(mix_seed(seed, kCellSalt), 64, 16, 0.9,
                                                ActivationKind::Tanh);
  return load_cell_file(arg);
}

Vector resolve_input(const std::string& arg, std::uint64_t seed, std::size_t dx) {
  if (arg == "default") {
    Rng rng(mix_seed(seed, kInputSalt));
    return Vector::raw(rng.normals(dx));
  }
  const auto frames = read_frames_file(arg);
  if (frames.empty()) throw std::runtime_error("input file '" + arg + "' is empty");
  return frames.front();
}

SequenceSpec resolve_sequence_spec(const std::string& arg, std::uint64_t seed,
                                   std::size_t frames) {
  SequenceSpec spec;
  spec.mode = SequenceMode::RandomWalk;
  spec.dx = 16;
  spec.length = frames;
  spec.seed = mix_seed(seed, kSequenceSalt);
  if (arg == "smooth-fine" || arg == "smooth" || arg == "rough" || arg == "static") {
    spec.epsilon = arg == "smooth-fine" ? 0.01 : arg == "smooth" ? 0.05
                                              : arg == "rough"   ? 0.2
                                                                 : 0.0;
    return spec;
  }
  if (arg == "shot-change") {
    spec.epsilon = 0.05;
    if (frames < 3) throw usage_error("shot-change preset needs at least 3 frames");
    spec.shot_frames = {frames > 30 ? std::size_t{30} : frames / 2};
    return spec;
  }
  if (arg == "blob") {
    spec.mode = SequenceMode::MovingBlob;
    spec.grid_h = 16;
    spec.grid_w = 16;
    spec.vel_y = 0.125;
    spec.vel_x = 0.0625;
    return spec;
  }
  SequenceSpec loaded = load_sequence_spec_file(arg);
  if (loaded.length != frames)
    throw usage_error("sequence spec '" + arg + "' has length " +
                      std::to_string(loaded.length) + " but --frames is " +
                      std::to_string(frames));
  return loaded;
}

int run_solve(const std::string& cell_arg, const std::string& input_arg,
              const std::string& solver, std::size_t iters, double tol, std::uint64_t seed) {
  const EquilibriumCell cell = resolve_cell(cell_arg, seed);
  const Vector x = resolve_input(input_arg, seed, cell.input_dim());
  const Vector z0 = Vector::zeros(cell.state_dim());
  const SolverConfig cfg = make_solver_config(solver_method_from_string(solver), iters, tol);
  const SolveResult result = solve(cell, x, z0, cfg);
  const double res_norm = result.iterations > 0 ? result.residual_trace.back()
                                                : l2_norm(residual(cell, result.z, x));
  std::printf("iterations %zu\n", result.iterations);
  std::printf("residual %s\n", format_g17(res_norm).c_str());
  std::printf("converged %s\n", result.converged ? "true" : "false");
  return 0;
}

int run_stream(const std::string& cell_arg, const std::string& policy_arg,
               std::size_t budget, const std::string& schedule_arg, std::size_t frames,
               const std::string& sequence_arg, const std::string& solver, double tol,
               bool refs, std::string out_path, std::uint64_t seed) {
  const EquilibriumCell cell = resolve_cell(cell_arg, seed);
  const SequenceSpec seq_spec = resolve_sequence_spec(sequence_arg, seed, frames);
  if (seq_spec.frame_dim() != cell.input_dim())
    throw usage_error("sequence frame dimension " + std::to_string(seq_spec.frame_dim()) +
                      " does not match the cell input dimension " +
                      std::to_string(cell.input_dim()));
  const auto sequence = generate_sequence(seq_spec);

  BudgetSchedule schedule = BudgetSchedule::constant(budget);
  std::size_t max_budget = budget;
  if (!schedule_arg.empty()) {
    std::vector<std::size_t> budgets;
    for (const auto& token : split(schedule_arg, ','))
      budgets.push_back(parse_u64(token, "--schedule"));
    if (budgets.size() != frames)
      throw usage_error("--schedule has " + std::to_string(budgets.size()) +
                        " entries for " + std::to_string(frames) + " frames");
    for (const std::size_t b : budgets) max_budget = std::max(max_budget, b);
    schedule = BudgetSchedule::per_frame(std::move(budgets));
  }

  const WarmStartPolicy policy = policy_from_string(policy_arg);
  const SolverConfig cfg = make_solver_config(solver_method_from_string(solver),
                                              /*max_iters=*/max_budget, tol);
  StreamOptions opts;
  opts.compute_references = refs;
  const auto records = stream_infer(cell, sequence, policy, schedule, cfg, opts);

  std::vector<MetricsRow> rows;
  double residual_sum = 0.0, dist_sum = 0.0;
  std::size_t dist_count = 0;
  for (const auto& record : records) {
    MetricsRow row;
    row.experiment = "stream";
    row.seed = seed;
    row.policy = to_string(policy);
    row.m = schedule.at(record.t);
    row.t = record.t;
    row.iterations_used = record.iterations_used;
    row.residual_norm = record.residual_norm;
    row.sq_dist_to_reference = record.sq_dist_to_reference;
    row.wall_seconds = record.solve_seconds;
    residual_sum += record.residual_norm;
    if (record.sq_dist_to_reference) {
      dist_sum += *record.sq_dist_to_reference;
      ++dist_count;
    }
    rows.push_back(std::move(row));
  }
  if (out_path.empty())
    out_path = (std::filesystem::path(default_out_dir()) / "stream.csv").string();
  write_csv_file(rows, out_path);

  std::printf("frames %zu\n", records.size());
  std::printf("mean residual %s\n",
              format_g17(residual_sum / static_cast<double>(records.size())).c_str());
  if (dist_count > 0)
    std::printf("mean sq distance to reference %s\n",
                format_g17(dist_sum / static_cast<double>(dist_count)).c_str());
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int run_bench(const std::string& suite, const std::string& spec_path, std::size_t seeds,
              std::string out_dir, bool timings, std::uint64_t seed) {
  ExperimentSpec spec;
  std::string stem;
  if (!spec_path.empty()) {
    spec = parse_experiment_spec_file(spec_path);
    stem = spec.name;
  } else {
    static const std::vector<std::pair<std::string, std::string>> suites = {
        {"fig2", "fig2-analog"},           {"fig3-ref", "fig3-ref-analog"},
        {"fig3-zero", "fig3-zero-analog"}, {"shot-change", "shot-change-analog"},
        {"static-eq", "static-equivalence"}};
    std::string preset;
    for (const auto& [flag, name] : suites)
      if (flag == suite) preset = name;
    if (preset.empty()) throw usage_error("unknown suite '" + suite + "'");
    spec = make_suite_spec(preset, seeds, seed);
    stem = suite;
  }
  if (out_dir.empty()) out_dir = spec.out_dir.empty() ? default_out_dir() : spec.out_dir;
  std::filesystem::create_directories(out_dir);

  const auto rows = run_experiment(spec);
  const std::string csv_path = (std::filesystem::path(out_dir) / (stem + ".csv")).string();
  const std::string svg_path = (std::filesystem::path(out_dir) / (stem + ".svg")).string();
  write_csv_file(rows, csv_path);
  render_svg_lines_file(rows, {"policy", "M"}, svg_path);
  if (timings) {
    const std::string timing_path =
        (std::filesystem::path(out_dir) / (stem + "_timing.csv")).string();
    std::ofstream timing_out(timing_path, std::ios::binary);
    if (!timing_out) throw std::runtime_error("cannot open '" + timing_path + "'");
    write_timing_csv(rows, timing_out);
    std::printf("wrote %s\n", timing_path.c_str());
  }
  std::printf("wrote %s\n", csv_path.c_str());
  std::printf("wrote %s\n", svg_path.c_str());

  bool all_pass = true;
  for (const auto& check : evaluate_suite(spec, rows)) {
    std::printf("[%s] %s%s%s\n", check.pass ? "PASS" : "FAIL", check.name.c_str(),
                check.detail.empty() ? "" : " - ", check.detail.c_str());
    if (!check.pass) all_pass = false;
  }
  return all_pass ? 0 : 1;
}

int run_gen_sequence(const std::string& mode, std::size_t dx, const std::string& grid,
                     std::size_t frames, double epsilon, const std::string& velocity,
                     const std::string& shots, std::string out_path,
                     const std::string& spec_out, std::uint64_t seed) {
  SequenceSpec spec;
  spec.mode = sequence_mode_from_string(mode);
  spec.length = frames;
  spec.seed = mix_seed(seed, kSequenceSalt);
  spec.dx = dx;
  spec.epsilon = epsilon;
  if (spec.mode == SequenceMode::MovingBlob) {
    const auto dims = split(grid, 'x');
    if (dims.size() != 2) throw usage_error("--grid must look like 16x16");
    spec.grid_h = parse_u64(dims[0], "--grid height");
    spec.grid_w = parse_u64(dims[1], "--grid width");
    const auto vel = split(velocity, ',');
    if (vel.size() != 2) throw usage_error("--velocity must look like 0.125,0.0625");
    spec.vel_y = parse_double(vel[0], "--velocity y");
    spec.vel_x = parse_double(vel[1], "--velocity x");
  }
  if (!shots.empty())
    for (const auto& token : split(shots, ','))
      spec.shot_frames.push_back(parse_u64(token, "--shots"));
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }

  const auto sequence = generate_sequence(spec);
  if (out_path.empty())
    out_path = (std::filesystem::path(default_out_dir()) / "sequence.txt").string();
  write_frames_file(sequence, out_path);
  std::printf("frames %zu\n", sequence.size());
  std::printf("frame dimension %zu\n", spec.frame_dim());
  std::printf("wrote %s\n", out_path.c_str());
  if (!spec_out.empty()) {
    save_sequence_spec_file(spec, spec_out);
    std::printf("wrote %s\n", spec_out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fixed-point inference over contractive equilibrium cells, with "
               "warm-started streaming and benchmark suites"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  app.add_option("--seed", seed, "base seed for all presets (default 1)");

  auto* solve_cmd = app.add_subcommand("solve", "run one fixed-point solve");
  std::string solve_cell = "default", solve_input = "default", solve_solver = "broyden";
  std::size_t solve_iters = 26;
  double solve_tol = 1e-6;
  solve_cmd->add_option("--cell", solve_cell, "cell file or 'default'");
  solve_cmd->add_option("--input", solve_input, "input file (frame dump) or 'default'");
  solve_cmd->add_option("--solver", solve_solver, "picard|broyden (default broyden)");
  solve_cmd->add_option("--iters", solve_iters, "iteration budget (default 26)");
  solve_cmd->add_option("--tol", solve_tol, "residual-norm stop threshold (default 1e-6)");

  auto* stream_cmd = app.add_subcommand("stream", "stream a sequence through the cell");
  std::string stream_cell = "default", stream_policy = "stream-zero", stream_schedule;
  std::string stream_sequence = "smooth", stream_solver = "picard", stream_out;
  std::size_t stream_budget = 2, stream_frames = 40;
  double stream_tol = 0.0;
  bool stream_refs = false;
  stream_cmd->add_option("--cell", stream_cell, "cell file or 'default'");
  stream_cmd->add_option("--policy", stream_policy,
                         "cold|ref-chain|stream-ref|stream-zero (default stream-zero)");
  stream_cmd->add_option("--budget", stream_budget, "iterations per frame (default 2)");
  stream_cmd->add_option("--schedule", stream_schedule,
                         "comma list of per-frame budgets (overrides --budget)");
  stream_cmd->add_option("--frames", stream_frames, "stream length (default 40)");
  stream_cmd->add_option("--sequence", stream_sequence,
                         "spec file or preset: smooth-fine|smooth|rough|static|shot-change|blob");
  stream_cmd->add_option("--solver", stream_solver, "picard|broyden (default picard)");
  stream_cmd->add_option("--tol", stream_tol, "residual-norm stop threshold (default 0)");
  stream_cmd->add_flag("--refs", stream_refs,
                       "compute per-frame reference fixed points (oracle pass)");
  stream_cmd->add_option("--out", stream_out, "output CSV path");

  auto* bench_cmd = app.add_subcommand("bench", "run a benchmark preset");
  std::string bench_suite, bench_spec, bench_out;
  std::size_t bench_seeds = 20;
  bool bench_timings = false;
  bench_cmd->add_option("--suite", bench_suite,
                        "fig2|fig3-ref|fig3-zero|shot-change|static-eq");
  bench_cmd->add_option("--spec", bench_spec, "experiment spec file (instead of --suite)");
  bench_cmd->add_option("--seeds", bench_seeds, "number of repetitions (default 20)");
  bench_cmd->add_option("--out", bench_out, "output directory");
  bench_cmd->add_flag("--timings", bench_timings, "also write wall-clock timing CSV");

  auto* gen_cmd = app.add_subcommand("gen-sequence", "generate a synthetic input stream");
  std::string gen_mode = "walk", gen_grid = "16x16", gen_velocity = "0.125,0.0625";
  std::string gen_shots, gen_out, gen_spec_out;
  std::size_t gen_dx = 16, gen_frames = 40;
  double gen_epsilon = 0.05;
  gen_cmd->add_option("--mode", gen_mode, "walk|blob (default walk)");
  gen_cmd->add_option("--dx", gen_dx, "walk dimension (default 16)");
  gen_cmd->add_option("--grid", gen_grid, "blob grid HxW (default 16x16)");
  gen_cmd->add_option("--frames", gen_frames, "sequence length (default 40)");
  gen_cmd->add_option("--epsilon", gen_epsilon, "walk step norm (default 0.05)");
  gen_cmd->add_option("--velocity", gen_velocity, "blob velocity vy,vx per frame");
  gen_cmd->add_option("--shots", gen_shots, "comma list of shot-change frames");
  gen_cmd->add_option("--out", gen_out, "output frame dump path");
  gen_cmd->add_option("--spec-out", gen_spec_out, "also write a replayable sequence spec");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve_cmd->parsed())
      return run_solve(solve_cell, solve_input, solve_solver, solve_iters, solve_tol, seed);
    if (stream_cmd->parsed())
      return run_stream(stream_cell, stream_policy, stream_budget, stream_schedule,
                        stream_frames, stream_sequence, stream_solver, stream_tol,
                        stream_refs, stream_out, seed);
    if (bench_cmd->parsed())
      return run_bench(bench_suite, bench_spec, bench_seeds, bench_out, bench_timings, seed);
    if (gen_cmd->parsed())
      return run_gen_sequence(gen_mode, gen_dx, gen_grid, gen_frames, gen_epsilon,
                              gen_velocity, gen_shots, gen_out, gen_spec_out, seed);
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
