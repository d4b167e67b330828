// Command-line front end: simulate / recover / sweep / geometry / image.
//
// Exit codes: 0 success, 1 usage or check failure, 2 I/O failure,
// 3 recovery reported failure.  stdout carries one-line JSON summaries;
// human-readable progress goes to stderr.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "odl/checks.hpp"
#include "odl/geometry.hpp"
#include "odl/model.hpp"
#include "odl/objective.hpp"
#include "odl/optimizer.hpp"
#include "odl/pipeline.hpp"
#include "odl/recovery.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitRecoveryFailed = 3;

struct SolveFlags {
  long max_iters = 15000;
  std::string schedule = "experiment";
  double alpha = 0.375;
  double base_scale = 0.0;  // 0: schedule default
  long record_every = 0;    // 0: only endpoints

  odl::SolveConfig to_config() const {
    odl::SolveConfig cfg;
    cfg.max_iters = max_iters;
    cfg.record_every = record_every > 0 ? record_every : std::max<long>(1, max_iters);
    if (schedule == "experiment") {
      cfg.schedule = odl::experiment_schedule();
    } else if (schedule == "theory") {
      // base 1/(100 sqrt n) gets filled once n is known; store alpha for now
      cfg.schedule = odl::StepSchedule::power(alpha, 1.0);
    } else {
      throw CLI::ValidationError("--schedule must be experiment or theory");
    }
    if (base_scale > 0.0) cfg.schedule.base_scale = base_scale;
    return cfg;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--max-iters", max_iters, "iteration budget per run");
    cmd->add_option("--schedule", schedule, "step schedule preset: experiment | theory");
    cmd->add_option("--alpha", alpha, "decay exponent for the theory schedule");
    cmd->add_option("--base-scale", base_scale, "override the schedule base scale");
    cmd->add_option("--record-every", record_every, "trace thinning stride");
  }
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory: " + dir);
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << contents;
  if (!f) throw std::runtime_error("failed writing: " + path);
}

int cmd_simulate(int n, long m, double theta, const std::string& dict, std::uint64_t seed,
                 const std::string& out, bool allow_outside) {
  const odl::Theta th =
      allow_outside ? odl::Theta::unchecked(theta) : odl::Theta::checked(theta, n);
  const odl::Instance inst =
      odl::make_instance(n, m, th, odl::dict_kind_from_string(dict), seed);
  try {
    odl::save_instance(inst, out);
  } catch (const std::exception& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return kExitIo;
  }
  const double nnz_fraction =
      static_cast<double>((inst.coefficients.array() != 0.0).count()) /
      static_cast<double>(inst.coefficients.size());
  json summary = {{"command", "simulate"}, {"n", n},       {"m", m},
                  {"theta", theta},        {"dict", dict}, {"seed", seed},
                  {"nnz_fraction", nnz_fraction},          {"file", out}};
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

int cmd_recover(const std::string& instance_path, const std::string& out_dir, long runs,
                double tol, std::uint64_t seed, int threads, const SolveFlags& solve_flags,
                bool include_timing) {
  odl::Instance inst;
  try {
    inst = odl::load_instance(instance_path);
  } catch (const std::exception& e) {
    std::cerr << "recover: " << e.what() << "\n";
    return kExitIo;
  }
  odl::SolveConfig cfg = solve_flags.to_config();
  if (solve_flags.schedule == "theory" && solve_flags.base_scale <= 0.0)
    cfg.schedule.base_scale = 1.0 / (100.0 * std::sqrt(static_cast<double>(inst.n)));
  const long R = runs >= 0 ? runs : odl::restart_count(inst.n);
  std::cerr << "recover: n=" << inst.n << " m=" << inst.m << " R=" << R
            << " max_iters=" << cfg.max_iters << "\n";
  const odl::RecoveryReport report =
      odl::recover_dictionary(inst, cfg, R, tol, seed, threads);

  ensure_dir(out_dir);
  try {
    write_file(out_dir + "/report.json",
               odl::report_to_json(report, include_timing).dump(2) + "\n");
    std::vector<Eigen::VectorXd> atoms;
    for (const auto& rec : report.per_run)
      if (!rec.failed && rec.match.matched)
        atoms.push_back(rec.match.sign * inst.dictionary.col(rec.match.atom_index));
    std::ofstream atoms_csv(out_dir + "/atoms.csv");
    odl::atoms_to_csv(atoms_csv, atoms);
  } catch (const std::exception& e) {
    std::cerr << "recover: " << e.what() << "\n";
    return kExitIo;
  }
  json summary = {{"command", "recover"},
                  {"success", report.success},
                  {"atoms_found", report.distinct_atoms.size()},
                  {"runs", report.runs},
                  {"total_iterations", report.total_iterations},
                  {"wall_time_seconds", report.wall_time_seconds}};
  std::cout << summary.dump() << "\n";
  return report.success ? kExitOk : kExitRecoveryFailed;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, int threads) {
  json j;
  try {
    std::ifstream f(config_path);
    if (!f) {
      std::cerr << "sweep: cannot open config: " << config_path << "\n";
      return kExitIo;
    }
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    std::cerr << "sweep: malformed JSON config: " << e.what() << "\n";
    return kExitUsage;
  }
  odl::SweepConfig cfg;
  try {
    cfg = odl::SweepConfig::from_json(j);
    if (threads > 0) cfg.parallelism = threads;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "sweep: invalid config: " << e.what() << "\n";
    return kExitUsage;
  }
  std::cerr << "sweep: " << cfg.n_list.size() << " n values, " << cfg.theta_list.size()
            << " thetas\n";
  const odl::SweepResult result = odl::run_sweep(cfg);
  try {
    ensure_dir(out_dir);
    std::ofstream raw(out_dir + "/sweep_raw.csv");
    odl::write_sweep_raw_csv(raw, result);
    std::ofstream agg(out_dir + "/sweep_agg.csv");
    odl::write_sweep_agg_csv(agg, result);
    if (!raw || !agg) throw std::runtime_error("failed writing sweep CSVs");
  } catch (const std::exception& e) {
    std::cerr << "sweep: " << e.what() << "\n";
    return kExitIo;
  }
  json summary = {{"command", "sweep"},
                  {"cells", result.cells.size()},
                  {"rows", result.rows.size()},
                  {"out_dir", out_dir}};
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

int cmd_geometry(const std::string& check, int n, double theta, double zeta, int trials, long m,
                 std::uint64_t seed, const std::string& out_path) {
  std::vector<odl::CheckReport> reports;
  const double z = zeta > 0.0 ? zeta : odl::default_zeta(n);
  const auto want = [&check](const char* name) { return check == "all" || check == name; };
  if (want("stationary")) reports.push_back(odl::check_stationary_points(n, theta));
  if (want("probes"))
    reports.push_back(odl::check_nonstationary_probes(n, theta, trials > 0 ? trials : 100, seed));
  if (want("bounds-population"))
    reports.push_back(odl::check_directional_bounds_population(
        n, theta, z, trials > 0 ? trials : 200, seed));
  if (want("bounds-empirical"))
    reports.push_back(odl::check_directional_bounds_empirical(
        n, theta, z, trials > 0 ? trials : 200, m > 0 ? m : 100000, seed));
  if (want("concentration"))
    reports.push_back(
        odl::check_subdifferential_concentration(n, theta, 1000, 100000, 10000, seed));
  if (want("init"))
    reports.push_back(odl::check_initialization_probability(
        n, trials > 0 ? static_cast<std::int64_t>(trials) : 1000000, seed));
  if (want("volume"))
    reports.push_back(odl::check_volume_lower_bound(
        n, {0.0, 0.1, 0.2}, trials > 0 ? static_cast<std::int64_t>(trials) : 1000000, seed));
  if (want("curvature"))
    reports.push_back(odl::check_curvature_and_inward(n, theta, trials > 0 ? trials : 1000, seed));
  if (want("angle"))
    reports.push_back(odl::check_angle_lemmas(trials > 0 ? trials : 10000, seed));
  if (want("dexp"))
    reports.push_back(odl::check_dexp_metric(std::min(n, 8), theta, trials > 0 ? trials : 10000,
                                             500000, seed));
  if (want("bilipschitz")) {
    reports.push_back(odl::check_bilipschitz_population(n, theta, 500, seed));
    reports.push_back(
        odl::check_bilipschitz_empirical(n, theta, m > 0 ? m : 100000, 500, seed));
  }
  if (want("region-stability"))
    reports.push_back(odl::check_region_stability(n, theta, m > 0 ? m : 10 * n * n,
                                                  trials > 0 ? trials : 100, 1000, seed));
  if (want("grad-norm"))
    reports.push_back(odl::check_subgradient_norm_bound(n, theta, m > 0 ? m : 5000,
                                                        trials > 0 ? trials : 1000, seed));
  if (reports.empty()) {
    std::cerr << "geometry: unknown check name: " << check << "\n";
    return kExitUsage;
  }
  bool all_pass = true;
  json arr = json::array();
  for (const auto& r : reports) {
    all_pass = all_pass && r.pass;
    arr.push_back(odl::to_json(r));
    std::cerr << "geometry: " << r.name << " pass=" << (r.pass ? "yes" : "no")
              << " rate=" << r.pass_rate << " worst_slack=" << r.worst_slack << "\n";
  }
  json out = {{"command", "geometry"}, {"checks", arr}, {"all_pass", all_pass}};
  if (!out_path.empty()) {
    try {
      write_file(out_path, out.dump(2) + "\n");
    } catch (const std::exception& e) {
      std::cerr << "geometry: " << e.what() << "\n";
      return kExitIo;
    }
  }
  std::cout << out.dump() << "\n";
  return all_pass ? kExitOk : kExitUsage;
}

int cmd_image(const std::string& input, const std::string& out_dir, long runs,
              std::uint64_t seed, int threads, const SolveFlags& solve_flags) {
  Eigen::MatrixXd img;
  try {
    img = odl::read_pgm(input);
  } catch (const std::exception& e) {
    std::cerr << "image: " << e.what() << "\n";
    return kExitIo;
  }
  odl::PatchMatrix patches;
  try {
    patches = odl::extract_patches(img, 8);
  } catch (const std::exception& e) {
    std::cerr << "image: " << e.what() << "\n";
    return kExitUsage;
  }
  const int n_atoms = 64;
  const odl::PreconditionResult pre = odl::precondition(patches.Y);
  const long R = runs >= 0 ? runs : odl::restart_count(n_atoms);
  std::cerr << "image: " << patches.Y.cols() << " blocks, rank " << pre.rank_retained
            << ", running " << R << " solves\n";
  odl::SolveConfig cfg = solve_flags.to_config();
  if (solve_flags.schedule == "theory" && solve_flags.base_scale <= 0.0)
    cfg.schedule.base_scale = 1.0 / (100.0 * std::sqrt(static_cast<double>(n_atoms)));
  Eigen::MatrixXd A;
  try {
    A = odl::learn_image_dictionary(pre.Ybar, n_atoms, R, cfg, seed, threads);
  } catch (const std::exception& e) {
    std::cerr << "image: " << e.what() << "\n";
    return kExitUsage;
  }
  const odl::SparsityReport rep = odl::sparsity_report(A, pre.Ybar);
  try {
    ensure_dir(out_dir);
    std::ofstream atoms_csv(out_dir + "/atoms.csv");
    odl::atoms_to_csv(atoms_csv, A);
    std::ofstream hist(out_dir + "/coeff_hist.csv");
    odl::write_coeff_hist_csv(hist, rep);
    odl::write_atom_montage_pgm(out_dir + "/atoms_montage.pgm", A, 8);
    json report = {{"input", input},
                   {"rows", img.rows()},
                   {"cols", img.cols()},
                   {"blocks", patches.Y.cols()},
                   {"rank_retained", pre.rank_retained},
                   {"singular_value_min", pre.singular_values.minCoeff()},
                   {"singular_value_max", pre.singular_values.maxCoeff()},
                   {"runs", R},
                   {"atoms", n_atoms},
                   {"mean_l1l2_ratio", rep.mean_ratio},
                   {"ratio_min", rep.ratios.minCoeff()},
                   {"ratio_max", rep.ratios.maxCoeff()}};
    write_file(out_dir + "/report.json", report.dump(2) + "\n");
    json summary = report;
    summary["command"] = "image";
    std::cout << summary.dump() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "image: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orthogonal dictionary learning by L1 Riemannian subgradient descent"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate and store a problem instance");
  int sim_n = 20;
  long sim_m = 4000;
  double sim_theta = 0.1;
  std::string sim_dict = "identity";
  std::uint64_t sim_seed = 0;
  std::string sim_out = "instance.bin";
  bool sim_allow_outside = false;
  sim->add_option("--n", sim_n, "ambient dimension")->required();
  sim->add_option("--m", sim_m, "sample count")->required();
  sim->add_option("--theta", sim_theta, "Bernoulli parameter")->required();
  sim->add_option("--dict", sim_dict, "identity | random_orthogonal");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--out", sim_out, "output file");
  sim->add_flag("--allow-theta-outside", sim_allow_outside,
                "permit theta outside [1/n, 1/2]");

  // recover
  auto* rec = app.add_subcommand("recover", "multi-restart dictionary recovery");
  std::string rec_instance, rec_out = "recover_out";
  long rec_runs = -1;
  double rec_tol = 1e-3;
  std::uint64_t rec_seed = 0;
  int rec_threads = 0;
  bool rec_timing = false;
  SolveFlags rec_solve;
  rec->add_option("--instance", rec_instance, "instance file")->required();
  rec->add_option("--out-dir", rec_out, "output directory");
  rec->add_option("--runs", rec_runs, "restart count (default round(5 n ln n))");
  rec->add_option("--tol", rec_tol, "atom match tolerance");
  rec->add_option("--seed", rec_seed, "master seed for restarts");
  rec->add_option("--threads", rec_threads, "worker threads (0 = hardware)");
  rec->add_flag("--include-timing", rec_timing, "include wall time in report.json");
  rec_solve.attach(rec);

  // sweep
  auto* swp = app.add_subcommand("sweep", "phase-transition grid experiment");
  std::string swp_config, swp_out = "sweep_out";
  int swp_threads = 0;
  swp->add_option("--config", swp_config, "JSON sweep config")->required();
  swp->add_option("--out-dir", swp_out, "output directory");
  swp->add_option("--threads", swp_threads, "worker threads");

  // geometry
  auto* geo = app.add_subcommand("geometry", "landscape verification checks");
  std::string geo_check = "all", geo_out;
  int geo_n = 8, geo_trials = 0;
  double geo_theta = 0.25, geo_zeta = 0.0;
  long geo_m = 0;
  std::uint64_t geo_seed = 0;
  geo->add_option("--check", geo_check,
                  "stationary | probes | bounds-population | bounds-empirical | concentration | "
                  "init | volume | curvature | angle | dexp | bilipschitz | region-stability | "
                  "grad-norm | all");
  geo->add_option("--n", geo_n, "dimension (<= 22 for exact checks)");
  geo->add_option("--theta", geo_theta, "Bernoulli parameter");
  geo->add_option("--zeta", geo_zeta, "good-set margin (default 1/(5 log n))");
  geo->add_option("--trials", geo_trials, "sample count override");
  geo->add_option("--m", geo_m, "empirical sample count override");
  geo->add_option("--seed", geo_seed, "seed");
  geo->add_option("--out", geo_out, "write report JSON here");

  // image
  auto* im = app.add_subcommand("image", "image-patch dictionary learning pipeline");
  std::string im_input, im_out = "image_out";
  long im_runs = -1;
  std::uint64_t im_seed = 0;
  int im_threads = 0;
  SolveFlags im_solve;
  im_solve.max_iters = 2000;
  im->add_option("--input", im_input, "PGM (P5) image, dims divisible by 8")->required();
  im->add_option("--out-dir", im_out, "output directory");
  im->add_option("--runs", im_runs, "solve count (default round(5 n ln n))");
  im->add_option("--seed", im_seed, "master seed");
  im->add_option("--threads", im_threads, "worker threads");
  im_solve.attach(im);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(sim_n, sim_m, sim_theta, sim_dict, sim_seed, sim_out,
                          sim_allow_outside);
    if (rec->parsed())
      return cmd_recover(rec_instance, rec_out, rec_runs, rec_tol, rec_seed, rec_threads,
                         rec_solve, rec_timing);
    if (swp->parsed()) return cmd_sweep(swp_config, swp_out, swp_threads);
    if (geo->parsed())
      return cmd_geometry(geo_check, geo_n, geo_theta, geo_zeta, geo_trials, geo_m, geo_seed,
                          geo_out);
    if (im->parsed())
      return cmd_image(im_input, im_out, im_runs, im_seed, im_threads, im_solve);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
