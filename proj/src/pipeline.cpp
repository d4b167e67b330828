#include "odl/pipeline.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "odl/rng.hpp"

namespace odl {

SweepConfig SweepConfig::from_json(const nlohmann::json& j) {
  SweepConfig c;
  c.n_list = j.at("n_list").get<std::vector<int>>();
  c.theta_list = j.at("theta_list").get<std::vector<double>>();
  if (j.contains("m_list")) {
    c.m_explicit = true;
    c.m_list = j.at("m_list").get<std::vector<long>>();
  } else {
    c.m_powers = j.value("m_powers", std::vector<double>{0.5, 1.0, 1.5, 2.0, 2.5});
    c.m_coeff = j.value("m_coeff", 10.0);
  }
  c.instances_per_cell = j.value("instances_per_cell", 10);
  c.dict_kind = dict_kind_from_string(j.value("dict_kind", std::string("identity")));
  c.tol = j.value("tol", 1e-3);
  c.master_seed = j.value("master_seed", std::uint64_t{0});
  c.parallelism = j.value("parallelism", 0);
  c.restarts_override = j.value("restarts", long{-1});
  c.allow_theta_outside = j.value("allow_theta_outside", false);
  c.solve.max_iters = j.value("max_iters", long{15000});
  c.solve.record_every = std::max<long>(1, c.solve.max_iters);
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    const std::string kind = s.value("kind", std::string("experiment"));
    if (kind == "experiment")
      c.solve.schedule = experiment_schedule();
    else if (kind == "theory")
      c.solve.schedule = StepSchedule::power(s.value("alpha", 0.375), s.at("base_scale"));
    else if (kind == "power")
      c.solve.schedule = StepSchedule::power(s.at("alpha"), s.at("base_scale"));
    else if (kind == "constant")
      c.solve.schedule = StepSchedule::constant(s.at("eta"));
    else
      throw std::invalid_argument("sweep config: unknown schedule kind " + kind);
  }
  return c;
}

void SweepConfig::validate() const {
  if (n_list.empty()) throw std::invalid_argument("sweep config: n_list is empty");
  if (theta_list.empty()) throw std::invalid_argument("sweep config: theta_list is empty");
  if (m_explicit && m_list.empty()) throw std::invalid_argument("sweep config: m_list is empty");
  if (!m_explicit && m_powers.empty())
    throw std::invalid_argument("sweep config: m_powers is empty");
  if (instances_per_cell < 1)
    throw std::invalid_argument("sweep config: instances_per_cell must be >= 1");
}

namespace {

std::vector<long> m_grid_for(const SweepConfig& c, int n) {
  if (c.m_explicit) return c.m_list;
  std::vector<long> ms;
  ms.reserve(c.m_powers.size());
  for (double p : c.m_powers)
    ms.push_back(std::lround(c.m_coeff * std::pow(static_cast<double>(n), p)));
  return ms;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config) {
  config.validate();
  SweepResult result;
  std::uint64_t cell_index = 0;
  for (int n : config.n_list) {
    const std::vector<long> ms = m_grid_for(config, n);
    for (double theta : config.theta_list) {
      for (long m : ms) {
        SweepCellSummary cell{};
        cell.n = n;
        cell.theta = theta;
        cell.m = m;
        cell.instances = config.instances_per_cell;
        const auto cell_t0 = std::chrono::steady_clock::now();
        double rts_sum = 0.0;
        const std::uint64_t cell_seed = child_seed(config.master_seed, cell_index);
        for (int inst = 0; inst < config.instances_per_cell; ++inst) {
          SweepRow row{};
          row.n = n;
          row.theta = theta;
          row.m = m;
          row.instance_index = inst;
          row.instance_seed = child_seed(cell_seed, static_cast<std::uint64_t>(inst));
          const auto t0 = std::chrono::steady_clock::now();
          try {
            const Theta th = config.allow_theta_outside ? Theta::unchecked(theta)
                                                        : Theta::checked(theta, n);
            const Instance instance =
                make_instance(n, m, th, config.dict_kind, row.instance_seed);
            const long R = config.restarts_override >= 0 ? config.restarts_override
                                                         : restart_count(n);
            const RecoveryReport rep =
                recover_dictionary(instance, config.solve, R, config.tol,
                                   child_seed(row.instance_seed, 0xACE), config.parallelism);
            row.success = rep.success;
            row.atoms_found = static_cast<int>(rep.distinct_atoms.size());
            row.runs_to_success = rep.runs_to_success;
            row.total_iterations = rep.total_iterations;
          } catch (const std::exception&) {
            row.success = false;  // per-cell failures never abort the sweep
            row.atoms_found = 0;
            row.runs_to_success = -1;
          }
          row.seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          if (row.success) {
            ++cell.successes;
            rts_sum += static_cast<double>(row.runs_to_success);
          }
          result.rows.push_back(row);
        }
        cell.success_rate =
            static_cast<double>(cell.successes) / static_cast<double>(cell.instances);
        cell.mean_runs_to_success =
            cell.successes > 0 ? rts_sum / cell.successes
                               : std::numeric_limits<double>::quiet_NaN();
        cell.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - cell_t0).count();
        result.cells.push_back(cell);
        ++cell_index;
      }
    }
  }
  return result;
}

void write_sweep_raw_csv(std::ostream& out, const SweepResult& result) {
  out << "n,theta,m,instance_seed,success,atoms_found,iterations,seconds\n";
  char buf[256];
  for (const auto& r : result.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%ld,%llu,%d,%d,%ld,%.3f\n", r.n, r.theta, r.m,
                  static_cast<unsigned long long>(r.instance_seed), r.success ? 1 : 0,
                  r.atoms_found, r.total_iterations, r.seconds);
    out << buf;
  }
}

void write_sweep_agg_csv(std::ostream& out, const SweepResult& result) {
  out << "n,theta,m,instances,successes,success_rate,mean_runs_to_success,seconds\n";
  char buf[256];
  for (const auto& c : result.cells) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%ld,%d,%d,%.17g,%.17g,%.3f\n", c.n, c.theta, c.m,
                  c.instances, c.successes, c.success_rate, c.mean_runs_to_success, c.seconds);
    out << buf;
  }
}

PatchMatrix extract_patches(const Eigen::MatrixXd& image, int block) {
  if (block < 1) throw std::invalid_argument("extract_patches: block must be >= 1");
  const int rows = static_cast<int>(image.rows());
  const int cols = static_cast<int>(image.cols());
  if (rows % block != 0 || cols % block != 0)
    throw std::invalid_argument("extract_patches: image dimensions must be divisible by block");
  PatchMatrix pm;
  pm.image_rows = rows;
  pm.image_cols = cols;
  pm.block = block;
  const int brows = rows / block, bcols = cols / block;
  pm.Y.resize(block * block, static_cast<Eigen::Index>(brows) * bcols);
  Eigen::Index j = 0;
  for (int br = 0; br < brows; ++br)
    for (int bc = 0; bc < bcols; ++bc, ++j)
      pm.Y.col(j) = image.block(br * block, bc * block, block, block).reshaped();
  return pm;
}

Eigen::MatrixXd reassemble_patches(const PatchMatrix& patches) {
  const int block = patches.block;
  const int brows = patches.image_rows / block, bcols = patches.image_cols / block;
  if (patches.Y.cols() != static_cast<Eigen::Index>(brows) * bcols ||
      patches.Y.rows() != block * block)
    throw std::invalid_argument("reassemble_patches: inconsistent patch matrix");
  Eigen::MatrixXd image(patches.image_rows, patches.image_cols);
  Eigen::Index j = 0;
  for (int br = 0; br < brows; ++br)
    for (int bc = 0; bc < bcols; ++bc, ++j)
      image.block(br * block, bc * block, block, block) = patches.Y.col(j).reshaped(block, block);
  return image;
}

PreconditionResult precondition(const Eigen::MatrixXd& Y, double rel_threshold) {
  const Eigen::MatrixXd G = Y * Y.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("precondition: eigendecomposition failed");
  const Eigen::VectorXd& lam = eig.eigenvalues();  // ascending
  const Eigen::MatrixXd& V = eig.eigenvectors();
  const double lam_max = lam[lam.size() - 1];
  if (!(lam_max > 0.0)) throw std::runtime_error("precondition: Y Y^T is zero");
  PreconditionResult out;
  Eigen::VectorXd inv_sqrt = Eigen::VectorXd::Zero(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] > rel_threshold * lam_max) {
      inv_sqrt[i] = 1.0 / std::sqrt(lam[i]);
      ++out.rank_retained;
    }
  }
  out.Ybar = V * inv_sqrt.asDiagonal() * V.transpose() * Y;
  // Singular values of Ybar for reporting: sqrt of eigenvalues of Ybar Ybar^T.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig2(out.Ybar * out.Ybar.transpose());
  Eigen::VectorXd sv = eig2.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  out.singular_values = sv.reverse();
  return out;
}

Eigen::MatrixXd learn_image_dictionary(const Eigen::MatrixXd& Ybar, int n_atoms, long runs,
                                       const SolveConfig& solve_config,
                                       std::uint64_t master_seed, int parallelism) {
  if (runs < 1) throw std::invalid_argument("learn_image_dictionary: runs must be >= 1");
  if (Ybar.rows() != n_atoms)
    throw std::invalid_argument("learn_image_dictionary: data must have n_atoms rows");
  if (runs < n_atoms)
    throw std::invalid_argument("learn_image_dictionary: fewer runs than atoms requested");

  std::vector<Eigen::VectorXd> collected(runs);
  std::vector<char> ok(runs, 0);
  int workers = parallelism > 0 ? parallelism
                                : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  std::atomic<long> next{0};
  const auto work = [&]() {
    for (;;) {
      const long r = next.fetch_add(1);
      if (r >= runs) return;
      SolveConfig cfg = solve_config;
      cfg.seed = child_seed(master_seed, static_cast<std::uint64_t>(r));
      try {
        collected[r] = solve(Ybar, cfg).q_best;
        ok[r] = 1;
      } catch (const std::exception&) {
        ok[r] = 0;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::vector<Eigen::VectorXd> good;
  good.reserve(runs);
  for (long r = 0; r < runs; ++r)
    if (ok[r]) good.push_back(std::move(collected[r]));
  if (static_cast<long>(good.size()) < n_atoms)
    throw std::runtime_error("learn_image_dictionary: not enough successful runs to form a "
                             "dictionary");
  const std::vector<Eigen::VectorXd> atoms = dedup_atoms(std::move(good), n_atoms);
  Eigen::MatrixXd A(n_atoms, n_atoms);
  for (int j = 0; j < n_atoms; ++j) A.col(j) = atoms[j];
  return A;
}

SparsityReport sparsity_report(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Ybar, int bins) {
  if (A.rows() != A.cols()) throw std::invalid_argument("sparsity_report: A must be square");
  if (bins < 1) throw std::invalid_argument("sparsity_report: bins must be >= 1");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (std::abs(lu.determinant()) < 1e-300)
    throw std::invalid_argument("sparsity_report: A is singular");
  const Eigen::MatrixXd C = lu.solve(Ybar);
  SparsityReport rep;
  rep.ratios.resize(C.cols());
  for (Eigen::Index j = 0; j < C.cols(); ++j) {
    const double l2 = C.col(j).norm();
    rep.ratios[j] = l2 > 0.0 ? C.col(j).lpNorm<1>() / l2 : 1.0;
  }
  rep.mean_ratio = rep.ratios.mean();
  const double lo = C.minCoeff(), hi = C.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  rep.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) rep.bin_edges[b] = lo + span * b / bins;
  rep.bin_counts = Eigen::VectorXi::Zero(bins);
  for (Eigen::Index j = 0; j < C.cols(); ++j)
    for (Eigen::Index i = 0; i < C.rows(); ++i) {
      int b = static_cast<int>((C(i, j) - lo) / span * bins);
      if (b < 0) b = 0;
      if (b >= bins) b = bins - 1;
      ++rep.bin_counts[b];
    }
  return rep;
}

void write_coeff_hist_csv(std::ostream& out, const SparsityReport& report) {
  out << "bin_lo,bin_hi,count\n";
  char buf[128];
  for (int b = 0; b < report.bin_counts.size(); ++b) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n", report.bin_edges[b],
                  report.bin_edges[b + 1], report.bin_counts[b]);
    out << buf;
  }
}

Eigen::MatrixXd read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open PGM: " + path);
  std::string magic;
  f >> magic;
  if (magic != "P5") throw std::runtime_error("unsupported PGM (want binary P5): " + path);
  const auto next_int = [&f, &path]() {
    // skip whitespace and # comments
    for (;;) {
      const int c = f.peek();
      if (c == '#') {
        std::string line;
        std::getline(f, line);
      } else if (std::isspace(c)) {
        f.get();
      } else {
        break;
      }
    }
    long v = -1;
    f >> v;
    if (!f || v < 0) throw std::runtime_error("corrupt PGM header: " + path);
    return v;
  };
  const long w = next_int();
  const long h = next_int();
  const long maxval = next_int();
  if (maxval != 255) throw std::runtime_error("PGM maxval must be 255: " + path);
  f.get();  // single whitespace after maxval
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
  f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!f) throw std::runtime_error("PGM truncated: " + path);
  Eigen::MatrixXd img(h, w);
  for (long r = 0; r < h; ++r)
    for (long c = 0; c < w; ++c)
      img(r, c) = raw[static_cast<std::size_t>(r) * w + c] / 255.0;
  return img;
}

void write_pgm(const std::string& path, const Eigen::MatrixXd& image01) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "P5\n" << image01.cols() << " " << image01.rows() << "\n255\n";
  std::vector<unsigned char> raw(static_cast<std::size_t>(image01.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < image01.rows(); ++r)
    for (Eigen::Index c = 0; c < image01.cols(); ++c) {
      double v = std::round(image01(r, c) * 255.0);
      if (v < 0.0) v = 0.0;
      if (v > 255.0) v = 255.0;
      raw[k++] = static_cast<unsigned char>(v);
    }
  f.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!f) throw std::runtime_error("failed writing PGM: " + path);
}

void write_atom_montage_pgm(const std::string& path, const Eigen::MatrixXd& atoms, int block) {
  const int n_atoms = static_cast<int>(atoms.cols());
  if (atoms.rows() != block * block)
    throw std::invalid_argument("write_atom_montage_pgm: atoms must have block^2 rows");
  const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_atoms))));
  const int side = grid * block + (grid - 1);  // 1-pixel separators
  Eigen::MatrixXd img = Eigen::MatrixXd::Zero(side, side);
  for (int a = 0; a < n_atoms; ++a) {
    const int gr = a / grid, gc = a % grid;
    Eigen::Map<const Eigen::MatrixXd> tile(atoms.col(a).data(), block, block);
    const double lo = tile.minCoeff(), hi = tile.maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;
    img.block(gr * (block + 1), gc * (block + 1), block, block) =
        (tile.array() - lo) / span;
  }
  write_pgm(path, img);
}

}  // namespace odl
