#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "odl/model.hpp"
#include "odl/optimizer.hpp"
#include "odl/recovery.hpp"

namespace odl {

/// Grid sweep over (n, theta, m) with instances_per_cell instances per cell.
/// The m grid is either an explicit list or the rule m = round(coeff * n^p)
/// over a list of exponents.
struct SweepConfig {
  std::vector<int> n_list;
  std::vector<double> theta_list;
  bool m_explicit = false;
  std::vector<long> m_list;           // used when m_explicit
  std::vector<double> m_powers;       // else m = round(m_coeff * n^p)
  double m_coeff = 10.0;
  int instances_per_cell = 10;
  DictKind dict_kind = DictKind::identity;
  SolveConfig solve;
  double tol = 1e-3;
  std::uint64_t master_seed = 0;
  int parallelism = 0;
  long restarts_override = -1;  // -1: use restart_count(n)
  bool allow_theta_outside = false;

  static SweepConfig from_json(const nlohmann::json& j);
  void validate() const;
};

struct SweepRow {
  int n;
  double theta;
  long m;
  int instance_index;
  std::uint64_t instance_seed;
  bool success;
  int atoms_found;
  long runs_to_success;
  long total_iterations;
  double seconds;
};

struct SweepCellSummary {
  int n;
  double theta;
  long m;
  int instances;
  int successes;
  double success_rate;
  double mean_runs_to_success;  // over successful instances; NaN when none
  double seconds;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepCellSummary> cells;
};

SweepResult run_sweep(const SweepConfig& config);

void write_sweep_raw_csv(std::ostream& out, const SweepResult& result);
void write_sweep_agg_csv(std::ostream& out, const SweepResult& result);

/// Non-overlapping block vectorization: column j holds the column-major
/// entries of block j, blocks in raster order.
struct PatchMatrix {
  int image_rows = 0;
  int image_cols = 0;
  int block = 8;
  Eigen::MatrixXd Y;  // block^2 x (image_rows/block)(image_cols/block)
};

PatchMatrix extract_patches(const Eigen::MatrixXd& image, int block = 8);
Eigen::MatrixXd reassemble_patches(const PatchMatrix& patches);

struct PreconditionResult {
  Eigen::MatrixXd Ybar;            // (Y Y^T)^{-1/2} Y on the retained eigenspace
  int rank_retained = 0;
  Eigen::VectorXd singular_values;  // of Ybar, descending
};

/// Symmetric eigendecomposition of Y Y^T; eigenvalues at or below
/// rel_threshold * lambda_max are dropped (pseudo-inverse square root).
PreconditionResult precondition(const Eigen::MatrixXd& Y, double rel_threshold = 1e-10);

/// runs solves from uniform initializations, then dedup to n_atoms columns.
Eigen::MatrixXd learn_image_dictionary(const Eigen::MatrixXd& Ybar, int n_atoms, long runs,
                                       const SolveConfig& solve, std::uint64_t master_seed,
                                       int parallelism = 0);

struct SparsityReport {
  Eigen::VectorXd ratios;  // per-column ||c||_1 / ||c||_2
  double mean_ratio = 0.0;
  Eigen::VectorXd bin_edges;  // bins+1 edges over the coefficient range
  Eigen::VectorXi bin_counts;
};

/// Coefficients C = A^{-1} Ybar; per-column l1/l2 ratios and a histogram of
/// all coefficients.
SparsityReport sparsity_report(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Ybar,
                               int bins = 101);

void write_coeff_hist_csv(std::ostream& out, const SparsityReport& report);

/// 8-bit binary PGM (P5, maxval 255); pixels are returned in [0,1].
Eigen::MatrixXd read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Eigen::MatrixXd& image01);

/// Tiles the atom columns (each block x block) into a square montage with
/// 1-pixel separators, each atom scaled to the full [0,255] range.
void write_atom_montage_pgm(const std::string& path, const Eigen::MatrixXd& atoms, int block = 8);

}  // namespace odl
