#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "odl/model.hpp"
#include "odl/optimizer.hpp"

namespace odl {

struct AtomMatch {
  int atom_index = -1;  // argmax_i |<a_i, q>|
  int sign = +1;        // sign minimizing the error
  double error = 0.0;   // ||sign * a_i - q||
  bool matched = false; // error <= tol
};

AtomMatch match_atom(const Eigen::VectorXd& q, const Eigen::MatrixXd& A, double tol = 1e-3);

/// round(5 n ln n) restarts, the experiment protocol's run count.
long restart_count(int n);

struct RunRecord {
  int run;
  AtomMatch match;
  double f_best = 0.0;
  long iterations = 0;
  bool failed = false;  // solver aborted (NaN data, ...)
};

struct RecoveryReport {
  int n = 0;
  long runs = 0;
  double tol = 0.0;
  std::vector<RunRecord> per_run;
  std::vector<int> distinct_atoms;  // sorted indices of matched atoms
  bool success = false;             // all n atoms found
  long runs_to_success = -1;        // runs consumed when the last atom appeared
  long total_iterations = 0;
  double wall_time_seconds = 0.0;
};

/// R independent solves with child seeds derived from master_seed; each
/// q_best is matched against the instance dictionary.  The report is
/// deterministic given master_seed regardless of `parallelism`.
RecoveryReport recover_dictionary(const Instance& instance, const SolveConfig& config, long R,
                                  double tol, std::uint64_t master_seed, int parallelism = 0);

/// Canonicalizes signs (first coordinate above 1e-9 in magnitude made
/// positive), then greedily removes the vector with the largest maximal
/// absolute correlation to any other remaining vector until target_count
/// remain.  Ties remove the larger original index.  correlation_threshold
/// is unused by this rule; see dedup_atoms_threshold.
std::vector<Eigen::VectorXd> dedup_atoms(std::vector<Eigen::VectorXd> vectors,
                                         std::size_t target_count,
                                         double correlation_threshold = 0.0);

/// Alternative mode: keep removing while any pair correlates above the
/// threshold.
std::vector<Eigen::VectorXd> dedup_atoms_threshold(std::vector<Eigen::VectorXd> vectors,
                                                   double correlation_threshold);

/// Canonical JSON (timing excluded by default so that reruns with identical
/// seeds serialize to identical bytes).
nlohmann::json report_to_json(const RecoveryReport& report, bool include_timing = false);

/// One unit vector per row.
void atoms_to_csv(std::ostream& out, const std::vector<Eigen::VectorXd>& atoms);
void atoms_to_csv(std::ostream& out, const Eigen::MatrixXd& atom_columns);

}  // namespace odl
