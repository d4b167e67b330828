#include "odl/recovery.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "odl/rng.hpp"

namespace odl {

AtomMatch match_atom(const Eigen::VectorXd& q, const Eigen::MatrixXd& A, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("match_atom: tol must be positive");
  AtomMatch best;
  double best_abs = -1.0;
  for (int i = 0; i < A.cols(); ++i) {
    const double dot = A.col(i).dot(q);
    if (std::abs(dot) > best_abs) {
      best_abs = std::abs(dot);
      best.atom_index = i;
      best.sign = dot >= 0.0 ? +1 : -1;
    }
  }
  best.error = (best.sign * A.col(best.atom_index) - q).norm();
  best.matched = best.error <= tol;
  return best;
}

long restart_count(int n) {
  if (n < 2) throw std::invalid_argument("restart_count: n must be >= 2");
  return std::lround(5.0 * n * std::log(static_cast<double>(n)));
}

RecoveryReport recover_dictionary(const Instance& instance, const SolveConfig& config, long R,
                                  double tol, std::uint64_t master_seed, int parallelism) {
  if (R < 0) throw std::invalid_argument("recover_dictionary: R must be >= 0");
  const auto t0 = std::chrono::steady_clock::now();

  RecoveryReport report;
  report.n = instance.n;
  report.runs = R;
  report.tol = tol;
  report.per_run.resize(R);

  int workers = parallelism > 0 ? parallelism
                                : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = static_cast<int>(std::min<long>(workers, std::max<long>(R, 1)));

  std::atomic<long> next{0};
  const auto work = [&]() {
    for (;;) {
      const long r = next.fetch_add(1);
      if (r >= R) return;
      RunRecord rec;
      rec.run = static_cast<int>(r);
      SolveConfig run_config = config;
      run_config.seed = child_seed(master_seed, static_cast<std::uint64_t>(r));
      try {
        const RunTrace trace = solve(instance.observations, run_config);
        rec.match = match_atom(trace.q_best, instance.dictionary, tol);
        rec.f_best = trace.f_best;
        rec.iterations = trace.iterations_used;
      } catch (const std::exception&) {
        rec.failed = true;
        rec.match = AtomMatch{};
      }
      report.per_run[r] = rec;
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::set<int> found;
  for (const auto& rec : report.per_run) {
    report.total_iterations += rec.iterations;
    if (!rec.failed && rec.match.matched) {
      const auto [it, inserted] = found.insert(rec.match.atom_index);
      (void)it;
      if (inserted && static_cast<int>(found.size()) == instance.n)
        report.runs_to_success = rec.run + 1;
    }
  }
  report.distinct_atoms.assign(found.begin(), found.end());
  report.success = static_cast<int>(found.size()) == instance.n;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

namespace {

void canonicalize_sign(Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-9) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

double max_abs_correlation(const std::vector<Eigen::VectorXd>& vs, const std::vector<double>& nrm,
                           std::size_t i, const std::vector<bool>& alive) {
  double best = -1.0;
  for (std::size_t j = 0; j < vs.size(); ++j) {
    if (j == i || !alive[j]) continue;
    const double denom = nrm[i] * nrm[j];
    const double c = denom > 0.0 ? std::abs(vs[i].dot(vs[j])) / denom : 0.0;
    if (c > best) best = c;
  }
  return best;
}

std::vector<Eigen::VectorXd> greedy_prune(std::vector<Eigen::VectorXd> vectors,
                                          std::size_t target_count, double stop_threshold) {
  for (auto& v : vectors) canonicalize_sign(v);
  std::vector<double> nrm(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) nrm[i] = vectors[i].norm();
  std::vector<bool> alive(vectors.size(), true);
  std::size_t count = vectors.size();
  while (count > target_count) {
    double worst = -1.0;
    std::size_t victim = vectors.size();
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (!alive[i]) continue;
      const double c = max_abs_correlation(vectors, nrm, i, alive);
      if (c > worst || (c == worst && i > victim)) {  // ties drop the later index
        worst = c;
        victim = i;
      }
    }
    if (stop_threshold > 0.0 && worst <= stop_threshold) break;
    alive[victim] = false;
    --count;
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (std::size_t i = 0; i < vectors.size(); ++i)
    if (alive[i]) out.push_back(std::move(vectors[i]));
  return out;
}

}  // namespace

std::vector<Eigen::VectorXd> dedup_atoms(std::vector<Eigen::VectorXd> vectors,
                                         std::size_t target_count, double) {
  if (vectors.size() < target_count)
    throw std::invalid_argument("dedup_atoms: fewer vectors than target_count");
  return greedy_prune(std::move(vectors), target_count, 0.0);
}

std::vector<Eigen::VectorXd> dedup_atoms_threshold(std::vector<Eigen::VectorXd> vectors,
                                                   double correlation_threshold) {
  if (!(correlation_threshold > 0.0 && correlation_threshold < 1.0))
    throw std::invalid_argument("dedup_atoms_threshold: threshold must lie in (0,1)");
  return greedy_prune(std::move(vectors), 0, correlation_threshold);
}

nlohmann::json report_to_json(const RecoveryReport& report, bool include_timing) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& rec : report.per_run) {
    runs.push_back({{"run", rec.run},
                    {"atom", rec.match.atom_index},
                    {"sign", rec.match.sign},
                    {"error", rec.match.error},
                    {"matched", rec.match.matched},
                    {"f_best", rec.f_best},
                    {"iterations", rec.iterations},
                    {"failed", rec.failed}});
  }
  nlohmann::json j = {{"n", report.n},
                      {"runs", report.runs},
                      {"tol", report.tol},
                      {"success", report.success},
                      {"atoms_found", report.distinct_atoms.size()},
                      {"distinct_atoms", report.distinct_atoms},
                      {"runs_to_success", report.runs_to_success},
                      {"total_iterations", report.total_iterations},
                      {"per_run", std::move(runs)}};
  if (include_timing) j["wall_time_seconds"] = report.wall_time_seconds;
  return j;
}

void atoms_to_csv(std::ostream& out, const std::vector<Eigen::VectorXd>& atoms) {
  char buf[64];
  for (const auto& a : atoms) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", a[i]);
      out << buf << (i + 1 < a.size() ? "," : "\n");
    }
  }
}

void atoms_to_csv(std::ostream& out, const Eigen::MatrixXd& atom_columns) {
  std::vector<Eigen::VectorXd> atoms;
  atoms.reserve(atom_columns.cols());
  for (Eigen::Index j = 0; j < atom_columns.cols(); ++j) atoms.push_back(atom_columns.col(j));
  atoms_to_csv(out, atoms);
}

}  // namespace odl
