#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace odl {

/// Step-size schedule: either eta(k) = base_scale * k^(-alpha) (with
/// eta(0) = base_scale, since k^(-alpha) is undefined at k = 0) or a
/// constant step.
struct StepSchedule {
  enum class Kind { power_decay, constant };

  Kind kind = Kind::power_decay;
  double alpha = 0.5;
  double base_scale = 1.0;
  double eta_constant = 0.0;

  double eta(long k) const;

  static StepSchedule power(double alpha, double base_scale);
  static StepSchedule constant(double eta);
};

/// Theory preset eta(k) = k^(-alpha) / (100 sqrt(n)), alpha in (0, 1/2].
StepSchedule theory_schedule(int n, double alpha);

/// Experiment preset eta(k) = 1/sqrt(k) (boundary alpha = 1/2, unit base).
StepSchedule experiment_schedule();

struct SolveConfig {
  StepSchedule schedule = experiment_schedule();
  long max_iters = 10000;
  std::optional<double> f_target;
  long record_every = 100;
  std::uint64_t seed = 0;  // initialization draw when q0 is not supplied
  // Early stop when f_best fails to improve by rtol*|f_best| over a window
  // of iterations; window 0 disables.
  long stagnation_window = 500;
  double stagnation_rtol = 1e-9;
};

struct TracePoint {
  long k;
  double f;
  double grad_norm;
  double eta;
};

struct RunTrace {
  std::vector<TracePoint> iterates;  // thinned by record_every
  Eigen::VectorXd q_best;
  double f_best = 0.0;
  long iterations_used = 0;  // descent steps performed
  Eigen::VectorXd initialization;
};

/// One projected step: (q - eta*v)/||q - eta*v|| with v the Riemannian
/// subgradient selection at q.
Eigen::VectorXd descent_step(const Eigen::VectorXd& q, const Eigen::MatrixXd& Y, double eta);

/// Runs subgradient descent on the columns of Y, tracking the best function
/// value across every visited iterate (the trace thinning only affects what
/// is stored).  Deterministic given (Y, config, q0).
RunTrace solve(const Eigen::MatrixXd& Y, const SolveConfig& config,
               const std::optional<Eigen::VectorXd>& q0 = std::nullopt);

struct BudgetConstants {
  double c_sublinear = 32000.0;  // multiplies n^{5/2} log n (1-a) / (theta(1-theta) eps)
  double c_step_tail = 64.0 / 5.0;  // multiplies n^{3/2} log n (1-a)/(1-2a) / (eps theta(1-theta))
  double divisor = 1.0;
};

inline BudgetConstants paper_budget() { return {}; }
/// Desk-scale preset: the proven budgets divided by 1e4.
inline BudgetConstants practical_budget() { return {32000.0, 64.0 / 5.0, 1e4}; }

/// Iteration budget K(alpha) = max of the two schedule-dependent expressions;
/// alpha must lie in (0, 1/2).  Emits a warning on stderr when eps falls
/// outside the guarantee range (0, 2 theta/25].
unsigned long long iteration_budget(int n, double theta, double eps, double alpha,
                                    const BudgetConstants& constants = paper_budget());

/// CSV with columns k,f,grad_norm,eta.
void write_trace_csv(std::ostream& out, const RunTrace& trace);

}  // namespace odl
