#include "odl/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "odl/objective.hpp"
#include "odl/rng.hpp"

namespace odl {

double StepSchedule::eta(long k) const {
  if (kind == Kind::constant) return eta_constant;
  if (k <= 0) return base_scale;
  return base_scale * std::pow(static_cast<double>(k), -alpha);
}

StepSchedule StepSchedule::power(double alpha, double base_scale) {
  if (!(alpha > 0.0 && alpha <= 0.5))
    throw std::invalid_argument("StepSchedule: alpha must lie in (0, 1/2]");
  if (!(base_scale > 0.0))
    throw std::invalid_argument("StepSchedule: base_scale must be positive");
  StepSchedule s;
  s.kind = Kind::power_decay;
  s.alpha = alpha;
  s.base_scale = base_scale;
  return s;
}

StepSchedule StepSchedule::constant(double eta) {
  if (eta < 0.0) throw std::invalid_argument("StepSchedule: constant step must be >= 0");
  StepSchedule s;
  s.kind = Kind::constant;
  s.eta_constant = eta;
  return s;
}

StepSchedule theory_schedule(int n, double alpha) {
  if (n < 1) throw std::invalid_argument("theory_schedule: n must be positive");
  return StepSchedule::power(alpha, 1.0 / (100.0 * std::sqrt(static_cast<double>(n))));
}

StepSchedule experiment_schedule() { return StepSchedule::power(0.5, 1.0); }

Eigen::VectorXd descent_step(const Eigen::VectorXd& q, const Eigen::MatrixXd& Y, double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("descent_step: eta must be >= 0");
  const Eigen::VectorXd v = riemannian_subgradient(q, Y);
  const Eigen::VectorXd step = q - eta * v;
  const double nn = step.squaredNorm();
  // v is tangential, so ||q - eta v||^2 = 1 + eta^2 ||v||^2 >= 1.
  const double expected = 1.0 + eta * eta * v.squaredNorm();
  if (std::abs(nn - expected) > 1e-10 * expected)
    throw std::logic_error("descent_step: tangency identity violated");
  return step / std::sqrt(nn);
}

RunTrace solve(const Eigen::MatrixXd& Y, const SolveConfig& config,
               const std::optional<Eigen::VectorXd>& q0) {
  if (config.max_iters < 0) throw std::invalid_argument("solve: max_iters must be >= 0");
  if (config.record_every < 1) throw std::invalid_argument("solve: record_every must be >= 1");
  const int n = static_cast<int>(Y.rows());

  Eigen::VectorXd q;
  if (q0) {
    q = *q0;
    const double nrm = q.norm();
    if (std::abs(nrm - 1.0) > kUnitNormTol)
      throw std::invalid_argument("solve: q0 is not unit-norm");
    q /= nrm;
  } else {
    Philox gen(config.seed, /*stream=*/3);
    q = gen.unit_sphere(n);
  }

  ObjectiveEvaluator evaluator(Y);

  RunTrace trace;
  trace.initialization = q;
  trace.f_best = std::numeric_limits<double>::infinity();
  trace.q_best = q;

  double window_best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd ambient(n);

  long k = 0;
  for (;; ++k) {
    double f = 0.0;
    evaluator.eval(q, f, ambient);
    if (!std::isfinite(f))
      throw std::runtime_error("solve: objective is not finite (corrupt data?)");
    const Eigen::VectorXd v = ambient - q * q.dot(ambient);
    const double vnorm = v.norm();
    const double eta = config.schedule.eta(k);

    if (f < trace.f_best) {
      trace.f_best = f;
      trace.q_best = q;
    }
    if (k % config.record_every == 0 || k == config.max_iters)
      trace.iterates.push_back({k, f, vnorm, eta});

    if (k == config.max_iters) break;
    if (config.f_target && trace.f_best <= *config.f_target) break;
    if (config.stagnation_window > 0 && k % config.stagnation_window == 0) {
      if (std::isfinite(window_best) &&
          window_best - trace.f_best <= config.stagnation_rtol * std::abs(window_best))
        break;
      window_best = trace.f_best;
    }

    const Eigen::VectorXd step = q - eta * v;
    const double nn = step.squaredNorm();
    const double expected = 1.0 + eta * eta * vnorm * vnorm;
    if (std::abs(nn - expected) > 1e-10 * expected)
      throw std::logic_error("solve: tangency identity violated");
    q = step / std::sqrt(nn);
  }
  trace.iterations_used = k;
  return trace;
}

unsigned long long iteration_budget(int n, double theta, double eps, double alpha,
                                    const BudgetConstants& constants) {
  if (n < 1 || !(theta > 0.0 && theta < 1.0) || !(eps > 0.0))
    throw std::invalid_argument("iteration_budget: parameters must be positive, theta in (0,1)");
  if (!(alpha > 0.0 && alpha < 0.5))
    throw std::invalid_argument("iteration_budget: alpha must lie in (0, 1/2)");
  if (eps >= 2.0 * theta / 25.0)
    std::cerr << "iteration_budget: eps=" << eps << " is outside the guarantee range (0, "
              << 2.0 * theta / 25.0 << "]\n";
  const double nd = static_cast<double>(n);
  const double logn = std::log(nd);
  const double tt = theta * (1.0 - theta);
  const double b1 =
      std::pow(constants.c_sublinear * std::pow(nd, 2.5) * logn * (1.0 - alpha) / (tt * eps),
               1.0 / (1.0 - alpha));
  const double b2 = std::pow(constants.c_step_tail * std::pow(nd, 1.5) * logn * (1.0 - alpha) /
                                 ((1.0 - 2.0 * alpha) * eps * tt),
                             1.0 / alpha);
  const double k = std::max(b1, b2) / constants.divisor;
  if (!(k < 1.8e19)) return std::numeric_limits<unsigned long long>::max();
  return static_cast<unsigned long long>(std::max(1.0, std::ceil(k)));
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << "k,f,grad_norm,eta\n";
  char buf[128];
  for (const auto& p : trace.iterates) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g\n", p.k, p.f, p.grad_norm, p.eta);
    out << buf;
  }
}

}  // namespace odl
