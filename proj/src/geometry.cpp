#include "odl/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace odl {

std::optional<std::pair<int, int>> good_set_membership(const Eigen::VectorXd& q, double zeta) {
  if (zeta < 0.0) throw std::invalid_argument("good_set_membership: zeta must be >= 0");
  const int n = static_cast<int>(q.size());
  int top = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(q[i]) > std::abs(q[top])) top = i;
  double rest = 0.0;
  for (int i = 0; i < n; ++i)
    if (i != top) rest = std::max(rest, std::abs(q[i]));
  const double qi2 = q[top] * q[top];
  if (qi2 < (1.0 + zeta) * rest * rest) return std::nullopt;
  if (qi2 == rest * rest) return std::nullopt;  // tied maxima: membership not unique
  if (q[top] == 0.0) return std::nullopt;
  return std::make_pair(top, q[top] > 0.0 ? +1 : -1);
}

Eigen::VectorXd sample_good_set(int n, double zeta, Philox& gen) {
  for (;;) {
    Eigen::VectorXd q = gen.unit_sphere(n);
    const auto member = good_set_membership(q, zeta);
    if (!member) continue;
    const auto [idx, sign] = *member;
    std::swap(q[idx], q[n - 1]);
    if (sign < 0) q[n - 1] = -q[n - 1];
    return q;
  }
}

namespace {

Eigen::VectorXd project_tangent(const Eigen::VectorXd& q, const Eigen::VectorXd& u) {
  return u - q * q.dot(u);
}

int resolve_top(const Eigen::VectorXd& q, int top, const char* who) {
  const int n = static_cast<int>(q.size());
  if (top == -1) top = n - 1;
  if (top < 0 || top >= n) throw std::invalid_argument(std::string(who) + ": bad top index");
  return top;
}

}  // namespace

double directional_bound_a(const Eigen::VectorXd& q, const SubdifferentialSet& set, int j,
                           int top) {
  top = resolve_top(q, top, "directional_bound_a");
  if (j == top) throw std::invalid_argument("directional_bound_a: j must differ from top");
  if (q[j] == 0.0) throw std::invalid_argument("directional_bound_a: q_j must be nonzero");
  if (q[top] == 0.0) throw std::invalid_argument("directional_bound_a: q_top must be nonzero");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(q.size());
  u[j] = 1.0 / q[j];
  u[top] = -1.0 / q[top];
  const Eigen::VectorXd ut = project_tangent(q, u);
  return -set.support(-ut);
}

double directional_bound_b(const Eigen::VectorXd& q, const SubdifferentialSet& set, int top) {
  top = resolve_top(q, top, "directional_bound_b");
  Eigen::VectorXd u = q[top] * q;
  u[top] -= 1.0;
  const Eigen::VectorXd ut = project_tangent(q, u);
  return -set.support(-ut);
}

double vector_angle(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  // 2 atan2(||u' - v'||, ||u' + v'||) on the normalized vectors; stable for
  // nearly parallel and nearly antiparallel inputs alike.
  const double minus = (u / nu - v / nv).norm();
  const double plus = (u / nu + v / nv).norm();
  return 2.0 * std::atan2(minus, plus);
}

double dexp(const Eigen::VectorXd& p, const Eigen::VectorXd& q, const SupportDistribution& dist) {
  const int n = dist.dim();
  if (p.size() != n || q.size() != n) throw std::invalid_argument("dexp: dimension mismatch");
  std::vector<int> support;
  for (int i = 0; i < n; ++i) {
    const bool zp = p[i] == 0.0, zq = q[i] == 0.0;
    if (zp != zq) throw std::invalid_argument("dexp: support patterns differ");
    if (!zp) support.push_back(i);
  }
  // Coordinates outside the common support contribute nothing to any subset
  // angle, so the Bernoulli draws there marginalize out.
  const double th = dist.theta();
  double acc = 0.0;
  std::vector<int> chosen;
  chosen.reserve(support.size());
  const auto walk = [&](auto&& self, std::size_t idx, double pp, double qq, double w) -> void {
    if (idx == support.size()) {
      if (pp > 0.0 && qq > 0.0) {
        // stable subvector angle via the normalized sum/difference norms
        const double np = std::sqrt(pp), nq = std::sqrt(qq);
        double minus = 0.0, plus = 0.0;
        for (int c : chosen) {
          const double a = p[c] / np, b = q[c] / nq;
          minus += (a - b) * (a - b);
          plus += (a + b) * (a + b);
        }
        acc += w * 2.0 * std::atan2(std::sqrt(minus), std::sqrt(plus));
      }
      return;
    }
    const int c = support[idx];
    chosen.push_back(c);
    self(self, idx + 1, pp + p[c] * p[c], qq + q[c] * q[c], w * th);
    chosen.pop_back();
    self(self, idx + 1, pp, qq, w * (1.0 - th));
  };
  walk(walk, 0, 0.0, 0.0, 1.0);
  return acc / M_PI;
}

double empirical_sign_disagreement(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                   const Eigen::MatrixXd& X) {
  if (X.cols() < 1) throw std::invalid_argument("empirical_sign_disagreement: empty sample");
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    const double zp = X.col(i).dot(p);
    const double zq = X.col(i).dot(q);
    const int sp = zp > 0.0 ? 1 : (zp < 0.0 ? -1 : 0);
    const int sq = zq > 0.0 ? 1 : (zq < 0.0 ? -1 : 0);
    if (sp != sq) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(X.cols());
}

double hausdorff_estimate(const SubdifferentialSet& A, const SubdifferentialSet& B,
                          int n_directions, std::uint64_t seed) {
  if (n_directions < 1) throw std::invalid_argument("hausdorff_estimate: need >= 1 direction");
  const int n = static_cast<int>(A.base.size());
  if (B.base.size() != n) throw std::invalid_argument("hausdorff_estimate: dimension mismatch");
  Philox gen(seed, /*stream=*/5);
  double worst = 0.0;
  for (int k = 0; k < n_directions; ++k) {
    const Eigen::VectorXd u = gen.unit_sphere(n);
    worst = std::max(worst, std::abs(A.support(u) - B.support(u)));
  }
  return worst;
}

Eigen::VectorXd lift_reparam(const Eigen::VectorXd& w) {
  const double s2 = w.squaredNorm();
  if (s2 > 1.0 + 1e-14) throw std::invalid_argument("lift_reparam: ||w|| must be <= 1");
  Eigen::VectorXd q(w.size() + 1);
  q.head(w.size()) = w;
  q[w.size()] = std::sqrt(std::max(0.0, 1.0 - s2));
  return q;
}

double population_reparam_objective(const Eigen::VectorXd& w, const SupportDistribution& dist) {
  const int n = dist.dim();
  if (w.size() != n)
    throw std::invalid_argument("population_reparam_objective: dimension mismatch");
  const double th = dist.theta();
  const double total = w.squaredNorm();
  if (total > 1.0 + 1e-14)
    throw std::invalid_argument("population_reparam_objective: ||w|| must be <= 1");
  double acc = 0.0;
  const auto walk = [&](auto&& self, int i, double in_sq, double w_acc) -> void {
    if (i == n) {
      const double out_sq = std::max(0.0, total - in_sq);
      acc += w_acc * ((1.0 - th) * std::sqrt(in_sq) + th * std::sqrt(std::max(0.0, 1.0 - out_sq)));
      return;
    }
    self(self, i + 1, in_sq + w[i] * w[i], w_acc * th);
    self(self, i + 1, in_sq, w_acc * (1.0 - th));
  };
  walk(walk, 0, 0.0, 1.0);
  return acc;
}

double population_curvature(const Eigen::VectorXd& v, double s, const SupportDistribution& dist) {
  const int n = dist.dim();
  if (v.size() != n) throw std::invalid_argument("population_curvature: dimension mismatch");
  if (!(s > 0.0 && s < 1.0))
    throw std::invalid_argument("population_curvature: s must lie in (0,1)");
  if (std::abs(v.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("population_curvature: v must be unit-norm");
  const double th = dist.theta();
  const double total = v.squaredNorm();
  double acc = 0.0;
  const auto walk = [&](auto&& self, int i, double in_sq, double w_acc) -> void {
    if (i == n) {
      const double c2 = std::max(0.0, total - in_sq);  // ||v_{S^c}||^2
      const double d = 1.0 - s * s * c2;
      acc += w_acc * c2 / (d * std::sqrt(d));
      return;
    }
    self(self, i + 1, in_sq + v[i] * v[i], w_acc * th);
    self(self, i + 1, in_sq, w_acc * (1.0 - th));
  };
  walk(walk, 0, 0.0, 1.0);
  return -th * acc;
}

double population_radial_derivative(const Eigen::VectorXd& w, const SupportDistribution& dist) {
  const int n = dist.dim();
  if (w.size() != n)
    throw std::invalid_argument("population_radial_derivative: dimension mismatch");
  const double t = w.norm();
  if (t == 0.0) throw std::invalid_argument("population_radial_derivative: w must be nonzero");
  const double winf = w.cwiseAbs().maxCoeff();
  if (t * t + winf * winf > 1.0 + 1e-12)
    throw std::invalid_argument(
        "population_radial_derivative: domain requires ||w||^2 + ||w||_inf^2 <= 1");
  const Eigen::VectorXd v = w / t;
  const double th = dist.theta();
  const double total = v.squaredNorm();
  double e_norm = 0.0;   // E ||v_S||
  double e_tail = 0.0;   // E ||v_{S^c}||^2 / sqrt(1 - t^2 ||v_{S^c}||^2)
  const auto walk = [&](auto&& self, int i, double in_sq, double w_acc) -> void {
    if (i == n) {
      const double c2 = std::max(0.0, total - in_sq);
      e_norm += w_acc * std::sqrt(in_sq);
      e_tail += w_acc * c2 / std::sqrt(std::max(1e-300, 1.0 - t * t * c2));
      return;
    }
    self(self, i + 1, in_sq + v[i] * v[i], w_acc * th);
    self(self, i + 1, in_sq, w_acc * (1.0 - th));
  };
  walk(walk, 0, 0.0, 1.0);
  return (1.0 - th) * e_norm - th * t * e_tail;
}

double inward_gradient_lower_bound(const Eigen::VectorXd& w, double theta) {
  const double t = w.norm();
  if (t == 0.0) throw std::invalid_argument("inward_gradient_lower_bound: w must be nonzero");
  const double winf = w.cwiseAbs().maxCoeff();
  return theta * (1.0 - theta) * (1.0 / std::sqrt(1.0 + winf * winf / (t * t)) - t);
}

VolumeEstimate volume_ratio_mc(int n, double zeta, std::int64_t n_samples, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("volume_ratio_mc: n must be >= 3");
  if (n_samples < 1) throw std::invalid_argument("volume_ratio_mc: n_samples >= 1");
  constexpr std::int64_t kChunk = 1 << 14;
  std::int64_t hits = 0, done = 0;
  for (std::uint64_t chunk = 0; done < n_samples; ++chunk) {
    const std::int64_t count = std::min(kChunk, n_samples - done);
    Philox gen(seed, /*stream=*/0x200 + chunk);
    for (std::int64_t s = 0; s < count; ++s) {
      const Eigen::VectorXd q = gen.unit_sphere(n);
      if (q[n - 1] <= 0.0) continue;
      double rest = 0.0;
      for (int i = 0; i + 1 < n; ++i) rest = std::max(rest, std::abs(q[i]));
      if (q[n - 1] * q[n - 1] >= (1.0 + zeta) * rest * rest) ++hits;
    }
    done += count;
  }
  VolumeEstimate est;
  est.n_samples = n_samples;
  est.estimate = static_cast<double>(hits) / static_cast<double>(n_samples);
  est.std_error =
      std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(n_samples));
  return est;
}

std::pair<double, double> angle_inequality_check(const Eigen::VectorXd& u,
                                                 const Eigen::VectorXd& v) {
  if (u.size() != v.size()) throw std::invalid_argument("angle_inequality_check: size mismatch");
  const double lhs = vector_angle(u, v);
  double rhs = 0.0;
  const int n = static_cast<int>(u.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Eigen::Vector2d ui(u[i], u[j]), vi(v[i], v[j]);
      rhs += vector_angle(ui, vi);
    }
  }
  return {lhs, rhs};
}

namespace {

BiLipschitzGaps gaps_from_values(const Eigen::VectorXd& q, double f_q, double f_top, double theta,
                                 int top) {
  const int n = static_cast<int>(q.size());
  BiLipschitzGaps g;
  g.f_gap = f_q - f_top;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e[top] = 1.0;
  const double dist = (q - e).norm();
  double off = 0.0;
  for (int i = 0; i < n; ++i)
    if (i != top) off += q[i] * q[i];
  g.upper_gap = 2.0 * std::sqrt(static_cast<double>(n)) * dist - g.f_gap;
  g.sharpness_applicable = g.f_gap <= (2.0 / 25.0) * theta;
  g.lower_gap = g.f_gap - (std::sqrt(2.0) / 16.0) * theta * (1.0 - theta) * std::sqrt(off);
  return g;
}

}  // namespace

BiLipschitzGaps bi_lipschitz_check(const Eigen::VectorXd& q, const Eigen::MatrixXd& Y,
                                   double theta, int top) {
  top = resolve_top(q, top, "bi_lipschitz_check");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(q.size());
  e[top] = 1.0;
  return gaps_from_values(q, objective_value(q, Y), objective_value(e, Y), theta, top);
}

BiLipschitzGaps bi_lipschitz_check_population(const Eigen::VectorXd& q,
                                              const SupportDistribution& dist, int top) {
  top = resolve_top(q, top, "bi_lipschitz_check_population");
  // E f(e_top) = theta exactly.
  return gaps_from_values(q, population_objective(q, dist), dist.theta(), dist.theta(), top);
}

}  // namespace odl
