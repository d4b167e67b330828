#include "odl/objective.hpp"

#include <cmath>
#include <stdexcept>

#include "odl/rng.hpp"

namespace odl {

namespace {

constexpr double kHalfPiScale = 1.2533141373155002512078826424055;  // sqrt(pi/2)

void check_unit(const Eigen::VectorXd& q, double tol, const char* who) {
  if (std::abs(q.norm() - 1.0) > tol)
    throw std::invalid_argument(std::string(who) + ": q is not unit-norm within tolerance");
}

}  // namespace

ObjectiveEvaluator::ObjectiveEvaluator(const Eigen::MatrixXd& Y)
    : Yt_(Y.transpose()),
      col_norms_(Y.colwise().norm()),
      z_(Y.cols()),
      coef_(Y.cols()) {}

void ObjectiveEvaluator::eval(const Eigen::VectorXd& q, double& f_out,
                              Eigen::VectorXd& ambient_out) {
  const double scale = kHalfPiScale / static_cast<double>(Yt_.rows());
  z_.noalias() = Yt_ * q;
  f_out = scale * z_.cwiseAbs().sum();
  coef_ = (z_.array().abs() > kZeroCrossingRel * col_norms_.array())
              .select(z_.array().sign(), 0.0);
  ambient_out.noalias() = Yt_.transpose() * coef_;
  ambient_out *= scale;
}

double objective_value(const Eigen::VectorXd& q, const Eigen::MatrixXd& Y, double unit_tol) {
  check_unit(q, unit_tol, "objective_value");
  const Eigen::Index m = Y.cols();
  double abs_sum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) abs_sum += std::abs(Y.col(i).dot(q));
  return kHalfPiScale / static_cast<double>(m) * abs_sum;
}

SubdifferentialSet subgradient(const Eigen::VectorXd& q, const Eigen::MatrixXd& Y,
                               double unit_tol) {
  check_unit(q, unit_tol, "subgradient");
  const Eigen::Index m = Y.cols();
  const double scale = kHalfPiScale / static_cast<double>(m);
  SubdifferentialSet set;
  set.base.setZero(Y.rows());
  for (Eigen::Index i = 0; i < m; ++i) {
    const double z = Y.col(i).dot(q);
    const double nrm = Y.col(i).norm();
    if (std::abs(z) > kZeroCrossingRel * nrm) {
      if (z > 0.0)
        set.base += Y.col(i);
      else
        set.base -= Y.col(i);
    } else if (nrm > 0.0) {  // zero samples span only {0}; skip them
      set.generators.push_back(scale * Y.col(i));
    }
  }
  set.base *= scale;
  return set;
}

Eigen::VectorXd riemannian_subgradient(const Eigen::VectorXd& q, const Eigen::MatrixXd& Y,
                                       double unit_tol) {
  const Eigen::VectorXd g = subgradient(q, Y, unit_tol).base;
  return g - q * q.dot(g);
}

double SubdifferentialSet::support(const Eigen::VectorXd& u) const {
  double h = base.dot(u);
  for (const auto& g : generators) h += std::abs(g.dot(u));
  if (balls) {
    // sum over subsets T of the zero coordinates of
    // theta^|T| (1-theta)^(z-|T|) ||u_T||, times the outside-weight scale.
    std::vector<int> coords;
    for (int i = 0; i < balls->dim; ++i)
      if (balls->zero_mask & (1u << i)) coords.push_back(i);
    const double th = balls->theta;
    double acc = 0.0;
    const auto walk = [&](auto&& self, std::size_t idx, double sumsq, double w) -> void {
      if (idx == coords.size()) {
        acc += w * std::sqrt(sumsq);
        return;
      }
      const double ui = u[coords[idx]];
      self(self, idx + 1, sumsq + ui * ui, w * th);
      self(self, idx + 1, sumsq, w * (1.0 - th));
    };
    walk(walk, 0, 0.0, 1.0);
    h += balls->scale * acc;
  }
  return h;
}

double SubdifferentialSet::radius(int n_directions, std::uint64_t seed) const {
  Philox gen(seed, /*stream=*/7);
  double r = 0.0;
  const int n = static_cast<int>(base.size());
  for (int k = 0; k < n_directions; ++k)
    r = std::max(r, support(gen.unit_sphere(n)));
  return r;
}

SupportDistribution::SupportDistribution(int n, double theta) : n_(n), theta_(theta) {
  if (n < 1 || n > kMaxDim)
    throw std::invalid_argument(
        "SupportDistribution: dimension must lie in [1, 22]; use the Monte-Carlo "
        "estimators beyond the enumeration cap");
  if (!(theta > 0.0 && theta < 1.0))
    throw std::invalid_argument("SupportDistribution: theta must lie in (0,1)");
}

double SupportDistribution::total_weight() const {
  double acc = 0.0;
  const auto walk = [&](auto&& self, int i, double w) -> void {
    if (i == n_) {
      acc += w;
      return;
    }
    self(self, i + 1, w * theta_);
    self(self, i + 1, w * (1.0 - theta_));
  };
  walk(walk, 0, 1.0);
  return acc;
}

double population_objective(const Eigen::VectorXd& q, const SupportDistribution& dist) {
  if (q.size() != dist.dim())
    throw std::invalid_argument("population_objective: dimension mismatch");
  const int n = dist.dim();
  const double th = dist.theta();
  double acc = 0.0;
  const auto walk = [&](auto&& self, int i, double sumsq, double w) -> void {
    if (i == n) {
      acc += w * std::sqrt(sumsq);
      return;
    }
    self(self, i + 1, sumsq + q[i] * q[i], w * th);
    self(self, i + 1, sumsq, w * (1.0 - th));
  };
  walk(walk, 0, 0.0, 1.0);
  return acc;
}

SubdifferentialSet population_subdifferential(const Eigen::VectorXd& q,
                                              const SupportDistribution& dist) {
  if (q.size() != dist.dim())
    throw std::invalid_argument("population_subdifferential: dimension mismatch");
  const int n = dist.dim();
  const double th = dist.theta();

  std::vector<int> support_coords;
  std::uint32_t zero_mask = 0;
  for (int i = 0; i < n; ++i) {
    if (q[i] != 0.0)
      support_coords.push_back(i);
    else
      zero_mask |= (1u << i);
  }

  SubdifferentialSet set;
  set.base.setZero(n);

  // base_j = sum over nonempty subsets T of supp(q) containing j of
  // theta^|T| (1-theta)^(|supp|-|T|) q_j / ||q_T||.  Subsets of the zero
  // coordinates marginalize out exactly.
  std::vector<int> chosen;
  chosen.reserve(support_coords.size());
  const auto walk = [&](auto&& self, std::size_t idx, double sumsq, double w) -> void {
    if (idx == support_coords.size()) {
      if (!chosen.empty()) {
        const double inv = w / std::sqrt(sumsq);
        for (int j : chosen) set.base[j] += q[j] * inv;
      }
      return;
    }
    const int c = support_coords[idx];
    chosen.push_back(c);
    self(self, idx + 1, sumsq + q[c] * q[c], w * th);
    chosen.pop_back();
    self(self, idx + 1, sumsq, w * (1.0 - th));
  };
  walk(walk, 0, 0.0, 1.0);

  if (zero_mask != 0) {
    SubdifferentialSet::BallBlock block;
    block.theta = th;
    block.zero_mask = zero_mask;
    block.dim = n;
    block.scale = std::pow(1.0 - th, static_cast<double>(support_coords.size()));
    set.balls = block;
  }
  return set;
}

McEstimate population_objective_mc(const Eigen::VectorXd& q, double theta,
                                   std::int64_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("population_objective_mc: n_samples >= 1");
  const int n = static_cast<int>(q.size());
  constexpr std::int64_t kChunk = 1 << 14;
  double sum = 0.0, sumsq = 0.0;
  std::int64_t done = 0;
  for (std::uint64_t chunk = 0; done < n_samples; ++chunk) {
    const std::int64_t count = std::min(kChunk, n_samples - done);
    Philox gen(seed, /*stream=*/0x100 + chunk);
    double c_sum = 0.0, c_sumsq = 0.0;
    for (std::int64_t s = 0; s < count; ++s) {
      double z = 0.0;
      for (int i = 0; i < n; ++i)
        if (gen.next_double() < theta) z += q[i] * gen.next_gaussian();
      const double v = kHalfPiScale * std::abs(z);
      c_sum += v;
      c_sumsq += v * v;
    }
    sum += c_sum;
    sumsq += c_sumsq;
    done += count;
  }
  McEstimate est;
  est.n_samples = n_samples;
  est.estimate = sum / static_cast<double>(n_samples);
  const double var =
      std::max(0.0, sumsq / static_cast<double>(n_samples) - est.estimate * est.estimate);
  est.std_error = std::sqrt(var / static_cast<double>(n_samples));
  return est;
}

}  // namespace odl
