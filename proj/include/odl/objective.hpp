#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace odl {

/// Relative threshold below which |q^T y_i| counts as a zero crossing:
/// the sample enters the subdifferential as a set-valued generator.
constexpr double kZeroCrossingRel = 1e-12;

/// Default tolerance when checking that a query point is unit-norm.
constexpr double kUnitNormTol = 1e-8;

/// A convex compact subdifferential set, represented as a translate of a
/// Minkowski sum and queried through its support function
///
///   h(u) = <base, u> + sum_g |<g, u>| + ball_block(u).
///
/// Empirical sets carry segment generators (one per zero-crossing sample,
/// coefficient range [-1,1]); population sets at points with zero
/// coordinates carry a ball block, the weighted Minkowski sum of Euclidean
/// balls supported on subsets of the zero coordinates.  When both parts are
/// empty the set is the singleton {base}.
struct SubdifferentialSet {
  Eigen::VectorXd base;
  std::vector<Eigen::VectorXd> generators;

  struct BallBlock {
    double theta = 0.0;
    std::uint32_t zero_mask = 0;  // coordinates where q vanishes
    double scale = 0.0;           // (1-theta)^(#nonzero coords of q)
    int dim = 0;
  };
  std::optional<BallBlock> balls;

  /// Support function h(u) = sup over the set of <x, u>.
  double support(const Eigen::VectorXd& u) const;

  /// The deterministic selection (coefficient 0 for every set-valued term).
  const Eigen::VectorXd& selection() const { return base; }

  bool is_singleton() const { return generators.empty() && !balls.has_value(); }

  /// Set radius sup_{x in set} ||x|| estimated as max of h over sampled
  /// directions; a lower bound converging as directions grow.
  double radius(int n_directions, std::uint64_t seed) const;
};

/// f(q) = sqrt(pi/2) (1/m) ||q^T Y||_1.  Throws if q is not unit-norm
/// within `unit_tol`.
double objective_value(const Eigen::VectorXd& q, const Eigen::MatrixXd& Y,
                       double unit_tol = kUnitNormTol);

/// Full subdifferential at q: base over the non-crossing samples plus one
/// segment generator per zero-crossing sample.
SubdifferentialSet subgradient(const Eigen::VectorXd& q, const Eigen::MatrixXd& Y,
                               double unit_tol = kUnitNormTol);

/// (I - q q^T) applied to the subgradient selection.
Eigen::VectorXd riemannian_subgradient(const Eigen::VectorXd& q, const Eigen::MatrixXd& Y,
                                       double unit_tol = kUnitNormTol);

/// Optimizer hot kernel.  Holds the data in sample-major (transposed) layout
/// so both matrix-vector products stream long contiguous columns, plus the
/// scratch vectors, so the per-iteration cost is two gemv calls with no
/// allocation.
class ObjectiveEvaluator {
 public:
  explicit ObjectiveEvaluator(const Eigen::MatrixXd& Y);

  int dim() const { return static_cast<int>(Yt_.cols()); }
  Eigen::Index samples() const { return Yt_.rows(); }

  /// Objective value and ambient subgradient selection (coefficient 0 on
  /// zero-crossing samples) at unit q.
  void eval(const Eigen::VectorXd& q, double& f_out, Eigen::VectorXd& ambient_out);

 private:
  Eigen::MatrixXd Yt_;        // m x n
  Eigen::VectorXd col_norms_; // per-sample norms of the original columns
  Eigen::VectorXd z_, coef_;
};

/// Exact Bernoulli(theta) support distribution over subsets of [n], n <= 22.
/// Weights theta^|S| (1-theta)^(n-|S|) are enumerated by depth-first
/// streaming; nothing of size 2^n is ever materialized.
class SupportDistribution {
 public:
  SupportDistribution(int n, double theta);

  int dim() const { return n_; }
  double theta() const { return theta_; }

  /// Sum of all 2^n subset weights (should be 1 up to roundoff).
  double total_weight() const;

  static constexpr int kMaxDim = 22;

 private:
  int n_;
  double theta_;
};

/// E f(q) = E_S ||q_S|| by exact enumeration.
double population_objective(const Eigen::VectorXd& q, const SupportDistribution& dist);

/// E ∂f(q): base restricted to the support of q plus a ball block on its
/// zero coordinates; a singleton for fully dense q.
SubdifferentialSet population_subdifferential(const Eigen::VectorXd& q,
                                              const SupportDistribution& dist);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
};

/// Monte-Carlo estimate of sqrt(pi/2) E|q^T x| for x ~ BG(theta); stand-in
/// for the exact oracle at dimensions beyond the enumeration cap.  Samples
/// are drawn in fixed-size chunks with per-chunk counter streams, so the
/// result does not depend on how the chunks are scheduled.
McEstimate population_objective_mc(const Eigen::VectorXd& q, double theta,
                                   std::int64_t n_samples, std::uint64_t seed);

}  // namespace odl
