#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

#include <Eigen/Core>

#include "odl/objective.hpp"
#include "odl/rng.hpp"

namespace odl {

/// zeta_0 = 1/(5 log n), the working margin for the good sets.
inline double default_zeta(int n) { return 1.0 / (5.0 * std::log(static_cast<double>(n))); }

/// Membership in the good sets S_zeta^(i,+/-): returns the unique (index,
/// sign) with q_i^2 >= (1+zeta) ||q_{-i}||_inf^2 (sign = +/-1), or nullopt
/// when no coordinate dominates uniquely.
std::optional<std::pair<int, int>> good_set_membership(const Eigen::VectorXd& q, double zeta);

/// Uniform sample from S_zeta^(top,+) with top = n-1, by rejection from the
/// sphere plus the symmetry relabeling (swap the dominating coordinate into
/// position n-1 and flip its sign); exchangeability of the uniform measure
/// makes the relabeled draw exactly uniform on the target set.
Eigen::VectorXd sample_good_set(int n, double zeta, Philox& gen);

/// inf over the Riemannian set (I - qq^T) S of <., e_j/q_j - e_top/q_top>,
/// computed through the support function as -h(-(I-qq^T)u).
double directional_bound_a(const Eigen::VectorXd& q, const SubdifferentialSet& set, int j,
                           int top = -1);

/// inf over the Riemannian set of <., q_top q - e_top>.
double directional_bound_b(const Eigen::VectorXd& q, const SubdifferentialSet& set,
                           int top = -1);

/// Angle between vectors in [0, pi]; by convention the angle against a zero
/// vector is 0.
double vector_angle(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// d_exp(p, q) = P[sign(p^T x) != sign(q^T x)] = (1/pi) E_S angle(p_S, q_S),
/// exact by enumeration; requires supp(p) = supp(q).
double dexp(const Eigen::VectorXd& p, const Eigen::VectorXd& q, const SupportDistribution& dist);

/// Fraction of columns of X on which sign(p^T x) and sign(q^T x) disagree.
double empirical_sign_disagreement(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                   const Eigen::MatrixXd& X);

/// max over sampled unit directions of |h_A(u) - h_B(u)|; a lower bound on
/// the Hausdorff distance between the convex compact sets, exact in the
/// limit of dense direction sampling.
double hausdorff_estimate(const SubdifferentialSet& A, const SubdifferentialSet& B,
                          int n_directions, std::uint64_t seed);

/// Closed form of the population objective in the reparametrized coordinates
/// w = q_{1:n-1}, q(w) = [w; sqrt(1-||w||^2)]:
///   E g(w) = (1-theta) E_S ||w_S|| + theta E_S sqrt(1 - ||w_{S^c}||^2),
/// enumerated over supports S of the n-1 leading coordinates.
double population_reparam_objective(const Eigen::VectorXd& w, const SupportDistribution& dist);

/// Lift w -> [w; sqrt(1-||w||^2)]; throws when ||w|| > 1.
Eigen::VectorXd lift_reparam(const Eigen::VectorXd& w);

/// Second derivative d^2/ds^2 E g(s v) for unit v, s in (0,1):
/// -theta E_S ||v_{S^c}||^2 (1 - s^2 ||v_{S^c}||^2)^(-3/2).
double population_curvature(const Eigen::VectorXd& v, double s, const SupportDistribution& dist);

/// Radial derivative D_{w/||w||} E g at w (analytic form); domain
/// ||w||^2 + ||w||_inf^2 <= 1, w != 0.
double population_radial_derivative(const Eigen::VectorXd& w, const SupportDistribution& dist);

/// Right-hand side of the inward-gradient bound:
/// theta(1-theta) (1/sqrt(1+||w||_inf^2/||w||^2) - ||w||).
double inward_gradient_lower_bound(const Eigen::VectorXd& w, double theta);

struct VolumeEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
};

/// Monte-Carlo fraction of uniform sphere samples lying in S_zeta^(n-1,+).
VolumeEstimate volume_ratio_mc(int n, double zeta, std::int64_t n_samples, std::uint64_t seed);

/// (full angle, sum of all size-2 subvector angles); the vector angle
/// inequality asserts lhs <= rhs whenever the full angle is acute.
std::pair<double, double> angle_inequality_check(const Eigen::VectorXd& u,
                                                 const Eigen::VectorXd& v);

struct BiLipschitzGaps {
  double upper_gap = 0.0;           // 2 sqrt(n) ||q - e_top|| - (f(q) - f(e_top))
  double lower_gap = 0.0;           // (f(q)-f(e_top)) - (sqrt2/16) t(1-t) ||q_{-top}||
  bool sharpness_applicable = false;  // f(q) - f(e_top) <= (2/25) theta
  double f_gap = 0.0;
};

/// Empirical two-sided check against the columns of Y.
BiLipschitzGaps bi_lipschitz_check(const Eigen::VectorXd& q, const Eigen::MatrixXd& Y,
                                   double theta, int top = -1);

/// Population version by enumeration.
BiLipschitzGaps bi_lipschitz_check_population(const Eigen::VectorXd& q,
                                              const SupportDistribution& dist, int top = -1);

}  // namespace odl
