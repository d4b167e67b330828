#include "odl/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "odl/geometry.hpp"
#include "odl/model.hpp"
#include "odl/objective.hpp"
#include "odl/optimizer.hpp"
#include "odl/rng.hpp"

namespace odl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void finalize(CheckReport& r) {
  r.pass_rate = r.samples > 0 ? static_cast<double>(r.passes) / r.samples : 0.0;
}

Eigen::VectorXd projected_base(const Eigen::VectorXd& q, const SubdifferentialSet& set) {
  return set.base - q * q.dot(set.base);
}

}  // namespace

nlohmann::json to_json(const CheckReport& r) {
  return {{"check", r.name},     {"params", r.params},         {"samples", r.samples},
          {"passes", r.passes},  {"pass_rate", r.pass_rate},   {"worst_slack", r.worst_slack},
          {"pass", r.pass},      {"details", r.details}};
}

CheckReport check_stationary_points(int n, double theta) {
  CheckReport r;
  r.name = "stationary-points";
  r.params = {{"n", n}, {"theta", theta}, {"tolerance", 1e-12}};
  const SupportDistribution dist(n, theta);
  double worst = 0.0;
  long count = 0, ok = 0;
  Eigen::VectorXd q(n);
  // every nonempty support and every sign pattern on it
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const int k = __builtin_popcount(mask);
    std::vector<int> coords;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) coords.push_back(i);
    const double mag = 1.0 / std::sqrt(static_cast<double>(k));
    for (std::uint32_t signs = 0; signs < (1u << k); ++signs) {
      q.setZero();
      for (int b = 0; b < k; ++b) q[coords[b]] = (signs & (1u << b)) ? -mag : mag;
      const SubdifferentialSet set = population_subdifferential(q, dist);
      const double res = projected_base(q, set).norm();
      worst = std::max(worst, res);
      ++count;
      if (res <= 1e-12) ++ok;
    }
  }
  r.samples = count;
  r.passes = ok;
  r.worst_slack = 1e-12 - worst;
  r.pass = ok == count;
  r.details = {{"max_residual", worst}};
  finalize(r);
  return r;
}

CheckReport check_nonstationary_probes(int n, double theta, int probes, std::uint64_t seed) {
  CheckReport r;
  r.name = "nonstationary-probes";
  r.params = {{"n", n}, {"theta", theta}, {"probes", probes}, {"seed", seed}};
  const SupportDistribution dist(n, theta);
  Philox gen(seed, /*stream=*/11);
  double min_residual = kInf, min_bound = kInf;
  for (int t = 0; t < probes; ++t) {
    const Eigen::VectorXd q = gen.unit_sphere(n);
    const SubdifferentialSet set = population_subdifferential(q, dist);
    const double res = projected_base(q, set).norm();
    min_residual = std::min(min_residual, res);
    // dominant coordinate and the strongest competitor
    int top = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(q[i]) > std::abs(q[top])) top = i;
    int second = top == 0 ? 1 : 0;
    for (int i = 0; i < n; ++i)
      if (i != top && std::abs(q[i]) > std::abs(q[second])) second = i;
    const double bound = directional_bound_a(q, set, second, top);
    min_bound = std::min(min_bound, bound);
    ++r.samples;
    if (res > 0.0 && bound > 0.0) ++r.passes;
  }
  r.worst_slack = std::min(min_residual, min_bound);
  r.pass = r.passes == r.samples;
  r.details = {{"min_residual", min_residual}, {"min_pair_bound", min_bound}};
  finalize(r);
  return r;
}

namespace {

std::vector<Eigen::VectorXd> good_set_sample(int n, double zeta, int count, std::uint64_t seed) {
  Philox gen(seed, /*stream=*/13);
  std::vector<Eigen::VectorXd> qs;
  qs.reserve(count);
  for (int i = 0; i < count; ++i) qs.push_back(sample_good_set(n, zeta, gen));
  return qs;
}

}  // namespace

CheckReport check_directional_bounds_population(int n, double theta, double zeta0, int n_samples,
                                                std::uint64_t seed) {
  CheckReport r;
  r.name = "directional-bounds-population";
  r.params = {{"n", n}, {"theta", theta}, {"zeta0", zeta0}, {"samples", n_samples},
              {"seed", seed}};
  const SupportDistribution dist(n, theta);
  const int top = n - 1;
  const double rhs_a = theta * (1.0 - theta) * zeta0 / (1.0 + zeta0) / (2.0 * n);
  const double rhs_b_coef =
      theta * (1.0 - theta) * zeta0 / (8.0 * std::pow(static_cast<double>(n), 1.5));
  double worst = kInf;
  for (const auto& q : good_set_sample(n, zeta0, n_samples, seed)) {
    const SubdifferentialSet set = population_subdifferential(q, dist);
    bool all_ok = true;
    for (int j = 0; j < n; ++j) {
      if (j == top || q[j] == 0.0) continue;
      const double slack = directional_bound_a(q, set, j, top) - rhs_a;
      worst = std::min(worst, slack);
      all_ok = all_ok && slack >= 0.0;
    }
    const double off = std::sqrt(std::max(0.0, 1.0 - q[top] * q[top]));
    const double slack_b = directional_bound_b(q, set, top) - rhs_b_coef * off;
    worst = std::min(worst, slack_b);
    all_ok = all_ok && slack_b >= 0.0;
    ++r.samples;
    if (all_ok) ++r.passes;
  }
  r.worst_slack = worst;
  r.pass = r.passes == r.samples;
  finalize(r);
  return r;
}

CheckReport check_directional_bounds_empirical(int n, double theta, double zeta0, int n_samples,
                                               long m, std::uint64_t seed, double min_pass_rate) {
  CheckReport r;
  r.name = "directional-bounds-empirical";
  r.params = {{"n", n},       {"theta", theta}, {"zeta0", zeta0},
              {"samples", n_samples}, {"m", m}, {"seed", seed},
              {"min_pass_rate", min_pass_rate}};
  const Eigen::MatrixXd X = sample_bg(n, m, Theta::unchecked(theta), child_seed(seed, 1));
  const int top = n - 1;
  const double rhs_a = theta * (1.0 - theta) * zeta0 / (1.0 + zeta0) / (4.0 * n);
  const double rhs_b_coef = std::sqrt(2.0) / 16.0 * theta * (1.0 - theta) * zeta0 /
                            std::pow(static_cast<double>(n), 1.5);
  double worst = kInf;
  for (const auto& q : good_set_sample(n, zeta0, n_samples, seed)) {
    const SubdifferentialSet set = subgradient(q, X);
    bool all_ok = true;
    for (int j = 0; j < n; ++j) {
      if (j == top || q[j] == 0.0) continue;
      if (q[top] * q[top] > 3.0 * q[j] * q[j]) continue;  // theorem's cone restriction
      const double slack = directional_bound_a(q, set, j, top) - rhs_a;
      worst = std::min(worst, slack);
      all_ok = all_ok && slack >= 0.0;
    }
    const double off = std::sqrt(std::max(0.0, 1.0 - q[top] * q[top]));
    const double slack_b = directional_bound_b(q, set, top) - rhs_b_coef * off;
    worst = std::min(worst, slack_b);
    all_ok = all_ok && slack_b >= 0.0;
    ++r.samples;
    if (all_ok) ++r.passes;
  }
  r.worst_slack = worst;
  finalize(r);
  r.pass = r.pass_rate >= min_pass_rate;
  return r;
}

CheckReport check_subdifferential_concentration(int n, double theta, long m_small, long m_large,
                                                int n_directions, std::uint64_t seed,
                                                double min_ratio) {
  CheckReport r;
  r.name = "subdifferential-concentration";
  r.params = {{"n", n},           {"theta", theta},           {"m_small", m_small},
              {"m_large", m_large}, {"directions", n_directions}, {"seed", seed},
              {"min_ratio", min_ratio}};
  Philox gen(seed, /*stream=*/17);
  const Eigen::VectorXd q = gen.unit_sphere(n);
  const SupportDistribution dist(n, theta);
  const SubdifferentialSet pop = population_subdifferential(q, dist);
  const Eigen::MatrixXd Xs = sample_bg(n, m_small, Theta::unchecked(theta), child_seed(seed, 2));
  const Eigen::MatrixXd Xl = sample_bg(n, m_large, Theta::unchecked(theta), child_seed(seed, 3));
  const double h_small = hausdorff_estimate(subgradient(q, Xs), pop, n_directions, seed);
  const double h_large = hausdorff_estimate(subgradient(q, Xl), pop, n_directions, seed);
  const double ratio = h_large > 0.0 ? h_small / h_large : kInf;
  r.samples = 1;
  r.passes = ratio >= min_ratio ? 1 : 0;
  r.worst_slack = ratio - min_ratio;
  r.pass = r.passes == 1;
  r.details = {{"hausdorff_m_small", h_small}, {"hausdorff_m_large", h_large},
               {"ratio", ratio}};
  finalize(r);
  return r;
}

CheckReport check_initialization_probability(int n, std::int64_t n_samples, std::uint64_t seed) {
  CheckReport r;
  const double zeta = default_zeta(n);
  r.name = "initialization-probability";
  r.params = {{"n", n}, {"zeta", zeta}, {"samples", n_samples}, {"seed", seed}};
  std::vector<std::int64_t> counts(2 * n, 0);
  constexpr std::int64_t kChunk = 1 << 14;
  std::int64_t done = 0;
  for (std::uint64_t chunk = 0; done < n_samples; ++chunk) {
    const std::int64_t cnt = std::min(kChunk, n_samples - done);
    Philox gen(seed, /*stream=*/0x300 + chunk);
    for (std::int64_t s = 0; s < cnt; ++s) {
      const auto member = good_set_membership(gen.unit_sphere(n), zeta);
      if (member) ++counts[2 * member->first + (member->second > 0 ? 0 : 1)];
    }
    done += cnt;
  }
  std::int64_t hits = 0;
  for (auto c : counts) hits += c;
  const double nd = static_cast<double>(n_samples);
  const double p_union = static_cast<double>(hits) / nd;
  const double sigma_union = std::sqrt(std::max(p_union * (1.0 - p_union), 1e-12) / nd);
  const double union_slack = p_union - (0.5 - 3.0 * sigma_union);

  const double p_bar = p_union / (2.0 * n);
  const double sigma_set = std::sqrt(std::max(p_bar * (1.0 - p_bar), 1e-12) / nd);
  double worst_uniformity = kInf;
  for (auto c : counts) {
    const double dev = std::abs(static_cast<double>(c) / nd - p_bar);
    worst_uniformity = std::min(worst_uniformity, 5.0 * sigma_set - dev);
  }
  r.samples = n_samples;
  r.passes = hits;
  r.worst_slack = std::min(union_slack, worst_uniformity);
  r.pass = union_slack >= 0.0 && worst_uniformity >= 0.0;
  r.details = {{"union_fraction", p_union},
               {"union_slack", union_slack},
               {"uniformity_slack", worst_uniformity}};
  finalize(r);
  return r;
}

CheckReport check_volume_lower_bound(int n, const std::vector<double>& zetas,
                                     std::int64_t n_samples, std::uint64_t seed) {
  CheckReport r;
  r.name = "volume-lower-bound";
  r.params = {{"n", n}, {"zetas", zetas}, {"samples", n_samples}, {"seed", seed}};
  const double logn = std::log(static_cast<double>(n));
  double worst = kInf;
  nlohmann::json rows = nlohmann::json::array();
  for (double zeta : zetas) {
    const VolumeEstimate est = volume_ratio_mc(n, zeta, n_samples, seed);
    const double bound = 1.0 / (2.0 * n) - 9.0 / 8.0 * logn / n * zeta;
    const double slack = est.estimate - (bound - 3.0 * est.std_error);
    worst = std::min(worst, slack);
    ++r.samples;
    if (slack >= 0.0) ++r.passes;
    rows.push_back({{"zeta", zeta}, {"estimate", est.estimate}, {"std_error", est.std_error},
                    {"bound", bound}, {"slack", slack}});
  }
  r.worst_slack = worst;
  r.pass = r.passes == r.samples;
  r.details = {{"rows", rows}};
  finalize(r);
  return r;
}

CheckReport check_curvature_and_inward(int n, double theta, int n_points, std::uint64_t seed) {
  CheckReport r;
  r.name = "curvature-and-inward-gradient";
  r.params = {{"n", n}, {"theta", theta}, {"points", n_points}, {"seed", seed}};
  const SupportDistribution dist(n - 1, theta);
  const SupportDistribution dist_full(n, theta);
  Philox gen(seed, /*stream=*/19);
  const double curv_cap = -theta * (1.0 - theta) + 1e-8;
  double worst = kInf, worst_fd = 0.0, worst_route = 0.0;
  const double fd_step = 1e-4;
  for (int t = 0; t < n_points; ++t) {
    const Eigen::VectorXd v = gen.unit_sphere(n - 1);
    const double s = 0.02 + 0.94 * gen.next_double();
    const double curv = population_curvature(v, s, dist);
    const double curv_slack = curv_cap - curv;
    worst = std::min(worst, curv_slack);

    const double smax = 1.0 / std::sqrt(1.0 + v.cwiseAbs().maxCoeff() * v.cwiseAbs().maxCoeff());
    const Eigen::VectorXd w = (0.02 + 0.96 * gen.next_double()) * smax * v;
    const double deriv = population_radial_derivative(w, dist);
    const double grad_slack = deriv - (inward_gradient_lower_bound(w, theta) - 1e-10);
    worst = std::min(worst, grad_slack);

    bool agree = true;
    if (t % 20 == 0 && s > 2 * fd_step && s < 1.0 - 2 * fd_step) {
      // central differences of the closed form against the analytic forms
      const auto h = [&](double ss) { return population_reparam_objective(ss * v, dist); };
      const double fd2 = (h(s + fd_step) - 2.0 * h(s) + h(s - fd_step)) / (fd_step * fd_step);
      const double rel2 = std::abs(fd2 - curv) / std::max(1.0, std::abs(curv));
      const double tw = w.norm();
      const double fd1 = (h(tw + fd_step) - h(tw - fd_step)) / (2.0 * fd_step);
      const double an1 = population_radial_derivative(tw * v, dist);
      const double rel1 = std::abs(fd1 - an1) / std::max(1.0, std::abs(an1));
      worst_fd = std::max({worst_fd, rel1, rel2});
      agree = rel1 <= 1e-5 && rel2 <= 1e-5;
      // cross-route identity: E g(w) equals E f at the lifted point
      const double route =
          std::abs(h(s) - population_objective(lift_reparam(s * v), dist_full));
      worst_route = std::max(worst_route, route);
      agree = agree && route <= 1e-12;
    }
    ++r.samples;
    if (curv_slack >= 0.0 && grad_slack >= 0.0 && agree) ++r.passes;
  }
  r.worst_slack = worst;
  r.pass = r.passes == r.samples;
  r.details = {{"worst_fd_relative_error", worst_fd}, {"worst_route_gap", worst_route}};
  finalize(r);
  return r;
}

CheckReport check_angle_lemmas(int n_trials, std::uint64_t seed) {
  CheckReport r;
  r.name = "angle-lemmas";
  r.params = {{"trials", n_trials}, {"seed", seed}};
  Philox gen(seed, /*stream=*/23);
  double worst = kInf;
  for (int t = 0; t < n_trials; ++t) {
    const int n = 3 + static_cast<int>(gen.next_u32() % 6u);
    const Eigen::VectorXd u = gen.unit_sphere(n);
    Eigen::VectorXd v = gen.unit_sphere(n);
    if (u.dot(v) < 0.0) v = -v;  // keep the pair acute (lemma precondition)
    const auto [lhs, rhs] = angle_inequality_check(u, v);
    const double slack_sum = rhs + 1e-12 - lhs;
    worst = std::min(worst, slack_sum);

    // ratio-angle lemma in the plane
    const double x1 = 0.1 + gen.next_double();
    const double y1 = x1 * (1.0 + gen.next_double());
    const double quotient = 1.0 + gen.next_double();  // in [1, 2), eta = quotient-1 <= 1
    const double x2 = 0.1 + gen.next_double();
    const double y2 = x2 * (y1 / x1) * quotient;
    const double ang = vector_angle(Eigen::Vector2d(x1, y1), Eigen::Vector2d(x2, y2));
    const double slack_ratio = (quotient - 1.0) + 1e-12 - ang;
    worst = std::min(worst, slack_ratio);

    ++r.samples;
    if (slack_sum >= 0.0 && slack_ratio >= 0.0) ++r.passes;
  }
  r.worst_slack = worst;
  r.pass = r.passes == r.samples;
  finalize(r);
  return r;
}

CheckReport check_dexp_metric(int n, double theta, int n_triples, std::int64_t mc_samples,
                              std::uint64_t seed) {
  CheckReport r;
  r.name = "dexp-metric";
  r.params = {{"n", n},        {"theta", theta}, {"triples", n_triples},
              {"mc_samples", mc_samples}, {"seed", seed}};
  const SupportDistribution dist(n, theta);
  Philox gen(seed, /*stream=*/29);
  double worst = kInf;
  for (int t = 0; t < n_triples; ++t) {
    // random support pattern (nonempty), shared by the triple
    std::uint32_t mask = 0;
    while (mask == 0) mask = gen.next_u32() & ((1u << n) - 1u);
    const auto draw = [&]() {
      for (;;) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i)
          if (mask & (1u << i)) x[i] = gen.next_gaussian();
        const double nrm = x.norm();
        if (nrm > 0.0) return Eigen::VectorXd(x / nrm);
      }
    };
    const Eigen::VectorXd p = draw(), q = draw(), z = draw();
    const double dpq = dexp(p, q, dist);
    const double dpz = dexp(p, z, dist);
    const double dzq = dexp(z, q, dist);
    const double identity_slack = 1e-15 - dexp(p, p, dist);
    const double symmetry_slack = 1e-15 - std::abs(dpq - dexp(q, p, dist));
    const double triangle_slack = dpz + dzq + 1e-12 - dpq;
    // distinct points must be separated (a 1-coordinate support can draw the
    // same signed basis vector twice; zero distance is correct there)
    const bool separated = p == q || dpq > 0.0;
    worst = std::min({worst, identity_slack, symmetry_slack, triangle_slack});
    ++r.samples;
    if (identity_slack >= 0.0 && symmetry_slack >= 0.0 && triangle_slack >= 0.0 && separated)
      ++r.passes;
  }

  // E R(p,q) = dexp(p,q): fresh Bernoulli-Gaussian sample, 3-sigma window
  if (mc_samples > 0) {
    const Eigen::VectorXd p = gen.unit_sphere(n);
    const Eigen::VectorXd q = gen.unit_sphere(n);
    const double d = dexp(p, q, dist);
    const Eigen::MatrixXd X = sample_bg(n, mc_samples, Theta::unchecked(theta),
                                        child_seed(seed, 5));
    const double rr = empirical_sign_disagreement(p, q, X);
    const double sigma = std::sqrt(std::max(d * (1.0 - d), 1e-12) / mc_samples);
    const double mc_slack = 3.0 * sigma - std::abs(rr - d);
    worst = std::min(worst, mc_slack);
    ++r.samples;
    if (mc_slack >= 0.0) ++r.passes;
    r.details = {{"dexp", d}, {"empirical_rate", rr}, {"mc_sigma", sigma}};
  }

  r.worst_slack = worst;
  r.pass = r.passes == r.samples;
  finalize(r);
  return r;
}

CheckReport check_bilipschitz_population(int n, double theta, int n_samples,
                                         std::uint64_t seed) {
  CheckReport r;
  r.name = "bilipschitz-population";
  r.params = {{"n", n}, {"theta", theta}, {"samples", n_samples}, {"seed", seed}};
  const SupportDistribution dist(n, theta);
  const double zeta0 = default_zeta(n);
  double worst = kInf;
  for (const auto& q : good_set_sample(n, zeta0, n_samples, seed)) {
    const BiLipschitzGaps g = bi_lipschitz_check_population(q, dist);
    double slack = g.upper_gap;
    if (g.sharpness_applicable) slack = std::min(slack, g.lower_gap);
    worst = std::min(worst, slack);
    ++r.samples;
    if (slack >= -1e-12) ++r.passes;
  }
  r.worst_slack = worst;
  r.pass = r.passes == r.samples;
  finalize(r);
  return r;
}

CheckReport check_bilipschitz_empirical(int n, double theta, long m, int n_samples,
                                        std::uint64_t seed, double min_pass_rate) {
  CheckReport r;
  r.name = "bilipschitz-empirical";
  r.params = {{"n", n}, {"theta", theta}, {"m", m}, {"samples", n_samples}, {"seed", seed},
              {"min_pass_rate", min_pass_rate}};
  const Eigen::MatrixXd X = sample_bg(n, m, Theta::unchecked(theta), child_seed(seed, 1));
  const double zeta0 = default_zeta(n);
  double worst = kInf;
  for (const auto& q : good_set_sample(n, zeta0, n_samples, seed)) {
    const BiLipschitzGaps g = bi_lipschitz_check(q, X, theta);
    double slack = g.upper_gap;
    if (g.sharpness_applicable) slack = std::min(slack, g.lower_gap);
    worst = std::min(worst, slack);
    ++r.samples;
    if (slack >= -1e-12) ++r.passes;
  }
  r.worst_slack = worst;
  finalize(r);
  r.pass = r.pass_rate >= min_pass_rate;
  return r;
}

CheckReport check_region_stability(int n, double theta, long m, int runs, long iters,
                                   std::uint64_t seed) {
  CheckReport r;
  r.name = "region-stability";
  r.params = {{"n", n}, {"theta", theta}, {"m", m}, {"runs", runs}, {"iters", iters},
              {"seed", seed}};
  const double zeta0 = default_zeta(n);
  const Eigen::MatrixXd X = sample_bg(n, m, Theta::unchecked(theta), child_seed(seed, 1));
  ObjectiveEvaluator evaluator(X);
  const StepSchedule sched = theory_schedule(n, 0.375);
  Philox gen(seed, /*stream=*/31);
  int left = 0;
  for (int run = 0; run < runs; ++run) {
    Eigen::VectorXd q = sample_good_set(n, zeta0, gen);
    bool escaped = false;
    Eigen::VectorXd ambient(n);
    for (long k = 0; k < iters && !escaped; ++k) {
      double f = 0.0;
      evaluator.eval(q, f, ambient);
      const Eigen::VectorXd v = ambient - q * q.dot(ambient);
      q = (q - sched.eta(k) * v).normalized();
      escaped = !good_set_membership(q, zeta0).has_value();
    }
    if (escaped) ++left;
    ++r.samples;
    if (!escaped) ++r.passes;
  }
  const double frac = static_cast<double>(left) / std::max(1, runs);
  r.worst_slack = 0.05 - frac;
  r.pass = frac <= 0.05;
  r.details = {{"escape_fraction", frac}};
  finalize(r);
  return r;
}

CheckReport check_subgradient_norm_bound(int n, double theta, long m, int n_points,
                                         std::uint64_t seed) {
  CheckReport r;
  r.name = "subgradient-norm-bound";
  r.params = {{"n", n}, {"theta", theta}, {"m", m}, {"points", n_points}, {"seed", seed}};
  const Eigen::MatrixXd X = sample_bg(n, m, Theta::unchecked(theta), child_seed(seed, 1));
  Philox gen(seed, /*stream=*/37);
  double sup_norm = 0.0;
  long over = 0;
  for (int t = 0; t < n_points; ++t) {
    const SubdifferentialSet set = subgradient(gen.unit_sphere(n), X);
    double upper = set.base.norm();
    for (const auto& g : set.generators) upper += g.norm();
    sup_norm = std::max(sup_norm, upper);
    if (upper > 2.0) ++over;
    ++r.samples;
    ++r.passes;  // logged, never asserted
  }
  r.worst_slack = 2.0 - sup_norm;
  r.pass = true;
  r.details = {{"sup_norm", sup_norm}, {"count_over_2", over}};
  finalize(r);
  return r;
}

}  // namespace odl
