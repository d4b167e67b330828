#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "odl/model.hpp"
#include "odl/recovery.hpp"
#include "odl/rng.hpp"

using namespace odl;

TEST_CASE("match_atom identifies columns and signs") {
  const Eigen::MatrixXd A = sample_orthogonal(8, 4);
  const auto m3 = match_atom(A.col(2), A);
  CHECK(m3.atom_index == 2);
  CHECK(m3.sign == +1);
  CHECK(m3.error == 0.0);
  CHECK(m3.matched);

  const auto mneg = match_atom(Eigen::VectorXd(-A.col(0)), A);
  CHECK(mneg.atom_index == 0);
  CHECK(mneg.sign == -1);
  CHECK(mneg.error == 0.0);
  CHECK(mneg.matched);

  Eigen::VectorXd q = (A.col(1) + 5e-4 * A.col(6)).normalized();
  const auto mnear = match_atom(q, A, 1e-3);
  CHECK(mnear.atom_index == 1);
  CHECK(mnear.sign == +1);
  CHECK(mnear.error == doctest::Approx(5e-4).epsilon(0.1));
  CHECK(mnear.matched);
  CHECK_FALSE(match_atom(q, A, 1e-5).matched);
}

TEST_CASE("match_atom error is zero on every signed atom") {
  const Eigen::MatrixXd A = sample_orthogonal(6, 9);
  for (int i = 0; i < 6; ++i) {
    CHECK(match_atom(A.col(i), A).error == 0.0);
    CHECK(match_atom(Eigen::VectorXd(-A.col(i)), A).error == 0.0);
  }
}

TEST_CASE("restart_count arithmetic") {
  CHECK(restart_count(30) == 510);
  CHECK(restart_count(2) == 7);
  CHECK(restart_count(20) == 300);
  CHECK(restart_count(64) == 1331);
  CHECK_THROWS(restart_count(1));
}

TEST_CASE("recover_dictionary with zero runs") {
  const auto inst = make_instance(6, 100, Theta::checked(0.2, 6), DictKind::identity, 5);
  SolveConfig cfg;
  cfg.max_iters = 10;
  const auto rep = recover_dictionary(inst, cfg, 0, 1e-3, 1, 1);
  CHECK_FALSE(rep.success);
  CHECK(rep.per_run.empty());
  CHECK(rep.distinct_atoms.empty());
  CHECK(rep.runs_to_success == -1);
}

TEST_CASE("recover_dictionary is deterministic across thread counts") {
  const auto inst = make_instance(8, 640, Theta::checked(0.2, 8), DictKind::identity, 17);
  SolveConfig cfg;
  cfg.max_iters = 800;
  cfg.record_every = 800;
  const auto a = recover_dictionary(inst, cfg, 24, 1e-2, 11, 1);
  const auto b = recover_dictionary(inst, cfg, 24, 1e-2, 11, 2);
  const auto c = recover_dictionary(inst, cfg, 24, 1e-2, 11, 2);
  CHECK(report_to_json(a).dump() == report_to_json(b).dump());
  CHECK(report_to_json(b).dump() == report_to_json(c).dump());
  // distinct-atom set is invariant under run execution order by construction
  CHECK(a.distinct_atoms == b.distinct_atoms);
}

TEST_CASE("recover_dictionary finds a small dictionary end to end") {
  // m = 10 n^2 cell; the per-run error floor sits well under the tolerance
  const auto inst = make_instance(10, 1000, Theta::checked(0.1, 10), DictKind::identity, 23);
  SolveConfig cfg;
  cfg.max_iters = 15000;
  cfg.record_every = 15000;
  const auto rep = recover_dictionary(inst, cfg, restart_count(10), 1e-3, 29, 2);
  CHECK(rep.success);
  CHECK(static_cast<int>(rep.distinct_atoms.size()) == 10);
  CHECK(rep.runs_to_success > 0);
  CHECK(rep.runs_to_success <= rep.runs);
}

TEST_CASE("dedup_atoms collapses sign copies") {
  Eigen::VectorXd v(3), w(3);
  v << 0.6, 0.8, 0.0;
  w << 0.0, 0.0, 1.0;
  std::vector<Eigen::VectorXd> in = {v, -v, w};
  const auto out = dedup_atoms(in, 2);
  REQUIRE(out.size() == 2);
  CHECK((out[0] - v).norm() < 1e-15);  // canonical sign keeps the earlier copy
  CHECK((out[1] - w).norm() < 1e-15);
}

TEST_CASE("dedup_atoms keeps an orthonormal family") {
  const Eigen::MatrixXd A = sample_orthogonal(5, 31);
  std::vector<Eigen::VectorXd> in;
  for (int i = 0; i < 5; ++i) in.push_back(A.col(i));
  const auto out = dedup_atoms(in, 5);
  REQUIRE(out.size() == 5);
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd canon = A.col(i);
    for (int k = 0; k < 5; ++k) {
      if (std::abs(canon[k]) > 1e-9) {
        if (canon[k] < 0) canon = -canon;
        break;
      }
    }
    CHECK((out[i] - canon).norm() < 1e-15);
  }
}

TEST_CASE("dedup_atoms removes one member of the correlated pair") {
  Eigen::VectorXd a(3), b(3), c(3);
  a << 1.0, 0.0, 0.0;
  b = (a + 0.15 * Eigen::Vector3d(0, 1, 0)).normalized();  // |corr| ~ 0.989 with a
  c << 0.0, 0.0, 1.0;
  const auto out = dedup_atoms({a, b, c}, 2);
  REQUIRE(out.size() == 2);
  // c survives, and exactly one of the correlated pair
  CHECK((out[1] - c).norm() < 1e-15);
  CHECK((out[0] - a).norm() < 1e-15);  // tie removes the later original index
}

TEST_CASE("dedup_atoms rejects impossible targets") {
  Eigen::VectorXd v(2);
  v << 1, 0;
  CHECK_THROWS(dedup_atoms({v}, 2));
}

TEST_CASE("dedup threshold mode removes all high correlations") {
  Eigen::VectorXd a(3), b(3), c(3);
  a << 1.0, 0.0, 0.0;
  b = (a + 0.1 * Eigen::Vector3d(0, 1, 0)).normalized();
  c << 0.0, 1.0, 0.0;
  const auto out = dedup_atoms_threshold({a, b, c}, 0.8);
  REQUIRE(out.size() == 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = i + 1; j < out.size(); ++j)
      CHECK(std::abs(out[i].dot(out[j])) / (out[i].norm() * out[j].norm()) <= 0.8);
}

TEST_CASE("coupon collector bound holds in pure simulation") {
  // one trial = S uniform atom draws; miss prob bounded by n(1-1/n)^S
  for (const auto& [n, S] : std::vector<std::pair<int, int>>{{8, 30}, {20, 100}, {12, 60}}) {
    const int trials = 10000;
    Philox gen(1000 + n, 0);
    int missed = 0;
    for (int t = 0; t < trials; ++t) {
      std::uint32_t seen = 0;
      for (int s = 0; s < S; ++s) seen |= 1u << (gen.next_u32() % n);
      if (seen != (1u << n) - 1u) ++missed;
    }
    const double p_hat = static_cast<double>(missed) / trials;
    const double bound = n * std::pow(1.0 - 1.0 / n, S);
    const double sigma = std::sqrt(std::max(p_hat * (1 - p_hat), 1e-9) / trials);
    CHECK(p_hat <= bound + 3 * sigma);
    // the proof's follow-up inequality n(1-1/n)^S <= exp(-S/n + log n)
    CHECK(bound <= std::exp(-static_cast<double>(S) / n + std::log(static_cast<double>(n))) +
                       1e-12);
  }
}

TEST_CASE("report JSON excludes timing by default") {
  const auto inst = make_instance(5, 100, Theta::checked(0.3, 5), DictKind::identity, 3);
  SolveConfig cfg;
  cfg.max_iters = 50;
  const auto rep = recover_dictionary(inst, cfg, 3, 1e-3, 7, 1);
  const auto j = report_to_json(rep);
  CHECK_FALSE(j.contains("wall_time_seconds"));
  CHECK(report_to_json(rep, true).contains("wall_time_seconds"));
  CHECK(j.at("runs") == 3);
  CHECK(j.at("per_run").size() == 3);
}

TEST_CASE("atoms csv emits one row per vector") {
  Eigen::MatrixXd A = sample_orthogonal(4, 8);
  std::stringstream out;
  atoms_to_csv(out, A);
  int rows = 0, commas = 0;
  std::string line;
  while (std::getline(out, line)) {
    ++rows;
    commas = static_cast<int>(std::count(line.begin(), line.end(), ','));
  }
  CHECK(rows == 4);
  CHECK(commas == 3);
}
