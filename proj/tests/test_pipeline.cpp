#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "odl/model.hpp"
#include "odl/pipeline.hpp"
#include "odl/recovery.hpp"
#include "odl/rng.hpp"

using namespace odl;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("extract_patches on a single block") {
  Eigen::MatrixXd img(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) img(r, c) = r + 10.0 * c;
  const auto pm = extract_patches(img, 8);
  CHECK(pm.Y.cols() == 1);
  CHECK(pm.Y.rows() == 64);
  // column-major vectorization of the block
  for (int c = 0; c < 8; ++c)
    for (int r = 0; r < 8; ++r) CHECK(pm.Y(c * 8 + r, 0) == img(r, c));
}

TEST_CASE("extract_patches constant image and round trip") {
  Eigen::MatrixXd img = Eigen::MatrixXd::Constant(16, 16, 5.0);
  const auto pm = extract_patches(img, 8);
  CHECK(pm.Y.cols() == 4);
  for (int j = 0; j < 4; ++j) CHECK((pm.Y.col(j).array() == 5.0).all());
  CHECK(reassemble_patches(pm) == img);

  Philox gen(3, 0);
  Eigen::MatrixXd noisy(24, 16);
  for (int r = 0; r < 24; ++r)
    for (int c = 0; c < 16; ++c) noisy(r, c) = gen.next_double();
  CHECK(reassemble_patches(extract_patches(noisy, 8)) == noisy);

  CHECK_THROWS(extract_patches(Eigen::MatrixXd::Zero(100, 100), 8));
}

TEST_CASE("precondition fixed points") {
  const Eigen::MatrixXd Q = sample_orthogonal(8, 5);
  const auto r1 = precondition(Q);  // Y Y^T = I already
  CHECK((r1.Ybar - Q).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r1.rank_retained == 8);

  const Eigen::MatrixXd S = 3.0 * Eigen::MatrixXd::Identity(5, 5);
  const auto r2 = precondition(S);
  CHECK((r2.Ybar - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("precondition flattens the spectrum") {
  const auto X = sample_bg(64, 512, Theta::unchecked(0.3), 17);
  const auto res = precondition(X);
  CHECK(res.rank_retained == 64);
  CHECK(res.singular_values.minCoeff() > 1.0 - 1e-8);
  CHECK(res.singular_values.maxCoeff() < 1.0 + 1e-8);

  // idempotence
  const auto twice = precondition(res.Ybar);
  CHECK((twice.Ybar - res.Ybar).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("precondition drops a dead direction") {
  auto X = sample_bg(6, 100, Theta::unchecked(0.4), 23);
  X.row(3).setZero();
  const auto res = precondition(X);
  CHECK(res.rank_retained == 5);
  int near_one = 0;
  for (int i = 0; i < res.singular_values.size(); ++i)
    if (std::abs(res.singular_values[i] - 1.0) < 1e-8) ++near_one;
  CHECK(near_one == 5);
}

TEST_CASE("sweep config validation and JSON parsing") {
  nlohmann::json j = {{"n_list", {8}},
                      {"theta_list", {0.2}},
                      {"m_list", {640}},
                      {"instances_per_cell", 2},
                      {"restarts", 10},
                      {"max_iters", 500},
                      {"master_seed", 9}};
  auto cfg = SweepConfig::from_json(j);
  CHECK(cfg.n_list == std::vector<int>{8});
  CHECK(cfg.m_explicit);
  cfg.validate();

  nlohmann::json bad = j;
  bad["theta_list"] = nlohmann::json::array();
  CHECK_THROWS(SweepConfig::from_json(bad).validate());

  nlohmann::json powers = {{"n_list", {4, 8}}, {"theta_list", {0.25}}};
  const auto cfg2 = SweepConfig::from_json(powers);
  CHECK_FALSE(cfg2.m_explicit);
  CHECK(cfg2.m_powers.size() == 5);  // the protocol's default exponent grid
}

TEST_CASE("run_sweep emits one row per instance and is deterministic") {
  SweepConfig cfg;
  cfg.n_list = {8};
  cfg.theta_list = {0.2};
  cfg.m_explicit = true;
  cfg.m_list = {640};
  cfg.instances_per_cell = 2;
  cfg.restarts_override = 12;
  cfg.solve.max_iters = 1000;
  cfg.solve.record_every = 1000;
  cfg.tol = 1e-2;
  cfg.master_seed = 77;
  cfg.parallelism = 2;

  const auto a = run_sweep(cfg);
  const auto b = run_sweep(cfg);
  REQUIRE(a.rows.size() == 2);
  REQUIRE(a.cells.size() == 1);
  CHECK(a.cells[0].instances == 2);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].instance_seed == b.rows[i].instance_seed);
    CHECK(a.rows[i].success == b.rows[i].success);
    CHECK(a.rows[i].atoms_found == b.rows[i].atoms_found);
    CHECK(a.rows[i].total_iterations == b.rows[i].total_iterations);
  }

  std::stringstream raw, agg;
  write_sweep_raw_csv(raw, a);
  write_sweep_agg_csv(agg, a);
  std::string line;
  std::getline(raw, line);
  CHECK(line == "n,theta,m,instance_seed,success,atoms_found,iterations,seconds");
  int rows = 0;
  while (std::getline(raw, line)) ++rows;
  CHECK(rows == 2);
  std::getline(agg, line);
  CHECK(line == "n,theta,m,instances,successes,success_rate,mean_runs_to_success,seconds");
}

TEST_CASE("sweep success rate is monotone in m (logged)") {
  SweepConfig cfg;
  cfg.n_list = {8};
  cfg.theta_list = {0.2};
  cfg.m_explicit = true;
  cfg.m_list = {24, 640};
  cfg.instances_per_cell = 2;
  cfg.restarts_override = 40;
  cfg.solve.max_iters = 8000;
  cfg.solve.record_every = 8000;
  cfg.tol = 1e-2;
  cfg.master_seed = 5;
  cfg.parallelism = 2;
  const auto res = run_sweep(cfg);
  MESSAGE("success at m=24: " << res.cells[0].success_rate
                              << ", m=640: " << res.cells[1].success_rate);
  WARN(res.cells[0].success_rate <= res.cells[1].success_rate);
}

TEST_CASE("learn_image_dictionary recovers a planted identity basis") {
  const int n = 16;
  const auto X = sample_bg(n, 2000, Theta::unchecked(0.15), 31);
  SolveConfig solve_cfg;
  solve_cfg.max_iters = 2500;
  solve_cfg.record_every = 2500;
  const Eigen::MatrixXd A = learn_image_dictionary(X, n, 120, solve_cfg, 41, 2);
  CHECK(A.cols() == n);
  for (int j = 0; j < n; ++j) CHECK(std::abs(A.col(j).norm() - 1.0) < 1e-10);

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  int matched = 0;
  std::uint32_t seen = 0;
  for (int j = 0; j < n; ++j) {
    const auto m = match_atom(A.col(j), I, 1e-2);
    if (m.matched && !(seen & (1u << m.atom_index))) {
      seen |= 1u << m.atom_index;
      ++matched;
    }
  }
  CHECK(matched >= 14);

  CHECK_THROWS(learn_image_dictionary(X, n, 0, solve_cfg, 1, 1));
  CHECK_THROWS(learn_image_dictionary(X, n, 8, solve_cfg, 1, 1));  // fewer runs than atoms
}

TEST_CASE("sparsity_report ratio extremes and bounds") {
  const int n = 64;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Y(n, 3);
  Y.col(0) = Eigen::VectorXd::Zero(n);
  Y(2, 0) = 0.7;                                  // one-sparse: ratio 1
  Y.col(1) = Eigen::VectorXd::Constant(n, -0.3);  // flat: ratio sqrt(n) = 8
  Philox gen(51, 0);
  Y.col(2) = gen.gaussian_vector(n);
  const auto rep = sparsity_report(A, Y, 32);
  CHECK(rep.ratios[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.ratios[1] == doctest::Approx(8.0).epsilon(1e-12));
  for (int j = 0; j < 3; ++j) {
    CHECK(rep.ratios[j] >= 1.0 - 1e-12);
    CHECK(rep.ratios[j] <= 8.0 + 1e-12);
  }
  CHECK(rep.bin_counts.sum() == Y.size());

  std::stringstream hist;
  write_coeff_hist_csv(hist, rep);
  std::string line;
  std::getline(hist, line);
  CHECK(line == "bin_lo,bin_hi,count");
  int rows = 0;
  while (std::getline(hist, line)) ++rows;
  CHECK(rows == 32);

  Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(4, 4);
  CHECK_THROWS(sparsity_report(singular, Eigen::MatrixXd::Zero(4, 2)));
}

TEST_CASE("pgm round trip is exact on quantized values") {
  Eigen::MatrixXd img(16, 24);
  Philox gen(61, 0);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 24; ++c)
      img(r, c) = static_cast<double>(gen.next_u32() % 256u) / 255.0;
  const std::string path = temp_path("odl_test_roundtrip.pgm");
  write_pgm(path, img);
  const Eigen::MatrixXd back = read_pgm(path);
  CHECK(back == img);
  std::remove(path.c_str());

  CHECK_THROWS(read_pgm(temp_path("odl_missing_file.pgm")));
}

TEST_CASE("pgm rejects non-P5 input") {
  const std::string path = temp_path("odl_test_p2.pgm");
  {
    std::ofstream f(path);
    f << "P2\n2 2\n255\n0 0 0 0\n";
  }
  CHECK_THROWS(read_pgm(path));
  std::remove(path.c_str());
}

TEST_CASE("atom montage writes a parseable image") {
  Philox gen(71, 0);
  Eigen::MatrixXd atoms(64, 64);
  for (int j = 0; j < 64; ++j) atoms.col(j) = gen.unit_sphere(64);
  const std::string path = temp_path("odl_test_montage.pgm");
  write_atom_montage_pgm(path, atoms, 8);
  const Eigen::MatrixXd img = read_pgm(path);
  CHECK(img.rows() == 71);  // 8 tiles of 8 plus 7 separators
  CHECK(img.cols() == 71);
  std::remove(path.c_str());
}
