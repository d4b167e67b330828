#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "odl/rng.hpp"

using odl::Philox;

TEST_CASE("philox4x32-10 known answers") {
  // Cross-checked against the PyTorch philox_engine (ATen) implementation.
  auto out = Philox::block({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);

  out = Philox::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                      {0xffffffffu, 0xffffffffu});
  CHECK(out[0] == 0x408f276du);
  CHECK(out[1] == 0x41c83b0eu);
  CHECK(out[2] == 0xa20bc7c6u);
  CHECK(out[3] == 0x6d5451fdu);

  out = Philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                      {0xa4093822u, 0x299f31d0u});
  CHECK(out[0] == 0xd16cfe09u);
  CHECK(out[1] == 0x94fdccebu);
  CHECK(out[2] == 0x5001e420u);
  CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("streams are deterministic and distinct") {
  Philox a(42, 0), b(42, 0), c(42, 1);
  bool same = true, differ = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
    same = same && (x == y);
    differ = differ || (x != z);
  }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("uniform doubles live in [0,1)") {
  Philox gen(7, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int N = 100000;
  for (int i = 0; i < N; ++i) {
    const double u = gen.next_double();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(std::abs(sum / N - 0.5) < 0.01);
}

TEST_CASE("gaussian moments") {
  Philox gen(11, 0);
  const int N = 200000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double z = gen.next_gaussian();
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  CHECK(std::abs(s1 / N) < 0.02);
  CHECK(std::abs(s2 / N - 1.0) < 0.02);
  CHECK(std::abs(s4 / N - 3.0) < 0.1);
}

TEST_CASE("unit sphere points are unit and symmetric") {
  Philox gen(3, 0);
  double mean_first = 0.0;
  const int N = 20000;
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd q = gen.unit_sphere(5);
    CHECK(std::abs(q.norm() - 1.0) < 1e-12);
    mean_first += q[0];
  }
  CHECK(std::abs(mean_first / N) < 0.02);
}

TEST_CASE("child seeds do not collide on small indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 10000; ++r) seen.insert(odl::child_seed(123, r));
  CHECK(seen.size() == 10000);
  CHECK(odl::child_seed(123, 0) != odl::child_seed(124, 0));
}
