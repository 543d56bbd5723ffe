#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "pinmix/clocks.hpp"
#include "pinmix/rng.hpp"

using namespace pinmix;

TEST_CASE("philox known answers") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::apply(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::apply(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::apply(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("uniform and exponential moments") {
  RngStream r(7, 0);
  const int n = 200000;
  double su = 0, se = 0, se2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double e = r.exponential();
    se += e;
    se2 += e * e;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(se / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(se2 / n == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("uniform_index is in range and unbiased") {
  RngStream r(11, 0);
  int counts[6] = {};
  for (int i = 0; i < 60000; ++i) ++counts[r.uniform_index(6)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 400);
}

TEST_CASE("site lattice matches Theta for the pinning model") {
  const int L = 10;
  const auto lat = SiteLattice::pinning(L);
  int count = 0;
  for (int x = 0; x <= L; ++x) {
    for (int z = -2; z <= L; ++z) {
      const bool in_theta = x >= 2 && x <= L - 2 && z >= 1 && z <= L / 2 - 1 - std::abs(x - L / 2) && (x + z) % 2 == 1;
      CHECK(lat.contains(x, z) == in_theta);
      if (in_theta) {
        ++count;
        for (auto d : {Direction::up, Direction::down}) {
          const auto s = lat.site(lat.id(x, z, d));
          CHECK(s == ClockSite{x, z, d});
          CHECK(lat.id(x, z, d) < lat.id_space());
        }
      }
    }
  }
  CHECK(lat.all_sites().size() == static_cast<std::size_t>(2 * count));
}

TEST_CASE("site ids follow (x, z, dir) order") {
  const auto lat = SiteLattice::lifted(12, 4);
  const auto sites = lat.all_sites();
  for (std::size_t i = 1; i < sites.size(); ++i) {
    CHECK(lat.id(sites[i - 1].x, sites[i - 1].z, sites[i - 1].dir) < lat.id(sites[i].x, sites[i].z, sites[i].dir));
  }
}

TEST_CASE("clock streams: rate one, pure, first_after consistent") {
  const ClockRealization clocks(99);
  const ClockSite s{3, 2, Direction::up};
  std::vector<double> times;
  clocks.for_each_ring(s, 20000.0, [&](const ClockRealization::Cursor& c) { times.push_back(c.time); });
  CHECK(static_cast<double>(times.size()) == doctest::Approx(20000.0).epsilon(0.03));
  for (std::size_t i = 1; i < times.size(); ++i) REQUIRE(times[i] > times[i - 1]);
  // gap mean and variance
  double m = 0, v = 0;
  for (std::size_t i = 1; i < times.size(); ++i) m += times[i] - times[i - 1];
  m /= static_cast<double>(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) v += std::pow(times[i] - times[i - 1] - m, 2);
  v /= static_cast<double>(times.size() - 2);
  CHECK(m == doctest::Approx(1.0).epsilon(0.03));
  CHECK(v == doctest::Approx(1.0).epsilon(0.06));

  // first_after from arbitrary points lands on the materialised sequence
  const ClockRealization again(99);
  for (double t : {0.0, 0.5, 17.25, 999.999, 12345.6}) {
    const auto c = again.first_after(s, t);
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    REQUIRE(it != times.end());
    CHECK(c.time == *it);
  }
  // distinct sites get distinct streams
  const auto a = clocks.first_after({3, 2, Direction::down}, 0.0);
  const auto b = clocks.first_after(s, 0.0);
  CHECK(a.time != b.time);
}

TEST_CASE("coins are uniform and independent of gaps") {
  const ClockRealization clocks(5);
  double sc = 0, sg = 0, sgc = 0;
  int n = 0;
  clocks.for_each_ring({4, 1, Direction::down}, 50000.0, [&](const ClockRealization::Cursor& c) {
    sc += c.coin;
    ++n;
  });
  CHECK(sc / n == doctest::Approx(0.5).epsilon(0.02));
  for (std::uint32_t j = 0; j < 20000; ++j) {
    const auto d = clocks.draw({4, 1, Direction::down}, 7, j);
    sg += d.gap;
    sgc += d.gap * d.coin;
  }
  CHECK(sgc / 20000 - (sg / 20000) * 0.5 == doctest::Approx(0.0).epsilon(0.02));
}
