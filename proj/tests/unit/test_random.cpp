#include <doctest.h>

#include <cmath>
#include <set>

#include "levylse/errors.hpp"
#include "levylse/random.hpp"

using namespace levylse;

TEST_CASE("philox known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(detail::philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}) ==
        A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(detail::philox4x32_10(A4{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              A2{0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(detail::philox4x32_10(A4{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              A2{0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::set<std::uint64_t> firsts;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a();
    CHECK(va == b());
    if (i == 0) {
      firsts.insert(va);
      firsts.insert(c());
      firsts.insert(d());
    }
  }
  CHECK(firsts.size() == 3);
}

TEST_CASE("uniform variates stay in range and have the right moments") {
  RandomStream rng(1, 0);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double v = rng.uniform_open();
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum2 / n - mean * mean == doctest::Approx(1.0 / 12.0).epsilon(0.01));
}

TEST_CASE("normal, exponential and poisson moments") {
  RandomStream rng(2, 0);
  const int n = 200000;
  double sn = 0, sn2 = 0, se = 0, sp = 0, sp_big = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    se += rng.exponential();
    sp += static_cast<double>(rng.poisson(3.0));
    sp_big += static_cast<double>(rng.poisson(50.0));
  }
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(se / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(sp / n == doctest::Approx(3.0).epsilon(0.01));
  CHECK(sp_big / n == doctest::Approx(50.0).epsilon(0.01));
  CHECK(rng.poisson(0.0) == 0);
  CHECK_THROWS_AS(rng.poisson(-1.0), ValidationError);
}

TEST_CASE("mix_seed separates indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(mix_seed(12345, i));
  CHECK(seen.size() == 1000);
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
}
