#include <catch2/catch_amalgamated.hpp>

#include "evtail/numeric.hpp"
#include "evtail/prng.hpp"

using evtail::CounterRng;

TEST_CASE("pinned output vectors") {
  // seed 0, stream 0 reduces to the classic SplitMix64 sequence
  CounterRng a(0, 0);
  CHECK(a.next_u64() == 0xE220A8397B1DCDAFULL);
  CHECK(a.next_u64() == 0x6E789E6AA1B965F4ULL);
  CHECK(a.next_u64() == 0x06C45D188009454FULL);
  CHECK(a.next_u64() == 0xF88BB8A8724C81ECULL);

  CounterRng b(42, 0);
  CHECK(b.next_u64() == 0x989B3F130A063869ULL);
  CHECK(b.next_u64() == 0x290DB4BF2570DED7ULL);

  CounterRng c(42, 7);
  CHECK(c.next_u64() == 0xC92D0084CAA82C0DULL);
  CHECK(c.next_u64() == 0x8F7F9E95EE1C75E2ULL);

  CounterRng u(5, 1);
  CHECK(u.next_uniform() == Catch::Approx(0.36992344231152113).epsilon(1e-15));
  CHECK(u.next_uniform() == Catch::Approx(0.66318287627650041).epsilon(1e-15));
}

TEST_CASE("determinism and stream independence") {
  CounterRng a(123, 4), b(123, 4);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  CounterRng s0(123, 0), s1(123, 1);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += s0.next_u64() == s1.next_u64();
  CHECK(same == 0);
}

TEST_CASE("uniform draws stay inside the open interval") {
  CounterRng rng(9, 0);
  for (int i = 0; i < 100000; ++i) {
    double u = rng.next_uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normal and exponential moments") {
  CounterRng rng(77, 0);
  const int n = 50000;
  std::vector<double> z(n), e(n);
  for (int i = 0; i < n; ++i) {
    z[i] = rng.next_normal();
    e[i] = rng.next_exponential();
  }
  CHECK(evtail::mean_of(z) == Catch::Approx(0.0).margin(0.02));
  CHECK(evtail::stdev_of(z) == Catch::Approx(1.0).margin(0.02));
  CHECK(evtail::mean_of(e) == Catch::Approx(1.0).margin(0.02));
}
