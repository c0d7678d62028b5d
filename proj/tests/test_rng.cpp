#include <doctest.h>

#include "clab/rng.hpp"
#include "clab/stats.hpp"

#include <vector>

using namespace clab;

TEST_CASE("streams are reproducible given (key, index)") {
    CounterRng a = CounterRng::stream(42, "walk", 7);
    CounterRng b = CounterRng::stream(42, "walk", 7);
    for (int i = 0; i < 100; ++i)
        CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct stream indices and tags give distinct output") {
    CounterRng a = CounterRng::stream(42, "walk", 0);
    CounterRng b = CounterRng::stream(42, "walk", 1);
    CounterRng c = CounterRng::stream(42, "other", 0);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 64; ++i) {
        std::uint64_t x = a.next_u64();
        same_ab += x == b.next_u64();
        same_ac += x == c.next_u64();
    }
    CHECK(same_ab == 0);
    CHECK(same_ac == 0);
}

TEST_CASE("uniform01 lies in [0,1) and has the right mean") {
    CounterRng rng(1, 0);
    std::vector<double> xs(100000);
    for (auto& x : xs) {
        x = rng.uniform01();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
    }
    auto ms = mean_se(xs);
    CHECK(std::abs(ms.value - 0.5) < 5 * ms.se);
}

TEST_CASE("uniform_below is unbiased") {
    CounterRng rng(3, 5);
    const int n = 6;
    const int draws = 600000;
    std::vector<double> counts(n, 0.0);
    for (int i = 0; i < draws; ++i) {
        std::uint64_t v = rng.uniform_below(n);
        REQUIRE(v < static_cast<std::uint64_t>(n));
        counts[v] += 1;
    }
    double expected = static_cast<double>(draws) / n;
    double stat = 0;
    for (double c : counts)
        stat += (c - expected) * (c - expected) / expected;
    CHECK(chi_square_pvalue(stat, n - 1) > 1e-3);
}
