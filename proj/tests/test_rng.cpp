#include <doctest.h>

#include <cmath>
#include <vector>

#include "voi/rng.hpp"
#include "voi/stats.hpp"

using voi::Rng;

TEST_SUITE("rng") {

TEST_CASE("same seed and stream give bit-identical sequences") {
    Rng a(1234, 7), b(1234, 7);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(1234, 7), d(1234, 7);
    for (int i = 0; i < 1000; ++i) {
        CHECK(c.uniform() == d.uniform());
        CHECK(c.normal() == d.normal());
        CHECK(c.gamma(2.5) == d.gamma(2.5));
    }
}

TEST_CASE("different streams decorrelate") {
    Rng a(1234, 0), b(1234, 1);
    int same = 0;
    for (int i = 0; i < 1000; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    CHECK(same == 0);
}

TEST_CASE("uniform stays in [0,1) and uniform_pos in (0,1]") {
    Rng rng(99, 0);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform_pos();
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("normal moments at n=1e6") {
    Rng rng(7, 0);
    const std::size_t n = 1'000'000;
    std::vector<double> draws(n);
    for (auto& d : draws) d = rng.normal();
    // 4-standard-error bands around the analytic values.
    CHECK(std::abs(voi::mean(draws)) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(voi::variance(draws) - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("gamma mean matches shape") {
    Rng rng(21, 3);
    for (double shape : {0.5, 1.0, 4.0, 32.0}) {
        const std::size_t n = 200'000;
        std::vector<double> draws(n);
        for (auto& d : draws) d = rng.gamma(shape);
        const double se = std::sqrt(shape / static_cast<double>(n)); // var(gamma) = shape
        CHECK(std::abs(voi::mean(draws) - shape) < 4.0 * se);
    }
}

TEST_CASE("uniform_index is unbiased enough for resampling") {
    Rng rng(5, 11);
    const std::size_t n = 10;
    std::vector<int> counts(n, 0);
    const int draws = 1'000'000;
    for (int i = 0; i < draws; ++i) ++counts[rng.uniform_index(n)];
    const double expect = draws / static_cast<double>(n);
    const double se = std::sqrt(expect * (1.0 - 1.0 / n));
    for (int c : counts) CHECK(std::abs(c - expect) < 4.0 * se);
}

} // TEST_SUITE
