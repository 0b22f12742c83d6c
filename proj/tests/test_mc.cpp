#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "test_support.hpp"
#include "voi/errors.hpp"
#include "voi/mc.hpp"
#include "voi/stats.hpp"

using namespace voi;
using test_support::all_constant_priors;
using test_support::default_priors;
using test_support::gentle_curves;
using test_support::small_tables;

TEST_SUITE("mc") {

TEST_CASE("all-constant priors give identical rows and zero variance") {
    McOptions opts;
    opts.samples = 1000;
    opts.seed = 1;
    const SampleMatrix m = propagate(all_constant_priors(), small_tables(), gentle_curves(), opts);
    REQUIRE(m.rows == 1000);
    for (const auto& col : m.outputs) {
        for (double v : col) CHECK(v == col.front());
    }
    const OutcomeSummary s = summarize(m);
    for (double v : s.variance) CHECK(v == 0.0);
    for (double v : s.mcse) CHECK(v == 0.0);
}

TEST_CASE("scenario tables equal to baseline avert nothing for random zeta") {
    PriorMap priors = all_constant_priors();
    priors.erase("zeta");
    priors.emplace("zeta", Distribution::beta(2, 3));
    McOptions opts;
    opts.samples = 2000;
    const SampleMatrix m =
        propagate(priors, small_tables(/*scenario_equals_baseline=*/true), gentle_curves(), opts);
    for (double v : m.output("deaths_averted[s]")) CHECK(v == 0.0);
}

TEST_CASE("fixed seed reproduces the matrix bit for bit") {
    McOptions opts;
    opts.samples = 5000;
    opts.seed = 77;
    const SampleMatrix a = propagate(default_priors(), small_tables(), gentle_curves(), opts);
    const SampleMatrix b = propagate(default_priors(), small_tables(), gentle_curves(), opts);
    REQUIRE(a.params.size() == b.params.size());
    for (std::size_t c = 0; c < a.params.size(); ++c) CHECK(a.params[c] == b.params[c]);
    for (std::size_t c = 0; c < a.outputs.size(); ++c) CHECK(a.outputs[c] == b.outputs[c]);
}

TEST_CASE("thread count does not change the result") {
    McOptions opts;
    opts.samples = 2000;
    opts.seed = 5;
    opts.threads = 1;
    const SampleMatrix one = propagate(default_priors(), small_tables(), gentle_curves(), opts);
    for (int k : {2, 3, 7}) {
        opts.threads = k;
        const SampleMatrix many =
            propagate(default_priors(), small_tables(), gentle_curves(), opts);
        for (std::size_t c = 0; c < one.params.size(); ++c) CHECK(one.params[c] == many.params[c]);
        for (std::size_t c = 0; c < one.outputs.size(); ++c)
            CHECK(one.outputs[c] == many.outputs[c]);
    }
}

TEST_CASE("column layout: parameters alphabetical, then outputs") {
    McOptions opts;
    opts.samples = 100; // small run; the engine warns but proceeds
    const SampleMatrix m = propagate(default_priors(), small_tables(), gentle_curves(), opts);
    CHECK(std::is_sorted(m.param_names.begin(), m.param_names.end()));
    REQUIRE(m.param_names.size() == 13); // 4 alpha + eta + zeta + 2 lambda + 5 xi
    CHECK(m.param_names.front() == "alpha[bus]");
    CHECK(m.has_output("deaths[baseline]"));
    CHECK(m.has_output("deaths[s]"));
    CHECK(m.has_output("deaths_averted[s]"));
}

TEST_CASE("summarize") {
    SampleMatrix m;
    m.rows = 3;
    m.output_names = {"deaths_averted[s]"};
    m.outputs = {{1.0, 2.0, 3.0}};
    const OutcomeSummary s = summarize(m);
    CHECK(s.mean[0] == doctest::Approx(2.0));
    CHECK(s.variance[0] == doctest::Approx(1.0));
    CHECK(s.sd[0] == doctest::Approx(1.0));
    CHECK(s.mcse[0] == doctest::Approx(1.0 / std::sqrt(3.0)));
}

TEST_CASE("summarize recovers a known variance at n=1e6") {
    Rng rng(9, 0);
    SampleMatrix m;
    m.rows = 1'000'000;
    m.output_names = {"deaths[s]"};
    m.outputs.emplace_back(m.rows);
    for (auto& v : m.outputs[0]) v = rng.normal(0.0, 2.0);
    const OutcomeSummary s = summarize(m);
    CHECK(std::abs(s.variance[0] - 4.0) < 0.03);
}

TEST_CASE("generalized variance") {
    SampleMatrix m;
    m.rows = 4;
    m.output_names = {"deaths[a]", "deaths[b]"};
    m.outputs = {{1, 2, 3, 4}, {1, 2, 3, 4}};
    const double var = variance(m.outputs[0]);
    CHECK(generalized_variance(m, {{"deaths[a]", 1.0}}) == doctest::Approx(var));
    CHECK(generalized_variance(m, {{"deaths[a]", 1.0}, {"deaths[b]", 1.0}}) ==
          doctest::Approx(2 * var));
    CHECK(generalized_variance(m, {{"deaths[a]", 1.0}, {"deaths[b]", 0.0}}) ==
          doctest::Approx(var));
    CHECK_THROWS_AS(generalized_variance(m, {{"nope", 1.0}}), ConfigError);
}

TEST_CASE("joint row shuffle leaves summary statistics invariant") {
    McOptions opts;
    opts.samples = 2000;
    SampleMatrix m = propagate(default_priors(), small_tables(), gentle_curves(), opts);
    const OutcomeSummary before = summarize(m);

    std::vector<std::size_t> perm(m.rows);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(123, 0);
    for (std::size_t i = m.rows; i > 1; --i)
        std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    auto apply = [&](std::vector<double>& col) {
        std::vector<double> shuffled(col.size());
        for (std::size_t i = 0; i < col.size(); ++i) shuffled[i] = col[perm[i]];
        col = std::move(shuffled);
    };
    for (auto& col : m.params) apply(col);
    for (auto& col : m.outputs) apply(col);

    const OutcomeSummary after = summarize(m);
    for (std::size_t i = 0; i < before.names.size(); ++i) {
        CHECK(after.mean[i] == doctest::Approx(before.mean[i]).epsilon(1e-12));
        CHECK(after.variance[i] == doctest::Approx(before.variance[i]).epsilon(1e-12));
    }
}

TEST_CASE("csv round trip preserves every byte-level value") {
    namespace fs = std::filesystem;
    McOptions opts;
    opts.samples = 500;
    const SampleMatrix m = propagate(default_priors(), small_tables(), gentle_curves(), opts);
    const fs::path tmp = fs::temp_directory_path() / "voi_matrix_test.csv";
    m.write_csv(tmp);
    const SampleMatrix back = SampleMatrix::read_csv(tmp);
    REQUIRE(back.rows == m.rows);
    CHECK(back.param_names == m.param_names);
    CHECK(back.output_names == m.output_names);
    for (std::size_t c = 0; c < m.params.size(); ++c) CHECK(back.params[c] == m.params[c]);
    for (std::size_t c = 0; c < m.outputs.size(); ++c) CHECK(back.outputs[c] == m.outputs[c]);
    fs::remove(tmp);
}

TEST_CASE("model failure aborts with the row index") {
    PriorMap priors = all_constant_priors();
    priors.erase("eta");
    // A bias-adjusted constant goes negative often; eta < 0 is out of domain.
    priors.emplace("eta", Distribution::bias_adjusted(Distribution::constant(0.5), 0.0, 10.0));
    McOptions opts;
    opts.samples = 1000;
    CHECK_THROWS_WITH_AS(propagate(priors, small_tables(), gentle_curves(), opts),
                         doctest::Contains("row"), ModelEvalError);
}

TEST_CASE("missing parameter assignment is a config error") {
    PriorMap priors = default_priors();
    priors.erase("zeta");
    McOptions opts;
    CHECK_THROWS_WITH_AS(propagate(priors, small_tables(), gentle_curves(), opts),
                         doctest::Contains("zeta"), ConfigError);
}

} // TEST_SUITE
