#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "voi/errors.hpp"
#include "voi/evppi.hpp"
#include "voi/rng.hpp"
#include "voi/stats.hpp"

using namespace voi;

namespace {

// Joint matrix for Y = X1 + X2 with X1 ~ N(0,1), X2 ~ N(0,4).
SampleMatrix two_normal_matrix(std::size_t n, std::uint64_t seed) {
    Rng rng(seed, 0);
    SampleMatrix m;
    m.rows = n;
    m.param_names = {"x1", "x2"};
    m.params.assign(2, std::vector<double>(n));
    m.output_names = {"y"};
    m.outputs.assign(1, std::vector<double>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const double x1 = rng.normal();
        const double x2 = rng.normal(0.0, 2.0);
        m.params[0][r] = x1;
        m.params[1][r] = x2;
        m.outputs[0][r] = x1 + x2;
    }
    return m;
}

} // namespace

TEST_SUITE("evppi") {

TEST_CASE("linear gaussian benchmark: analytic variance split") {
    const SampleMatrix m = two_normal_matrix(10'000, 42);
    const EvppiEstimate e1 = evppi_estimation(m, {"x1"}, {{"y", 1.0}});
    const EvppiEstimate e2 = evppi_estimation(m, {"x2"}, {{"y", 1.0}});
    // E var(Y | X1) = var(X2) = 4, E var(Y | X2) = var(X1) = 1.
    CHECK(e1.evppi == doctest::Approx(1.0).epsilon(0.10));
    CHECK(e2.evppi == doctest::Approx(4.0).epsilon(0.10));
    CHECK(e1.bootstrap_se > 0.0);
}

TEST_CASE("regression estimate agrees with the nested Monte Carlo oracle") {
    const SampleMatrix m = two_normal_matrix(10'000, 7);
    const EvppiEstimate e = evppi_estimation(m, {"x1"}, {{"y", 1.0}});
    Rng rng(99, 0);
    const auto nested = oracles::nested_evppi_estimation(
        [](Rng& r) { return r.normal(); }, [](Rng& r) { return r.normal(0.0, 2.0); },
        [](double t, double x) { return t + x; }, 1000, 1000, rng);
    const double combined = std::hypot(nested.se, e.bootstrap_se);
    CHECK(std::abs(e.evppi - nested.evppi) < 3.0 * combined);
}

TEST_CASE("sole driver captures nearly all variance") {
    Rng rng(3, 0);
    const std::size_t n = 10'000;
    SampleMatrix m;
    m.rows = n;
    m.param_names = {"x1"};
    m.params.assign(1, std::vector<double>(n));
    m.output_names = {"y"};
    m.outputs.assign(1, std::vector<double>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const double x = rng.normal();
        m.params[0][r] = x;
        m.outputs[0][r] = x * x;
    }
    const EvppiEstimate e = evppi_estimation(m, {"x1"}, {{"y", 1.0}});
    CHECK(e.evppi >= 0.95 * e.var_y);
}

TEST_CASE("independent dummy parameter explains nothing") {
    SampleMatrix m = two_normal_matrix(10'000, 11);
    Rng rng(1000, 0);
    m.param_names.push_back("dummy");
    m.params.emplace_back(m.rows);
    for (auto& v : m.params.back()) v = rng.uniform();
    const EvppiEstimate e = evppi_estimation(m, {"dummy"}, {{"y", 1.0}});
    CHECK(e.evppi <= 0.02 * e.var_y);
    CHECK(e.evppi >= 0.0);
}

TEST_CASE("representations are mutually consistent by construction") {
    const SampleMatrix m = two_normal_matrix(5'000, 21);
    for (const char* target : {"x1", "x2"}) {
        const EvppiEstimate e = evppi_estimation(m, {target}, {{"y", 1.0}});
        const double sd_y = std::sqrt(e.var_y);
        CHECK(e.sd_reduction ==
              doctest::Approx(sd_y * (1.0 - std::sqrt(1.0 - e.pct_explained / 100.0)))
                  .epsilon(1e-12));
        CHECK(e.evppi >= 0.0);
        CHECK(e.evppi <= e.var_y);
    }
}

TEST_CASE("scale equivariance: c^2 on the variance scale, pct unchanged") {
    SampleMatrix m = two_normal_matrix(5'000, 33);
    const EvppiEstimate base = evppi_estimation(m, {"x1"}, {{"y", 1.0}});
    const double c = 7.0;
    for (auto& v : m.outputs[0]) v *= c;
    const EvppiEstimate scaled = evppi_estimation(m, {"x1"}, {{"y", 1.0}});
    CHECK(scaled.evppi == doctest::Approx(c * c * base.evppi).epsilon(0.02));
    CHECK(scaled.pct_explained == doctest::Approx(base.pct_explained).epsilon(0.02));
}

TEST_CASE("monotone grouping: the pair explains at least each single") {
    Rng rng(8, 0);
    const std::size_t n = 8'000;
    SampleMatrix m;
    m.rows = n;
    m.param_names = {"x1", "x2", "x3"};
    m.params.assign(3, std::vector<double>(n));
    m.output_names = {"y"};
    m.outputs.assign(1, std::vector<double>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const double x1 = rng.uniform(), x2 = rng.uniform(), x3 = rng.normal();
        m.params[0][r] = x1;
        m.params[1][r] = x2;
        m.params[2][r] = x3;
        m.outputs[0][r] = std::sin(3.0 * x1) * x2 + 0.5 * x3;
    }
    const EvppiEstimate single1 = evppi_estimation(m, {"x1"}, {{"y", 1.0}});
    const EvppiEstimate single2 = evppi_estimation(m, {"x2"}, {{"y", 1.0}});
    const EvppiEstimate pair = evppi_estimation(m, {"x1", "x2"}, {{"y", 1.0}});
    const double guard = 3.0 * std::max({single1.bootstrap_se, single2.bootstrap_se,
                                         pair.bootstrap_se});
    CHECK(pair.evppi >= std::max(single1.evppi, single2.evppi) - guard);
}

TEST_CASE("decision form") {
    Rng rng(55, 0);
    const std::size_t n = 10'000;
    SampleMatrix m;
    m.rows = n;
    m.param_names = {"x", "noise"};
    m.params.assign(2, std::vector<double>(n));
    m.output_names = {"y"};
    m.outputs.assign(1, std::vector<double>(n, 0.0));
    for (std::size_t r = 0; r < n; ++r) {
        m.params[0][r] = rng.normal();
        m.params[1][r] = rng.uniform();
    }
    DecisionProblem problem;
    problem.decision_names = {"d1", "d2"};
    problem.losses.assign(2, std::vector<double>(n));
    for (std::size_t r = 0; r < n; ++r) {
        problem.losses[0][r] = m.params[0][r];
        problem.losses[1][r] = -m.params[0][r];
    }

    SUBCASE("two-decision analytic value E|X| = 0.798") {
        const EvppiEstimate e = evppi_decision(problem, m, {"x"});
        CHECK(e.evppi == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(0.10));
        CHECK(e.decision_mode);

        Rng orng(77, 0);
        const auto nested = oracles::nested_evppi_decision(
            [](Rng& r) { return r.normal(); }, [](Rng&) { return 0.0; },
            [](int d, double t, double) { return d == 0 ? t : -t; }, 2, 1000, 1000, orng);
        const double combined = std::hypot(nested.se, e.bootstrap_se);
        CHECK(std::abs(e.evppi - nested.evppi) < 3.0 * combined);
    }
    SUBCASE("identical losses make the decision irrelevant") {
        problem.losses[1] = problem.losses[0];
        const EvppiEstimate e = evppi_decision(problem, m, {"x"});
        CHECK(e.evppi == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("a parameter independent of the losses is worthless") {
        const EvppiEstimate e = evppi_decision(problem, m, {"noise"});
        CHECK(e.evppi < 0.05);
    }
    SUBCASE("fewer than two decisions is an error") {
        DecisionProblem bad;
        bad.decision_names = {"only"};
        bad.losses = {problem.losses[0]};
        CHECK_THROWS_AS(evppi_decision(bad, m, {"x"}), std::invalid_argument);
    }
}

TEST_CASE("evppi_all ranks and groups") {
    Rng rng(66, 0);
    const std::size_t n = 5'000;
    SampleMatrix m;
    m.rows = n;
    m.param_names = {"big", "small", "fixed"};
    m.params.assign(3, std::vector<double>(n));
    m.output_names = {"y"};
    m.outputs.assign(1, std::vector<double>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const double big = rng.normal(0.0, 3.0), small = rng.normal(0.0, 0.3);
        m.params[0][r] = big;
        m.params[1][r] = small;
        m.params[2][r] = 1.0;
        m.outputs[0][r] = big + small;
    }
    const std::vector<ParameterGroup> groups = {
        {"big", {"big"}}, {"small", {"small"}}, {"fixed", {"fixed"}}};
    const auto estimates = evppi_all(m, groups, {{"y", 1.0}});
    REQUIRE(estimates.size() == 3);
    CHECK(estimates[0].target == "big");
    CHECK(estimates[0].pct_explained > 85.0);
    CHECK(estimates[1].target == "small");
    CHECK(estimates[2].target == "fixed");
    CHECK(estimates[2].evppi == 0.0);
    CHECK(estimates[2].zero_variance_target);
}

TEST_CASE("evppi_all: a sole driver among constants scores ~100%") {
    Rng rng(81, 0);
    const std::size_t n = 5'000;
    SampleMatrix m;
    m.rows = n;
    m.param_names = {"driver", "c1", "c2"};
    m.params.assign(3, std::vector<double>(n));
    m.output_names = {"y"};
    m.outputs.assign(1, std::vector<double>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const double x = rng.uniform();
        m.params[0][r] = x;
        m.params[1][r] = 2.0;
        m.params[2][r] = 3.0;
        m.outputs[0][r] = std::exp(x);
    }
    const auto estimates = evppi_all(
        m, {{"driver", {"driver"}}, {"c1", {"c1"}}, {"c2", {"c2"}}}, {{"y", 1.0}});
    CHECK(estimates[0].target == "driver");
    CHECK(estimates[0].pct_explained > 99.0);
    CHECK(estimates[1].evppi == 0.0);
    CHECK(estimates[2].evppi == 0.0);
}

TEST_CASE("default grouping folds the simplex columns into one group") {
    const std::vector<std::string> names = {"alpha[bus]", "alpha[car]", "alpha[goods]",
                                            "alpha[motorbike]", "eta", "zeta"};
    const auto groups = default_groups(names);
    REQUIRE(groups.size() == 3);
    CHECK(groups[0].name == "eta");
    CHECK(groups[1].name == "zeta");
    CHECK(groups[2].name == "alpha");
    CHECK(groups[2].columns ==
          std::vector<std::string>{"alpha[bus]", "alpha[car]", "alpha[motorbike]"});
}

TEST_CASE("weighted multi-output EVPPI sums per-output contributions") {
    SampleMatrix m = two_normal_matrix(5'000, 91);
    m.output_names.push_back("y2");
    m.outputs.push_back(m.params[0]); // y2 = x1 exactly
    const EvppiEstimate combined =
        evppi_estimation(m, {"x1"}, {{"y", 1.0}, {"y2", 2.0}});
    const EvppiEstimate only_y = evppi_estimation(m, {"x1"}, {{"y", 1.0}});
    const EvppiEstimate only_y2 = evppi_estimation(m, {"x1"}, {{"y2", 1.0}});
    CHECK(combined.evppi ==
          doctest::Approx(only_y.evppi + 2.0 * only_y2.evppi).epsilon(0.01));
    CHECK(combined.var_y == doctest::Approx(only_y.var_y + 2.0 * only_y2.var_y).epsilon(1e-12));
}

} // TEST_SUITE
