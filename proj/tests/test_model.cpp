#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "voi/distribution.hpp"
#include "voi/errors.hpp"
#include "voi/model.hpp"
#include "voi/rng.hpp"

using namespace voi;

namespace {

// Small in-memory tables: travel filled by a callback t(a, g, m, s).
template <typename TravelFn>
ConstantTables make_tables(std::size_t na, std::size_t ng, std::vector<std::string> scenarios,
                           TravelFn travel_fn, std::vector<double> population,
                           std::vector<double> burden) {
    std::vector<std::string> ages, genders;
    for (std::size_t a = 0; a < na; ++a) ages.push_back("a" + std::to_string(a));
    for (std::size_t g = 0; g < ng; ++g) genders.push_back(g == 0 ? "female" : "male");
    const std::size_t ns = scenarios.size();
    std::vector<double> travel(na * ng * kNumModes * ns, 0.0);
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t g = 0; g < ng; ++g)
            for (int m = 0; m < kNumModes; ++m)
                for (std::size_t s = 0; s < ns; ++s)
                    travel[((a * ng + g) * kNumModes + m) * ns + s] = travel_fn(a, g, m, s);
    return ConstantTables(std::move(ages), std::move(genders), std::move(scenarios), "baseline",
                          std::move(travel), std::move(population), std::move(burden));
}

CurveSet linear_curves(double slope) {
    std::vector<DoseResponseCurve> curves;
    for (int d = 0; d < kNumDiseases; ++d)
        curves.push_back(
            DoseResponseCurve::tabulated({0.0, 1000.0}, {1.0, 1.0 + slope * 1000.0}));
    return CurveSet(std::move(curves));
}

ParameterVector default_params() {
    ParameterVector x;
    x.background_pm = 20.0;
    x.traffic_fraction = 0.3;
    x.mode_shares = {0.1, 0.4, 0.1, 0.4};
    x.walk_mmet = 2.0;
    x.cycle_mmet = 5.0;
    x.rr_scale = {1.0, 1.0, 1.0, 1.0, 1.0};
    return x;
}

} // namespace

TEST_SUITE("model") {

TEST_CASE("travel_totals: identical scenarios give unit ratios") {
    auto tables = make_tables(
        2, 1, {"baseline", "s"}, [](auto, auto, auto, auto) { return 10.0; },
        {100, 300}, std::vector<double>(2 * kNumDiseases * 1, 1.0));
    const TravelTotals t = travel_totals(tables);
    for (int m = 0; m < kNumModes; ++m)
        for (std::size_t s = 0; s < 2; ++s) CHECK(t.at(m, s) == 1.0);
}

TEST_CASE("travel_totals: direct ratio for a single group") {
    auto tables = make_tables(
        1, 1, {"baseline", "s"},
        [](auto, auto, int m, std::size_t s) {
            if (m != static_cast<int>(Mode::Car)) return 0.0;
            return s == 0 ? 30.0 : 15.0;
        },
        {1000}, std::vector<double>(kNumDiseases, 1.0));
    const TravelTotals t = travel_totals(tables);
    CHECK(t.at(static_cast<int>(Mode::Car), 1) == doctest::Approx(0.5));
    CHECK(t.at(static_cast<int>(Mode::Car), 0) == 1.0);
}

TEST_CASE("travel_totals: population-weighted two-group ratio") {
    // (100*10 + 300*20) / (100*5 + 300*10) = 2
    auto tables = make_tables(
        2, 1, {"baseline", "s"},
        [](std::size_t a, auto, int m, std::size_t s) {
            if (m != static_cast<int>(Mode::Car)) return 0.0;
            const double scenario_minutes = a == 0 ? 10.0 : 20.0;
            return s == 1 ? scenario_minutes : scenario_minutes / 2.0;
        },
        {100, 300}, std::vector<double>(2 * kNumDiseases, 1.0));
    const TravelTotals t = travel_totals(tables);
    CHECK(t.at(static_cast<int>(Mode::Car), 1) == doctest::Approx(2.0));
}

TEST_CASE("pollution_scale") {
    TravelTotals totals;
    totals.n_scenarios = 2;
    totals.relative.assign(kNumModes * 2, 1.0);

    SUBCASE("zeta = 0 collapses to eta") {
        const auto p = pollution_scale(totals, {0.25, 0.25, 0.25, 0.25}, 0.0, 17.0);
        CHECK(p[0] == 17.0);
        CHECK(p[1] == 17.0);
    }
    SUBCASE("unit travel ratios reproduce the baseline identity") {
        const auto p = pollution_scale(totals, {0.1, 0.5, 0.1, 0.3}, 0.7, 20.0);
        CHECK(p[0] == doctest::Approx(20.0));
        CHECK(p[1] == doctest::Approx(20.0));
    }
    SUBCASE("all motorised travel removed halves pollution at zeta=0.5") {
        for (int m = kFirstMotorised; m < kNumModes; ++m) totals.relative[m * 2 + 1] = 0.0;
        const auto p = pollution_scale(totals, {0.25, 0.25, 0.25, 0.25}, 0.5, 20.0);
        CHECK(p[1] == doctest::Approx(10.0));
    }
    SUBCASE("zero baseline travel with positive share fails, naming the mode") {
        totals.baseline_zero[static_cast<int>(Mode::Bus)] = true;
        CHECK_THROWS_WITH_AS(pollution_scale(totals, {0.25, 0.25, 0.25, 0.25}, 0.5, 20.0),
                             doctest::Contains("bus"), ModelEvalError);
        // A zero share ignores the degenerate mode entirely.
        CHECK_NOTHROW(pollution_scale(totals, {0.0, 0.5, 0.25, 0.25}, 0.5, 20.0));
    }
}

TEST_CASE("ventilation") {
    SUBCASE("no travel gives exactly 1") {
        auto tables = make_tables(
            1, 1, {"baseline"}, [](auto, auto, auto, auto) { return 0.0; }, {1.0},
            std::vector<double>(kNumDiseases, 1.0));
        CHECK(ventilation(tables, 1.0, 2.0)[0] == 1.0);
    }
    SUBCASE("60 minutes by car") {
        auto tables = make_tables(
            1, 1, {"baseline"},
            [](auto, auto, int m, auto) {
                return m == static_cast<int>(Mode::Car) ? 60.0 : 0.0;
            },
            {1.0}, std::vector<double>(kNumDiseases, 1.0));
        // (1440 - 60 + 60*1.5) / 1440
        CHECK(ventilation(tables, 1.0, 2.0)[0] == doctest::Approx(1470.0 / 1440.0));
    }
    SUBCASE("all day walking at mmet 2") {
        auto tables = make_tables(
            1, 1, {"baseline"},
            [](auto, auto, int m, auto) {
                return m == static_cast<int>(Mode::Walk) ? 1440.0 : 0.0;
            },
            {1.0}, std::vector<double>(kNumDiseases, 1.0));
        CHECK(ventilation(tables, 2.0, 2.0)[0] == doctest::Approx(3.0));
    }
    SUBCASE("infeasible schedules are rejected at table construction") {
        CHECK_THROWS_WITH_AS(make_tables(
                                 1, 1, {"baseline"},
                                 [](auto, auto, auto, auto) { return 300.0; }, {1.0},
                                 std::vector<double>(kNumDiseases, 1.0)),
                             doctest::Contains("infeasible"), ConfigError);
    }
}

TEST_CASE("exposure is the elementwise product") {
    auto tables = make_tables(
        1, 1, {"baseline", "s"}, [](auto, auto, auto, auto) { return 0.0; }, {1.0},
        std::vector<double>(kNumDiseases, 1.0));
    const std::vector<double> vent = {1.0, 1.02};
    const std::vector<double> pollution = {20.0, 10.0};
    const auto e = exposure(tables, vent, pollution);
    CHECK(e[0] == 20.0);
    CHECK(e[1] == doctest::Approx(10.2));
}

TEST_CASE("health_impact: hand-computed four-equation chain") {
    // One group, ALRI carries U = 1000, xi_ALRI = 1, H(x) = 1 + 0.01 x.
    std::vector<double> burden(kNumDiseases, 0.0);
    burden[static_cast<int>(Disease::ALRI)] = 1000.0;
    auto tables = make_tables(
        1, 1, {"baseline", "s"}, [](auto, auto, auto, auto) { return 0.0; }, {1.0}, burden);
    const std::vector<double> expo = {20.0, 10.0}; // baseline, scenario
    const auto out =
        health_impact(tables, expo, linear_curves(0.01), {1.0, 1.0, 1.0, 1.0, 1.0});
    CHECK(out.deaths[0] == doctest::Approx(1000.0));
    CHECK(out.deaths[1] == doctest::Approx(1000.0 * 1.1 / 1.2)); // 916.67
    CHECK(out.deaths_averted[1] == doctest::Approx(83.3333).epsilon(1e-4));
}

TEST_CASE("health_impact: xi doubles the excess risk") {
    // xi_COPD = 2, H(20) = 1.2, so the scaled risk is 1.4; a zero-exposure
    // scenario then sees deaths / 1.4.
    std::vector<double> burden(kNumDiseases, 0.0);
    burden[static_cast<int>(Disease::COPD)] = 1000.0;
    auto tables = make_tables(
        1, 1, {"baseline", "s"}, [](auto, auto, auto, auto) { return 0.0; }, {1.0}, burden);
    const std::vector<double> expo = {20.0, 0.0};
    const auto out =
        health_impact(tables, expo, linear_curves(0.01), {1.0, 2.0, 1.0, 1.0, 1.0});
    CHECK(out.deaths[1] == doctest::Approx(1000.0 / 1.4));
}

TEST_CASE("health_impact: equal exposures avert nothing") {
    std::vector<double> burden(kNumDiseases, 7.0);
    auto tables = make_tables(
        1, 1, {"baseline", "s"}, [](auto, auto, auto, auto) { return 0.0; }, {1.0}, burden);
    const std::vector<double> expo = {15.0, 15.0};
    const auto out =
        health_impact(tables, expo, linear_curves(0.01), {1.0, 0.5, 2.0, 1.0, 1.0});
    CHECK(out.deaths_averted[1] == 0.0);
}

TEST_CASE("health_impact: xi = 0 disables every pathway") {
    std::vector<double> burden(kNumDiseases, 3.0);
    auto tables = make_tables(
        2, 2, {"baseline", "s"}, [](auto, auto, auto, auto) { return 0.0; },
        std::vector<double>(4, 1.0), std::vector<double>(2 * kNumDiseases * 2, 3.0));
    std::vector<double> expo = {20.0, 5.0, 18.0, 4.0, 30.0, 2.0, 25.0, 1.0};
    const auto out = health_impact(tables, expo, linear_curves(0.01), {0.0, 0.0, 0.0, 0.0, 0.0});
    CHECK(out.deaths_averted[1] == 0.0);
    CHECK(out.deaths[0] == out.deaths[1]);
}

TEST_CASE("monotonicity: lowering a scenario's exposure never adds deaths") {
    Rng rng(404, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t na = 2, ng = 2;
        std::vector<double> burden(na * kNumDiseases * ng);
        for (auto& u : burden) u = 50.0 * rng.uniform();
        auto tables = make_tables(
            na, ng, {"baseline", "s"}, [](auto, auto, auto, auto) { return 0.0; },
            std::vector<double>(na * ng, 1.0), burden);
        std::array<double, kNumDiseases> xi;
        for (auto& v : xi) v = 0.1 + 2.0 * rng.uniform();
        std::vector<double> expo(na * ng * 2);
        for (auto& e : expo) e = 200.0 * rng.uniform();
        std::vector<double> lowered = expo;
        for (std::size_t a = 0; a < na; ++a)
            for (std::size_t g = 0; g < ng; ++g) {
                const std::size_t i = (a * ng + g) * 2 + 1;
                lowered[i] = expo[i] * rng.uniform();
            }
        const CurveSet curves = linear_curves(0.003);
        const double before = health_impact(tables, expo, curves, xi).deaths[1];
        const double after = health_impact(tables, lowered, curves, xi).deaths[1];
        CHECK(after <= before + 1e-12);
    }
}

TEST_CASE("dimensional audit: zeroing a disease removes exactly its share") {
    const std::size_t na = 2, ng = 2;
    std::vector<double> burden(na * kNumDiseases * ng);
    Rng rng(7, 0);
    for (auto& u : burden) u = 10.0 + 90.0 * rng.uniform();
    auto tables = make_tables(
        na, ng, {"baseline", "s"},
        [](auto a, auto, int m, auto s) {
            return m == static_cast<int>(Mode::Car) ? 20.0 + 5.0 * a + 3.0 * s : 2.0;
        },
        std::vector<double>(na * ng, 500.0), burden);
    const CurveSet curves = linear_curves(0.004);
    ParameterVector x = default_params();
    const ModelOutput full = evaluate(tables, curves, x, true);

    const int removed = static_cast<int>(Disease::Stroke);
    std::vector<double> reduced_burden = burden;
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t g = 0; g < ng; ++g)
            reduced_burden[(a * kNumDiseases + removed) * ng + g] = 0.0;
    auto reduced_tables = make_tables(
        na, ng, {"baseline", "s"},
        [](auto a, auto, int m, auto s) {
            return m == static_cast<int>(Mode::Car) ? 20.0 + 5.0 * a + 3.0 * s : 2.0;
        },
        std::vector<double>(na * ng, 500.0), reduced_burden);
    const ModelOutput reduced = evaluate(reduced_tables, curves, x);

    for (std::size_t s = 0; s < 2; ++s) {
        double removed_share = 0.0;
        for (std::size_t a = 0; a < na; ++a)
            for (std::size_t g = 0; g < ng; ++g)
                removed_share += full.breakdown[((a * kNumDiseases + removed) * ng + g) * 2 + s];
        CHECK(reduced.deaths[s] ==
              doctest::Approx(full.deaths[s] - removed_share).epsilon(1e-12));
    }
}

TEST_CASE("evaluate: baseline identity and chain equivalence") {
    const std::size_t na = 3, ng = 2;
    std::vector<double> burden(na * kNumDiseases * ng);
    Rng rng(12, 0);
    for (auto& u : burden) u = 100.0 * rng.uniform();
    auto tables = make_tables(
        na, ng, {"baseline", "s1", "s2"},
        [](auto a, auto g, int m, auto s) {
            return 5.0 + 2.0 * a + g + m + (m >= kFirstMotorised ? 10.0 - 3.0 * s : 2.0 * s);
        },
        std::vector<double>(na * ng, 250.0), burden);
    const CurveSet curves = linear_curves(0.002);
    const ParameterVector x = default_params();

    const ModelOutput out = evaluate(tables, curves, x);
    CHECK(out.deaths[0] == tables.total_burden()); // exact

    const TravelTotals totals = travel_totals(tables);
    const auto pollution =
        pollution_scale(totals, x.mode_shares, x.traffic_fraction, x.background_pm);
    const auto vent = ventilation(tables, x.walk_mmet, x.cycle_mmet);
    const auto expo = exposure(tables, vent, pollution);
    const ModelOutput manual = health_impact(tables, expo, curves, x.rr_scale);
    for (std::size_t s = 0; s < 3; ++s) CHECK(out.deaths[s] == manual.deaths[s]);
}

TEST_CASE("evaluate: zeta = 0 makes the output bitwise invariant to alpha") {
    const std::size_t na = 2, ng = 1;
    std::vector<double> burden(na * kNumDiseases * ng, 40.0);
    auto tables = make_tables(
        na, ng, {"baseline", "s"},
        [](auto a, auto, int m, auto s) { return 4.0 + a + m + 2.0 * s; },
        std::vector<double>(na * ng, 100.0), burden);
    const CurveSet curves = linear_curves(0.002);
    ParameterVector x = default_params();
    x.traffic_fraction = 0.0;
    const ModelOutput ref = evaluate(tables, curves, x);
    Rng rng(55, 0);
    const voi::Distribution dir = voi::Distribution::dirichlet({1, 1, 1, 1});
    for (int i = 0; i < 100; ++i) {
        dir.sample_one(rng, x.mode_shares.data());
        const ModelOutput out = evaluate(tables, curves, x);
        for (std::size_t s = 0; s < 2; ++s) CHECK(out.deaths[s] == ref.deaths[s]);
    }
}

TEST_CASE("evaluate: identical scenario tables avert nothing for any draw") {
    const std::size_t na = 2, ng = 2;
    std::vector<double> burden(na * kNumDiseases * ng, 25.0);
    auto tables = make_tables(
        na, ng, {"baseline", "s"},
        [](auto a, auto g, int m, auto) { return 3.0 + a + g + m; }, // no s dependence
        std::vector<double>(na * ng, 100.0), burden);
    const CurveSet curves = linear_curves(0.002);
    Rng rng(31, 0);
    const voi::Distribution dir = voi::Distribution::dirichlet({32, 4, 4, 60});
    for (int i = 0; i < 1000; ++i) {
        ParameterVector x;
        x.background_pm = std::exp(rng.normal(3, 1));
        x.traffic_fraction = rng.beta(2, 3);
        dir.sample_one(rng, x.mode_shares.data());
        x.walk_mmet = std::exp(rng.normal(1, 1));
        x.cycle_mmet = std::exp(rng.normal(2, 0.4));
        x.rr_scale = {1.0, std::exp(rng.normal(0, 0.5)), std::exp(rng.normal(0, 0.5)),
                      std::exp(rng.normal(0, 0.5)), std::exp(rng.normal(0, 0.5))};
        const ModelOutput out = evaluate(tables, curves, x);
        CHECK(out.deaths_averted[1] == 0.0);
    }
}

TEST_CASE("parameter validation names the field") {
    ParameterVector x = default_params();
    x.traffic_fraction = 1.5;
    CHECK_THROWS_WITH_AS(x.validate(), doctest::Contains("zeta"), std::invalid_argument);
    x = default_params();
    x.rr_scale[0] = 2.0;
    CHECK_THROWS_WITH_AS(x.validate(), doctest::Contains("xi_ALRI"), std::invalid_argument);
    x = default_params();
    x.mode_shares = {0.5, 0.5, 0.5, 0.5};
    CHECK_THROWS_WITH_AS(x.validate(), doctest::Contains("alpha"), std::invalid_argument);
}

TEST_CASE("dose-response curves") {
    SUBCASE("validation") {
        CHECK_THROWS_AS(DoseResponseCurve::tabulated({0, 10}, {1.0, 0.9}), ConfigError);
        CHECK_THROWS_AS(DoseResponseCurve::tabulated({0, 10, 5}, {1, 1.1, 1.2}), ConfigError);
        CHECK_THROWS_AS(DoseResponseCurve::tabulated({0, 10}, {1.5, 1.6}), ConfigError);
        CHECK_THROWS_AS(DoseResponseCurve::tabulated({0, 5, 10}, {1.0, 1.2, 1.1}), ConfigError);
    }
    SUBCASE("extrapolation clamps flat and is counted") {
        const auto c = DoseResponseCurve::tabulated({0, 10, 20}, {1.0, 1.2, 1.3});
        std::size_t warnings = 0;
        CHECK(c(25.0, &warnings) == 1.3);
        CHECK(warnings == 1);
        CHECK(c(20.0, &warnings) == 1.3);
        CHECK(warnings == 1); // the boundary itself is in range
        CHECK(c(5.0, &warnings) == doctest::Approx(1.1));
        CHECK(warnings == 1);
    }
    SUBCASE("parametric saturating form") {
        const auto c = DoseResponseCurve::parametric(0.5, 0.1, 1.0, 5.0);
        CHECK(c(0.0) == 1.0);
        CHECK(c(5.0) == 1.0);
        CHECK(c(15.0) == doctest::Approx(1.0 + 0.5 * (1.0 - std::exp(-1.0))));
        CHECK(c(1e6) == doctest::Approx(1.5));
    }
}

TEST_CASE("csv ingestion validates schema with line numbers") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "voi_model_csv";
    fs::create_directories(dir);
    auto write = [&](const char* name, const char* text) {
        std::ofstream out(dir / name);
        out << text;
        return dir / name;
    };
    const auto pop = write("population.csv", "a,g,count\nadult,female,100\nadult,male,120\n");
    const auto burden = write("burden.csv",
                              "a,d,g,deaths\n"
                              "adult,ALRI,female,10\nadult,COPD,female,11\nadult,LC,female,12\n"
                              "adult,stroke,female,13\nadult,IHD,female,14\n"
                              "adult,ALRI,male,10\nadult,COPD,male,11\nadult,LC,male,12\n"
                              "adult,stroke,male,13\nadult,IHD,male,14\n");
    std::string travel_text = "a,g,m,s,minutes\n";
    for (const char* g : {"female", "male"})
        for (const char* m : {"walk", "cycle", "bus", "car", "motorbike", "goods"})
            for (const char* s : {"baseline", "s1"})
                travel_text += std::string("adult,") + g + "," + m + "," + s + ",8\n";
    const auto travel = write("travel.csv", travel_text.c_str());

    CHECK_NOTHROW(ConstantTables::from_csv(travel, pop, burden, "baseline"));

    SUBCASE("bad mode name carries the line number") {
        auto bad = write("travel_bad.csv", "a,g,m,s,minutes\nadult,female,rocket,baseline,8\n");
        CHECK_THROWS_WITH_AS(ConstantTables::from_csv(bad, pop, burden, "baseline"),
                             doctest::Contains("travel_bad.csv:2"), ConfigError);
    }
    SUBCASE("negative minutes rejected") {
        auto bad = write("travel_neg.csv", "a,g,m,s,minutes\nadult,female,walk,baseline,-1\n");
        CHECK_THROWS_WITH_AS(ConstantTables::from_csv(bad, pop, burden, "baseline"),
                             doctest::Contains("negative"), ConfigError);
    }
    SUBCASE("missing disease rejected") {
        auto bad = write("burden_missing.csv", "a,d,g,deaths\nadult,ALRI,female,10\n");
        CHECK_THROWS_AS(ConstantTables::from_csv(travel, pop, bad, "baseline"), ConfigError);
    }
    SUBCASE("unknown baseline scenario rejected") {
        CHECK_THROWS_WITH_AS(ConstantTables::from_csv(travel, pop, burden, "nope"),
                             doctest::Contains("nope"), ConfigError);
    }
    fs::remove_all(dir);
}

} // TEST_SUITE
