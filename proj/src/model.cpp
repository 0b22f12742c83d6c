#include "voi/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "voi/csv.hpp"
#include "voi/errors.hpp"

namespace voi {

namespace {

const char* kModeLabels[kNumModes] = {"walk", "cycle", "bus", "car", "motorbike", "goods"};
const char* kDiseaseLabels[kNumDiseases] = {"ALRI", "COPD", "LC", "stroke", "IHD"};

// Ventilation rate relative to rest for the motorised modes; walking and
// cycling rates are 1 + mmet and come from the parameter vector.
constexpr double kVentBus = 1.5, kVentCar = 1.5, kVentMotorbike = 2.0, kVentGoods = 1.5;

} // namespace

const char* mode_label(Mode m) { return kModeLabels[static_cast<int>(m)]; }
const char* disease_label(Disease d) { return kDiseaseLabels[static_cast<int>(d)]; }

Mode parse_mode(const std::string& label) {
    for (int m = 0; m < kNumModes; ++m)
        if (label == kModeLabels[m]) return static_cast<Mode>(m);
    throw ConfigError("unknown travel mode '" + label + "'");
}

Disease parse_disease(const std::string& label) {
    for (int d = 0; d < kNumDiseases; ++d)
        if (label == kDiseaseLabels[d]) return static_cast<Disease>(d);
    throw ConfigError("unknown disease '" + label + "'");
}

ConstantTables::ConstantTables(std::vector<std::string> ages, std::vector<std::string> genders,
                               std::vector<std::string> scenarios, std::string baseline,
                               std::vector<double> travel, std::vector<double> population,
                               std::vector<double> burden)
    : ages_(std::move(ages)), genders_(std::move(genders)), scenarios_(std::move(scenarios)),
      travel_(std::move(travel)), population_(std::move(population)), burden_(std::move(burden)) {
    auto it = std::find(scenarios_.begin(), scenarios_.end(), baseline);
    if (it == scenarios_.end())
        throw ConfigError("baseline scenario '" + baseline + "' not present in tables");
    baseline_ = static_cast<std::size_t>(it - scenarios_.begin());
    validate();
}

std::size_t ConstantTables::scenario_index(const std::string& name) const {
    auto it = std::find(scenarios_.begin(), scenarios_.end(), name);
    if (it == scenarios_.end()) throw ConfigError("scenario '" + name + "' not present in tables");
    return static_cast<std::size_t>(it - scenarios_.begin());
}

double ConstantTables::total_burden() const {
    double total = 0.0;
    for (double v : burden_) total += v;
    return total;
}

void ConstantTables::validate() const {
    const std::size_t na = ages_.size(), ng = genders_.size(), ns = scenarios_.size();
    if (na == 0 || ng == 0 || ns == 0) throw ConfigError("tables: empty index set");
    if (travel_.size() != na * ng * kNumModes * ns || population_.size() != na * ng ||
        burden_.size() != na * kNumDiseases * ng)
        throw ConfigError("tables: array sizes inconsistent with index sets");
    for (double v : travel_)
        if (!(v >= 0.0)) throw ConfigError("tables: negative travel time");
    for (double v : population_)
        if (!(v >= 0.0)) throw ConfigError("tables: negative population count");
    for (double v : burden_)
        if (!(v >= 0.0)) throw ConfigError("tables: negative burden entry");
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t g = 0; g < ng; ++g)
            for (std::size_t s = 0; s < ns; ++s) {
                double total = 0.0;
                for (int m = 0; m < kNumModes; ++m) total += travel(a, g, m, s);
                if (total > kMinutesPerDay) {
                    std::ostringstream os;
                    os << "tables: infeasible schedule, " << total << " travel minutes/day for ("
                       << ages_[a] << ", " << genders_[g] << ", " << scenarios_[s] << ")";
                    throw ConfigError(os.str());
                }
            }
}

ConstantTables ConstantTables::from_csv(const std::filesystem::path& travel_csv,
                                        const std::filesystem::path& population_csv,
                                        const std::filesystem::path& burden_csv,
                                        const std::string& baseline_scenario) {
    CsvTable pop = read_csv(population_csv, {"a", "g", "count"});
    std::vector<std::string> ages, genders;
    std::map<std::pair<std::string, std::string>, double> pop_map;
    for (std::size_t r = 0; r < pop.rows.size(); ++r) {
        const std::string a = pop.cell(r, 0), g = pop.cell(r, 1);
        const double n = pop.number(r, 2);
        if (n < 0) pop.fail(r, "negative population count");
        if (!pop_map.emplace(std::make_pair(a, g), n).second)
            pop.fail(r, "duplicate (a,g) entry");
        if (std::find(ages.begin(), ages.end(), a) == ages.end()) ages.push_back(a);
        if (std::find(genders.begin(), genders.end(), g) == genders.end()) genders.push_back(g);
    }
    const std::size_t na = ages.size(), ng = genders.size();
    if (pop_map.size() != na * ng)
        throw ConfigError(population_csv.string() + ": population table is not a full a x g grid");

    auto age_index = [&](const CsvTable& t, std::size_t r, const std::string& a) {
        auto it = std::find(ages.begin(), ages.end(), a);
        if (it == ages.end()) t.fail(r, "age group '" + a + "' not in population table");
        return static_cast<std::size_t>(it - ages.begin());
    };
    auto gender_index = [&](const CsvTable& t, std::size_t r, const std::string& g) {
        auto it = std::find(genders.begin(), genders.end(), g);
        if (it == genders.end()) t.fail(r, "gender '" + g + "' not in population table");
        return static_cast<std::size_t>(it - genders.begin());
    };

    CsvTable trav = read_csv(travel_csv, {"a", "g", "m", "s", "minutes"});
    std::vector<std::string> scenarios;
    for (std::size_t r = 0; r < trav.rows.size(); ++r) {
        const std::string& s = trav.cell(r, 3);
        if (std::find(scenarios.begin(), scenarios.end(), s) == scenarios.end())
            scenarios.push_back(s);
    }
    const std::size_t ns = scenarios.size();
    std::vector<double> travel(na * ng * kNumModes * ns, -1.0);
    std::set<int> modes_seen;
    for (std::size_t r = 0; r < trav.rows.size(); ++r) {
        const std::size_t a = age_index(trav, r, trav.cell(r, 0));
        const std::size_t g = gender_index(trav, r, trav.cell(r, 1));
        int m;
        try {
            m = static_cast<int>(parse_mode(trav.cell(r, 2)));
        } catch (const ConfigError& e) {
            trav.fail(r, e.what());
        }
        modes_seen.insert(m);
        const std::size_t s = static_cast<std::size_t>(
            std::find(scenarios.begin(), scenarios.end(), trav.cell(r, 3)) - scenarios.begin());
        const double minutes = trav.number(r, 4);
        if (minutes < 0) trav.fail(r, "negative travel minutes");
        double& slot = travel[((a * ng + g) * kNumModes + m) * ns + s];
        if (slot >= 0) trav.fail(r, "duplicate (a,g,m,s) entry");
        slot = minutes;
    }
    if (modes_seen.size() != kNumModes)
        throw ConfigError(travel_csv.string() + ": travel table must cover all six modes");
    for (double v : travel)
        if (v < 0)
            throw ConfigError(travel_csv.string() +
                              ": travel table is not a full a x g x m x s grid");

    CsvTable burd = read_csv(burden_csv, {"a", "d", "g", "deaths"});
    std::vector<double> burden(na * kNumDiseases * ng, -1.0);
    std::set<int> diseases_seen;
    for (std::size_t r = 0; r < burd.rows.size(); ++r) {
        const std::size_t a = age_index(burd, r, burd.cell(r, 0));
        int d;
        try {
            d = static_cast<int>(parse_disease(burd.cell(r, 1)));
        } catch (const ConfigError& e) {
            burd.fail(r, e.what());
        }
        diseases_seen.insert(d);
        const std::size_t g = gender_index(burd, r, burd.cell(r, 2));
        const double deaths = burd.number(r, 3);
        if (deaths < 0) burd.fail(r, "negative death count");
        double& slot = burden[(a * kNumDiseases + d) * ng + g];
        if (slot >= 0) burd.fail(r, "duplicate (a,d,g) entry");
        slot = deaths;
    }
    if (diseases_seen.size() != kNumDiseases)
        throw ConfigError(burden_csv.string() + ": burden table must cover all five diseases");
    for (double v : burden)
        if (v < 0)
            throw ConfigError(burden_csv.string() + ": burden table is not a full a x d x g grid");

    std::vector<double> population(na * ng);
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t g = 0; g < ng; ++g)
            population[a * ng + g] = pop_map.at({ages[a], genders[g]});

    return ConstantTables(std::move(ages), std::move(genders), std::move(scenarios),
                          baseline_scenario, std::move(travel), std::move(population),
                          std::move(burden));
}

DoseResponseCurve DoseResponseCurve::tabulated(std::vector<double> exposure,
                                               std::vector<double> rr) {
    if (exposure.size() != rr.size() || exposure.size() < 2)
        throw ConfigError("curve: need >= 2 (exposure, rr) pairs of equal length");
    for (std::size_t i = 1; i < exposure.size(); ++i) {
        if (!(exposure[i] > exposure[i - 1]))
            throw ConfigError("curve: exposure grid must be strictly increasing");
        if (rr[i] < rr[i - 1] - 1e-12) throw ConfigError("curve: rr must be non-decreasing");
    }
    for (double v : rr)
        if (!(v >= 1.0 - 1e-9)) throw ConfigError("curve: rr must be >= 1");
    if (exposure.front() <= 0.0 && std::abs(rr.front() - 1.0) > 1e-9)
        throw ConfigError("curve: rr at zero exposure must be 1");
    DoseResponseCurve c;
    c.x_ = std::move(exposure);
    c.rr_ = std::move(rr);
    return c;
}

DoseResponseCurve DoseResponseCurve::parametric(double a, double gamma, double delta,
                                                double x_cf) {
    if (!(a >= 0) || !(gamma >= 0) || !(delta > 0) || !(x_cf >= 0))
        throw ConfigError("curve: parametric form needs a, gamma, x_cf >= 0 and delta > 0");
    DoseResponseCurve c;
    c.parametric_ = true;
    c.a_ = a;
    c.gamma_ = gamma;
    c.delta_ = delta;
    c.xcf_ = x_cf;
    return c;
}

double DoseResponseCurve::operator()(double x, std::size_t* extrapolations) const {
    if (parametric_) {
        if (x <= xcf_) return 1.0;
        return 1.0 + a_ * (1.0 - std::exp(-gamma_ * std::pow(x - xcf_, delta_)));
    }
    if (x <= x_.front()) {
        if (x < x_.front() && extrapolations) ++*extrapolations;
        return rr_.front();
    }
    if (x >= x_.back()) {
        if (x > x_.back() && extrapolations) ++*extrapolations;
        return rr_.back(); // flat extension beyond the table
    }
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double t = (x - x_[i]) / (x_[i + 1] - x_[i]);
    return rr_[i] + t * (rr_[i + 1] - rr_[i]);
}

CurveSet::CurveSet(std::vector<DoseResponseCurve> curves) : curves_(std::move(curves)) {
    if (curves_.size() != kNumDiseases)
        throw ConfigError("curves: need exactly one curve per disease");
}

CurveSet CurveSet::from_csv(const std::filesystem::path& curves_csv) {
    CsvTable t = read_csv(curves_csv, {"d", "exposure", "rr"});
    std::vector<std::vector<double>> xs(kNumDiseases), rrs(kNumDiseases);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        int d;
        try {
            d = static_cast<int>(parse_disease(t.cell(r, 0)));
        } catch (const ConfigError& e) {
            t.fail(r, e.what());
        }
        xs[d].push_back(t.number(r, 1));
        rrs[d].push_back(t.number(r, 2));
    }
    std::vector<DoseResponseCurve> curves;
    for (int d = 0; d < kNumDiseases; ++d) {
        if (xs[d].empty())
            throw ConfigError(curves_csv.string() + ": no rows for disease '" +
                              kDiseaseLabels[d] + "'");
        try {
            curves.push_back(DoseResponseCurve::tabulated(xs[d], rrs[d]));
        } catch (const ConfigError& e) {
            throw ConfigError(curves_csv.string() + ": disease '" + kDiseaseLabels[d] +
                              "': " + e.what());
        }
    }
    return CurveSet(std::move(curves));
}

CurveSet CurveSet::from_json(const nlohmann::json& j) {
    std::vector<DoseResponseCurve> curves;
    for (int d = 0; d < kNumDiseases; ++d) {
        const std::string label = kDiseaseLabels[d];
        if (!j.contains(label)) throw ConfigError("curves: missing disease '" + label + "'");
        const auto& c = j.at(label);
        curves.push_back(DoseResponseCurve::parametric(
            c.at("a").get<double>(), c.at("gamma").get<double>(), c.at("delta").get<double>(),
            c.value("x_cf", 0.0)));
    }
    return CurveSet(std::move(curves));
}

void ParameterVector::validate() const {
    auto bad = [](const std::string& field, double v) {
        std::ostringstream os;
        os << "parameter '" << field << "' out of domain: " << v;
        throw std::invalid_argument(os.str());
    };
    if (!(background_pm >= 0) || !std::isfinite(background_pm)) bad("eta", background_pm);
    if (!(traffic_fraction >= 0 && traffic_fraction <= 1)) bad("zeta", traffic_fraction);
    double sum = 0.0;
    for (double v : mode_shares) {
        if (!(v >= 0 && v <= 1)) bad("alpha", v);
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) bad("alpha (sum)", sum);
    if (!(walk_mmet >= 0)) bad("lambda_walk", walk_mmet);
    if (!(cycle_mmet >= 0)) bad("lambda_cycle", cycle_mmet);
    for (int d = 0; d < kNumDiseases; ++d)
        if (!(rr_scale[d] >= 0) || !std::isfinite(rr_scale[d]))
            bad(std::string("xi_") + kDiseaseLabels[d], rr_scale[d]);
    if (rr_scale[static_cast<int>(Disease::ALRI)] != 1.0)
        bad("xi_ALRI (must be fixed at 1)", rr_scale[0]);
}

TravelTotals travel_totals(const ConstantTables& tables) {
    const std::size_t ns = tables.n_scenarios();
    const std::size_t base = tables.baseline_index();
    TravelTotals out;
    out.n_scenarios = ns;
    out.relative.assign(kNumModes * ns, 0.0);
    for (int m = 0; m < kNumModes; ++m) {
        std::vector<double> total(ns, 0.0);
        for (std::size_t a = 0; a < tables.n_ages(); ++a)
            for (std::size_t g = 0; g < tables.n_genders(); ++g) {
                const double n = tables.population(a, g);
                for (std::size_t s = 0; s < ns; ++s) total[s] += n * tables.travel(a, g, m, s);
            }
        if (total[base] == 0.0) {
            out.baseline_zero[m] = true;
            // 0/0 resolved as "no change"; nonzero scenario totals over a zero
            // baseline are only an error if the mode carries pollution weight,
            // which pollution_scale checks when the shares are known.
            for (std::size_t s = 0; s < ns; ++s) out.relative[m * ns + s] = 1.0;
        } else {
            for (std::size_t s = 0; s < ns; ++s)
                out.relative[m * ns + s] = total[s] / total[base];
        }
    }
    return out;
}

std::vector<double> pollution_scale(const TravelTotals& totals,
                                    const std::array<double, kNumMotorised>& mode_shares,
                                    double traffic_fraction, double background_pm) {
    if (!(traffic_fraction >= 0.0 && traffic_fraction <= 1.0))
        throw std::invalid_argument("parameter 'zeta' out of domain");
    if (!(background_pm >= 0.0))
        throw std::invalid_argument("parameter 'eta' out of domain");
    const std::size_t ns = totals.n_scenarios;
    std::vector<double> out(ns);
    for (std::size_t s = 0; s < ns; ++s) {
        double fold = 0.0;
        for (int k = 0; k < kNumMotorised; ++k) {
            const int m = kFirstMotorised + k;
            if (mode_shares[k] == 0.0) continue;
            if (totals.baseline_zero[m])
                throw ModelEvalError(std::string("zero baseline travel for motorised mode '") +
                                     mode_label(static_cast<Mode>(m)) +
                                     "' with nonzero pollution share");
            fold += totals.at(m, s) * mode_shares[k];
        }
        out[s] = background_pm * (1.0 - traffic_fraction * (1.0 - fold));
    }
    return out;
}

std::vector<double> ventilation(const ConstantTables& tables, double walk_mmet,
                                double cycle_mmet) {
    if (!(walk_mmet >= 0)) throw std::invalid_argument("parameter 'lambda_walk' out of domain");
    if (!(cycle_mmet >= 0)) throw std::invalid_argument("parameter 'lambda_cycle' out of domain");
    const double rate[kNumModes] = {1.0 + walk_mmet, 1.0 + cycle_mmet,
                                    kVentBus,        kVentCar,
                                    kVentMotorbike,  kVentGoods};
    const std::size_t na = tables.n_ages(), ng = tables.n_genders(), ns = tables.n_scenarios();
    std::vector<double> out(na * ng * ns);
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t g = 0; g < ng; ++g)
            for (std::size_t s = 0; s < ns; ++s) {
                double travel_minutes = 0.0, in_traffic = 0.0;
                for (int m = 0; m < kNumModes; ++m) {
                    const double t = tables.travel(a, g, m, s);
                    travel_minutes += t;
                    in_traffic += rate[m] * t;
                }
                if (travel_minutes > kMinutesPerDay) {
                    std::ostringstream os;
                    os << "infeasible schedule: " << travel_minutes << " travel minutes/day for ("
                       << tables.ages()[a] << ", " << tables.genders()[g] << ", "
                       << tables.scenarios()[s] << ")";
                    throw ModelEvalError(os.str());
                }
                out[(a * ng + g) * ns + s] =
                    (kMinutesPerDay - travel_minutes + in_traffic) / kMinutesPerDay;
            }
    return out;
}

std::vector<double> exposure(const ConstantTables& tables, const std::vector<double>& vent,
                             const std::vector<double>& pollution) {
    const std::size_t na = tables.n_ages(), ng = tables.n_genders(), ns = tables.n_scenarios();
    std::vector<double> out(na * ng * ns);
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t g = 0; g < ng; ++g)
            for (std::size_t s = 0; s < ns; ++s) {
                const std::size_t i = (a * ng + g) * ns + s;
                out[i] = vent[i] * pollution[s];
            }
    return out;
}

ModelOutput health_impact(const ConstantTables& tables, const std::vector<double>& expo,
                          const CurveSet& curves, const std::array<double, kNumDiseases>& rr_scale,
                          bool keep_breakdown) {
    const std::size_t na = tables.n_ages(), ng = tables.n_genders(), ns = tables.n_scenarios();
    const std::size_t base = tables.baseline_index();
    ModelOutput out;
    out.deaths.assign(ns, 0.0);
    if (keep_breakdown) out.breakdown.assign(na * kNumDiseases * ng * ns, 0.0);
    for (std::size_t a = 0; a < na; ++a)
        for (int d = 0; d < kNumDiseases; ++d)
            for (std::size_t g = 0; g < ng; ++g) {
                const double u = tables.burden(a, d, g);
                const double expo_base = expo[(a * ng + g) * ns + base];
                const double rr_base =
                    1.0 + rr_scale[d] * (curves.curve(d)(expo_base, &out.extrapolation_warnings) - 1.0);
                for (std::size_t s = 0; s < ns; ++s) {
                    const double expo_s = expo[(a * ng + g) * ns + s];
                    const double rr_s =
                        1.0 + rr_scale[d] * (curves.curve(d)(expo_s, &out.extrapolation_warnings) - 1.0);
                    const double scaled = (rr_s / rr_base) * u;
                    out.deaths[s] += scaled;
                    if (keep_breakdown)
                        out.breakdown[((a * kNumDiseases + d) * ng + g) * ns + s] = scaled;
                }
            }
    out.deaths_averted.assign(ns, 0.0);
    for (std::size_t s = 0; s < ns; ++s) out.deaths_averted[s] = out.deaths[base] - out.deaths[s];
    return out;
}

ModelOutput evaluate(const ConstantTables& tables, const CurveSet& curves,
                     const ParameterVector& x, bool keep_breakdown) {
    x.validate();
    const TravelTotals totals = travel_totals(tables);
    const std::vector<double> pollution =
        pollution_scale(totals, x.mode_shares, x.traffic_fraction, x.background_pm);
    const std::vector<double> vent = ventilation(tables, x.walk_mmet, x.cycle_mmet);
    const std::vector<double> expo = exposure(tables, vent, pollution);
    return health_impact(tables, expo, curves, x.rr_scale, keep_breakdown);
}

} // namespace voi
