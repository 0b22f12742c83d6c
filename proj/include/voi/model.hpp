#ifndef VOI_MODEL_HPP
#define VOI_MODEL_HPP

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace voi {

// Travel modes, in canonical order. The last four are motorised and carry
// a pollution-emission share.
enum class Mode : int { Walk = 0, Cycle, Bus, Car, Motorbike, Goods };
inline constexpr int kNumModes = 6;
inline constexpr int kFirstMotorised = 2;
inline constexpr int kNumMotorised = 4;

enum class Disease : int { ALRI = 0, COPD, LungCancer, Stroke, IHD };
inline constexpr int kNumDiseases = 5;

const char* mode_label(Mode m);
const char* disease_label(Disease d);
Mode parse_mode(const std::string& label);         // throws ConfigError
Disease parse_disease(const std::string& label);   // throws ConfigError

inline constexpr double kMinutesPerDay = 1440.0;

// The constant data tables: per-group travel minutes, population counts and
// baseline deaths per year. Index sets are labels read from the CSV inputs;
// modes and diseases are the fixed sets above.
class ConstantTables {
public:
    static ConstantTables from_csv(const std::filesystem::path& travel_csv,
                                   const std::filesystem::path& population_csv,
                                   const std::filesystem::path& burden_csv,
                                   const std::string& baseline_scenario);

    // In-memory construction for tests. travel is [age][gender][mode][scenario],
    // population [age][gender], burden [age][disease][gender].
    ConstantTables(std::vector<std::string> ages, std::vector<std::string> genders,
                   std::vector<std::string> scenarios, std::string baseline,
                   std::vector<double> travel, std::vector<double> population,
                   std::vector<double> burden);

    std::size_t n_ages() const { return ages_.size(); }
    std::size_t n_genders() const { return genders_.size(); }
    std::size_t n_scenarios() const { return scenarios_.size(); }
    std::size_t baseline_index() const { return baseline_; }
    const std::vector<std::string>& ages() const { return ages_; }
    const std::vector<std::string>& genders() const { return genders_; }
    const std::vector<std::string>& scenarios() const { return scenarios_; }
    std::size_t scenario_index(const std::string& name) const; // throws ConfigError

    double travel(std::size_t a, std::size_t g, int m, std::size_t s) const {
        return travel_[((a * genders_.size() + g) * kNumModes + m) * scenarios_.size() + s];
    }
    double population(std::size_t a, std::size_t g) const {
        return population_[a * genders_.size() + g];
    }
    double burden(std::size_t a, int d, std::size_t g) const {
        return burden_[(a * kNumDiseases + d) * genders_.size() + g];
    }
    // Sum of the burden table; the baseline death count by construction.
    double total_burden() const;

private:
    void validate() const;

    std::vector<std::string> ages_, genders_, scenarios_;
    std::size_t baseline_ = 0;
    std::vector<double> travel_;      // [a][g][m][s]
    std::vector<double> population_;  // [a][g]
    std::vector<double> burden_;      // [a][d][g]
};

// Relative risk of one disease as a function of PM2.5 exposure. Either a
// tabulated (exposure, rr) curve with linear interpolation, or the
// parametric saturating-exponential form
//   rr(x) = 1 + a * (1 - exp(-gamma * (x - x_cf)^delta))  for x > x_cf.
// Evaluation outside a tabulated range clamps to the nearest endpoint and
// counts the event so callers can surface a warning.
class DoseResponseCurve {
public:
    static DoseResponseCurve tabulated(std::vector<double> exposure, std::vector<double> rr);
    static DoseResponseCurve parametric(double a, double gamma, double delta, double x_cf);

    double operator()(double x, std::size_t* extrapolations = nullptr) const;

private:
    DoseResponseCurve() = default;
    bool parametric_ = false;
    std::vector<double> x_, rr_;
    double a_ = 0, gamma_ = 0, delta_ = 1, xcf_ = 0;
};

// Curves for all five diseases, from curves.csv rows (d, exposure, rr) or a
// JSON object {"<disease>": {"a":..,"gamma":..,"delta":..,"x_cf":..}, ...}.
class CurveSet {
public:
    static CurveSet from_csv(const std::filesystem::path& curves_csv);
    static CurveSet from_json(const nlohmann::json& j);
    explicit CurveSet(std::vector<DoseResponseCurve> curves);

    const DoseResponseCurve& curve(int d) const { return curves_[d]; }

private:
    std::vector<DoseResponseCurve> curves_;
};

// One realisation of the uncertain inputs.
struct ParameterVector {
    double background_pm = 0;                 // PM2.5 concentration, ug/m3
    double traffic_fraction = 0;              // share of background PM from road transport
    std::array<double, kNumMotorised> mode_shares{}; // bus, car, motorbike, goods; sums to 1
    double walk_mmet = 0;
    double cycle_mmet = 0;
    std::array<double, kNumDiseases> rr_scale{}; // ALRI entry fixed at 1

    void validate() const; // throws std::invalid_argument naming the field
};

// Stage 1: population travel time by mode and scenario, relative to baseline.
struct TravelTotals {
    std::size_t n_scenarios = 0;
    std::vector<double> relative;        // [mode][scenario]
    std::array<bool, kNumModes> baseline_zero{}; // flagged when the baseline total is 0

    double at(int m, std::size_t s) const { return relative[m * n_scenarios + s]; }
};

struct ModelOutput {
    std::vector<double> deaths;         // per scenario
    std::vector<double> deaths_averted; // deaths[baseline] - deaths[s]
    std::size_t extrapolation_warnings = 0;
    // Optional per-(age, disease, gender, scenario) burden breakdown.
    std::vector<double> breakdown;
};

TravelTotals travel_totals(const ConstantTables& tables);

// Background PM2.5 per scenario given the travel pattern.
std::vector<double> pollution_scale(const TravelTotals& totals,
                                    const std::array<double, kNumMotorised>& mode_shares,
                                    double traffic_fraction, double background_pm);

// Relative ventilation per (age, gender, scenario), flattened [a][g][s].
std::vector<double> ventilation(const ConstantTables& tables, double walk_mmet,
                                double cycle_mmet);

// Elementwise exposure: ventilation x scenario background concentration.
std::vector<double> exposure(const ConstantTables& tables,
                             const std::vector<double>& ventilation,
                             const std::vector<double>& pollution);

ModelOutput health_impact(const ConstantTables& tables, const std::vector<double>& exposure,
                          const CurveSet& curves, const std::array<double, kNumDiseases>& rr_scale,
                          bool keep_breakdown = false);

// The full chain; pure and reentrant.
ModelOutput evaluate(const ConstantTables& tables, const CurveSet& curves,
                     const ParameterVector& x, bool keep_breakdown = false);

} // namespace voi

#endif // VOI_MODEL_HPP
