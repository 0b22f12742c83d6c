#ifndef VOI_BAYES_HPP
#define VOI_BAYES_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "voi/distribution.hpp"
#include "voi/mcmc.hpp"

namespace voi {

// Observed proportions, one per study; read from studies.csv
// (study_id, proportion).
struct MetaAnalysisData {
    std::vector<double> proportions;

    static MetaAnalysisData from_csv(const std::filesystem::path& path);
    void validate() const; // each value strictly in (0,1), >= 1 study
};

// Random-effects meta-analysis of a proportion on the logit scale:
// logit(y_i) ~ N(logit(p), tau^2) with priors on p and tau. Returns the
// joint posterior over ("zeta", "tau"). An empty dataset runs prior-only.
PosteriorSamples meta_analysis_zeta(const MetaAnalysisData& data, const Distribution& prior_zeta,
                                    const Distribution& prior_tau, const McmcConfig& config);
PosteriorSamples meta_analysis_zeta(const MetaAnalysisData& data, const McmcConfig& config);

// City PM2.5 measurements nested in countries nested in regions; read from
// cities.csv (city, country, region, pm25).
struct CityPollutionData {
    struct Record {
        std::string city, country, region;
        double pm25;
    };
    std::vector<Record> records;

    static CityPollutionData from_csv(const std::filesystem::path& path);
    void validate() const;
};

struct HierarchicalOptions {
    double global_mean_sd = 5.0; // prior sd of the global mean of log pm25
    // Half-normal(1) unless overridden; a Constant fixes the value and
    // removes it from the sampled parameters.
    std::optional<Distribution> prior_tau_regions;   // spread of region means
    std::optional<Distribution> prior_tau_countries; // spread of country means
    std::optional<Distribution> prior_tau_cities;    // spread of city values
    // Region used when the target country has no measurements.
    std::string region_hint;
};

// Three-level log-normal hierarchy over city concentrations, with a
// posterior-predictive background concentration for the target country
// appended as columns "log_eta" and "eta". A target country absent from
// the data is predicted through its region (from region_hint or an
// existing record).
PosteriorSamples hierarchical_eta(const CityPollutionData& data, const std::string& target_country,
                                  const HierarchicalOptions& opts, const McmcConfig& config);

// Pools post-burn-in draws of one parameter into an Empirical distribution.
// Refuses (ConvergenceError) when the diagnostics gate failed.
Distribution to_distribution(const PosteriorSamples& posterior, const std::string& name,
                             std::string source_file = {});

} // namespace voi

#endif // VOI_BAYES_HPP
