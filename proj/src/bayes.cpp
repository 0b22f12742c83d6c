#include "voi/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "voi/csv.hpp"
#include "voi/errors.hpp"
#include "voi/stats.hpp"

namespace voi {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;

double normal_logpdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

} // namespace

MetaAnalysisData MetaAnalysisData::from_csv(const std::filesystem::path& path) {
    CsvTable t = read_csv(path, {"study_id", "proportion"});
    MetaAnalysisData data;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double y = t.number(r, 1);
        if (!(y > 0.0 && y < 1.0)) t.fail(r, "proportion must be strictly inside (0,1)");
        data.proportions.push_back(y);
    }
    data.validate();
    return data;
}

void MetaAnalysisData::validate() const {
    if (proportions.empty()) throw ConfigError("meta-analysis data: need at least one study");
    for (double y : proportions)
        if (!(y > 0.0 && y < 1.0))
            throw ConfigError("meta-analysis data: proportions must be strictly inside (0,1)");
}

PosteriorSamples meta_analysis_zeta(const MetaAnalysisData& data, const Distribution& prior_zeta,
                                    const Distribution& prior_tau, const McmcConfig& config) {
    std::vector<double> logit_y;
    for (double y : data.proportions) {
        if (!(y > 0.0 && y < 1.0))
            throw ConfigError("meta-analysis: proportions must be strictly inside (0,1)");
        logit_y.push_back(logit(y));
    }

    auto log_post = [&, logit_y](std::span<const double> x) {
        const double zeta = x[0], tau = x[1];
        double lp = prior_zeta.log_density(zeta) + prior_tau.log_density(tau);
        if (!std::isfinite(lp)) return lp;
        const double center = logit(zeta);
        for (double ly : logit_y) lp += normal_logpdf(ly, center, tau);
        return lp;
    };

    const std::vector<McmcParam> params = {{"zeta", Support::UnitInterval},
                                           {"tau", Support::Positive}};
    // Overdispersed initial points drawn from the priors, clear of the
    // support edges where the log-posterior is not finite.
    std::vector<std::vector<double>> inits;
    for (int c = 0; c < config.chains; ++c) {
        Rng rng(config.seed ^ 0x5eedu, 1000 + static_cast<std::uint64_t>(c));
        double z, t;
        do {
            prior_zeta.sample_one(rng, &z);
        } while (!(z > 1e-6 && z < 1.0 - 1e-6));
        do {
            prior_tau.sample_one(rng, &t);
        } while (!(t > 1e-6));
        inits.push_back({z, t});
    }
    return mcmc(log_post, params, inits, config);
}

PosteriorSamples meta_analysis_zeta(const MetaAnalysisData& data, const McmcConfig& config) {
    return meta_analysis_zeta(data, Distribution::beta(2, 3), Distribution::half_normal(1),
                              config);
}

CityPollutionData CityPollutionData::from_csv(const std::filesystem::path& path) {
    CsvTable t = read_csv(path, {"city", "country", "region", "pm25"});
    CityPollutionData data;
    std::map<std::string, std::string> country_region;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        Record rec{t.cell(r, 0), t.cell(r, 1), t.cell(r, 2), t.number(r, 3)};
        if (!(rec.pm25 > 0.0)) t.fail(r, "pm25 must be > 0");
        auto [it, inserted] = country_region.emplace(rec.country, rec.region);
        if (!inserted && it->second != rec.region)
            t.fail(r, "country '" + rec.country + "' mapped to two regions");
        data.records.push_back(std::move(rec));
    }
    data.validate();
    return data;
}

void CityPollutionData::validate() const {
    if (records.empty()) throw ConfigError("city data: no records");
    std::map<std::string, std::string> country_region;
    for (const auto& r : records) {
        if (!(r.pm25 > 0.0)) throw ConfigError("city data: pm25 must be > 0");
        auto [it, inserted] = country_region.emplace(r.country, r.region);
        if (!inserted && it->second != r.region)
            throw ConfigError("city data: country '" + r.country + "' mapped to two regions");
    }
}

PosteriorSamples hierarchical_eta(const CityPollutionData& data, const std::string& target_country,
                                  const HierarchicalOptions& opts, const McmcConfig& config) {
    data.validate();

    // Index regions and countries in first-appearance order.
    std::vector<std::string> regions, countries;
    std::vector<std::size_t> country_region; // region index per country
    std::map<std::string, std::size_t> region_index, country_index;
    for (const auto& r : data.records) {
        if (!region_index.count(r.region)) {
            region_index[r.region] = regions.size();
            regions.push_back(r.region);
        }
        if (!country_index.count(r.country)) {
            country_index[r.country] = countries.size();
            countries.push_back(r.country);
            country_region.push_back(region_index[r.region]);
        }
    }
    std::vector<std::size_t> record_country;
    std::vector<double> log_pm;
    for (const auto& r : data.records) {
        record_country.push_back(country_index.at(r.country));
        log_pm.push_back(std::log(r.pm25));
    }

    const bool target_observed = country_index.count(target_country) > 0;
    std::size_t target_region = SIZE_MAX;
    if (target_observed) {
        target_region = country_region[country_index.at(target_country)];
    } else {
        const std::string& hint = opts.region_hint;
        if (!hint.empty() && region_index.count(hint)) {
            target_region = region_index.at(hint);
        } else {
            throw ConfigError("hierarchical model: target country '" + target_country +
                              "' has no measurements and its region is unknown; supply a region "
                              "present in the data");
        }
    }

    const Distribution prior_tau_regions =
        opts.prior_tau_regions.value_or(Distribution::half_normal(1));
    const Distribution prior_tau_countries =
        opts.prior_tau_countries.value_or(Distribution::half_normal(1));
    const Distribution prior_tau_cities =
        opts.prior_tau_cities.value_or(Distribution::half_normal(1));

    // Layout: theta_global, theta_region[...], theta_country[...], then the
    // non-fixed spread parameters. Constant priors fix a spread and drop it
    // from the chain.
    const std::size_t nr = regions.size(), nc = countries.size();
    std::vector<McmcParam> params;
    params.push_back({"theta_global", Support::Real});
    for (const auto& r : regions) params.push_back({"theta_region[" + r + "]", Support::Real});
    for (const auto& c : countries) params.push_back({"theta_country[" + c + "]", Support::Real});
    struct TauSlot {
        const Distribution* prior;
        bool fixed;
        double value;          // when fixed
        std::size_t index = 0; // position in the parameter vector otherwise
    };
    auto make_slot = [&](const Distribution& prior, const char* name) {
        TauSlot slot{&prior, prior.is_constant(), prior.is_constant() ? prior.mean() : 0.0};
        if (!slot.fixed) {
            slot.index = params.size();
            params.push_back({name, Support::Positive});
        }
        return slot;
    };
    TauSlot tau_regions = make_slot(prior_tau_regions, "tau_regions");
    TauSlot tau_countries = make_slot(prior_tau_countries, "tau_countries");
    TauSlot tau_cities = make_slot(prior_tau_cities, "tau_cities");

    const double global_sd = opts.global_mean_sd;
    auto log_post = [=, &log_pm, &record_country, &country_region](std::span<const double> x) {
        const double theta_g = x[0];
        const double* theta_r = x.data() + 1;
        const double* theta_c = x.data() + 1 + nr;
        const double tg = tau_regions.fixed ? tau_regions.value : x[tau_regions.index];
        const double tc = tau_countries.fixed ? tau_countries.value : x[tau_countries.index];
        const double ty = tau_cities.fixed ? tau_cities.value : x[tau_cities.index];

        double lp = normal_logpdf(theta_g, 0.0, global_sd);
        if (!tau_regions.fixed) lp += tau_regions.prior->log_density(tg);
        if (!tau_countries.fixed) lp += tau_countries.prior->log_density(tc);
        if (!tau_cities.fixed) lp += tau_cities.prior->log_density(ty);
        if (!std::isfinite(lp)) return lp;

        // Quadratic forms with the shared log(tau) terms hoisted out.
        double q = 0.0;
        for (std::size_t r = 0; r < nr; ++r) {
            const double z = (theta_r[r] - theta_g) / tg;
            q += z * z;
        }
        lp += -0.5 * q - static_cast<double>(nr) * (std::log(tg) + kLogSqrt2Pi);
        q = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            const double z = (theta_c[c] - theta_r[country_region[c]]) / tc;
            q += z * z;
        }
        lp += -0.5 * q - static_cast<double>(nc) * (std::log(tc) + kLogSqrt2Pi);
        q = 0.0;
        for (std::size_t i = 0; i < log_pm.size(); ++i) {
            const double z = (log_pm[i] - theta_c[record_country[i]]) / ty;
            q += z * z;
        }
        lp += -0.5 * q - static_cast<double>(log_pm.size()) * (std::log(ty) + kLogSqrt2Pi);
        return lp;
    };

    // Overdispersed initialisation from the priors, cascading down the
    // hierarchy.
    std::vector<std::vector<double>> inits;
    for (int ch = 0; ch < config.chains; ++ch) {
        Rng rng(config.seed ^ 0xA11CEu, 2000 + static_cast<std::uint64_t>(ch));
        std::vector<double> init(params.size());
        auto draw_tau = [&](const TauSlot& slot) {
            if (slot.fixed) return slot.value;
            double v;
            do {
                slot.prior->sample_one(rng, &v);
            } while (!(v > 1e-3));
            return v;
        };
        const double tg = draw_tau(tau_regions);
        const double tc = draw_tau(tau_countries);
        const double ty = draw_tau(tau_cities);
        init[0] = rng.normal(0.0, global_sd);
        for (std::size_t r = 0; r < nr; ++r) init[1 + r] = rng.normal(init[0], tg);
        for (std::size_t c = 0; c < nc; ++c)
            init[1 + nr + c] = rng.normal(init[1 + country_region[c]], tc);
        if (!tau_regions.fixed) init[tau_regions.index] = tg;
        if (!tau_countries.fixed) init[tau_countries.index] = tc;
        if (!tau_cities.fixed) init[tau_cities.index] = ty;
        inits.push_back(std::move(init));
    }

    PosteriorSamples posterior = mcmc(log_post, params, inits, config);

    // Posterior-predictive background concentration for the target: a new
    // city draw inside the target country, itself drawn through the region
    // when unobserved.
    const std::size_t kept = posterior.kept_per_chain();
    const std::size_t theta_target =
        target_observed ? 1 + nr + country_index.at(target_country) : SIZE_MAX;
    std::vector<std::vector<double>> log_eta(posterior.n_chains()), eta(posterior.n_chains());
    for (std::size_t c = 0; c < posterior.n_chains(); ++c) {
        Rng rng(config.seed ^ 0xE7A0u, 3000 + c);
        for (std::size_t i = 0; i < kept; ++i) {
            const double tc =
                tau_countries.fixed ? tau_countries.value : posterior.draw(c, i, tau_countries.index);
            const double ty =
                tau_cities.fixed ? tau_cities.value : posterior.draw(c, i, tau_cities.index);
            double center;
            if (target_observed) {
                center = posterior.draw(c, i, theta_target);
            } else {
                const double theta_r = posterior.draw(c, i, 1 + target_region);
                center = rng.normal(theta_r, tc);
            }
            const double le = rng.normal(center, ty);
            log_eta[c].push_back(le);
            eta[c].push_back(std::exp(le));
        }
    }
    posterior.append_column("log_eta", log_eta);
    posterior.append_column("eta", eta);
    return posterior;
}

Distribution to_distribution(const PosteriorSamples& posterior, const std::string& name,
                             std::string source_file) {
    if (!posterior.converged()) {
        const auto& diags = posterior.diagnostics();
        double worst_rhat = 0, worst_ess = 1e300;
        for (const auto& d : diags) {
            worst_rhat = std::max(worst_rhat, d.rhat);
            worst_ess = std::min(worst_ess, d.ess);
        }
        std::ostringstream os;
        os << "refusing to build a distribution from an unconverged posterior (worst split-Rhat "
           << worst_rhat << ", worst ESS " << worst_ess << ")";
        throw ConvergenceError(os.str(), worst_rhat, worst_ess);
    }
    return Distribution::empirical(posterior.pooled(name), std::move(source_file));
}

} // namespace voi
