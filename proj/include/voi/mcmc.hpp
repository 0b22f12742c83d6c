#ifndef VOI_MCMC_HPP
#define VOI_MCMC_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace voi {

enum class Support { Real, Positive, UnitInterval };

struct McmcParam {
    std::string name;
    Support support = Support::Real;
};

struct McmcConfig {
    int chains = 4;
    int iterations = 5000; // per chain; the first half is burn-in/adaptation
    std::uint64_t seed = 1;
    double rhat_limit = 1.05;
    double ess_limit = 100.0;
    bool check_convergence = true;
};

struct ParamDiagnostics {
    std::string name;
    double rhat = 0;
    double ess = 0;
    double accept_rate = 0; // post-burn-in; derived columns report 1
    double mean = 0;
    double sd = 0;
};

// Post-burn-in MCMC output: per-chain draw blocks plus convergence
// diagnostics. Derived columns (posterior-predictive transforms) can be
// appended after sampling and get their own diagnostics entry.
class PosteriorSamples {
public:
    std::size_t n_chains() const { return chains_.size(); }
    std::size_t kept_per_chain() const { return kept_; }
    std::size_t dim() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    double draw(std::size_t chain, std::size_t iter, std::size_t param) const {
        return chains_[chain][iter * names_.size() + param];
    }
    std::size_t index_of(const std::string& name) const;
    // All kept draws of one parameter, chains concatenated.
    std::vector<double> pooled(const std::string& name) const;

    const std::vector<ParamDiagnostics>& diagnostics() const { return diag_; }
    const ParamDiagnostics& diagnostic(const std::string& name) const;
    bool converged() const { return converged_; }
    std::uint64_t seed() const { return seed_; }

    // per_chain[c] holds kept_per_chain() values for chain c.
    void append_column(const std::string& name,
                       const std::vector<std::vector<double>>& per_chain);

    nlohmann::json diagnostics_json() const;

private:
    friend PosteriorSamples mcmc(const std::function<double(std::span<const double>)>&,
                                 const std::vector<McmcParam>&,
                                 const std::vector<std::vector<double>>&, const McmcConfig&);
    std::vector<std::string> names_;
    std::vector<std::vector<double>> chains_; // row-major kept x dim per chain
    std::size_t kept_ = 0;
    std::vector<ParamDiagnostics> diag_;
    bool converged_ = true;
    std::uint64_t seed_ = 0;
    double rhat_limit_ = 1.05, ess_limit_ = 100.0;
};

// Split-half potential scale reduction over >= 2 sequences.
double split_rhat(const std::vector<std::vector<double>>& sequences);
// Effective sample size of combined chains (autocorrelation truncated by
// Geyer's initial positive-pair rule).
double effective_sample_size(const std::vector<std::vector<double>>& sequences);

// Component-wise adaptive random-walk Metropolis on unconstrained
// transforms (log for positive, logit for unit-interval parameters) with
// Jacobian corrections. log_posterior takes constrained values. Adaptation
// targets 0.44 acceptance per component and runs only during burn-in.
// Chains run in parallel with independent RNG streams. Throws
// ConvergenceError when diagnostics fail (unless disabled in the config).
PosteriorSamples mcmc(const std::function<double(std::span<const double>)>& log_posterior,
                      const std::vector<McmcParam>& params,
                      const std::vector<std::vector<double>>& inits, const McmcConfig& config);

} // namespace voi

#endif // VOI_MCMC_HPP
