#ifndef VOI_DISTRIBUTION_HPP
#define VOI_DISTRIBUTION_HPP

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "voi/rng.hpp"

namespace voi {

enum class DistKind {
    Normal,
    LogNormal,
    Beta,
    Dirichlet,
    HalfNormal,
    Constant,
    Empirical,
    BiasAdjusted,
};

std::string to_string(DistKind kind);

// A sampleable (and, where meaningful, evaluable) uncertainty object.
//
// Scalar kinds have dim() == 1; Dirichlet draws are simplex vectors of
// dim() == k. Instances are immutable after construction and safe to share
// across threads; each caller supplies its own Rng.
class Distribution {
public:
    static Distribution normal(double mean, double sd);
    // mu/sigma are on the log scale: exp(Normal(mu, sigma)).
    static Distribution lognormal(double mu, double sigma);
    static Distribution beta(double a, double b);
    static Distribution dirichlet(std::vector<double> concentration);
    // |Normal(0, sd)|.
    static Distribution half_normal(double sd);
    static Distribution constant(double value);
    // Resamples the pool with replacement; the pool must hold >= 100 draws.
    static Distribution empirical(std::vector<double> pool, std::string source_file = {});
    // Draws base + Normal(bias_mean, bias_sd); the base may not be Dirichlet.
    static Distribution bias_adjusted(Distribution base, double bias_mean, double bias_sd);

    DistKind kind() const { return kind_; }
    std::size_t dim() const;
    bool is_constant() const { return kind_ == DistKind::Constant; }

    // Writes dim() values to out.
    void sample_one(Rng& rng, double* out) const;
    // n draws, row-major n x dim().
    std::vector<double> sample(Rng& rng, std::size_t n) const;

    // Log-density at a scalar point; -inf outside the support.
    // Throws UnsupportedOperation for Empirical and Constant, and for a
    // BiasAdjusted whose convolution has no tractable form.
    double log_density(double x) const;
    // Dirichlet log-density over a simplex point.
    double log_density(std::span<const double> x) const;

    // Analytic mean/variance (Empirical: pool moments). Dirichlet: of the
    // requested coordinate.
    double mean(std::size_t coord = 0) const;
    double variance(std::size_t coord = 0) const;

    // CDF / quantile for scalar kinds (closed form for the normal family,
    // numeric quadrature for Beta). Used by tests and report density grids.
    double cdf(double x) const;
    double quantile(double p) const;

    const std::vector<double>& pool() const;
    const std::vector<double>& params() const { return params_; }
    const Distribution& base() const;

    nlohmann::json to_json() const;
    // base_dir resolves relative Empirical file references.
    static Distribution from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {});

private:
    Distribution(DistKind kind, std::vector<double> params);

    DistKind kind_;
    std::vector<double> params_;
    std::shared_ptr<const std::vector<double>> pool_;
    std::shared_ptr<const Distribution> base_;
    std::string source_file_;
};

// Reads an Empirical pool from CSV: a single column with header "value".
std::vector<double> read_pool_csv(const std::filesystem::path& path);
void write_pool_csv(const std::filesystem::path& path, std::span<const double> pool);

} // namespace voi

#endif // VOI_DISTRIBUTION_HPP
