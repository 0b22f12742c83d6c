#ifndef VOI_MC_HPP
#define VOI_MC_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "voi/distribution.hpp"
#include "voi/model.hpp"
#include "voi/sample_matrix.hpp"

namespace voi {

// Canonical parameter names: eta, zeta, alpha, lambda_walk, lambda_cycle,
// xi_<disease>. "alpha" must be a Dirichlet over (bus, car, motorbike,
// goods); a fixed simplex may be given instead as four Constant entries
// "alpha[bus]" ... "alpha[goods]".
using PriorMap = std::map<std::string, Distribution>;

std::vector<std::string> canonical_parameter_names();
// Matrix column names for one engine parameter ("alpha" expands to four).
std::vector<std::string> parameter_columns(const std::string& name);

struct McOptions {
    std::size_t samples = 5000;
    std::uint64_t seed = 1;
    int threads = 0; // 0: hardware concurrency
};

// Draws joint samples, evaluates the model per draw and assembles the
// aligned matrix. Deterministic for a fixed seed regardless of thread
// count: row r always uses the (seed, r+1) RNG stream.
SampleMatrix propagate(const PriorMap& priors, const ConstantTables& tables,
                       const CurveSet& curves, const McOptions& opts);

struct OutcomeSummary {
    std::vector<std::string> names;
    std::vector<double> mean;
    std::vector<double> variance; // divisor R-1
    std::vector<double> sd;
    std::vector<double> mcse; // sd / sqrt(R)
    std::size_t rows = 0;

    nlohmann::json to_json() const;
};

OutcomeSummary summarize(const SampleMatrix& m);

// Weighted sum of output variances; weights >= 0, at least one > 0.
double generalized_variance(const SampleMatrix& m, const std::map<std::string, double>& weights);

} // namespace voi

#endif // VOI_MC_HPP
