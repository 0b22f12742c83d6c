#ifndef VOI_EVPPI_HPP
#define VOI_EVPPI_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "voi/sample_matrix.hpp"
#include "voi/spline.hpp"

namespace voi {

// Per-parameter(-group) expected value of partial perfect information.
// Estimation form: the expected reduction in output variance from learning
// the target exactly; decision form: the expected reduction in loss.
struct EvppiEstimate {
    std::string target;               // display name, e.g. "eta" or "alpha"
    std::vector<std::string> columns; // regressor columns actually used
    double evppi = 0;                 // clamped to [0, var(Y)] (>= 0 for decision form)
    double evppi_raw = 0;             // pre-clamp value
    double var_y = 0;                 // (weighted) output variance
    double pct_explained = 0;         // 100 * evppi / var_y
    double sd_reduction = 0;          // sd_y * (1 - sqrt(1 - pct/100))
    double bootstrap_se = 0;
    bool clamped = false;
    // Raised when a negative raw estimate exceeds 3 bootstrap SEs, i.e. is
    // larger than Monte Carlo noise can explain.
    bool noise_flag = false;
    bool decision_mode = false; // evppi is in loss units; pct/sd are NaN
    // Fit diagnostics (first fitted output for multi-output targets).
    double edf = 0, gcv = 0, residual_variance = 0;
    bool zero_variance_target = false;
};

struct EvppiOptions {
    int bootstrap = 200;
    std::uint64_t seed = 2024; // bootstrap resampling stream
};

// Output columns and their weights; a single {name, 1.0} entry is the plain
// single-outcome estimator.
using OutputWeights = std::vector<std::pair<std::string, double>>;

EvppiEstimate evppi_estimation(const SampleMatrix& m, const std::vector<std::string>& target_cols,
                               const OutputWeights& outputs, const EvppiOptions& opts = {},
                               const std::string& display_name = {});

// Discrete-decision form: losses per (row, decision), aligned with the
// matrix rows.
struct DecisionProblem {
    std::vector<std::string> decision_names;
    std::vector<std::vector<double>> losses; // one column per decision

    void validate(std::size_t rows) const;
};

EvppiEstimate evppi_decision(const DecisionProblem& problem, const SampleMatrix& m,
                             const std::vector<std::string>& target_cols,
                             const EvppiOptions& opts = {}, const std::string& display_name = {});

struct ParameterGroup {
    std::string name;
    std::vector<std::string> columns; // regressors (already reduced, e.g. alpha -> 3 cols)
};

// Default grouping for the engine's parameter columns: one group per scalar
// parameter, alpha as a single group regressed on its first three
// coordinates. Constant-prior parameters are omitted by the caller.
std::vector<ParameterGroup> default_groups(const std::vector<std::string>& parameter_names);

// One estimate per group, sorted by decreasing EVPPI (ties by name).
// Zero-variance groups get EVPPI 0 without a fit.
std::vector<EvppiEstimate> evppi_all(const SampleMatrix& m,
                                     const std::vector<ParameterGroup>& groups,
                                     const OutputWeights& outputs,
                                     const EvppiOptions& opts = {});

} // namespace voi

#endif // VOI_EVPPI_HPP
