#include "voi/evppi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "voi/errors.hpp"
#include "voi/rng.hpp"
#include "voi/stats.hpp"

namespace voi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join_columns(const std::vector<std::string>& cols) {
    std::string s;
    for (const auto& c : cols) {
        if (!s.empty()) s += "+";
        s += c;
    }
    return s;
}

void fill_representations(EvppiEstimate& e) {
    if (e.decision_mode || e.var_y <= 0.0) {
        e.pct_explained = e.decision_mode ? kNaN : 0.0;
        e.sd_reduction = e.decision_mode ? kNaN : 0.0;
        return;
    }
    e.pct_explained = 100.0 * e.evppi / e.var_y;
    e.sd_reduction = std::sqrt(e.var_y) * (1.0 - std::sqrt(1.0 - e.pct_explained / 100.0));
}

std::vector<std::span<const double>> target_spans(const SampleMatrix& m,
                                                  const std::vector<std::string>& cols) {
    std::vector<std::span<const double>> spans;
    spans.reserve(cols.size());
    for (const auto& c : cols) spans.emplace_back(m.param(c));
    return spans;
}

bool column_constant(const std::vector<double>& col) {
    for (double v : col)
        if (v != col.front()) return false;
    return true;
}

} // namespace

EvppiEstimate evppi_estimation(const SampleMatrix& m, const std::vector<std::string>& target_cols,
                               const OutputWeights& outputs, const EvppiOptions& opts,
                               const std::string& display_name) {
    if (target_cols.empty()) throw std::invalid_argument("evppi: empty target");
    if (outputs.empty()) throw std::invalid_argument("evppi: no outputs");
    if (m.rows < 100) throw std::invalid_argument("evppi: need R >= 100 rows");

    EvppiEstimate e;
    e.target = display_name.empty() ? join_columns(target_cols) : display_name;
    e.columns = target_cols;

    const auto x = target_spans(m, target_cols);

    // One fit per output column; EVPPI terms combine by output weight.
    double var_y = 0.0, expected_conditional_var = 0.0;
    std::vector<const std::vector<double>*> ys;
    std::vector<const std::vector<double>*> fitted;
    std::vector<std::vector<double>> fitted_store;
    std::vector<double> weights;
    bool first = true;
    for (const auto& [name, w] : outputs) {
        if (w < 0) throw std::invalid_argument("evppi: negative output weight");
        if (w == 0) continue;
        const std::vector<double>& y = m.output(name);
        const SplineFit fit = fit_smooth(x, y);
        var_y += w * variance(y);
        expected_conditional_var += w * fit.residual_variance();
        if (first) {
            e.edf = fit.edf();
            e.gcv = fit.gcv();
            first = false;
        }
        e.residual_variance += w * fit.residual_variance();
        ys.push_back(&y);
        fitted_store.push_back(fit.fitted());
        weights.push_back(w);
    }
    if (ys.empty()) throw std::invalid_argument("evppi: all output weights are zero");
    for (const auto& f : fitted_store) fitted.push_back(&f);

    e.var_y = var_y;
    e.evppi_raw = var_y - expected_conditional_var;
    e.evppi = std::clamp(e.evppi_raw, 0.0, var_y);
    e.clamped = e.evppi != e.evppi_raw;

    // Row bootstrap of the plug-in statistic with the fitted surfaces held
    // fixed; captures the Monte Carlo noise of var(Y) - mean(residual^2).
    if (opts.bootstrap > 0) {
        Rng rng(opts.seed, 0);
        const std::size_t n = m.rows;
        std::vector<double> stats(opts.bootstrap);
        std::vector<std::size_t> idx(n);
        for (int b = 0; b < opts.bootstrap; ++b) {
            for (std::size_t r = 0; r < n; ++r) idx[r] = rng.uniform_index(n);
            double stat = 0.0;
            for (std::size_t o = 0; o < ys.size(); ++o) {
                const std::vector<double>& y = *ys[o];
                const std::vector<double>& f = *fitted[o];
                double sum = 0.0, sumsq = 0.0, rss = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    const double yv = y[idx[r]];
                    sum += yv;
                    sumsq += yv * yv;
                    const double resid = yv - f[idx[r]];
                    rss += resid * resid;
                }
                const double mean_b = sum / n;
                const double var_b = (sumsq - n * mean_b * mean_b) / (n - 1);
                stat += weights[o] * (var_b - rss / n);
            }
            stats[b] = stat;
        }
        e.bootstrap_se = sd(stats);
    }
    if (e.evppi_raw < 0 && std::abs(e.evppi_raw) > 3.0 * e.bootstrap_se) e.noise_flag = true;

    fill_representations(e);
    return e;
}

void DecisionProblem::validate(std::size_t rows) const {
    if (decision_names.size() < 2)
        throw std::invalid_argument("decision problem: need at least 2 decisions");
    if (losses.size() != decision_names.size())
        throw std::invalid_argument("decision problem: loss column count mismatch");
    for (const auto& col : losses) {
        if (col.size() != rows)
            throw std::invalid_argument("decision problem: loss rows not aligned with samples");
        for (double v : col)
            if (!std::isfinite(v))
                throw std::invalid_argument("decision problem: non-finite loss value");
    }
}

EvppiEstimate evppi_decision(const DecisionProblem& problem, const SampleMatrix& m,
                             const std::vector<std::string>& target_cols,
                             const EvppiOptions& opts, const std::string& display_name) {
    problem.validate(m.rows);
    if (m.rows < 100) throw std::invalid_argument("evppi: need R >= 100 rows");
    const std::size_t n = m.rows;
    const std::size_t n_dec = problem.decision_names.size();
    const auto x = target_spans(m, target_cols);

    EvppiEstimate e;
    e.target = display_name.empty() ? join_columns(target_cols) : display_name;
    e.columns = target_cols;
    e.decision_mode = true;

    // Expected loss of the best decision under current information.
    double baseline = std::numeric_limits<double>::infinity();
    for (const auto& col : problem.losses) baseline = std::min(baseline, mean(col));

    // Conditional expected loss per decision, then the expected value of
    // deciding after seeing the target.
    std::vector<std::vector<double>> fitted;
    bool first = true;
    for (std::size_t d = 0; d < n_dec; ++d) {
        SplineFit fit = fit_smooth(x, problem.losses[d]);
        if (first) {
            e.edf = fit.edf();
            e.gcv = fit.gcv();
            e.residual_variance = fit.residual_variance();
            first = false;
        }
        fitted.push_back(fit.fitted());
    }
    std::vector<double> row_min(n);
    for (std::size_t r = 0; r < n; ++r) {
        double best = fitted[0][r];
        for (std::size_t d = 1; d < n_dec; ++d) best = std::min(best, fitted[d][r]);
        row_min[r] = best;
    }
    e.evppi_raw = baseline - mean(row_min);
    e.evppi = std::max(0.0, e.evppi_raw);
    e.clamped = e.evppi != e.evppi_raw;
    e.var_y = kNaN;

    if (opts.bootstrap > 0) {
        Rng rng(opts.seed, 0);
        std::vector<double> stats(opts.bootstrap);
        std::vector<std::size_t> idx(n);
        for (int b = 0; b < opts.bootstrap; ++b) {
            for (std::size_t r = 0; r < n; ++r) idx[r] = rng.uniform_index(n);
            double base_b = std::numeric_limits<double>::infinity();
            for (const auto& col : problem.losses) {
                double s = 0.0;
                for (std::size_t r = 0; r < n; ++r) s += col[idx[r]];
                base_b = std::min(base_b, s / n);
            }
            double s = 0.0;
            for (std::size_t r = 0; r < n; ++r) s += row_min[idx[r]];
            stats[b] = base_b - s / n;
        }
        e.bootstrap_se = sd(stats);
    }
    if (e.evppi_raw < 0 && std::abs(e.evppi_raw) > 3.0 * e.bootstrap_se) e.noise_flag = true;
    fill_representations(e);
    return e;
}

std::vector<ParameterGroup> default_groups(const std::vector<std::string>& parameter_names) {
    std::vector<ParameterGroup> groups;
    bool has_alpha = false;
    for (const auto& name : parameter_names) {
        if (name.rfind("alpha[", 0) == 0) {
            has_alpha = true;
            continue;
        }
        groups.push_back({name, {name}});
    }
    if (has_alpha) {
        // The fourth coordinate is redundant on the simplex and would make
        // the tensor design rank-deficient.
        groups.push_back({"alpha", {"alpha[bus]", "alpha[car]", "alpha[motorbike]"}});
    }
    return groups;
}

std::vector<EvppiEstimate> evppi_all(const SampleMatrix& m,
                                     const std::vector<ParameterGroup>& groups,
                                     const OutputWeights& outputs, const EvppiOptions& opts) {
    std::vector<EvppiEstimate> estimates;
    for (const auto& group : groups) {
        bool all_constant = true;
        for (const auto& col : group.columns)
            if (!column_constant(m.param(col))) all_constant = false;
        if (all_constant) {
            EvppiEstimate e;
            e.target = group.name;
            e.columns = group.columns;
            e.zero_variance_target = true;
            double var_y = 0.0;
            for (const auto& [name, w] : outputs) var_y += w * variance(m.output(name));
            e.var_y = var_y;
            fill_representations(e);
            estimates.push_back(std::move(e));
            continue;
        }
        estimates.push_back(evppi_estimation(m, group.columns, outputs, opts, group.name));
    }
    std::sort(estimates.begin(), estimates.end(), [](const EvppiEstimate& a, const EvppiEstimate& b) {
        if (a.evppi != b.evppi) return a.evppi > b.evppi;
        return a.target < b.target;
    });
    return estimates;
}

} // namespace voi
