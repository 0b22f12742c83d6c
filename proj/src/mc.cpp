#include "voi/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "voi/csv.hpp"
#include "voi/errors.hpp"
#include "voi/stats.hpp"

namespace voi {

namespace {

const char* kAlphaColumns[kNumMotorised] = {"alpha[bus]", "alpha[car]", "alpha[motorbike]",
                                            "alpha[goods]"};

struct ResolvedPriors {
    const Distribution* eta;
    const Distribution* zeta;
    const Distribution* alpha; // Dirichlet(4), or null when fixed
    std::array<double, kNumMotorised> alpha_fixed{};
    const Distribution* lambda_walk;
    const Distribution* lambda_cycle;
    std::array<const Distribution*, kNumDiseases> xi{};
};

ResolvedPriors resolve(const PriorMap& priors) {
    auto find = [&](const std::string& name) -> const Distribution* {
        auto it = priors.find(name);
        if (it == priors.end())
            throw ConfigError("propagate: missing distribution for parameter '" + name + "'");
        return &it->second;
    };
    ResolvedPriors r{};
    r.eta = find("eta");
    r.zeta = find("zeta");
    r.lambda_walk = find("lambda_walk");
    r.lambda_cycle = find("lambda_cycle");
    for (int d = 0; d < kNumDiseases; ++d)
        r.xi[d] = find(std::string("xi_") + disease_label(static_cast<Disease>(d)));
    if (auto it = priors.find("alpha"); it != priors.end()) {
        if (it->second.kind() != DistKind::Dirichlet || it->second.dim() != kNumMotorised)
            throw ConfigError("propagate: 'alpha' must be a Dirichlet over 4 modes");
        r.alpha = &it->second;
    } else {
        double sum = 0.0;
        for (int k = 0; k < kNumMotorised; ++k) {
            auto it2 = priors.find(kAlphaColumns[k]);
            if (it2 == priors.end())
                throw ConfigError("propagate: missing 'alpha' (Dirichlet) or fixed '" +
                                  std::string(kAlphaColumns[k]) + "'");
            if (!it2->second.is_constant())
                throw ConfigError("propagate: per-mode alpha entries must be constant");
            r.alpha_fixed[k] = it2->second.mean();
            sum += r.alpha_fixed[k];
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ConfigError("propagate: fixed alpha entries must sum to 1");
    }
    return r;
}

// One joint draw in the canonical sampling order. Column layout matches
// parameter_columns() over canonical_parameter_names().
void draw_row(const ResolvedPriors& p, Rng& rng, ParameterVector& x) {
    p.eta->sample_one(rng, &x.background_pm);
    p.zeta->sample_one(rng, &x.traffic_fraction);
    if (p.alpha)
        p.alpha->sample_one(rng, x.mode_shares.data());
    else
        x.mode_shares = p.alpha_fixed;
    p.lambda_walk->sample_one(rng, &x.walk_mmet);
    p.lambda_cycle->sample_one(rng, &x.cycle_mmet);
    for (int d = 0; d < kNumDiseases; ++d) p.xi[d]->sample_one(rng, &x.rr_scale[d]);
}

} // namespace

std::vector<std::string> canonical_parameter_names() {
    std::vector<std::string> names = {"eta", "zeta", "alpha", "lambda_walk", "lambda_cycle"};
    for (int d = 0; d < kNumDiseases; ++d)
        names.push_back(std::string("xi_") + disease_label(static_cast<Disease>(d)));
    return names;
}

std::vector<std::string> parameter_columns(const std::string& name) {
    if (name == "alpha")
        return {kAlphaColumns[0], kAlphaColumns[1], kAlphaColumns[2], kAlphaColumns[3]};
    return {name};
}

SampleMatrix propagate(const PriorMap& priors, const ConstantTables& tables,
                       const CurveSet& curves, const McOptions& opts) {
    if (opts.samples < 1) throw ConfigError("propagate: need at least 1 sample");
    if (opts.samples < 1000)
        std::cerr << "warning: R = " << opts.samples
                  << " is small; EVPPI estimates need R >= 1000\n";
    const ResolvedPriors resolved = resolve(priors);
    const std::size_t R = opts.samples;
    const std::size_t ns = tables.n_scenarios();
    const std::size_t base = tables.baseline_index();

    // Parameter columns in canonical order, then sorted by name for storage.
    std::vector<std::string> col_names;
    for (const auto& p : canonical_parameter_names())
        for (const auto& c : parameter_columns(p)) col_names.push_back(c);
    const std::size_t n_param_cols = col_names.size();

    std::vector<std::string> out_names;
    for (std::size_t s = 0; s < ns; ++s)
        out_names.push_back("deaths[" + tables.scenarios()[s] + "]");
    for (std::size_t s = 0; s < ns; ++s)
        if (s != base) out_names.push_back("deaths_averted[" + tables.scenarios()[s] + "]");

    std::vector<std::vector<double>> param_cols(n_param_cols, std::vector<double>(R));
    std::vector<std::vector<double>> out_cols(out_names.size(), std::vector<double>(R));

    std::size_t n_threads = opts.threads > 0 ? static_cast<std::size_t>(opts.threads)
                                             : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, R);

    std::atomic<bool> failed{false};
    std::mutex err_mutex;
    std::size_t err_row = SIZE_MAX;
    std::string err_message;
    std::atomic<std::size_t> extrapolations{0};

    auto worker = [&](std::size_t begin, std::size_t end) {
        ParameterVector x;
        std::size_t local_extra = 0;
        for (std::size_t r = begin; r < end && !failed.load(std::memory_order_relaxed); ++r) {
            Rng rng(opts.seed, r + 1); // stream 0 reserved for the engine itself
            draw_row(resolved, rng, x);
            try {
                const ModelOutput y = evaluate(tables, curves, x);
                local_extra += y.extrapolation_warnings;
                std::size_t c = 0;
                param_cols[c++][r] = x.background_pm;
                param_cols[c++][r] = x.traffic_fraction;
                for (int k = 0; k < kNumMotorised; ++k) param_cols[c++][r] = x.mode_shares[k];
                param_cols[c++][r] = x.walk_mmet;
                param_cols[c++][r] = x.cycle_mmet;
                for (int d = 0; d < kNumDiseases; ++d) param_cols[c++][r] = x.rr_scale[d];
                std::size_t oc = 0;
                for (std::size_t s = 0; s < ns; ++s) out_cols[oc++][r] = y.deaths[s];
                for (std::size_t s = 0; s < ns; ++s)
                    if (s != base) out_cols[oc++][r] = y.deaths_averted[s];
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (r < err_row) {
                    err_row = r;
                    std::ostringstream os;
                    os << "model evaluation failed at row " << r << ": " << e.what()
                       << " (draws: eta=" << x.background_pm << " zeta=" << x.traffic_fraction
                       << " alpha=[" << x.mode_shares[0] << "," << x.mode_shares[1] << ","
                       << x.mode_shares[2] << "," << x.mode_shares[3]
                       << "] lambda_walk=" << x.walk_mmet << " lambda_cycle=" << x.cycle_mmet
                       << ")";
                    err_message = os.str();
                }
                failed.store(true, std::memory_order_relaxed);
            }
        }
        extrapolations.fetch_add(local_extra, std::memory_order_relaxed);
    };

    if (n_threads <= 1) {
        worker(0, R);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (R + n_threads - 1) / n_threads;
        for (std::size_t t = 0; t < n_threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(R, begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw ModelEvalError(err_message);
    if (extrapolations.load() > 0)
        std::cerr << "warning: " << extrapolations.load()
                  << " dose-response evaluations beyond the tabulated range (clamped)\n";

    // Sort parameter columns by name for storage.
    std::vector<std::size_t> order(n_param_cols);
    for (std::size_t i = 0; i < n_param_cols; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return col_names[a] < col_names[b]; });

    SampleMatrix m;
    m.rows = R;
    for (std::size_t i : order) {
        m.param_names.push_back(col_names[i]);
        m.params.push_back(std::move(param_cols[i]));
    }
    m.output_names = std::move(out_names);
    m.outputs = std::move(out_cols);
    return m;
}

const std::vector<double>& SampleMatrix::param(const std::string& name) const {
    for (std::size_t i = 0; i < param_names.size(); ++i)
        if (param_names[i] == name) return params[i];
    throw ConfigError("sample matrix: no parameter column '" + name + "'");
}

const std::vector<double>& SampleMatrix::output(const std::string& name) const {
    for (std::size_t i = 0; i < output_names.size(); ++i)
        if (output_names[i] == name) return outputs[i];
    throw ConfigError("sample matrix: no output column '" + name + "'");
}

bool SampleMatrix::has_param(const std::string& name) const {
    return std::find(param_names.begin(), param_names.end(), name) != param_names.end();
}

bool SampleMatrix::has_output(const std::string& name) const {
    return std::find(output_names.begin(), output_names.end(), name) != output_names.end();
}

bool SampleMatrix::is_output_name(const std::string& name) {
    return name.rfind("deaths[", 0) == 0 || name.rfind("deaths_averted[", 0) == 0;
}

void SampleMatrix::write_csv(const std::filesystem::path& path) const {
    std::vector<std::string> header = param_names;
    header.insert(header.end(), output_names.begin(), output_names.end());
    CsvWriter w(path, header);
    std::vector<double> row(header.size());
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t c = 0;
        for (const auto& col : params) row[c++] = col[r];
        for (const auto& col : outputs) row[c++] = col[r];
        w.row(row);
    }
    w.close();
}

SampleMatrix SampleMatrix::read_csv(const std::filesystem::path& path) {
    CsvTable t = voi::read_csv(path);
    SampleMatrix m;
    m.rows = t.rows.size();
    std::vector<bool> is_out(t.header.size());
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        is_out[c] = is_output_name(t.header[c]);
        if (is_out[c]) {
            m.output_names.push_back(t.header[c]);
            m.outputs.emplace_back(m.rows);
        } else {
            m.param_names.push_back(t.header[c]);
            m.params.emplace_back(m.rows);
        }
    }
    for (std::size_t r = 0; r < m.rows; ++r) {
        std::size_t pi = 0, oi = 0;
        for (std::size_t c = 0; c < t.header.size(); ++c) {
            const double v = t.number(r, c);
            if (is_out[c])
                m.outputs[oi++][r] = v;
            else
                m.params[pi++][r] = v;
        }
    }
    return m;
}

OutcomeSummary summarize(const SampleMatrix& m) {
    if (m.rows < 2) throw ConfigError("summarize: need at least 2 rows");
    OutcomeSummary s;
    s.rows = m.rows;
    for (std::size_t i = 0; i < m.output_names.size(); ++i) {
        s.names.push_back(m.output_names[i]);
        const double mu = mean(m.outputs[i]);
        const double var = variance(m.outputs[i]);
        s.mean.push_back(mu);
        s.variance.push_back(var);
        s.sd.push_back(std::sqrt(var));
        s.mcse.push_back(std::sqrt(var / static_cast<double>(m.rows)));
    }
    return s;
}

nlohmann::json OutcomeSummary::to_json() const {
    nlohmann::json j;
    j["rows"] = rows;
    nlohmann::json outs = nlohmann::json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
        outs[names[i]] = {{"mean", mean[i]},
                          {"variance", variance[i]},
                          {"sd", sd[i]},
                          {"mcse", mcse[i]}};
    }
    j["outputs"] = outs;
    return j;
}

double generalized_variance(const SampleMatrix& m, const std::map<std::string, double>& weights) {
    if (weights.empty()) throw ConfigError("generalized_variance: empty weight map");
    double total = 0.0, weight_sum = 0.0;
    for (const auto& [name, w] : weights) {
        if (w < 0) throw ConfigError("generalized_variance: negative weight for '" + name + "'");
        weight_sum += w;
        total += w * variance(m.output(name));
    }
    if (weight_sum <= 0) throw ConfigError("generalized_variance: all weights are zero");
    return total;
}

} // namespace voi
