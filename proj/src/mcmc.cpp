#include "voi/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "voi/errors.hpp"
#include "voi/rng.hpp"
#include "voi/stats.hpp"

namespace voi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kAdaptBatch = 50;
constexpr double kTargetAccept = 0.44;

double to_unconstrained(double x, Support s) {
    switch (s) {
    case Support::Real: return x;
    case Support::Positive: return std::log(x);
    case Support::UnitInterval: return std::log(x) - std::log1p(-x);
    }
    return x;
}

double to_constrained(double z, Support s) {
    switch (s) {
    case Support::Real: return z;
    case Support::Positive: return std::exp(z);
    case Support::UnitInterval: return 1.0 / (1.0 + std::exp(-z));
    }
    return z;
}

// log |dx/dz| of the constraining transform.
double log_jacobian(double z, Support s) {
    switch (s) {
    case Support::Real: return 0.0;
    case Support::Positive: return z;
    case Support::UnitInterval: {
        // log(x (1-x)) = -z - 2 log(1 + e^{-z}), stable in both tails.
        const double t = std::abs(z);
        return -t - 2.0 * std::log1p(std::exp(-t));
    }
    }
    return 0.0;
}

struct ChainResult {
    std::vector<double> kept; // row-major kept x dim
    std::vector<double> accept_rate;
};

void run_chain(const std::function<double(std::span<const double>)>& log_posterior,
               const std::vector<McmcParam>& params, const std::vector<double>& init,
               const McmcConfig& cfg, std::uint64_t chain_id, ChainResult& out) {
    const std::size_t dim = params.size();
    const int burn_in = cfg.iterations / 2;
    const int kept = cfg.iterations - burn_in;
    Rng rng(cfg.seed, chain_id + 1);

    std::vector<double> z(dim), x(dim);
    for (std::size_t j = 0; j < dim; ++j) z[j] = to_unconstrained(init[j], params[j].support);

    auto target = [&](std::span<const double> zs) {
        double jac = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            x[j] = to_constrained(zs[j], params[j].support);
            jac += log_jacobian(zs[j], params[j].support);
        }
        const double lp = log_posterior(x);
        return std::isnan(lp) ? kNegInf : lp + jac;
    };

    double lp = target(z);
    if (lp == kNegInf)
        throw std::invalid_argument("mcmc: log-posterior not finite at an initial point");

    std::vector<double> log_step(dim, 0.0); // step = exp(log_step), starts at 1
    std::vector<int> batch_accepts(dim, 0);
    std::vector<long> post_accepts(dim, 0);
    out.kept.assign(static_cast<std::size_t>(kept) * dim, 0.0);
    int batch_index = 0;

    for (int it = 0; it < cfg.iterations; ++it) {
        const bool adapting = it < burn_in;
        for (std::size_t j = 0; j < dim; ++j) {
            const double old_z = z[j];
            z[j] = old_z + std::exp(log_step[j]) * rng.normal();
            const double lp_new = target(z);
            const double log_u = std::log(rng.uniform_pos());
            if (log_u < lp_new - lp) {
                lp = lp_new;
                if (adapting)
                    ++batch_accepts[j];
                else
                    ++post_accepts[j];
            } else {
                z[j] = old_z;
            }
        }
        if (adapting && (it + 1) % kAdaptBatch == 0) {
            ++batch_index;
            const double delta = std::min(0.25, 1.0 / std::sqrt(static_cast<double>(batch_index)));
            for (std::size_t j = 0; j < dim; ++j) {
                const double rate = static_cast<double>(batch_accepts[j]) / kAdaptBatch;
                log_step[j] += (rate > kTargetAccept) ? delta : -delta;
                batch_accepts[j] = 0;
            }
        }
        if (it >= burn_in) {
            const std::size_t row = static_cast<std::size_t>(it - burn_in) * dim;
            for (std::size_t j = 0; j < dim; ++j)
                out.kept[row + j] = to_constrained(z[j], params[j].support);
        }
    }
    out.accept_rate.resize(dim);
    for (std::size_t j = 0; j < dim; ++j)
        out.accept_rate[j] = static_cast<double>(post_accepts[j]) / kept;
}

} // namespace

double split_rhat(const std::vector<std::vector<double>>& sequences) {
    // Split each sequence in half, then compare within- to between-sequence
    // variance over all halves.
    std::vector<std::vector<double>> halves;
    for (const auto& seq : sequences) {
        const std::size_t h = seq.size() / 2;
        halves.emplace_back(seq.begin(), seq.begin() + h);
        halves.emplace_back(seq.end() - h, seq.end());
    }
    const std::size_t m = halves.size();
    const std::size_t n = halves[0].size();
    if (n < 2) return std::numeric_limits<double>::infinity();
    std::vector<double> means(m), vars(m);
    for (std::size_t c = 0; c < m; ++c) {
        means[c] = mean(halves[c]);
        vars[c] = variance(halves[c]);
    }
    const double w = mean(vars);
    const double b = static_cast<double>(n) * variance(means);
    if (w <= 0.0) return 1.0; // identical constant halves, e.g. a fixed parameter
    const double var_plus = (static_cast<double>(n - 1) / n) * w + b / static_cast<double>(n);
    return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<std::vector<double>>& sequences) {
    const std::size_t m = sequences.size();
    const std::size_t n = sequences[0].size();
    std::vector<double> means(m), vars(m);
    for (std::size_t c = 0; c < m; ++c) {
        means[c] = mean(sequences[c]);
        vars[c] = variance(sequences[c]);
    }
    const double w = mean(vars);
    if (w <= 0.0) return static_cast<double>(m * n);
    double b = 0.0;
    if (m > 1) b = static_cast<double>(n) * variance(means);
    const double var_plus = (static_cast<double>(n - 1) / n) * w + b / static_cast<double>(n);

    auto combined_rho = [&](std::size_t t) {
        double acov = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i + t < n; ++i)
                s += (sequences[c][i] - means[c]) * (sequences[c][i + t] - means[c]);
            acov += s / static_cast<double>(n - t);
        }
        acov /= static_cast<double>(m);
        return 1.0 - (w - acov) / var_plus;
    };

    // Geyer initial positive-pair truncation.
    double tail = 0.0;
    const std::size_t max_lag = std::min<std::size_t>(n - 1, 2000);
    for (std::size_t t = 1; t + 1 <= max_lag; t += 2) {
        const double pair = combined_rho(t) + combined_rho(t + 1);
        if (pair <= 0.0) break;
        tail += pair;
    }
    const double ess = static_cast<double>(m * n) / (1.0 + 2.0 * tail);
    return std::min(ess, static_cast<double>(m * n));
}

std::size_t PosteriorSamples::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    throw ConfigError("posterior: no parameter '" + name + "'");
}

std::vector<double> PosteriorSamples::pooled(const std::string& name) const {
    const std::size_t j = index_of(name);
    std::vector<double> out;
    out.reserve(n_chains() * kept_);
    for (std::size_t c = 0; c < n_chains(); ++c)
        for (std::size_t i = 0; i < kept_; ++i) out.push_back(draw(c, i, j));
    return out;
}

const ParamDiagnostics& PosteriorSamples::diagnostic(const std::string& name) const {
    for (const auto& d : diag_)
        if (d.name == name) return d;
    throw ConfigError("posterior: no diagnostics for '" + name + "'");
}

void PosteriorSamples::append_column(const std::string& name,
                                     const std::vector<std::vector<double>>& per_chain) {
    if (per_chain.size() != n_chains())
        throw std::invalid_argument("append_column: chain count mismatch");
    for (const auto& c : per_chain)
        if (c.size() != kept_) throw std::invalid_argument("append_column: length mismatch");
    const std::size_t old_dim = names_.size();
    for (std::size_t c = 0; c < n_chains(); ++c) {
        std::vector<double> widened(kept_ * (old_dim + 1));
        for (std::size_t i = 0; i < kept_; ++i) {
            for (std::size_t j = 0; j < old_dim; ++j)
                widened[i * (old_dim + 1) + j] = chains_[c][i * old_dim + j];
            widened[i * (old_dim + 1) + old_dim] = per_chain[c][i];
        }
        chains_[c] = std::move(widened);
    }
    names_.push_back(name);
    ParamDiagnostics d;
    d.name = name;
    d.rhat = split_rhat(per_chain);
    d.ess = effective_sample_size(per_chain);
    d.accept_rate = 1.0;
    std::vector<double> all;
    for (const auto& c : per_chain) all.insert(all.end(), c.begin(), c.end());
    d.mean = mean(all);
    d.sd = sd(all);
    diag_.push_back(std::move(d));
}

nlohmann::json PosteriorSamples::diagnostics_json() const {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& d : diag_) {
        params[d.name] = {{"rhat", d.rhat},
                          {"ess", d.ess},
                          {"accept_rate", d.accept_rate},
                          {"mean", d.mean},
                          {"sd", d.sd}};
    }
    return nlohmann::json{{"seed", seed_},
                          {"chains", n_chains()},
                          {"kept_per_chain", kept_},
                          {"converged", converged_},
                          {"rhat_limit", rhat_limit_},
                          {"ess_limit", ess_limit_},
                          {"params", params}};
}

PosteriorSamples mcmc(const std::function<double(std::span<const double>)>& log_posterior,
                      const std::vector<McmcParam>& params,
                      const std::vector<std::vector<double>>& inits, const McmcConfig& config) {
    if (params.empty()) throw std::invalid_argument("mcmc: no parameters");
    if (config.chains < 2) throw std::invalid_argument("mcmc: need >= 2 chains");
    if (config.iterations < 2000) throw std::invalid_argument("mcmc: need >= 2000 iterations");
    if (inits.size() != static_cast<std::size_t>(config.chains))
        throw std::invalid_argument("mcmc: need one initial point per chain");
    for (const auto& init : inits)
        if (init.size() != params.size())
            throw std::invalid_argument("mcmc: initial point dimension mismatch");

    const std::size_t dim = params.size();
    std::vector<ChainResult> results(config.chains);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(config.chains);
    for (int c = 0; c < config.chains; ++c) {
        pool.emplace_back([&, c]() {
            try {
                run_chain(log_posterior, params, inits[c], config, static_cast<std::uint64_t>(c),
                          results[c]);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    PosteriorSamples out;
    out.seed_ = config.seed;
    out.rhat_limit_ = config.rhat_limit;
    out.ess_limit_ = config.ess_limit;
    for (const auto& p : params) out.names_.push_back(p.name);
    out.kept_ = static_cast<std::size_t>(config.iterations - config.iterations / 2);
    for (auto& r : results) out.chains_.push_back(std::move(r.kept));

    double worst_rhat = 0.0, worst_ess = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dim; ++j) {
        std::vector<std::vector<double>> seqs;
        for (std::size_t c = 0; c < out.n_chains(); ++c) {
            std::vector<double> s(out.kept_);
            for (std::size_t i = 0; i < out.kept_; ++i) s[i] = out.draw(c, i, j);
            seqs.push_back(std::move(s));
        }
        ParamDiagnostics d;
        d.name = params[j].name;
        d.rhat = split_rhat(seqs);
        d.ess = effective_sample_size(seqs);
        double acc = 0.0;
        for (const auto& r : results) acc += r.accept_rate[j];
        d.accept_rate = acc / static_cast<double>(config.chains);
        std::vector<double> all;
        for (const auto& s : seqs) all.insert(all.end(), s.begin(), s.end());
        d.mean = mean(all);
        d.sd = sd(all);
        worst_rhat = std::max(worst_rhat, d.rhat);
        worst_ess = std::min(worst_ess, d.ess);
        out.diag_.push_back(std::move(d));
    }
    out.converged_ = worst_rhat <= config.rhat_limit && worst_ess >= config.ess_limit;

    if (config.check_convergence && !out.converged_) {
        std::ostringstream os;
        os << "mcmc did not converge: worst split-Rhat " << worst_rhat << " (limit "
           << config.rhat_limit << "), worst ESS " << worst_ess << " (limit " << config.ess_limit
           << "); consider raising the iteration count";
        throw ConvergenceError(os.str(), worst_rhat, worst_ess);
    }
    return out;
}

} // namespace voi
