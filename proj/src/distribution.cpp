#include "voi/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "voi/csv.hpp"
#include "voi/errors.hpp"

namespace voi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562; // log(sqrt(2*pi))

double normal_logpdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

double normal_cdf(double x, double mean, double sd) {
    return 0.5 * std::erfc(-(x - mean) / (sd * 1.4142135623730950488));
}

// Gauss-Hermite nodes/weights (physicists' convention) via the Golub-Welsch
// tridiagonal eigenproblem, solved with plain QL iteration to stay free of
// an Eigen dependency in this translation unit.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussHermite gauss_hermite(int n) {
    // Symmetric tridiagonal Jacobi matrix: zero diagonal, off-diagonal sqrt(k/2).
    std::vector<double> d(n, 0.0), e(n, 0.0);
    for (int k = 1; k < n; ++k) e[k - 1] = std::sqrt(k / 2.0);
    // First components of eigenvectors, for the weights.
    std::vector<double> q(n, 0.0);
    q[0] = 1.0;
    std::vector<std::vector<double>> z(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) z[i][i] = 1.0;

    // QL with implicit shifts (Numerical-Recipes-style tqli).
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-300 + 1e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 100) throw std::runtime_error("gauss_hermite: QL failed");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = z[k][i + 1];
                        z[k][i + 1] = s * z[k][i] + c * f;
                        z[k][i] = c * z[k][i] - s * f;
                    }
                }
                if (r == 0.0 && m - 1 >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }

    GaussHermite gh;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
    const double sqrt_pi = std::sqrt(3.14159265358979323846);
    for (int idx : order) {
        gh.nodes.push_back(d[idx]);
        gh.weights.push_back(sqrt_pi * z[0][idx] * z[0][idx]);
    }
    return gh;
}

const GaussHermite& shared_gauss_hermite() {
    static const GaussHermite gh = gauss_hermite(64);
    return gh;
}

void require_positive(double v, const char* field, const char* kind) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << kind << ": parameter '" << field << "' must be finite and > 0, got " << v;
        throw std::invalid_argument(os.str());
    }
}

void require_finite(double v, const char* field, const char* kind) {
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << kind << ": parameter '" << field << "' must be finite, got " << v;
        throw std::invalid_argument(os.str());
    }
}

} // namespace

std::string to_string(DistKind kind) {
    switch (kind) {
    case DistKind::Normal: return "normal";
    case DistKind::LogNormal: return "lognormal";
    case DistKind::Beta: return "beta";
    case DistKind::Dirichlet: return "dirichlet";
    case DistKind::HalfNormal: return "halfnormal";
    case DistKind::Constant: return "constant";
    case DistKind::Empirical: return "empirical";
    case DistKind::BiasAdjusted: return "bias_adjusted";
    }
    return "?";
}

Distribution::Distribution(DistKind kind, std::vector<double> params)
    : kind_(kind), params_(std::move(params)) {}

Distribution Distribution::normal(double mean, double sd) {
    require_finite(mean, "mean", "normal");
    require_positive(sd, "sd", "normal");
    return Distribution(DistKind::Normal, {mean, sd});
}

Distribution Distribution::lognormal(double mu, double sigma) {
    require_finite(mu, "mu", "lognormal");
    require_positive(sigma, "sigma", "lognormal");
    return Distribution(DistKind::LogNormal, {mu, sigma});
}

Distribution Distribution::beta(double a, double b) {
    require_positive(a, "a", "beta");
    require_positive(b, "b", "beta");
    return Distribution(DistKind::Beta, {a, b});
}

Distribution Distribution::dirichlet(std::vector<double> concentration) {
    if (concentration.size() < 2)
        throw std::invalid_argument("dirichlet: parameter 'concentration' needs >= 2 entries");
    for (double c : concentration) require_positive(c, "concentration", "dirichlet");
    return Distribution(DistKind::Dirichlet, std::move(concentration));
}

Distribution Distribution::half_normal(double sd) {
    require_positive(sd, "sd", "halfnormal");
    return Distribution(DistKind::HalfNormal, {sd});
}

Distribution Distribution::constant(double value) {
    require_finite(value, "value", "constant");
    return Distribution(DistKind::Constant, {value});
}

Distribution Distribution::empirical(std::vector<double> pool, std::string source_file) {
    if (pool.size() < 100) {
        std::ostringstream os;
        os << "empirical: parameter 'pool' needs >= 100 draws, got " << pool.size();
        throw std::invalid_argument(os.str());
    }
    for (double v : pool) require_finite(v, "pool", "empirical");
    Distribution d(DistKind::Empirical, {});
    d.pool_ = std::make_shared<const std::vector<double>>(std::move(pool));
    d.source_file_ = std::move(source_file);
    return d;
}

Distribution Distribution::bias_adjusted(Distribution base, double bias_mean, double bias_sd) {
    if (base.kind() == DistKind::Dirichlet)
        throw UnsupportedOperation(
            "bias_adjust: Dirichlet base unsupported (simplex support is not closed under addition)");
    require_finite(bias_mean, "bias_mean", "bias_adjusted");
    if (bias_sd < 0.0 || !std::isfinite(bias_sd))
        throw std::invalid_argument("bias_adjusted: parameter 'bias_sd' must be finite and >= 0");
    Distribution d(DistKind::BiasAdjusted, {bias_mean, bias_sd});
    d.base_ = std::make_shared<const Distribution>(std::move(base));
    return d;
}

std::size_t Distribution::dim() const {
    return kind_ == DistKind::Dirichlet ? params_.size() : 1;
}

const std::vector<double>& Distribution::pool() const {
    if (!pool_) throw UnsupportedOperation("pool(): distribution is not empirical");
    return *pool_;
}

const Distribution& Distribution::base() const {
    if (!base_) throw UnsupportedOperation("base(): distribution is not bias-adjusted");
    return *base_;
}

void Distribution::sample_one(Rng& rng, double* out) const {
    switch (kind_) {
    case DistKind::Normal:
        *out = rng.normal(params_[0], params_[1]);
        return;
    case DistKind::LogNormal:
        *out = std::exp(rng.normal(params_[0], params_[1]));
        return;
    case DistKind::Beta:
        *out = rng.beta(params_[0], params_[1]);
        return;
    case DistKind::Dirichlet: {
        const std::size_t k = params_.size();
        for (;;) {
            double sum = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                out[i] = rng.gamma(params_[i]);
                sum += out[i];
            }
            if (sum > 0.0) { // redraw on the (vanishing) chance of total underflow
                for (std::size_t i = 0; i < k; ++i) out[i] /= sum;
                return;
            }
        }
    }
    case DistKind::HalfNormal:
        *out = std::abs(rng.normal(0.0, params_[0]));
        return;
    case DistKind::Constant:
        *out = params_[0];
        return;
    case DistKind::Empirical:
        *out = (*pool_)[rng.uniform_index(pool_->size())];
        return;
    case DistKind::BiasAdjusted: {
        double b;
        base_->sample_one(rng, &b);
        *out = b + rng.normal(params_[0], params_[1]);
        return;
    }
    }
}

std::vector<double> Distribution::sample(Rng& rng, std::size_t n) const {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    const std::size_t k = dim();
    std::vector<double> draws(n * k);
    for (std::size_t r = 0; r < n; ++r) sample_one(rng, draws.data() + r * k);
    return draws;
}

double Distribution::log_density(double x) const {
    switch (kind_) {
    case DistKind::Normal:
        return normal_logpdf(x, params_[0], params_[1]);
    case DistKind::LogNormal:
        if (!(x > 0.0)) return kNegInf;
        return normal_logpdf(std::log(x), params_[0], params_[1]) - std::log(x);
    case DistKind::Beta: {
        if (!(x > 0.0 && x < 1.0)) return kNegInf;
        const double a = params_[0], b = params_[1];
        const double log_beta_fn = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
        return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta_fn;
    }
    case DistKind::HalfNormal:
        if (x < 0.0) return kNegInf;
        return std::log(2.0) + normal_logpdf(x, 0.0, params_[0]);
    case DistKind::Dirichlet:
        throw UnsupportedOperation("density: Dirichlet needs the vector overload");
    case DistKind::Constant:
        throw UnsupportedOperation("density: unsupported for constant distributions");
    case DistKind::Empirical:
        throw UnsupportedOperation("density: unsupported for empirical distributions");
    case DistKind::BiasAdjusted: {
        const double bm = params_[0], bs = params_[1];
        if (bs == 0.0) return base_->log_density(x - bm);
        if (base_->kind() == DistKind::Constant)
            return normal_logpdf(x, base_->params()[0] + bm, bs);
        if (base_->kind() == DistKind::Normal) {
            const double m = base_->params()[0] + bm;
            const double s = std::hypot(base_->params()[1], bs);
            return normal_logpdf(x, m, s);
        }
        // Numeric convolution over the bias: E_b[f_base(x - b)] by
        // Gauss-Hermite, log-sum-exp for stability.
        const GaussHermite& gh = shared_gauss_hermite();
        const double sqrt2 = 1.4142135623730950488;
        double max_term = kNegInf;
        std::vector<double> terms(gh.nodes.size(), kNegInf);
        for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
            const double b = bm + sqrt2 * bs * gh.nodes[i];
            const double lf = base_->log_density(x - b);
            if (lf == kNegInf) continue;
            terms[i] = std::log(gh.weights[i]) - 0.5723649429247001 /* log(sqrt(pi)) */ + lf;
            max_term = std::max(max_term, terms[i]);
        }
        if (max_term == kNegInf) return kNegInf;
        double acc = 0.0;
        for (double t : terms)
            if (t != kNegInf) acc += std::exp(t - max_term);
        return max_term + std::log(acc);
    }
    }
    return kNegInf;
}

double Distribution::log_density(std::span<const double> x) const {
    if (kind_ != DistKind::Dirichlet) {
        if (x.size() != 1) throw std::invalid_argument("density: expected a scalar point");
        return log_density(x[0]);
    }
    const std::size_t k = params_.size();
    if (x.size() != k) throw std::invalid_argument("density: point dimension mismatch");
    double sum = 0.0;
    for (double v : x) {
        if (!(v > 0.0 && v < 1.0)) return kNegInf;
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) return kNegInf;
    double a0 = 0.0, lp = 0.0, lb = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        a0 += params_[i];
        lb += std::lgamma(params_[i]);
        lp += (params_[i] - 1.0) * std::log(x[i]);
    }
    return lp - (lb - std::lgamma(a0));
}

double Distribution::mean(std::size_t coord) const {
    switch (kind_) {
    case DistKind::Normal: return params_[0];
    case DistKind::LogNormal: return std::exp(params_[0] + 0.5 * params_[1] * params_[1]);
    case DistKind::Beta: return params_[0] / (params_[0] + params_[1]);
    case DistKind::Dirichlet: {
        double a0 = 0.0;
        for (double c : params_) a0 += c;
        return params_.at(coord) / a0;
    }
    case DistKind::HalfNormal: return params_[0] * std::sqrt(2.0 / 3.14159265358979323846);
    case DistKind::Constant: return params_[0];
    case DistKind::Empirical: {
        double s = 0.0;
        for (double v : *pool_) s += v;
        return s / static_cast<double>(pool_->size());
    }
    case DistKind::BiasAdjusted: return base_->mean() + params_[0];
    }
    return 0.0;
}

double Distribution::variance(std::size_t coord) const {
    switch (kind_) {
    case DistKind::Normal: return params_[1] * params_[1];
    case DistKind::LogNormal: {
        const double s2 = params_[1] * params_[1];
        return (std::exp(s2) - 1.0) * std::exp(2.0 * params_[0] + s2);
    }
    case DistKind::Beta: {
        const double a = params_[0], b = params_[1];
        return a * b / ((a + b) * (a + b) * (a + b + 1.0));
    }
    case DistKind::Dirichlet: {
        double a0 = 0.0;
        for (double c : params_) a0 += c;
        const double m = params_.at(coord) / a0;
        return m * (1.0 - m) / (a0 + 1.0);
    }
    case DistKind::HalfNormal:
        return params_[0] * params_[0] * (1.0 - 2.0 / 3.14159265358979323846);
    case DistKind::Constant: return 0.0;
    case DistKind::Empirical: {
        const double m = mean();
        double s = 0.0;
        for (double v : *pool_) s += (v - m) * (v - m);
        return s / static_cast<double>(pool_->size() - 1);
    }
    case DistKind::BiasAdjusted: return base_->variance() + params_[1] * params_[1];
    }
    return 0.0;
}

double Distribution::cdf(double x) const {
    switch (kind_) {
    case DistKind::Normal:
        return normal_cdf(x, params_[0], params_[1]);
    case DistKind::LogNormal:
        if (x <= 0.0) return 0.0;
        return normal_cdf(std::log(x), params_[0], params_[1]);
    case DistKind::HalfNormal:
        if (x <= 0.0) return 0.0;
        return 2.0 * normal_cdf(x, 0.0, params_[0]) - 1.0;
    case DistKind::Beta: {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return 1.0;
        // Composite Simpson on [0, x]; the integrand is smooth for the
        // parameter ranges used here (a, b >= 1 in practice, and mild
        // endpoint behaviour otherwise thanks to the fine grid).
        const int n = 4000; // even
        const double h = x / n;
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double t = i * h;
            const double f = (t > 0.0 && t < 1.0) ? std::exp(log_density(t)) : 0.0;
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * f;
        }
        return std::min(1.0, acc * h / 3.0);
    }
    default:
        throw UnsupportedOperation("cdf: unsupported for kind " + to_string(kind_));
    }
}

double Distribution::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile: p must be in (0,1)");
    double lo, hi;
    switch (kind_) {
    case DistKind::Normal:
        lo = params_[0] - 15.0 * params_[1];
        hi = params_[0] + 15.0 * params_[1];
        break;
    case DistKind::LogNormal:
        lo = 0.0;
        hi = std::exp(params_[0] + 15.0 * params_[1]);
        break;
    case DistKind::HalfNormal:
        lo = 0.0;
        hi = 15.0 * params_[0];
        break;
    case DistKind::Beta:
        lo = 0.0;
        hi = 1.0;
        break;
    default:
        throw UnsupportedOperation("quantile: unsupported for kind " + to_string(kind_));
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-13 * (1.0 + std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

nlohmann::json Distribution::to_json() const {
    nlohmann::json j;
    switch (kind_) {
    case DistKind::Normal:
        j = {{"kind", "normal"}, {"mean", params_[0]}, {"sd", params_[1]}};
        break;
    case DistKind::LogNormal:
        j = {{"kind", "lognormal"}, {"mu", params_[0]}, {"sigma", params_[1]}};
        break;
    case DistKind::Beta:
        j = {{"kind", "beta"}, {"a", params_[0]}, {"b", params_[1]}};
        break;
    case DistKind::Dirichlet:
        j = {{"kind", "dirichlet"}, {"concentration", params_}};
        break;
    case DistKind::HalfNormal:
        j = {{"kind", "halfnormal"}, {"sd", params_[0]}};
        break;
    case DistKind::Constant:
        j = {{"kind", "constant"}, {"value", params_[0]}};
        break;
    case DistKind::Empirical:
        if (source_file_.empty())
            throw UnsupportedOperation(
                "to_json: empirical distribution has no backing CSV file; write the pool first");
        j = {{"kind", "empirical"}, {"file", source_file_}};
        break;
    case DistKind::BiasAdjusted:
        j = {{"kind", "bias_adjusted"},
             {"base", base_->to_json()},
             {"bias_mean", params_[0]},
             {"bias_sd", params_[1]}};
        break;
    }
    return j;
}

Distribution Distribution::from_json(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir) {
    if (!j.is_object() || !j.contains("kind"))
        throw ConfigError("distribution: expected an object with a 'kind' field");
    const std::string kind = j.at("kind").get<std::string>();
    auto num = [&](const char* key) -> double {
        if (!j.contains(key))
            throw ConfigError("distribution '" + kind + "': missing field '" + key + "'");
        return j.at(key).get<double>();
    };
    try {
        if (kind == "normal") return normal(num("mean"), num("sd"));
        if (kind == "lognormal") return lognormal(num("mu"), num("sigma"));
        if (kind == "beta") return beta(num("a"), num("b"));
        if (kind == "dirichlet")
            return dirichlet(j.at("concentration").get<std::vector<double>>());
        if (kind == "halfnormal") return half_normal(num("sd"));
        if (kind == "constant") return constant(num("value"));
        if (kind == "empirical") {
            const std::string file = j.at("file").get<std::string>();
            std::filesystem::path p = file;
            if (p.is_relative()) p = base_dir / p;
            return empirical(read_pool_csv(p), file);
        }
        if (kind == "bias_adjusted")
            return bias_adjusted(from_json(j.at("base"), base_dir), num("bias_mean"),
                                 num("bias_sd"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("distribution: ") + e.what());
    }
    throw ConfigError("distribution: unknown kind '" + kind + "'");
}

std::vector<double> read_pool_csv(const std::filesystem::path& path) {
    CsvTable t = read_csv(path, {"value"});
    std::vector<double> pool;
    pool.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) pool.push_back(t.number(r, 0));
    return pool;
}

void write_pool_csv(const std::filesystem::path& path, std::span<const double> pool) {
    CsvWriter w(path, {"value"});
    for (double v : pool) w.row({v});
    w.close();
}

} // namespace voi
