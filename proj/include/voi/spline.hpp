#ifndef VOI_SPLINE_HPP
#define VOI_SPLINE_HPP

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace voi {

// Clamped cubic B-spline basis with interior knots at equally spaced sample
// quantiles. Evaluation clamps the point into the knot range.
class BsplineBasis {
public:
    static BsplineBasis from_sample(std::span<const double> x, int n_interior);

    std::size_t size() const { return n_basis_; }
    // Writes the 4 nonzero basis values at x; returns the first basis index.
    std::size_t eval(double x, std::array<double, 4>& values) const;
    const std::vector<double>& knots() const { return knots_; }

private:
    std::vector<double> knots_; // full clamped knot vector
    std::size_t n_basis_ = 0;
};

struct SplineFitOptions {
    // Fixed smoothing parameter; when unset, chosen by GCV over a 50-point
    // log grid on [1e-6, 1e6].
    std::optional<double> lambda;
    // Override the per-margin interior knot count (default 10 / 5 / 4 for
    // 1 / 2 / 3 regressors).
    std::optional<int> interior_knots;
    int bootstrap = 0; // unused here; kept by the EVPPI layer
};

// A penalized regression spline fit (tensor product for 2-3 regressors)
// with a second-difference coefficient penalty.
class SplineFit {
public:
    double predict(std::span<const double> x) const;
    const std::vector<double>& fitted() const { return fitted_; }
    // Mean of squared residuals (divisor n).
    double residual_variance() const { return rss_ / static_cast<double>(n_); }
    double rss() const { return rss_; }
    double lambda() const { return lambda_; }
    double edf() const { return edf_; } // hat-matrix trace
    double gcv() const { return gcv_; }
    std::size_t basis_size() const { return coef_.size(); }
    const std::vector<double>& coefficients() const { return coef_; }
    // Largest violation of the penalized normal equations, relative to
    // |B'y|; a solver health check used by property tests.
    double normal_equation_residual() const { return normal_eq_residual_; }

private:
    friend SplineFit fit_smooth(const std::vector<std::span<const double>>& x_cols,
                                std::span<const double> y, const SplineFitOptions& opts);
    std::vector<BsplineBasis> margins_;
    std::vector<double> coef_;
    std::vector<double> fitted_;
    std::size_t n_ = 0;
    double lambda_ = 0, edf_ = 0, gcv_ = 0, rss_ = 0, normal_eq_residual_ = 0;
};

// Regress y on 1-3 sample columns. Throws std::invalid_argument for a
// constant column and UnsupportedOperation for more than 3 columns.
SplineFit fit_smooth(const std::vector<std::span<const double>>& x_cols,
                     std::span<const double> y, const SplineFitOptions& opts = {});

} // namespace voi

#endif // VOI_SPLINE_HPP
