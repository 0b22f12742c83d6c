#include "voi/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "voi/errors.hpp"
#include "voi/stats.hpp"

namespace voi {

namespace {

constexpr int kDegree = 3;
constexpr int kGcvGridSize = 50;
constexpr double kGcvLogMin = -6.0, kGcvLogMax = 6.0;

int default_interior_knots(std::size_t k) {
    switch (k) {
    case 1: return 10;
    case 2: return 5;
    default: return 4;
    }
}

// Second-difference penalty D'D for one margin of size p.
Eigen::MatrixXd difference_penalty(std::size_t p) {
    Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(p, p);
    if (p < 3) return penalty;
    for (std::size_t r = 0; r + 2 < p; ++r) {
        const double row[3] = {1.0, -2.0, 1.0};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) penalty(r + i, r + j) += row[i] * row[j];
    }
    return penalty;
}

// Marginal penalty embedded in the tensor-product space:
// I x ... x P_m x ... x I, all margins sharing one smoothing parameter.
Eigen::MatrixXd tensor_penalty(const std::vector<std::size_t>& sizes) {
    std::size_t total = 1;
    for (std::size_t s : sizes) total *= s;
    Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(total, total);
    for (std::size_t m = 0; m < sizes.size(); ++m) {
        const Eigen::MatrixXd pm = difference_penalty(sizes[m]);
        // Strides for the flattened multi-index (last margin fastest).
        std::size_t inner = 1;
        for (std::size_t j = m + 1; j < sizes.size(); ++j) inner *= sizes[j];
        std::size_t outer = total / (sizes[m] * inner);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t a = 0; a < sizes[m]; ++a)
                for (std::size_t b = 0; b < sizes[m]; ++b) {
                    if (pm(a, b) == 0.0) continue;
                    for (std::size_t i = 0; i < inner; ++i) {
                        const std::size_t row = (o * sizes[m] + a) * inner + i;
                        const std::size_t col = (o * sizes[m] + b) * inner + i;
                        penalty(row, col) += pm(a, b);
                    }
                }
    }
    return penalty;
}

} // namespace

BsplineBasis BsplineBasis::from_sample(std::span<const double> x, int n_interior) {
    if (x.size() < 2) throw std::invalid_argument("spline basis: need >= 2 points");
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front(), hi = sorted.back();
    if (!(hi > lo))
        throw std::invalid_argument("degenerate regressor: column has zero variance");

    BsplineBasis basis;
    for (int i = 0; i < kDegree + 1; ++i) basis.knots_.push_back(lo);
    double prev = lo;
    for (int j = 1; j <= n_interior; ++j) {
        const double q =
            sample_quantile(sorted, static_cast<double>(j) / static_cast<double>(n_interior + 1));
        // Drop ties so the knot vector stays strictly increasing inside.
        if (q > prev + 1e-12 * (hi - lo) && q < hi) {
            basis.knots_.push_back(q);
            prev = q;
        }
    }
    for (int i = 0; i < kDegree + 1; ++i) basis.knots_.push_back(hi);
    basis.n_basis_ = basis.knots_.size() - (kDegree + 1);
    return basis;
}

std::size_t BsplineBasis::eval(double x, std::array<double, 4>& values) const {
    const std::size_t m = knots_.size();
    const double lo = knots_.front(), hi = knots_.back();
    if (x < lo) x = lo;
    if (x > hi) x = hi;
    // Knot span index i with knots[i] <= x < knots[i+1]; the last span is
    // closed on the right.
    std::size_t i;
    if (x >= hi) {
        i = m - kDegree - 2;
    } else {
        i = static_cast<std::size_t>(
                std::upper_bound(knots_.begin() + kDegree, knots_.end() - (kDegree + 1), x) -
                knots_.begin()) -
            1;
    }
    // Cox-de Boor for the kDegree+1 nonzero functions on this span.
    double left[kDegree + 1], right[kDegree + 1];
    values[0] = 1.0;
    for (int j = 1; j <= kDegree; ++j) {
        left[j] = x - knots_[i + 1 - j];
        right[j] = knots_[i + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = values[r] / (right[r + 1] + left[j - r]);
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }
    return i - kDegree;
}

namespace {

// Row-sparse tensor basis: indices and values of the 4^k nonzero entries.
struct RowBasis {
    std::array<std::size_t, 64> index;
    std::array<double, 64> value;
    std::size_t count = 0;
};

void eval_row(const std::vector<BsplineBasis>& margins, std::span<const double> x, RowBasis& row) {
    std::array<std::size_t, 3> first{};
    std::array<std::array<double, 4>, 3> vals{};
    const std::size_t k = margins.size();
    for (std::size_t m = 0; m < k; ++m) first[m] = margins[m].eval(x[m], vals[m]);
    std::array<std::size_t, 3> sizes{};
    for (std::size_t m = 0; m < k; ++m) sizes[m] = margins[m].size();

    row.count = 0;
    if (k == 1) {
        for (int a = 0; a < 4; ++a) {
            row.index[row.count] = first[0] + a;
            row.value[row.count++] = vals[0][a];
        }
    } else if (k == 2) {
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                row.index[row.count] = (first[0] + a) * sizes[1] + (first[1] + b);
                row.value[row.count++] = vals[0][a] * vals[1][b];
            }
    } else {
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c) {
                    row.index[row.count] =
                        ((first[0] + a) * sizes[1] + (first[1] + b)) * sizes[2] + (first[2] + c);
                    row.value[row.count++] = vals[0][a] * vals[1][b] * vals[2][c];
                }
    }
}

} // namespace

SplineFit fit_smooth(const std::vector<std::span<const double>>& x_cols,
                     std::span<const double> y, const SplineFitOptions& opts) {
    const std::size_t k = x_cols.size();
    if (k == 0) throw std::invalid_argument("fit_smooth: need at least one regressor");
    if (k > 3)
        throw UnsupportedOperation(
            "fit_smooth: more than 3 joint regressors unsupported; split the group and fit "
            "additive components instead");
    const std::size_t n = y.size();
    for (const auto& col : x_cols)
        if (col.size() != n) throw std::invalid_argument("fit_smooth: column length mismatch");
    if (n < 4) throw std::invalid_argument("fit_smooth: need >= 4 rows");

    const int interior = opts.interior_knots.value_or(default_interior_knots(k));
    SplineFit fit;
    fit.n_ = n;
    std::vector<std::size_t> sizes;
    for (std::size_t m = 0; m < k; ++m) {
        fit.margins_.push_back(BsplineBasis::from_sample(x_cols[m], interior));
        sizes.push_back(fit.margins_[m].size());
    }
    std::size_t p = 1;
    for (std::size_t s : sizes) p *= s;

    // Accumulate B'B, B'y and y'y streaming over the row-sparse basis.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd bty = Eigen::VectorXd::Zero(p);
    double yty = 0.0;
    RowBasis row;
    std::array<double, 3> point{};
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t m = 0; m < k; ++m) point[m] = x_cols[m][r];
        eval_row(fit.margins_, std::span<const double>(point.data(), k), row);
        for (std::size_t a = 0; a < row.count; ++a) {
            bty(row.index[a]) += row.value[a] * y[r];
            for (std::size_t b = 0; b <= a; ++b)
                gram(row.index[a], row.index[b]) += row.value[a] * row.value[b];
        }
        yty += y[r] * y[r];
    }
    gram = gram.selfadjointView<Eigen::Lower>();

    const Eigen::MatrixXd penalty = tensor_penalty(sizes);

    // Demmler-Reinsch: P v = mu (B'B + ridge) v gives an S-orthonormal basis
    // in which every smoothing parameter on the grid costs O(p^2).
    const double ridge = 1e-10 * (gram.trace() / static_cast<double>(p));
    Eigen::MatrixXd stabilized = gram;
    stabilized.diagonal().array() += ridge;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(penalty, stabilized);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("fit_smooth: generalized eigendecomposition failed");
    const Eigen::VectorXd mu = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd& v = eig.eigenvectors(); // V' S V = I
    const Eigen::VectorXd w = v.transpose() * bty;

    auto solve_at = [&](double lambda, Eigen::VectorXd& beta, double& edf, double& rss) {
        Eigen::VectorXd shrink = (1.0 + lambda * mu.array()).inverse();
        const Eigen::VectorXd u = shrink.asDiagonal() * w;
        beta = v * u;
        edf = shrink.sum();
        const double bt_s_b = u.squaredNorm() - ridge * beta.squaredNorm();
        rss = std::max(0.0, yty - 2.0 * u.dot(w) + bt_s_b);
    };

    double best_lambda;
    if (opts.lambda) {
        best_lambda = *opts.lambda;
    } else {
        best_lambda = 1.0;
        double best_score = std::numeric_limits<double>::infinity();
        Eigen::VectorXd beta;
        for (int i = 0; i < kGcvGridSize; ++i) {
            const double lambda =
                std::pow(10.0, kGcvLogMin + (kGcvLogMax - kGcvLogMin) * i / (kGcvGridSize - 1));
            double edf, rss;
            solve_at(lambda, beta, edf, rss);
            const double denom = static_cast<double>(n) - edf;
            if (denom <= 0.0) continue;
            const double score = static_cast<double>(n) * rss / (denom * denom);
            if (score < best_score) {
                best_score = score;
                best_lambda = lambda;
            }
        }
    }

    Eigen::VectorXd beta;
    double edf, rss_identity;
    solve_at(best_lambda, beta, edf, rss_identity);
    fit.lambda_ = best_lambda;
    fit.edf_ = edf;

    // Penalized normal equations health: |B'(y - B beta) - lambda P beta|
    // relative to |B'y|.
    const Eigen::VectorXd ne =
        bty - gram * beta - best_lambda * (penalty * beta) - ridge * beta;
    fit.normal_eq_residual_ = bty.norm() > 0 ? ne.norm() / bty.norm() : ne.norm();

    fit.coef_.assign(beta.data(), beta.data() + p);
    fit.fitted_.resize(n);
    double rss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t m = 0; m < k; ++m) point[m] = x_cols[m][r];
        eval_row(fit.margins_, std::span<const double>(point.data(), k), row);
        double value = 0.0;
        for (std::size_t a = 0; a < row.count; ++a) value += row.value[a] * beta(row.index[a]);
        fit.fitted_[r] = value;
        const double resid = y[r] - value;
        rss += resid * resid;
    }
    fit.rss_ = rss;
    const double denom = static_cast<double>(n) - edf;
    fit.gcv_ = denom > 0 ? static_cast<double>(n) * rss / (denom * denom)
                         : std::numeric_limits<double>::infinity();
    return fit;
}

double SplineFit::predict(std::span<const double> x) const {
    if (x.size() != margins_.size())
        throw std::invalid_argument("predict: point dimension mismatch");
    RowBasis row;
    eval_row(margins_, x, row);
    double value = 0.0;
    for (std::size_t a = 0; a < row.count; ++a) value += row.value[a] * coef_[row.index[a]];
    return value;
}

} // namespace voi
