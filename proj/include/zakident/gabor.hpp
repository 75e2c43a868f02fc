#pragma once

// Measurement matrix A of the Dirac-train probe: L x L^2, built from one
// period of the cyclic weights c. Column (k*L + m) has entries
//   A[p, k*L+m] = (1/(TL)) * c[(k-p) mod L] * exp(+j 2 pi p m / L).
// Blind identification needs every L-column submatrix to have full rank
// (full spark), which is certified here numerically.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "zakident/errors.hpp"
#include "zakident/model.hpp"
#include "zakident/rng.hpp"
#include "zakident/subsets.hpp"

namespace zakident {

// Relative threshold on singular values for rank decisions.
inline constexpr double kEpsSpark = 1e-10;
// Largest C(L^2, L) swept exhaustively by default; covers L <= 6.
inline constexpr std::uint64_t kSparkExhaustiveBudget = 2'000'000;
inline constexpr std::uint64_t kSparkRandomizedTrials = 100'000;

struct CoefficientVector {
    cvector c; // one period, length L

    CoefficientVector() = default;
    explicit CoefficientVector(cvector values) : c(std::move(values)) {
        if (c.size() < 2) throw precondition_error("CoefficientVector: need L >= 2 weights");
        if (c.isZero(0.0)) throw precondition_error("CoefficientVector: all-zero weights");
    }

    int L() const { return static_cast<int>(c.size()); }

    // Cyclic indexing: c_k for any integer k.
    cdouble at(int k) const {
        const int L = this->L();
        return c(((k % L) + L) % L);
    }
};

struct MeasurementMatrix {
    cmatrix A; // L x L^2
    CoefficientVector c;
    ModelParams params;
    bool spark_certified = false;
};

inline MeasurementMatrix build_matrix(const CoefficientVector& c, const ModelParams& params) {
    params.validate();
    if (c.L() != params.L)
        throw precondition_error("build_matrix: coefficient length must equal L");
    const int L = params.L;
    const double scale = 1.0 / (params.T * L);
    cmatrix A(L, L * L);
    for (int k = 0; k < L; ++k) {
        for (int m = 0; m < L; ++m) {
            const int col = k * L + m;
            for (int p = 0; p < L; ++p) {
                const double arg = 2.0 * std::numbers::pi * p * m / L;
                A(p, col) = scale * c.at(k - p) * cdouble{std::cos(arg), std::sin(arg)};
            }
        }
    }
    return MeasurementMatrix{std::move(A), c, params, false};
}

// Columns of A restricted to the active cells, in stacked order.
inline cmatrix submatrix(const MeasurementMatrix& M, const SupportSet& support) {
    support.validate_within(M.params.L);
    cmatrix out(M.A.rows(), static_cast<Eigen::Index>(support.size()));
    Eigen::Index j = 0;
    for (int idx : support.indices(M.params.L)) out.col(j++) = M.A.col(idx);
    return out;
}

struct SparkOptions {
    enum class Mode { Auto, Exhaustive, Randomized };
    Mode mode = Mode::Auto;
    std::uint64_t trials = kSparkRandomizedTrials; // randomized mode
    std::uint64_t budget = kSparkExhaustiveBudget; // exhaustive mode
    std::uint64_t seed = 0;                        // randomized subset stream
    double eps = kEpsSpark;
};

struct SparkReport {
    bool ok = false;
    std::optional<SupportSet> witness; // first failing column set (lexicographic)
    std::uint64_t checked = 0;
    bool exhaustive = false;
    double min_sigma = 0.0; // smallest submatrix sigma_min seen, scaled by 1/sigma_max(A)
};

// Checks that every L-column submatrix of A has full rank: sigma_min greater
// than eps times the largest singular value of the full matrix. Exhaustive
// mode sweeps all C(L^2, L) subsets in lexicographic order; randomized mode
// samples uniform subsets. Passing marks the matrix spark-certified.
inline SparkReport spark_check(MeasurementMatrix& M, const SparkOptions& opts = {}) {
    const int L = M.params.L;
    const int n = L * L;
    const double sigma_max = Eigen::JacobiSVD<cmatrix>(M.A).singularValues()(0);
    const double floor = opts.eps * sigma_max;

    const std::uint64_t total = binomial(n, L);
    SparkOptions::Mode mode = opts.mode;
    if (mode == SparkOptions::Mode::Auto)
        mode = total <= opts.budget ? SparkOptions::Mode::Exhaustive : SparkOptions::Mode::Randomized;
    if (mode == SparkOptions::Mode::Exhaustive && total > opts.budget)
        throw budget_error("spark_check: C(L^2, L) = " + std::to_string(total) +
                           " exceeds the exhaustive budget");

    SparkReport report;
    report.exhaustive = mode == SparkOptions::Mode::Exhaustive;
    report.min_sigma = std::numeric_limits<double>::infinity();

    cmatrix sub(L, L);
    Eigen::JacobiSVD<cmatrix> svd;
    auto check_one = [&](const std::vector<int>& idx) {
        for (int j = 0; j < L; ++j) sub.col(j) = M.A.col(idx[static_cast<std::size_t>(j)]);
        svd.compute(sub);
        ++report.checked;
        const double smin = svd.singularValues()(L - 1) / sigma_max;
        report.min_sigma = std::min(report.min_sigma, smin);
        if (svd.singularValues()(L - 1) <= floor) {
            report.witness = SupportSet::from_indices(L, idx);
            return false;
        }
        return true;
    };

    bool all_ok = true;
    if (mode == SparkOptions::Mode::Exhaustive) {
        for_each_subset(n, L, [&](const std::vector<int>& idx) {
            all_ok = check_one(idx);
            return all_ok;
        });
    } else {
        Rng rng = make_rng(opts.seed);
        for (std::uint64_t t = 0; t < opts.trials && all_ok; ++t)
            all_ok = check_one(random_subset(n, L, rng));
    }
    report.ok = all_ok;
    M.spark_certified = report.ok;
    return report;
}

// Draws i.i.d. CN(0,1) weights until the spark check passes (exhaustive when
// affordable, randomized beyond the budget). Returns the certified matrix.
inline MeasurementMatrix draw_certified_matrix(const ModelParams& params, Rng& rng,
                                               int max_attempts = 16) {
    if (max_attempts < 1) throw precondition_error("draw_certified_matrix: max_attempts >= 1");
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        cvector c(params.L);
        for (int k = 0; k < params.L; ++k) c(k) = complex_gaussian(rng);
        MeasurementMatrix M = build_matrix(CoefficientVector(std::move(c)), params);
        SparkOptions opts;
        opts.seed = rng(); // randomized fallback stream, deterministic given rng
        if (spark_check(M, opts).ok) return M;
    }
    throw precondition_error("draw_certified_matrix: no full-spark draw in " +
                             std::to_string(max_attempts) + " attempts");
}

inline CoefficientVector draw_coefficients(const ModelParams& params, Rng& rng,
                                           int max_attempts = 16) {
    return draw_certified_matrix(params, rng, max_attempts).c;
}

struct StabilityBounds {
    double alpha = 0.0;
    double beta = 0.0;
};

// alpha = sqrt(TL) * inf ||A_G v||, beta = sqrt(TL) * sup ||A_G v|| over unit
// vectors. With more columns than rows the infimum is 0 by the rank bound.
inline StabilityBounds stability_bounds(const MeasurementMatrix& M, const SupportSet& support) {
    if (support.empty()) throw precondition_error("stability_bounds: empty support");
    const cmatrix sub = submatrix(M, support);
    const Eigen::VectorXd sigma = Eigen::JacobiSVD<cmatrix>(sub).singularValues();
    const double root_tl = std::sqrt(M.params.T * M.params.L);
    StabilityBounds b;
    b.beta = root_tl * sigma(0);
    b.alpha = sub.cols() > sub.rows() ? 0.0 : root_tl * sigma(sigma.size() - 1);
    return b;
}

} // namespace zakident
