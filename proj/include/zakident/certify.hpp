#pragma once

// Desk-scale certification of identifiability. A probe stably identifies all
// operators with support area up to kmax/L exactly when every difference
// support of size 2*kmax keeps alpha > 0; past size L the rank bound forces
// alpha = 0, so the verdict flips as soon as 2*kmax exceeds L.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "zakident/errors.hpp"
#include "zakident/gabor.hpp"
#include "zakident/model.hpp"
#include "zakident/subsets.hpp"

namespace zakident {

enum class Verdict { StablyIdentifiable, NotIdentifiable };

inline std::string verdict_name(Verdict v) {
    return v == Verdict::StablyIdentifiable ? "STABLY_IDENTIFIABLE" : "NOT_IDENTIFIABLE";
}

struct Certificate {
    int kmax = 0; // target area delta = kmax / L
    int L = 0;
    Verdict verdict = Verdict::NotIdentifiable;
    double worst_alpha = 0.0;
    double worst_beta = 0.0;
    SupportSet worst_support;
    std::uint64_t checked_count = 0;
    bool sampled = false; // randomized sweep (budget exceeded)
};

struct CertifyOptions {
    std::uint64_t budget = 10'000'000; // exhaustive sweep cap
    std::uint64_t sample_trials = 200'000;
    std::uint64_t seed = 0;
    double eps = kEpsSpark;
};

namespace detail {

struct WorstCase {
    double alpha = std::numeric_limits<double>::infinity();
    double beta = 0.0;
    std::vector<int> support;
    std::uint64_t checked = 0;
    bool sampled = false;
};

// Minimum alpha over supports of the given size; lexicographically first
// argmin on ties, so the result does not depend on sweep scheduling.
inline WorstCase sweep_alpha(const MeasurementMatrix& M, int size, const CertifyOptions& opts) {
    const int n = M.params.L * M.params.L;
    const double root_tl = std::sqrt(M.params.T * M.params.L);
    WorstCase worst;

    cmatrix sub(M.params.L, size);
    Eigen::JacobiSVD<cmatrix> svd;
    auto visit = [&](const std::vector<int>& idx) {
        for (int j = 0; j < size; ++j) sub.col(j) = M.A.col(idx[static_cast<std::size_t>(j)]);
        svd.compute(sub);
        ++worst.checked;
        const Eigen::VectorXd& sigma = svd.singularValues();
        const double alpha = size > M.params.L ? 0.0 : root_tl * sigma(sigma.size() - 1);
        if (alpha < worst.alpha) {
            worst.alpha = alpha;
            worst.beta = root_tl * sigma(0);
            worst.support = idx;
        }
    };

    if (binomial(n, size) <= opts.budget) {
        for_each_subset(n, size, [&](const std::vector<int>& idx) {
            visit(idx);
            return true;
        });
    } else {
        worst.sampled = true;
        Rng rng = make_rng(opts.seed);
        for (std::uint64_t t = 0; t < opts.sample_trials; ++t) visit(random_subset(n, size, rng));
    }
    return worst;
}

} // namespace detail

// Verdict for target area kmax/L. Differences of two operators with support
// size <= kmax live on supports of size up to 2*kmax; by singular-value
// monotonicity under column addition only the maximal size matters. When
// 2*kmax > L any L+1 columns are dependent, so a single rank-bound witness
// decides the verdict without a sweep.
inline Certificate certify(const MeasurementMatrix& M, int kmax, const CertifyOptions& opts = {}) {
    const int L = M.params.L;
    if (kmax < 1 || kmax > L) throw precondition_error("certify: kmax must be in [1, L]");

    Certificate cert;
    cert.kmax = kmax;
    cert.L = L;
    const double sigma_max = Eigen::JacobiSVD<cmatrix>(M.A).singularValues()(0);
    const double root_tl = std::sqrt(M.params.T * L);
    const double scale = root_tl * sigma_max;

    detail::WorstCase worst;
    if (2 * kmax > L) {
        // Rank bound: the first L+1 cells already witness alpha = 0.
        const int size = std::min(2 * kmax, L + 1);
        std::vector<int> idx(static_cast<std::size_t>(size));
        for (int j = 0; j < size; ++j) idx[static_cast<std::size_t>(j)] = j;
        cmatrix sub(L, size);
        for (int j = 0; j < size; ++j) sub.col(j) = M.A.col(j);
        Eigen::JacobiSVD<cmatrix> svd(sub);
        worst.alpha = 0.0;
        worst.beta = root_tl * svd.singularValues()(0);
        worst.support = idx;
        worst.checked = 1;
    } else {
        worst = detail::sweep_alpha(M, 2 * kmax, opts);
    }

    cert.worst_alpha = worst.alpha;
    cert.worst_beta = worst.beta;
    cert.worst_support = SupportSet::from_indices(L, worst.support);
    cert.checked_count = worst.checked;
    cert.sampled = worst.sampled;
    cert.verdict = cert.worst_alpha > opts.eps * scale ? Verdict::StablyIdentifiable
                                                       : Verdict::NotIdentifiable;
    return cert;
}

// Two distinct operators the probe cannot tell apart: cell values taken from a
// unit null vector of the union columns. The stacked per-cell fields are held
// constant over the grid (the stored samples carry the conjugate modulation
// phase), so the forward outputs cancel exactly at every sample. The returned
// pair differs by norm 1.
inline std::pair<SpreadingFunction, SpreadingFunction> counterexample(const MeasurementMatrix& M,
                                                                      const SupportSet& gamma1,
                                                                      const SupportSet& gamma2) {
    const ModelParams& p = M.params;
    gamma1.validate_within(p.L);
    gamma2.validate_within(p.L);
    if (gamma1.empty() || gamma2.empty())
        throw precondition_error("counterexample: supports must be nonempty");
    if (gamma1.intersects(gamma2))
        throw precondition_error("counterexample: supports must be disjoint");

    const SupportSet uni = gamma1.union_with(gamma2);
    const cmatrix sub = submatrix(M, uni);
    Eigen::JacobiSVD<cmatrix> svd(sub, Eigen::ComputeFullV);
    const double sigma_max_a = Eigen::JacobiSVD<cmatrix>(M.A).singularValues()(0);
    if (static_cast<int>(uni.size()) <= p.L) {
        const double smin = svd.singularValues()(svd.singularValues().size() - 1);
        if (smin > kEpsSpark * sigma_max_a)
            throw precondition_error("counterexample: union columns are independent; "
                                     "no null vector exists");
    }
    const cvector null_vec = svd.matrixV().col(svd.matrixV().cols() - 1);

    // Constant stacked value sqrt(L) * v makes the pair difference unit norm.
    const double gain = std::sqrt(static_cast<double>(p.L));
    auto build = [&](const SupportSet& gamma, double sign) {
        cmatrix field = cmatrix::Zero(p.num_cells(), p.grid_size());
        for (const Cell& c : gamma.cells()) {
            const auto pos = uni.position_of(c);
            field.row(c.k * p.L + c.m)
                .setConstant(sign * gain * null_vec(static_cast<Eigen::Index>(*pos)));
        }
        return devectorize(CellVectorField(p, std::move(field)), gamma);
    };
    return {build(gamma1, 1.0), build(gamma2, -1.0)};
}

struct ProfileRow {
    int k = 0;
    double worst_ratio = 1.0; // max over |G| = k of beta/alpha; inf when alpha hits 0
    SupportSet argmax;
    bool sampled = false;
};

// Worst condition number beta/alpha per support size, up to difference size
// 2*kmax. Rows past k = L are inf by the rank bound and recorded directly.
inline std::vector<ProfileRow> condition_profile(const MeasurementMatrix& M, int kmax,
                                                 const CertifyOptions& opts = {}) {
    const int L = M.params.L;
    if (kmax < 1 || kmax > L) throw precondition_error("condition_profile: kmax must be in [1, L]");
    const int n = L * L;
    const double sigma_max = Eigen::JacobiSVD<cmatrix>(M.A).singularValues()(0);
    const double alpha_floor = opts.eps * std::sqrt(M.params.T * L) * sigma_max;
    const double root_tl = std::sqrt(M.params.T * L);

    std::vector<ProfileRow> rows;
    const int k_top = std::min(2 * kmax, n);
    for (int k = 1; k <= k_top; ++k) {
        ProfileRow row;
        row.k = k;
        if (k > L) {
            row.worst_ratio = std::numeric_limits<double>::infinity();
            std::vector<int> idx(static_cast<std::size_t>(k));
            for (int j = 0; j < k; ++j) idx[static_cast<std::size_t>(j)] = j;
            row.argmax = SupportSet::from_indices(L, idx);
            rows.push_back(std::move(row));
            continue;
        }

        double worst = -1.0;
        std::vector<int> arg;
        bool stop = false;
        cmatrix sub(L, k);
        Eigen::JacobiSVD<cmatrix> svd;
        auto visit = [&](const std::vector<int>& idx) {
            for (int j = 0; j < k; ++j) sub.col(j) = M.A.col(idx[static_cast<std::size_t>(j)]);
            svd.compute(sub);
            const Eigen::VectorXd& sigma = svd.singularValues();
            const double alpha = root_tl * sigma(sigma.size() - 1);
            const double ratio = alpha > alpha_floor
                                     ? (root_tl * sigma(0)) / alpha
                                     : std::numeric_limits<double>::infinity();
            if (ratio > worst) {
                worst = ratio;
                arg = idx;
                if (std::isinf(ratio)) stop = true; // lexicographically first witness
            }
        };
        if (binomial(n, k) <= opts.budget) {
            for_each_subset(n, k, [&](const std::vector<int>& idx) {
                visit(idx);
                return !stop;
            });
        } else {
            row.sampled = true;
            Rng rng = make_rng(opts.seed + static_cast<std::uint64_t>(k));
            for (std::uint64_t t = 0; t < opts.sample_trials && !stop; ++t)
                visit(random_subset(n, k, rng));
        }
        row.worst_ratio = worst;
        row.argmax = SupportSet::from_indices(L, arg);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace zakident
