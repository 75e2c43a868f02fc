#pragma once

// Support recovery and reconstruction. The correlation matrix
// Z = sum_g z(t,f) z(t,f)^H * weight is factored as Z = Q Q^H; the support is
// found either by exhaustive joint-sparse search over column subsets, by
// greedy SOMP, or by the MUSIC null-space test; the spreading function is then
// recovered by per-grid-point least squares on the identified columns.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "zakident/errors.hpp"
#include "zakident/gabor.hpp"
#include "zakident/model.hpp"
#include "zakident/simulate.hpp"
#include "zakident/subsets.hpp"

namespace zakident {

// Relative eigenvalue cut for rank decisions in the noiseless regime; noisy
// data needs a caller-supplied threshold.
inline constexpr double kEpsRank = 1e-10;
inline constexpr double kEpsMusic = 1e-8;
inline constexpr double kEpsFit = 1e-9;
// Exhaustive subset search is enabled up to this many candidate sets.
inline constexpr std::uint64_t kEnumerationBudget = 10'000'000;

struct CorrelationMatrix {
    cmatrix Z; // L x L Hermitian PSD
    int rank_estimate = 0;
    Eigen::VectorXd eig_values; // descending
    cmatrix eig_vectors;        // columns ordered to match eig_values
    double eps_rank = kEpsRank;
};

inline CorrelationMatrix correlation(const ZakField& zf, double eps_rank = kEpsRank) {
    CorrelationMatrix out;
    out.eps_rank = eps_rank;
    cmatrix Z = (zf.z * zf.z.adjoint()) * zf.params.weight();
    Z = 0.5 * (Z + Z.adjoint().eval()); // enforce Hermitian symmetry
    Eigen::SelfAdjointEigenSolver<cmatrix> eig(Z);
    const Eigen::Index L = Z.rows();
    out.Z = std::move(Z);
    out.eig_values = eig.eigenvalues().reverse();
    out.eig_vectors = eig.eigenvectors().rowwise().reverse();
    const double lmax = out.eig_values(0);
    out.rank_estimate = 0;
    if (lmax > 0.0)
        for (Eigen::Index r = 0; r < L; ++r)
            if (out.eig_values(r) > eps_rank * lmax) ++out.rank_estimate;
    return out;
}

// Q = U_z Lambda_z^{1/2} on the leading rank_estimate eigenpairs, so that
// Z ~ Q Q^H and the columns of Q are mutually orthogonal.
inline cmatrix factor_Q(const CorrelationMatrix& C) {
    const int R = C.rank_estimate;
    cmatrix Q(C.Z.rows(), R);
    for (int r = 0; r < R; ++r)
        Q.col(r) = C.eig_vectors.col(r) * std::sqrt(std::max(C.eig_values(r), 0.0));
    return Q;
}

namespace detail {

// Relative Frobenius residual of projecting Q onto range(A_G).
inline double projection_residual(const cmatrix& sub, const cmatrix& Q, double norm_q) {
    Eigen::ColPivHouseholderQR<cmatrix> qr(sub);
    qr.setThreshold(1e-12);
    const cmatrix X = qr.solve(Q);
    return (Q - sub * X).norm() / norm_q;
}

} // namespace detail

// Exhaustive joint-sparse support search: the smallest set of columns whose
// range captures Q up to eps_fit, searched by increasing size with ties broken
// by residual and then lexicographic order. Returns nullopt when no set of
// size <= kmax fits (noise above eps_fit or kmax too small).
inline std::optional<SupportSet> mmv_exhaustive(const cmatrix& Q, const MeasurementMatrix& M,
                                                int kmax, double eps_fit = kEpsFit,
                                                std::uint64_t budget = kEnumerationBudget) {
    const int L = M.params.L;
    if (kmax < 0 || kmax > L) throw precondition_error("mmv_exhaustive: kmax must be in [0, L]");
    const double norm_q = Q.norm();
    if (norm_q == 0.0) return SupportSet{};
    if (binomial(L * L, kmax) > budget)
        throw budget_error("mmv_exhaustive: C(L^2, kmax) exceeds the enumeration budget");

    for (int k = 1; k <= kmax; ++k) {
        cmatrix sub(L, k);
        double best_residual = std::numeric_limits<double>::infinity();
        std::optional<std::vector<int>> best;
        for_each_subset(L * L, k, [&](const std::vector<int>& idx) {
            for (int j = 0; j < k; ++j) sub.col(j) = M.A.col(idx[static_cast<std::size_t>(j)]);
            const double rel = detail::projection_residual(sub, Q, norm_q);
            if (rel <= eps_fit && rel < best_residual) {
                best_residual = rel;
                best = idx;
            }
            return true;
        });
        if (best) return SupportSet::from_indices(L, *best);
    }
    return std::nullopt;
}

// Simultaneous OMP: greedily picks the column with the largest Frobenius
// correlation against the residual, orthogonalizes, and stops at eps_fit or
// kmax columns. Heuristic; no exactness guarantee.
inline SupportSet somp(const cmatrix& Q, const MeasurementMatrix& M, int kmax,
                       double eps_fit = kEpsFit) {
    const int L = M.params.L;
    const int n = L * L;
    if (kmax < 0 || kmax > L) throw precondition_error("somp: kmax must be in [0, L]");
    const double norm_q = Q.norm();
    if (norm_q == 0.0) return SupportSet{};

    std::vector<int> selected;
    cmatrix residual = Q;
    while (static_cast<int>(selected.size()) < kmax) {
        int pick = -1;
        double best = -1.0;
        for (int j = 0; j < n; ++j) {
            if (std::find(selected.begin(), selected.end(), j) != selected.end()) continue;
            const double score = (M.A.col(j).adjoint() * residual).norm() / M.A.col(j).norm();
            if (score > best) {
                best = score;
                pick = j;
            }
        }
        selected.push_back(pick);
        std::sort(selected.begin(), selected.end());
        cmatrix sub(L, static_cast<Eigen::Index>(selected.size()));
        for (std::size_t j = 0; j < selected.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = M.A.col(selected[j]);
        Eigen::ColPivHouseholderQR<cmatrix> qr(sub);
        qr.setThreshold(1e-12);
        residual = Q - sub * qr.solve(Q);
        if (residual.norm() / norm_q <= eps_fit) break;
    }
    return SupportSet::from_indices(L, selected);
}

// Null-space correlation of every column: ||U_n^H a| / ||a||, where U_n spans
// the eigenvectors below the rank cut. In-support columns score ~0.
inline Eigen::VectorXd music_scores(const CorrelationMatrix& C, const MeasurementMatrix& M) {
    const int L = M.params.L;
    if (C.Z.rows() != L) throw precondition_error("music_scores: dimension mismatch");
    if (C.rank_estimate >= L)
        throw precondition_error("music_scores: correlation matrix has no null space "
                                 "(rank estimate = L); support not identifiable this way");
    const cmatrix U_n = C.eig_vectors.rightCols(L - C.rank_estimate);
    Eigen::VectorXd scores(L * L);
    for (int j = 0; j < L * L; ++j)
        scores(j) = (U_n.adjoint() * M.A.col(j)).norm() / M.A.col(j).norm();
    return scores;
}

inline SupportSet music_support(const CorrelationMatrix& C, const MeasurementMatrix& M,
                                double eps_music = kEpsMusic) {
    const Eigen::VectorXd scores = music_scores(C, M);
    std::vector<int> idx;
    for (int j = 0; j < scores.size(); ++j)
        if (scores(j) <= eps_music) idx.push_back(j);
    return SupportSet::from_indices(M.params.L, idx);
}

struct Reconstruction {
    SpreadingFunction sf;
    double residual = 0.0; // relative weighted ||z - A s_hat|| / ||z||
};

// Least squares on the identified columns, solved per grid point through one
// SVD of A_G. Exact inverse of the forward map when the support is right and
// the data is noiseless.
inline Reconstruction reconstruct(const ZakField& zf, const SupportSet& support,
                                  const MeasurementMatrix& M) {
    if (!(zf.params == M.params)) throw precondition_error("reconstruct: params mismatch");
    support.validate_within(M.params.L);
    const ModelParams& p = M.params;
    if (static_cast<int>(support.size()) > p.L)
        throw precondition_error("reconstruct: more columns than measurement rows");

    const double norm_z = std::sqrt(zf.z.squaredNorm());
    if (support.empty()) {
        Reconstruction out{SpreadingFunction::zero(p, support), norm_z > 0.0 ? 1.0 : 0.0};
        return out;
    }

    const cmatrix sub = submatrix(M, support);
    Eigen::JacobiSVD<cmatrix> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sigma = svd.singularValues();
    if (sigma(sigma.size() - 1) <= kEpsSpark * sigma(0))
        throw precondition_error("reconstruct: rank-deficient column set");

    const cmatrix coeffs = svd.solve(zf.z); // |G| x (Nt*Nf)

    cmatrix field_values = cmatrix::Zero(p.num_cells(), p.grid_size());
    const std::vector<int> rows = support.indices(p.L);
    for (std::size_t r = 0; r < rows.size(); ++r)
        field_values.row(rows[r]) = coeffs.row(static_cast<Eigen::Index>(r));

    Reconstruction out;
    out.sf = devectorize(CellVectorField(p, std::move(field_values)), support);
    out.residual = norm_z > 0.0 ? (zf.z - sub * coeffs).norm() / norm_z : 0.0;
    return out;
}

struct GramRank {
    cmatrix S; // |G| x |G| Hermitian PSD
    bool full_rank = false;
};

// Gram matrix of the stacked per-cell fields over the sample grid; full rank
// exactly when the fields are linearly independent there.
inline GramRank gram_rank(const SpreadingFunction& sf, double eps_rank = kEpsRank) {
    if (sf.support.empty()) throw precondition_error("gram_rank: empty support");
    const CellVectorField field = vectorize(sf);
    const std::vector<int> rows = sf.support.indices(sf.params.L);
    cmatrix S_rows(static_cast<Eigen::Index>(rows.size()), field.values.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        S_rows.row(static_cast<Eigen::Index>(r)) = field.values.row(rows[r]);
    GramRank out;
    out.S = (S_rows * S_rows.adjoint()) * sf.params.weight();
    out.S = 0.5 * (out.S + out.S.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<cmatrix> eig(out.S);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    out.full_rank = lmax > 0.0 && lmin > eps_rank * lmax;
    return out;
}

enum class Method { MmvExhaustive, Somp, Music };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::MmvExhaustive: return "MMV_EXHAUSTIVE";
        case Method::Somp: return "SOMP";
        case Method::Music: return "MUSIC";
    }
    return "?";
}

struct RecoveryOptions {
    int kmax = -1; // default floor(L/2) for MMV/SOMP
    double eps_rank = kEpsRank;
    double eps_fit = kEpsFit;
    double eps_music = kEpsMusic;
    double recon_tol = 1e-9; // reconstruction_ok threshold vs ground truth
    std::uint64_t budget = kEnumerationBudget;
};

struct RecoveryReport {
    Method method = Method::MmvExhaustive;
    bool feasible = true; // false when no support of size <= kmax fits
    SupportSet support_estimate;
    SpreadingFunction reconstruction;
    double residual = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    std::optional<bool> support_exact;       // vs ground truth when available
    std::optional<bool> reconstruction_ok;   // relative error <= recon_tol
    std::optional<double> reconstruction_rel_err;
    double elapsed_ms = 0.0;
};

// Full pipeline for one measurement: correlation, support recovery with the
// chosen method, least-squares reconstruction, stability bounds on the
// estimated support, and ground-truth flags when available.
inline RecoveryReport run_recovery(const ZakField& zf, const MeasurementMatrix& M, Method method,
                                   const RecoveryOptions& opts = {},
                                   const SpreadingFunction* truth = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    RecoveryReport report;
    report.method = method;
    const int kmax = opts.kmax >= 0 ? opts.kmax : M.params.L / 2;
    const CorrelationMatrix C = correlation(zf, opts.eps_rank);
    switch (method) {
        case Method::MmvExhaustive: {
            auto est = mmv_exhaustive(factor_Q(C), M, kmax, opts.eps_fit, opts.budget);
            report.feasible = est.has_value();
            if (est) report.support_estimate = *est;
            break;
        }
        case Method::Somp:
            report.support_estimate = somp(factor_Q(C), M, kmax, opts.eps_fit);
            break;
        case Method::Music:
            report.support_estimate = music_support(C, M, opts.eps_music);
            break;
    }

    Reconstruction rec = reconstruct(zf, report.support_estimate, M);
    report.reconstruction = std::move(rec.sf);
    report.residual = rec.residual;
    if (!report.support_estimate.empty()) {
        const StabilityBounds b = stability_bounds(M, report.support_estimate);
        report.alpha = b.alpha;
        report.beta = b.beta;
    }
    if (truth) {
        report.support_exact = report.support_estimate == truth->support;
        const double denom = hs_norm(*truth);
        const double err = hs_norm(linear_combination(1.0, report.reconstruction, -1.0, *truth));
        const double rel = denom > 0.0 ? err / denom : err;
        report.reconstruction_rel_err = rel;
        report.reconstruction_ok = rel <= opts.recon_tol;
    }
    report.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace zakident
