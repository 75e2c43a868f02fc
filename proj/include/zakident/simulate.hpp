#pragma once

// Forward model: the Zak-domain measurement z(t,f) = A s(t,f) on the cell
// grid. simulate_response goes through the assembled matrix;
// simulate_response_reference evaluates the underlying double sum directly
// and serves as an independent oracle for the matrix path.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>

#include "zakident/errors.hpp"
#include "zakident/gabor.hpp"
#include "zakident/model.hpp"
#include "zakident/rng.hpp"

namespace zakident {

struct ZakField {
    ModelParams params;
    cmatrix z; // L x (Nt*Nf): row p, column i*Nf + j

    ZakField() = default;
    ZakField(ModelParams p, cmatrix values) : params(p), z(std::move(values)) {
        params.validate();
        if (z.rows() != params.L || z.cols() != params.grid_size())
            throw precondition_error("ZakField: shape mismatch");
    }

    static ZakField zero(const ModelParams& p) {
        return ZakField(p, cmatrix::Zero(p.L, p.grid_size()));
    }
};

// Weighted (Riemann) energy: sum |z|^2 / (L Nt Nf).
inline double weighted_energy(const ZakField& zf) {
    return zf.z.squaredNorm() * zf.params.weight();
}

inline double weighted_norm(const ZakField& zf) { return std::sqrt(weighted_energy(zf)); }

inline ZakField simulate_response(const SpreadingFunction& sf, const MeasurementMatrix& M) {
    if (!(sf.params == M.params)) throw precondition_error("simulate_response: params mismatch");
    return ZakField(sf.params, M.A * vectorize(sf).values);
}

// Same field computed without assembling the matrix: for each output row p,
//   z_p(t,f) = sum_{k,m} (c_{k-p}/(TL)) s(t+kT, f+m/(TL)) e^{j 2 pi (t+pT)(f+m/(TL))}
// followed by the e^{-j 2 pi p T f} phase that defines the stacked entry.
inline ZakField simulate_response_reference(const SpreadingFunction& sf,
                                            const CoefficientVector& c,
                                            const ModelParams& params) {
    if (!(sf.params == params))
        throw precondition_error("simulate_response_reference: params mismatch");
    if (c.L() != params.L)
        throw precondition_error("simulate_response_reference: coefficient length mismatch");
    sf.validate();

    const int L = params.L;
    const double scale = 1.0 / (params.T * L);
    cmatrix z = cmatrix::Zero(L, params.grid_size());
    for (std::size_t n = 0; n < sf.support.size(); ++n) {
        const Cell& cell = sf.support[n];
        const cmatrix& v = sf.cell_values[n];
        for (int p = 0; p < L; ++p) {
            const cdouble w = scale * c.at(cell.k - p);
            for (int i = 0; i < params.Nt; ++i) {
                const double t_shifted = params.t_at(i) + p * params.T;
                for (int j = 0; j < params.Nf; ++j) {
                    const double freq = params.f_at(j) + static_cast<double>(cell.m) / (params.T * L);
                    const double arg = 2.0 * std::numbers::pi * t_shifted * freq;
                    z(p, i * params.Nf + j) += w * v(i, j) * cdouble{std::cos(arg), std::sin(arg)};
                }
            }
        }
    }
    for (int p = 0; p < L; ++p) {
        for (int j = 0; j < params.Nf; ++j) {
            const double arg = -2.0 * std::numbers::pi * p * params.T * params.f_at(j);
            const cdouble phase{std::cos(arg), std::sin(arg)};
            for (int i = 0; i < params.Nt; ++i) z(p, i * params.Nf + j) *= phase;
        }
    }
    return ZakField(params, std::move(z));
}

// Adds circular complex Gaussian noise scaled so that the weighted signal
// energy over the expected weighted noise energy equals 10^(snr_db/10).
// Infinite snr_db returns the field unchanged.
inline ZakField add_noise(const ZakField& zf, double snr_db, Rng& rng) {
    if (std::isinf(snr_db) && snr_db > 0) return zf;
    if (!std::isfinite(snr_db)) throw precondition_error("add_noise: SNR must be finite or +inf");
    const double energy = weighted_energy(zf);
    if (energy <= 0.0)
        throw precondition_error("add_noise: zero-energy field with finite SNR");
    const double sigma = std::sqrt(energy * std::pow(10.0, -snr_db / 10.0));
    ZakField out = zf;
    for (Eigen::Index p = 0; p < out.z.rows(); ++p)
        for (Eigen::Index g = 0; g < out.z.cols(); ++g) out.z(p, g) += sigma * complex_gaussian(rng);
    return out;
}

} // namespace zakident
