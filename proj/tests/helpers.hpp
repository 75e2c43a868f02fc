#pragma once

#include <complex>
#include <map>
#include <tuple>

#include "zakident/zakident.hpp"

namespace testutil {

using namespace zakident;

inline ModelParams desk_params(int L = 4, double T = 1.0, int Nt = 3, int Nf = 3) {
    return ModelParams{L, T, Nt, Nf};
}

// One certified matrix per (params, seed) for the whole binary. Unit tests use
// the randomized spark mode at L >= 6 to keep runtimes sane; the acceptance
// suite exercises the exhaustive sweeps separately.
inline const MeasurementMatrix& shared_matrix(const ModelParams& p, std::uint64_t seed = 1) {
    static std::map<std::tuple<int, double, int, int, std::uint64_t>, MeasurementMatrix> cache;
    const auto key = std::make_tuple(p.L, p.T, p.Nt, p.Nf, seed);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    Rng rng = make_rng(seed);
    for (int attempt = 0; attempt < 16; ++attempt) {
        cvector c(p.L);
        for (int k = 0; k < p.L; ++k) c(k) = complex_gaussian(rng);
        MeasurementMatrix M = build_matrix(CoefficientVector(std::move(c)), p);
        SparkOptions opts;
        if (p.L >= 6) {
            opts.mode = SparkOptions::Mode::Randomized;
            opts.trials = 20'000;
        }
        opts.seed = rng();
        if (spark_check(M, opts).ok) return cache.emplace(key, std::move(M)).first->second;
    }
    throw std::runtime_error("shared_matrix: no full-spark draw");
}

// Random instance on a fresh support of the given size.
inline SpreadingFunction random_instance(const ModelParams& p, int support_size, Rng& rng) {
    const SupportSet support = random_support(p, support_size, rng);
    return random_spreading(p, support, rng).sf;
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

} // namespace testutil
