#pragma once

// Delay-Doppler grid model: a spreading function lives on an L x L grid of
// cells of size T x 1/(TL), sampled on an Nt x Nf sub-grid per cell. The
// stacked per-cell fields s(t,f) carry the modulation phase and are ordered
// s_{0,0}, s_{0,1}, ..., s_{L-1,L-1} (delay index outer, Doppler index inner).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "zakident/errors.hpp"
#include "zakident/rng.hpp"
#include "zakident/subsets.hpp"

namespace zakident {

using cdouble = std::complex<double>;
using cmatrix = Eigen::MatrixXcd;
using cvector = Eigen::VectorXcd;

struct ModelParams {
    int L = 6;      // cells per axis
    double T = 1.0; // delay cell width, seconds
    int Nt = 4;     // samples per cell along t
    int Nf = 4;     // samples per cell along f

    void validate() const {
        if (L < 2) throw precondition_error("ModelParams: L must be >= 2");
        if (!(T > 0.0)) throw precondition_error("ModelParams: T must be > 0");
        if (Nt < 1 || Nf < 1) throw precondition_error("ModelParams: Nt, Nf must be >= 1");
    }

    int num_cells() const { return L * L; }
    int grid_size() const { return Nt * Nf; }  // samples per cell
    double tau_max() const { return T * L; }
    double nu_max() const { return 1.0 / T; }
    double cell_area() const { return 1.0 / L; }
    // Riemann weight per sample: cell area / samples per cell.
    double weight() const { return 1.0 / (static_cast<double>(L) * Nt * Nf); }

    // Cell-centered sample offsets inside the fundamental cell.
    double t_at(int i) const { return (i + 0.5) * T / Nt; }
    double f_at(int j) const { return (j + 0.5) / (T * L * Nf); }

    bool operator==(const ModelParams& o) const {
        return L == o.L && T == o.T && Nt == o.Nt && Nf == o.Nf;
    }
};

struct Cell {
    int k = 0; // delay index
    int m = 0; // Doppler index
    friend bool operator==(const Cell& a, const Cell& b) { return a.k == b.k && a.m == b.m; }
    friend bool operator<(const Cell& a, const Cell& b) {
        return a.k != b.k ? a.k < b.k : a.m < b.m;
    }
};

// Set of active cells, kept sorted in stacked order (index k*L + m).
class SupportSet {
public:
    SupportSet() = default;
    explicit SupportSet(std::vector<Cell> cells) : cells_(std::move(cells)) {
        std::sort(cells_.begin(), cells_.end());
        cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
    }

    static SupportSet full(int L) {
        std::vector<Cell> c;
        c.reserve(static_cast<std::size_t>(L) * L);
        for (int k = 0; k < L; ++k)
            for (int m = 0; m < L; ++m) c.push_back({k, m});
        return SupportSet(std::move(c));
    }

    static SupportSet from_indices(int L, const std::vector<int>& idx) {
        std::vector<Cell> c;
        c.reserve(idx.size());
        for (int r : idx) {
            if (r < 0 || r >= L * L) throw precondition_error("SupportSet: cell index out of range");
            c.push_back({r / L, r % L});
        }
        return SupportSet(std::move(c));
    }

    std::size_t size() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }
    const std::vector<Cell>& cells() const { return cells_; }
    const Cell& operator[](std::size_t i) const { return cells_[i]; }

    bool contains(const Cell& c) const {
        return std::binary_search(cells_.begin(), cells_.end(), c);
    }

    // Position of a cell within the sorted set, if present.
    std::optional<std::size_t> position_of(const Cell& c) const {
        auto it = std::lower_bound(cells_.begin(), cells_.end(), c);
        if (it == cells_.end() || !(*it == c)) return std::nullopt;
        return static_cast<std::size_t>(it - cells_.begin());
    }

    // Stacked-vector row indices (k*L + m), ascending.
    std::vector<int> indices(int L) const {
        std::vector<int> idx;
        idx.reserve(cells_.size());
        for (const Cell& c : cells_) idx.push_back(c.k * L + c.m);
        return idx;
    }

    void validate_within(int L) const {
        for (const Cell& c : cells_)
            if (c.k < 0 || c.k >= L || c.m < 0 || c.m >= L)
                throw precondition_error("SupportSet: cell outside the L x L grid");
    }

    double area(int L) const { return static_cast<double>(cells_.size()) / L; }

    bool intersects(const SupportSet& o) const {
        for (const Cell& c : o.cells_)
            if (contains(c)) return true;
        return false;
    }

    SupportSet union_with(const SupportSet& o) const {
        std::vector<Cell> c = cells_;
        c.insert(c.end(), o.cells_.begin(), o.cells_.end());
        return SupportSet(std::move(c));
    }

    friend bool operator==(const SupportSet& a, const SupportSet& b) {
        return a.cells_ == b.cells_;
    }

private:
    std::vector<Cell> cells_;
};

// Spreading-function samples on the active cells. cell_values[i] holds the
// Nt x Nf samples (row i', col j') of the raw spreading function on cell
// support[i]; the modulation phase is applied only when vectorizing.
struct SpreadingFunction {
    ModelParams params;
    SupportSet support;
    std::vector<cmatrix> cell_values;

    SpreadingFunction() = default;
    SpreadingFunction(ModelParams p, SupportSet s, std::vector<cmatrix> values)
        : params(p), support(std::move(s)), cell_values(std::move(values)) {
        validate();
    }

    static SpreadingFunction zero(const ModelParams& p, const SupportSet& s) {
        std::vector<cmatrix> vals(s.size(), cmatrix::Zero(p.Nt, p.Nf));
        return SpreadingFunction(p, s, std::move(vals));
    }

    void validate() const {
        params.validate();
        support.validate_within(params.L);
        if (cell_values.size() != support.size())
            throw precondition_error("SpreadingFunction: one sample array per active cell required");
        for (const cmatrix& v : cell_values)
            if (v.rows() != params.Nt || v.cols() != params.Nf)
                throw precondition_error("SpreadingFunction: cell array shape mismatch");
    }

    const cmatrix* find(const Cell& c) const {
        auto pos = support.position_of(c);
        if (!pos) return nullptr;
        return &cell_values[*pos];
    }
};

// The stacked vector field s(t,f): row k*L+m, column i*Nf+j.
struct CellVectorField {
    ModelParams params;
    cmatrix values; // (L^2) x (Nt*Nf)

    CellVectorField() = default;
    CellVectorField(ModelParams p, cmatrix v) : params(p), values(std::move(v)) {
        params.validate();
        if (values.rows() != params.num_cells() || values.cols() != params.grid_size())
            throw precondition_error("CellVectorField: shape mismatch");
    }

    static CellVectorField zero(const ModelParams& p) {
        return CellVectorField(p, cmatrix::Zero(p.num_cells(), p.grid_size()));
    }
};

// Modulation phase of cell (k,m) at sample (i,j): exp(j 2 pi (f_j + m/(TL)) t_i).
inline cdouble cell_phase(const ModelParams& p, int m, int i, int j) {
    const double freq = p.f_at(j) + static_cast<double>(m) / (p.T * p.L);
    const double arg = 2.0 * std::numbers::pi * freq * p.t_at(i);
    return {std::cos(arg), std::sin(arg)};
}

inline CellVectorField vectorize(const SpreadingFunction& sf) {
    sf.validate();
    const ModelParams& p = sf.params;
    cmatrix values = cmatrix::Zero(p.num_cells(), p.grid_size());
    for (std::size_t n = 0; n < sf.support.size(); ++n) {
        const Cell& c = sf.support[n];
        const cmatrix& v = sf.cell_values[n];
        const int row = c.k * p.L + c.m;
        for (int i = 0; i < p.Nt; ++i)
            for (int j = 0; j < p.Nf; ++j)
                values(row, i * p.Nf + j) = v(i, j) * cell_phase(p, c.m, i, j);
    }
    return CellVectorField(p, std::move(values));
}

// Inverse of vectorize: strips the modulation phase on the given support.
// Rejects fields whose energy outside the support exceeds tol (relative).
inline SpreadingFunction devectorize(const CellVectorField& field, const SupportSet& support,
                                     double tol = 1e-9) {
    const ModelParams& p = field.params;
    support.validate_within(p.L);

    const double total = field.values.squaredNorm();
    double outside = 0.0;
    for (int r = 0; r < p.num_cells(); ++r)
        if (!support.contains({r / p.L, r % p.L})) outside += field.values.row(r).squaredNorm();
    if (total > 0.0 && std::sqrt(outside / total) > tol)
        throw precondition_error("devectorize: significant energy outside the support");

    std::vector<cmatrix> cells;
    cells.reserve(support.size());
    for (const Cell& c : support.cells()) {
        const int row = c.k * p.L + c.m;
        cmatrix v(p.Nt, p.Nf);
        for (int i = 0; i < p.Nt; ++i)
            for (int j = 0; j < p.Nf; ++j)
                v(i, j) = field.values(row, i * p.Nf + j) / cell_phase(p, c.m, i, j);
        cells.push_back(std::move(v));
    }
    return SpreadingFunction(p, support, std::move(cells));
}

// Riemann-sum inner product over the delay-Doppler plane. Phases are unit
// modulus and shared per cell, so this equals the weighted inner product of
// the vectorized fields.
inline cdouble hs_inner(const SpreadingFunction& a, const SpreadingFunction& b) {
    if (!(a.params == b.params)) throw precondition_error("hs_inner: params mismatch");
    cdouble acc = 0.0;
    for (std::size_t n = 0; n < a.support.size(); ++n) {
        const cmatrix* other = b.find(a.support[n]);
        if (!other) continue;
        acc += (a.cell_values[n].array() * other->array().conjugate()).sum();
    }
    return acc * a.params.weight();
}

inline double hs_norm(const SpreadingFunction& sf) {
    double acc = 0.0;
    for (const cmatrix& v : sf.cell_values) acc += v.squaredNorm();
    return std::sqrt(acc * sf.params.weight());
}

// a*f + b*g on the union support.
inline SpreadingFunction linear_combination(cdouble a, const SpreadingFunction& f, cdouble b,
                                            const SpreadingFunction& g) {
    if (!(f.params == g.params)) throw precondition_error("linear_combination: params mismatch");
    const ModelParams& p = f.params;
    SupportSet support = f.support.union_with(g.support);
    std::vector<cmatrix> cells;
    cells.reserve(support.size());
    for (const Cell& c : support.cells()) {
        cmatrix v = cmatrix::Zero(p.Nt, p.Nf);
        if (const cmatrix* vf = f.find(c)) v += a * (*vf);
        if (const cmatrix* vg = g.find(c)) v += b * (*vg);
        cells.push_back(std::move(v));
    }
    return SpreadingFunction(p, std::move(support), std::move(cells));
}

struct RandomSpreading {
    SpreadingFunction sf;
    // Nt*Nf < |support|: the Gram matrix of the sampled fields cannot reach
    // full rank, so subspace-based recovery will not see the whole support.
    bool gram_deficient = false;
};

// I.i.d. CN(0,1) samples on the active cells. Draw order is fixed (cells in
// stacked order, row-major samples), so a fixed seed reproduces bit-identical
// values.
inline RandomSpreading random_spreading(const ModelParams& params, const SupportSet& support,
                                        Rng& rng) {
    params.validate();
    support.validate_within(params.L);
    std::vector<cmatrix> cells;
    cells.reserve(support.size());
    for (std::size_t n = 0; n < support.size(); ++n) {
        cmatrix v(params.Nt, params.Nf);
        for (int i = 0; i < params.Nt; ++i)
            for (int j = 0; j < params.Nf; ++j) v(i, j) = complex_gaussian(rng);
        cells.push_back(std::move(v));
    }
    RandomSpreading out{SpreadingFunction(params, support, std::move(cells)), false};
    out.gram_deficient = static_cast<std::size_t>(params.grid_size()) < support.size();
    return out;
}

// Uniform random support of the given size.
inline SupportSet random_support(const ModelParams& params, int size, Rng& rng) {
    if (size < 0 || size > params.num_cells())
        throw precondition_error("random_support: size out of range");
    return SupportSet::from_indices(params.L, random_subset(params.num_cells(), size, rng));
}

} // namespace zakident
