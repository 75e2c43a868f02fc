#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "zakident/rng.hpp"

namespace zakident {

// C(n,k), saturating at uint64 max instead of overflowing.
inline std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
        if (r > kMax / num) return kMax;
        r = r * num / static_cast<std::uint64_t>(i);
    }
    return r;
}

// Visits every k-subset of {0,...,n-1} in lexicographic order. The visitor
// receives the sorted index vector; returning false stops the sweep.
template <class Visitor>
void for_each_subset(int n, int k, Visitor&& visit) {
    if (k < 0 || k > n) return;
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    if (k == 0) {
        visit(idx);
        return;
    }
    while (true) {
        if (!visit(idx)) return;
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

// Sorted uniform k-subset of {0,...,n-1} (selection sampling).
inline std::vector<int> random_subset(int n, int k, Rng& rng) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    int needed = k;
    for (int i = 0; i < n && needed > 0; ++i) {
        const double p = static_cast<double>(needed) / static_cast<double>(n - i);
        if (uniform01(rng) < p) {
            out.push_back(i);
            --needed;
        }
    }
    return out;
}

} // namespace zakident
