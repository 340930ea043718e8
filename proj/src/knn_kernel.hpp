#pragma once

#include "nlid/lid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace nlid::detail {

// Fills row i of the neighbor table: k smallest Euclidean distances to other
// rows, ties broken by lower index.
inline void knn_row(const Eigen::MatrixXd& features, Eigen::Index i, int k,
                    NeighborTable& table) {
    const auto n = features.rows();
    std::vector<std::pair<double, Eigen::Index>> dist;
    dist.reserve(static_cast<std::size_t>(n - 1));
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d2 = (features.row(i) - features.row(j)).squaredNorm();
        dist.emplace_back(d2, j);
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int m = 0; m < k; ++m) {
        table.indices(i, m) = dist[static_cast<std::size_t>(m)].second;
        table.distances(i, m) = std::sqrt(dist[static_cast<std::size_t>(m)].first);
    }
}

inline void check_knn_args(Eigen::Index n, int k) {
    if (k < 1 || static_cast<Eigen::Index>(k) > n - 1) {
        throw std::invalid_argument("knn: k must be in [1, n-1]");
    }
}

inline double lid_of_row(const NeighborTable& neighbors, Eigen::Index i) {
    const int k = neighbors.k;
    const double r_max = std::max(neighbors.distances(i, k - 1), kDupEps);
    double sum_log = 0.0;
    for (int m = 0; m < k; ++m) {
        const double r = std::max(neighbors.distances(i, m), kDupEps);
        sum_log += std::log(r / r_max);
    }
    const double mean_log = sum_log / static_cast<double>(k);
    const double lid = (mean_log < 0.0) ? -1.0 / mean_log : kLidMax;
    return std::clamp(lid, kLidMin, kLidMax);
}

} // namespace nlid::detail
