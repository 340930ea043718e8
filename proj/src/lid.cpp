#include "nlid/lid.hpp"

#include "knn_kernel.hpp"

#include <fstream>
#include <numeric>
#include <random>

namespace nlid {

NeighborTable knn(const Dataset& data, int k) {
    const auto n = data.rows();
    detail::check_knn_args(n, k);
    NeighborTable table;
    table.k = k;
    table.indices.resize(n, k);
    table.distances.resize(n, k);

    #pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < n; ++i) {
        detail::knn_row(data.features, i, k, table);
    }
    return table;
}

Eigen::VectorXd lid_mle(const NeighborTable& neighbors) {
    const auto n = neighbors.distances.rows();
    Eigen::VectorXd lid(n);

    #pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        lid(i) = detail::lid_of_row(neighbors, i);
    }
    return lid;
}

NlidScores nlid_ratio(const Eigen::VectorXd& lid, const NeighborTable& neighbors) {
    const auto n = neighbors.indices.rows();
    if (lid.size() != n) throw std::invalid_argument("nlid: lid/neighbor length mismatch");

    NlidScores scores;
    scores.k = neighbors.k;
    scores.lid = lid;
    scores.nlid.resize(n);

    #pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int m = 0; m < neighbors.k; ++m) sum += lid(neighbors.indices(i, m));
        scores.nlid(i) = sum / static_cast<double>(neighbors.k) / lid(i);
    }
    return scores;
}

NlidScores nlid_scores(const Dataset& data, int k) {
    const auto table = knn(data, k);
    return nlid_ratio(lid_mle(table), table);
}

NlidScores nlid_minibatch(const Dataset& data, int k, Eigen::Index batch_size,
                          std::uint64_t seed) {
    const auto n = data.rows();
    detail::check_knn_args(n, k);
    if (batch_size < static_cast<Eigen::Index>(k) + 1) {
        throw std::invalid_argument("nlid_minibatch: batch_size must be >= k+1");
    }
    if (batch_size >= n) return nlid_scores(data, k);

    NeighborTable table;
    table.k = k;
    table.indices.resize(n, k);
    table.distances.resize(n, k);

    // Per-sample RNG streams keyed on (seed, i) so sharding cannot change results.
    #pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < n; ++i) {
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1)));
        std::vector<Eigen::Index> pool;
        pool.reserve(static_cast<std::size_t>(n - 1));
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) pool.push_back(j);
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(static_cast<std::size_t>(batch_size));
        std::sort(pool.begin(), pool.end()); // deterministic tie-breaking by index

        std::vector<std::pair<double, Eigen::Index>> dist;
        dist.reserve(pool.size());
        for (Eigen::Index j : pool) {
            dist.emplace_back((data.features.row(i) - data.features.row(j)).squaredNorm(), j);
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        for (int m = 0; m < k; ++m) {
            table.indices(i, m) = dist[static_cast<std::size_t>(m)].second;
            table.distances(i, m) = std::sqrt(dist[static_cast<std::size_t>(m)].first);
        }
    }
    return nlid_ratio(lid_mle(table), table);
}

void export_scores_csv(const NlidScores& scores, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.precision(17);
    out << "lid,nlid\n";
    for (Eigen::Index i = 0; i < scores.lid.size(); ++i) {
        out << scores.lid(i) << ',' << scores.nlid(i) << '\n';
    }
}

} // namespace nlid
