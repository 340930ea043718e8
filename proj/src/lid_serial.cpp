#include "nlid/lid.hpp"

#include "knn_kernel.hpp"

namespace nlid::serial {

NeighborTable knn(const Dataset& data, int k) {
    const auto n = data.rows();
    detail::check_knn_args(n, k);
    NeighborTable table;
    table.k = k;
    table.indices.resize(n, k);
    table.distances.resize(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        detail::knn_row(data.features, i, k, table);
    }
    return table;
}

Eigen::VectorXd lid_mle(const NeighborTable& neighbors) {
    const auto n = neighbors.distances.rows();
    Eigen::VectorXd lid(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        lid(i) = detail::lid_of_row(neighbors, i);
    }
    return lid;
}

} // namespace nlid::serial
