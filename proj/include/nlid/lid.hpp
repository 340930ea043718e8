#pragma once

#include "nlid/dataset.hpp"

#include <cstdint>

namespace nlid {

inline constexpr double kLidMin = 1e-3;
inline constexpr double kLidMax = 1e6;
inline constexpr double kDupEps = 1e-12; // zero-distance duplicates are nudged here

/// Exact k nearest neighbors per sample, self excluded, distances ascending.
struct NeighborTable {
    int k = 0;
    Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> indices; // n x k
    Eigen::MatrixXd distances;                                           // n x k
};

struct NlidScores {
    Eigen::VectorXd lid;  // length n, clamped to [kLidMin, kLidMax]
    Eigen::VectorXd nlid; // length n
    int k = 0;
};

NeighborTable knn(const Dataset& data, int k);

/// MLE of local intrinsic dimensionality from neighbor distances:
/// lid(x) = -1 / mean_i log(r_i / r_max).
Eigen::VectorXd lid_mle(const NeighborTable& neighbors);

/// nlid(x) = mean LID over x's k nearest neighbors / lid(x).
NlidScores nlid_ratio(const Eigen::VectorXd& lid, const NeighborTable& neighbors);

/// knn + lid_mle + nlid_ratio in one call.
NlidScores nlid_scores(const Dataset& data, int k);

/// LID of each sample estimated against a random batch instead of the full set.
/// batch_size >= n falls back to the exact full computation.
NlidScores nlid_minibatch(const Dataset& data, int k, Eigen::Index batch_size,
                          std::uint64_t seed);

void export_scores_csv(const NlidScores& scores, const std::string& path);

// Single-threaded reference implementations, kept for testing and benchmarks.
namespace serial {
NeighborTable knn(const Dataset& data, int k);
Eigen::VectorXd lid_mle(const NeighborTable& neighbors);
} // namespace serial

} // namespace nlid
