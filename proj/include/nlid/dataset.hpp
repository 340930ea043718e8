#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nlid {

/// Feature matrix in [0,1]^{n x d} plus a response vector in [0,1]^n.
struct Dataset {
    Eigen::MatrixXd features;              // n x d
    Eigen::VectorXd response;              // n
    std::vector<std::string> feature_names; // optional, empty when unknown

    // Ground-truth hyperplane for synthetic data (omega..., bias); empty otherwise.
    std::optional<Eigen::VectorXd> true_theta;

    Eigen::Index rows() const { return features.rows(); }
    Eigen::Index dims() const { return features.cols(); }

    Dataset select_rows(const std::vector<Eigen::Index>& idx) const;
};

/// Per-column min-max statistics, last entry covers the response.
/// apply() clamps held-out values into [0,1]; constant columns map to 0.
struct Normalizer {
    Eigen::VectorXd col_min; // length d+1
    Eigen::VectorXd col_max; // length d+1

    Dataset apply(const Dataset& data) const;
    Dataset invert(const Dataset& data) const;

    std::string to_json() const;
    static Normalizer from_json(const std::string& text);
};

/// Deterministic assignment of samples to cross-validation folds.
struct FoldPlan {
    std::uint64_t seed = 0;
    int fold_count = 0;
    std::vector<int> assignments; // length n, values in [0, fold_count)

    std::vector<Eigen::Index> fold_indices(int fold) const;
    std::vector<Eigen::Index> complement_indices(int fold) const;
};

Dataset load_csv(const std::string& path, const std::string& response_column);
void save_csv(const Dataset& data, const std::string& path,
              const std::string& response_column = "target");

Normalizer fit_normalizer(const Dataset& data);

FoldPlan make_folds(Eigen::Index n, int fold_count, std::uint64_t seed);

/// Uniform X in the unit box, y linear in X plus Gaussian noise, clamped to [0,1].
/// The generating hyperplane is kept flat enough that the clamp almost never binds.
Dataset synth_linear(Eigen::Index n, Eigen::Index d, double noise_sd, std::uint64_t seed);

} // namespace nlid
