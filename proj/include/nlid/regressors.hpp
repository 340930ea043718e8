#pragma once

#include "nlid/dataset.hpp"
#include "nlid/weighting.hpp"

#include <cstdint>
#include <string>

namespace nlid {

struct LinearModel {
    Eigen::VectorXd omega;
    double bias = 0.0;
    double lambda = 0.0;

    std::string defense_tag = "ridge";
    double train_seconds = 0.0;
    int iterations = 0;
    bool converged = true;
    bool fallback = false; // RANSAC found no adequate consensus set

    double predict(const Eigen::VectorXd& x) const { return omega.dot(x) + bias; }
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
        return (X * omega).array() + bias;
    }

    std::string serialize() const;
    static LinearModel deserialize(const std::string& text);
};

/// Minimizer of (1/n) sum_i beta_i (y_i - w.x_i - b)^2 + lambda * |w|^2
/// via the (d+1)x(d+1) normal equations; the bias is not penalized.
LinearModel fit_weighted_ridge(const Dataset& train, const WeightVector& beta, double lambda);

/// Plain ridge, i.e. all weights 1.
LinearModel fit_ridge(const Dataset& train, double lambda);

/// Huber M-estimator by IRLS; loss is r^2 inside |r| <= delta, 2*delta*|r| - delta^2
/// outside, so a large delta reduces exactly to ridge.
LinearModel fit_huber(const Dataset& train, double delta, double lambda,
                      int max_iters = 200, double grad_tol = 1e-8);

/// delta = 1.35 * 1.4826 * MAD of the residuals of a ridge pre-fit.
double huber_default_delta(const Dataset& train, double lambda);

LinearModel fit_ransac(const Dataset& train, int trials, double inlier_threshold,
                       Eigen::Index min_sample, double lambda, std::uint64_t seed);

/// 2x the residual MAD of a ridge pre-fit.
double ransac_default_threshold(const Dataset& train, double lambda);

/// Iterative trimmed ridge: keep the n_keep rows with smallest residuals,
/// refit until the kept set is stable. Rows are randomly permuted first.
/// loss_path, when given, receives the trimmed loss after every refit.
LinearModel fit_trim(const Dataset& train, Eigen::Index n_keep, double lambda,
                     std::uint64_t seed, int max_iters = 50,
                     std::vector<double>* loss_path = nullptr);

/// Trimmed loss of a model: mean squared residual over the n_keep smallest
/// residuals plus the ridge penalty. Exposed for testing the descent property.
double trimmed_loss(const LinearModel& model, const Dataset& data, Eigen::Index n_keep);

double mse(const LinearModel& model, const Dataset& data);

} // namespace nlid
