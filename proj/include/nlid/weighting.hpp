#pragma once

#include "nlid/lid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nlid {

inline constexpr double kDensityFloor = 1e-12;
inline constexpr double kLikelihoodCap = 1e6;

/// Gaussian kernel density estimate over a set of support points.
struct DensityModel {
    double bandwidth = 1.0;
    Eigen::VectorXd support_points;

    double operator()(double x) const;
};

/// Smooth weight map s -> 0.5 * (1 - tanh(a*s - b)).
struct WeightCurve {
    double a = 0.0;
    double b = 0.0;

    double operator()(double s) const;
};

enum class WeightScheme { lr, linear, concave, convex, uniform };

std::string scheme_name(WeightScheme scheme);

struct WeightVector {
    Eigen::VectorXd beta; // entries in [0,1]
    WeightScheme scheme = WeightScheme::uniform;
    bool degenerate = false; // all-equal nlid fell back to uniform weights
};

/// Gaussian KDE with the bandwidth chosen from a grid by cross-validated
/// held-out log-likelihood.
DensityModel kde_fit(const Eigen::VectorXd& values,
                     const std::vector<double>& bandwidth_grid,
                     int folds, std::uint64_t seed);

/// Default grid: 20 log-spaced bandwidths in [1e-3, 1] times the sample sd.
std::vector<double> default_bandwidth_grid(const Eigen::VectorXd& values);

/// p_n(s) / p_a(s), capped when the denominator underflows.
double likelihood_ratio(double nlid_value, const DensityModel& p_n, const DensityModel& p_a);

/// Least-squares fit of the tanh weight curve to (nlid, z) pairs with z in [0,1].
/// Linearized atanh initialization refined by Gauss-Newton with step halving.
WeightCurve fit_weight_curve(const Eigen::VectorXd& nlid, const Eigen::VectorXd& z);

/// Likelihood-ratio weighting built from labeled normal/poisoned index sets
/// (Algorithm: fit both N-LID densities, clamp the LR into [0,1], fit the
/// tanh curve, evaluate it on every sample).
WeightVector lr_weights(const NlidScores& scores,
                        const std::vector<Eigen::Index>& labeled_normal,
                        const std::vector<Eigen::Index>& labeled_poisoned,
                        std::uint64_t seed = 0);

/// Fit the LR weight curve on one (typically simulated) set of scores so it
/// can be applied to another set drawn from the same attack distribution.
WeightCurve fit_lr_curve(const NlidScores& scores,
                         const std::vector<Eigen::Index>& labeled_normal,
                         const std::vector<Eigen::Index>& labeled_poisoned,
                         std::uint64_t seed = 0);

WeightVector apply_curve(const WeightCurve& curve, const NlidScores& scores);

/// Attack-unaware schemes over min-max scaled N-LID v:
/// linear 1-v, concave 1-v^2, convex 1-sqrt(2v-v^2).
WeightVector attack_unaware_weights(const NlidScores& scores, WeightScheme scheme);

void export_weights_csv(const WeightVector& weights, const std::string& path);

} // namespace nlid
