#include "nlid/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace nlid {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gauss_kde(const Eigen::VectorXd& support, double h, double x) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < support.size(); ++i) {
        const double u = (x - support(i)) / h;
        sum += std::exp(-0.5 * u * u);
    }
    return sum * kInvSqrt2Pi / (h * static_cast<double>(support.size()));
}

double clamp_unit_open(double z) {
    return std::clamp(z, 1e-3, 1.0 - 1e-3);
}

} // namespace

double DensityModel::operator()(double x) const {
    return gauss_kde(support_points, bandwidth, x);
}

double WeightCurve::operator()(double s) const {
    return 0.5 * (1.0 - std::tanh(a * s - b));
}

std::string scheme_name(WeightScheme scheme) {
    switch (scheme) {
        case WeightScheme::lr: return "lr";
        case WeightScheme::linear: return "linear";
        case WeightScheme::concave: return "concave";
        case WeightScheme::convex: return "convex";
        case WeightScheme::uniform: return "uniform";
    }
    return "unknown";
}

std::vector<double> default_bandwidth_grid(const Eigen::VectorXd& values) {
    const double mean = values.mean();
    double var = (values.array() - mean).square().sum() /
                 std::max<double>(1.0, static_cast<double>(values.size() - 1));
    double sd = std::sqrt(var);
    if (!(sd > 0.0)) sd = 1.0;
    std::vector<double> grid;
    const int count = 20;
    for (int i = 0; i < count; ++i) {
        const double expo = -3.0 + 3.0 * static_cast<double>(i) / (count - 1);
        grid.push_back(sd * std::pow(10.0, expo));
    }
    return grid;
}

DensityModel kde_fit(const Eigen::VectorXd& values,
                     const std::vector<double>& bandwidth_grid,
                     int folds, std::uint64_t seed) {
    if (values.size() < 5) throw std::invalid_argument("kde_fit: need at least 5 values");
    if (bandwidth_grid.empty()) throw std::invalid_argument("kde_fit: empty bandwidth grid");
    if (values.size() < folds) throw std::invalid_argument("kde_fit: fewer values than folds");

    const auto plan = make_folds(values.size(), folds, seed);
    double best_ll = -std::numeric_limits<double>::infinity();
    double best_h = bandwidth_grid.front();
    for (const double h : bandwidth_grid) {
        if (!(h > 0.0)) throw std::invalid_argument("kde_fit: bandwidth must be positive");
        double ll = 0.0;
        Eigen::Index count = 0;
        for (int f = 0; f < folds; ++f) {
            const auto train_idx = plan.complement_indices(f);
            Eigen::VectorXd train(static_cast<Eigen::Index>(train_idx.size()));
            for (std::size_t i = 0; i < train_idx.size(); ++i) train(static_cast<Eigen::Index>(i)) = values(train_idx[i]);
            for (const auto i : plan.fold_indices(f)) {
                ll += std::log(std::max(gauss_kde(train, h, values(i)), kDensityFloor));
                ++count;
            }
        }
        ll /= static_cast<double>(count);
        if (ll > best_ll) {
            best_ll = ll;
            best_h = h;
        }
    }

    DensityModel model;
    model.bandwidth = best_h;
    model.support_points = values;
    return model;
}

double likelihood_ratio(double nlid_value, const DensityModel& p_n, const DensityModel& p_a) {
    const double den = p_a(nlid_value);
    if (den < kDensityFloor) return kLikelihoodCap;
    return p_n(nlid_value) / den;
}

WeightCurve fit_weight_curve(const Eigen::VectorXd& nlid, const Eigen::VectorXd& z) {
    const auto n = nlid.size();
    if (n != z.size() || n < 3) throw std::invalid_argument("fit_weight_curve: need matched vectors of length >= 3");

    const double z_mean = z.mean();
    const bool all_equal = ((z.array() - z(0)).abs() < 1e-14).all();
    if (all_equal) {
        WeightCurve flat;
        flat.a = 0.0;
        flat.b = -std::atanh(1.0 - 2.0 * clamp_unit_open(z_mean));
        return flat;
    }

    auto sse = [&](const WeightCurve& c) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = c(nlid(i)) - z(i);
            s += r * r;
        }
        return s;
    };

    // Linearized start: atanh(1 - 2z) = a*s - b.
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = nlid(i);
        X(i, 1) = -1.0;
        t(i) = std::atanh(1.0 - 2.0 * clamp_unit_open(z(i)));
    }
    const Eigen::Vector2d ab = (X.transpose() * X + 1e-12 * Eigen::Matrix2d::Identity())
                                   .ldlt()
                                   .solve(X.transpose() * t);
    WeightCurve curve{ab(0), ab(1)};
    double best = sse(curve);

    for (int iter = 0; iter < 100; ++iter) {
        Eigen::MatrixXd J(n, 2);
        Eigen::VectorXd r(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = curve.a * nlid(i) - curve.b;
            const double th = std::tanh(u);
            const double sech2 = 1.0 - th * th;
            r(i) = 0.5 * (1.0 - th) - z(i);
            J(i, 0) = -0.5 * sech2 * nlid(i);
            J(i, 1) = 0.5 * sech2;
        }
        const Eigen::Vector2d step = (J.transpose() * J + 1e-12 * Eigen::Matrix2d::Identity())
                                         .ldlt()
                                         .solve(-J.transpose() * r);
        if (!step.allFinite()) break;

        double scale = 1.0;
        bool accepted = false;
        for (int h = 0; h < 30; ++h) {
            WeightCurve trial{curve.a + scale * step(0), curve.b + scale * step(1)};
            const double s = sse(trial);
            if (s < best) {
                curve = trial;
                const bool converged = best - s < 1e-14 * (1.0 + best);
                best = s;
                accepted = true;
                if (converged) return curve;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) break;
    }
    return curve;
}

WeightCurve fit_lr_curve(const NlidScores& scores,
                         const std::vector<Eigen::Index>& labeled_normal,
                         const std::vector<Eigen::Index>& labeled_poisoned,
                         std::uint64_t seed) {
    if (labeled_normal.empty() || labeled_poisoned.empty()) {
        throw std::invalid_argument("lr weighting: empty label set");
    }
    auto gather = [&](const std::vector<Eigen::Index>& idx) {
        Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = scores.nlid(idx[i]);
        return out;
    };
    const Eigen::VectorXd normal_vals = gather(labeled_normal);
    const Eigen::VectorXd poison_vals = gather(labeled_poisoned);

    const int folds_n = std::min<int>(5, static_cast<int>(normal_vals.size()));
    const int folds_a = std::min<int>(5, static_cast<int>(poison_vals.size()));
    const DensityModel p_n = kde_fit(normal_vals, default_bandwidth_grid(normal_vals), folds_n, seed);
    const DensityModel p_a = kde_fit(poison_vals, default_bandwidth_grid(poison_vals), folds_a, seed + 1);

    // LR clamped into [0,1]: only suspected-poisoned (low LR) samples get de-emphasized.
    Eigen::VectorXd z(scores.nlid.size());
    for (Eigen::Index i = 0; i < scores.nlid.size(); ++i) {
        z(i) = std::min(likelihood_ratio(scores.nlid(i), p_n, p_a), 1.0);
    }
    return fit_weight_curve(scores.nlid, z);
}

WeightVector apply_curve(const WeightCurve& curve, const NlidScores& scores) {
    WeightVector w;
    w.scheme = WeightScheme::lr;
    w.beta.resize(scores.nlid.size());
    for (Eigen::Index i = 0; i < scores.nlid.size(); ++i) {
        w.beta(i) = std::clamp(curve(scores.nlid(i)), 0.0, 1.0);
    }
    return w;
}

WeightVector lr_weights(const NlidScores& scores,
                        const std::vector<Eigen::Index>& labeled_normal,
                        const std::vector<Eigen::Index>& labeled_poisoned,
                        std::uint64_t seed) {
    return apply_curve(fit_lr_curve(scores, labeled_normal, labeled_poisoned, seed), scores);
}

WeightVector attack_unaware_weights(const NlidScores& scores, WeightScheme scheme) {
    const auto n = scores.nlid.size();
    if (n < 2) throw std::invalid_argument("attack_unaware_weights: need n >= 2");
    if (scheme != WeightScheme::linear && scheme != WeightScheme::concave &&
        scheme != WeightScheme::convex) {
        throw std::invalid_argument("attack_unaware_weights: invalid scheme");
    }

    WeightVector w;
    w.scheme = scheme;
    w.beta.resize(n);

    const double lo = scores.nlid.minCoeff();
    const double hi = scores.nlid.maxCoeff();
    if (hi - lo < 1e-300) {
        w.beta.setOnes();
        w.degenerate = true;
        return w;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = (scores.nlid(i) - lo) / (hi - lo);
        double beta = 0.0;
        switch (scheme) {
            case WeightScheme::linear: beta = 1.0 - v; break;
            case WeightScheme::concave: beta = 1.0 - v * v; break;
            case WeightScheme::convex: beta = 1.0 - std::sqrt(std::max(0.0, 2.0 * v - v * v)); break;
            default: break;
        }
        w.beta(i) = std::clamp(beta, 0.0, 1.0);
    }
    return w;
}

void export_weights_csv(const WeightVector& weights, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.precision(17);
    out << "beta\n";
    for (Eigen::Index i = 0; i < weights.beta.size(); ++i) out << weights.beta(i) << '\n';
}

} // namespace nlid
