#include "nlid/regressors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nlid {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::MatrixXd augment(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd Z(X.rows(), X.cols() + 1);
    Z.leftCols(X.cols()) = X;
    Z.col(X.cols()).setOnes();
    return Z;
}

// Solves (Z' W Z / n + lambda * P) theta = Z' W y / n with P = diag(1..1, 0).
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& Z, const Eigen::VectorXd& w,
                                       const Eigen::VectorXd& y, double lambda) {
    const auto n = Z.rows();
    const auto p = Z.cols();
    Eigen::MatrixXd A = Z.transpose() * w.asDiagonal() * Z / static_cast<double>(n);
    A.diagonal().head(p - 1).array() += lambda;
    const Eigen::VectorXd rhs = Z.transpose() * (w.cwiseProduct(y)) / static_cast<double>(n);
    const Eigen::VectorXd theta = A.ldlt().solve(rhs);
    if (!theta.allFinite()) throw std::runtime_error("normal equations: singular system");
    return theta;
}

LinearModel model_from_theta(const Eigen::VectorXd& theta, double lambda,
                             const std::string& tag) {
    LinearModel model;
    model.omega = theta.head(theta.size() - 1);
    model.bias = theta(theta.size() - 1);
    model.lambda = lambda;
    model.defense_tag = tag;
    return model;
}

double residual_mad(const Eigen::VectorXd& r) {
    std::vector<double> v(r.data(), r.data() + r.size());
    auto median_of = [](std::vector<double>& x) {
        const auto mid = x.size() / 2;
        std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
        double m = x[mid];
        if (x.size() % 2 == 0) {
            const double lo = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
            m = 0.5 * (m + lo);
        }
        return m;
    };
    const double med = median_of(v);
    for (auto& x : v) x = std::abs(x - med);
    return median_of(v);
}

} // namespace

std::string LinearModel::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "lambda " << lambda << "\nbias " << bias << "\nomega";
    for (Eigen::Index j = 0; j < omega.size(); ++j) os << ' ' << omega(j);
    os << '\n';
    return os.str();
}

LinearModel LinearModel::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string key;
    LinearModel model;
    std::vector<double> w;
    while (is >> key) {
        if (key == "lambda") is >> model.lambda;
        else if (key == "bias") is >> model.bias;
        else if (key == "omega") {
            double v;
            while (is >> v) w.push_back(v);
        } else {
            throw std::runtime_error("LinearModel: unknown field " + key);
        }
    }
    model.omega = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    return model;
}

LinearModel fit_weighted_ridge(const Dataset& train, const WeightVector& beta, double lambda) {
    const auto start = Clock::now();
    const auto n = train.rows();
    if (beta.beta.size() != n) throw std::invalid_argument("fit_weighted_ridge: weight length mismatch");
    if (!beta.beta.allFinite()) throw std::invalid_argument("fit_weighted_ridge: non-finite weights");
    if (lambda < 0.0) throw std::invalid_argument("fit_weighted_ridge: negative lambda");

    const Eigen::MatrixXd Z = augment(train.features);
    const Eigen::VectorXd theta = solve_normal_equations(Z, beta.beta, train.response, lambda);
    auto model = model_from_theta(theta, lambda, "weighted-ridge/" + scheme_name(beta.scheme));
    model.train_seconds = seconds_since(start);
    return model;
}

LinearModel fit_ridge(const Dataset& train, double lambda) {
    WeightVector ones;
    ones.scheme = WeightScheme::uniform;
    ones.beta = Eigen::VectorXd::Ones(train.rows());
    auto model = fit_weighted_ridge(train, ones, lambda);
    model.defense_tag = "ridge";
    return model;
}

double huber_default_delta(const Dataset& train, double lambda) {
    const auto pre = fit_ridge(train, lambda);
    const Eigen::VectorXd r = train.response - pre.predict(train.features);
    return std::max(1.35 * 1.4826 * residual_mad(r), 1e-8);
}

LinearModel fit_huber(const Dataset& train, double delta, double lambda,
                      int max_iters, double grad_tol) {
    const auto start = Clock::now();
    if (!(delta > 0.0)) throw std::invalid_argument("fit_huber: delta must be positive");
    const auto n = train.rows();
    const Eigen::MatrixXd Z = augment(train.features);
    const auto p = Z.cols();

    Eigen::VectorXd theta = solve_normal_equations(Z, Eigen::VectorXd::Ones(n), train.response, lambda);
    int iter = 0;
    bool converged = false;
    for (; iter < max_iters; ++iter) {
        const Eigen::VectorXd r = train.response - Z * theta;

        // psi(r) = 2r inside the quadratic zone, 2*delta*sign(r) outside.
        Eigen::VectorXd psi(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(r(i)) <= delta) {
                psi(i) = 2.0 * r(i);
                w(i) = 2.0;
            } else {
                psi(i) = 2.0 * delta * (r(i) > 0 ? 1.0 : -1.0);
                w(i) = 2.0 * delta / std::abs(r(i));
            }
        }
        Eigen::VectorXd grad = -Z.transpose() * psi / static_cast<double>(n);
        grad.head(p - 1) += 2.0 * lambda * theta.head(p - 1);
        if (grad.norm() <= grad_tol) {
            converged = true;
            break;
        }

        // IRLS step: the surrogate's lambda must be doubled because the
        // quadratic-zone weight is 2, not 1.
        Eigen::MatrixXd A = Z.transpose() * w.asDiagonal() * Z / static_cast<double>(n);
        A.diagonal().head(p - 1).array() += 2.0 * lambda;
        const Eigen::VectorXd rhs = Z.transpose() * w.cwiseProduct(train.response) / static_cast<double>(n);
        const Eigen::VectorXd next = A.ldlt().solve(rhs);
        if (!next.allFinite()) break;
        theta = next;
    }

    auto model = model_from_theta(theta, lambda, "huber");
    model.iterations = iter;
    model.converged = converged;
    model.train_seconds = seconds_since(start);
    return model;
}

double ransac_default_threshold(const Dataset& train, double lambda) {
    const auto pre = fit_ridge(train, lambda);
    const Eigen::VectorXd r = train.response - pre.predict(train.features);
    return std::max(2.0 * residual_mad(r), 1e-8);
}

LinearModel fit_ransac(const Dataset& train, int trials, double inlier_threshold,
                       Eigen::Index min_sample, double lambda, std::uint64_t seed) {
    const auto start = Clock::now();
    const auto n = train.rows();
    if (trials < 1) throw std::invalid_argument("fit_ransac: trials must be >= 1");
    if (min_sample < train.dims() + 1 || min_sample > n) {
        throw std::invalid_argument("fit_ransac: min_sample must be in [d+1, n]");
    }
    if (!(inlier_threshold > 0.0)) throw std::invalid_argument("fit_ransac: threshold must be positive");

    std::vector<Eigen::Index> best_consensus;
    for (int t = 0; t < trials; ++t) {
        // Trial-level stream derived from (seed, trial) so trials can be sharded.
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(t + 1)));
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(static_cast<std::size_t>(min_sample));

        LinearModel trial_model;
        try {
            trial_model = fit_ridge(train.select_rows(idx), lambda);
        } catch (const std::runtime_error&) {
            continue; // degenerate minimal sample
        }

        const Eigen::VectorXd r = train.response - trial_model.predict(train.features);
        std::vector<Eigen::Index> consensus;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(r(i)) <= inlier_threshold) consensus.push_back(i);
        }
        if (consensus.size() > best_consensus.size()) best_consensus = std::move(consensus);
    }

    LinearModel model;
    if (best_consensus.size() < static_cast<std::size_t>(min_sample)) {
        model = fit_ridge(train, lambda);
        model.fallback = true;
    } else {
        model = fit_ridge(train.select_rows(best_consensus), lambda);
    }
    model.defense_tag = "ransac";
    model.iterations = trials;
    model.train_seconds = seconds_since(start);
    return model;
}

double trimmed_loss(const LinearModel& model, const Dataset& data, Eigen::Index n_keep) {
    Eigen::VectorXd r2 = (data.response - model.predict(data.features)).array().square();
    std::vector<double> v(r2.data(), r2.data() + r2.size());
    std::nth_element(v.begin(), v.begin() + n_keep, v.end());
    const double sum = std::accumulate(v.begin(), v.begin() + n_keep, 0.0);
    return sum / static_cast<double>(n_keep) + model.lambda * model.omega.squaredNorm();
}

LinearModel fit_trim(const Dataset& train, Eigen::Index n_keep, double lambda,
                     std::uint64_t seed, int max_iters, std::vector<double>* loss_path) {
    const auto start = Clock::now();
    const auto n = train.rows();
    if (n_keep < train.dims() + 1 || n_keep > n) {
        throw std::invalid_argument("fit_trim: n_keep must be in [d+1, n]");
    }

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<Eigen::Index> kept(perm.begin(), perm.begin() + n_keep);
    std::sort(kept.begin(), kept.end());

    LinearModel model;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        model = fit_ridge(train.select_rows(kept), lambda);
        if (loss_path) loss_path->push_back(trimmed_loss(model, train, n_keep));

        const Eigen::VectorXd r2 = (train.response - model.predict(train.features)).array().square();
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return r2(a) < r2(b); });
        std::vector<Eigen::Index> next(order.begin(), order.begin() + n_keep);
        std::sort(next.begin(), next.end());

        if (next == kept) {
            ++iter;
            break;
        }
        kept = std::move(next);
    }

    model.defense_tag = "trim";
    model.iterations = iter;
    model.train_seconds = seconds_since(start);
    return model;
}

double mse(const LinearModel& model, const Dataset& data) {
    if (model.omega.size() != data.dims()) throw std::invalid_argument("mse: dimension mismatch");
    return (data.response - model.predict(data.features)).squaredNorm() /
           static_cast<double>(data.rows());
}

} // namespace nlid
