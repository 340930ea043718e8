#include "nlid/attack.hpp"

#include "nlid/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace nlid {

namespace {

Eigen::MatrixXd augment(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd Z(X.rows(), X.cols() + 1);
    Z.leftCols(X.cols()) = X;
    Z.col(X.cols()).setOnes();
    return Z;
}

// Stationarity matrix of the ridge victim on `data`.
Eigen::MatrixXd victim_system(const Eigen::MatrixXd& Z, double lambda) {
    const auto p = Z.cols();
    Eigen::MatrixXd A = Z.transpose() * Z / static_cast<double>(Z.rows());
    A.diagonal().head(p - 1).array() += lambda;
    return A;
}

double validation_mse_of(const Dataset& train, const Dataset& validation, double lambda) {
    return mse(fit_ridge(train, lambda), validation);
}

double bflip(double y) {
    // round(1 - y) with the 0.5 tie broken upward
    const double v = 1.0 - y;
    return (v >= 0.5) ? 1.0 : 0.0;
}

void check_disjoint(const Dataset& train, const Dataset& validation) {
    for (Eigen::Index i = 0; i < validation.rows(); ++i) {
        for (Eigen::Index j = 0; j < train.rows(); ++j) {
            if (validation.response(i) == train.response(j) &&
                validation.features.row(i) == train.features.row(j)) {
                throw std::invalid_argument("opt_attack: validation overlaps the training set");
            }
        }
    }
}

} // namespace

Eigen::Index AttackConfig::poison_count(Eigen::Index n) const {
    if (poisoning_rate < 0.0 || poisoning_rate > 0.2 + 1e-12) {
        throw std::invalid_argument("poisoning_rate must be in [0, 0.2]");
    }
    return static_cast<Eigen::Index>(
        std::llround(poisoning_rate * static_cast<double>(n) / (1.0 - poisoning_rate)));
}

Dataset init_poison(const Dataset& train, const AttackConfig& config) {
    const auto n = train.rows();
    const auto p = config.poison_count(n);
    if (p < 1) throw std::invalid_argument("init_poison: poison count is zero");
    if (p >= n) throw std::invalid_argument("init_poison: poison count must be < n");

    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::mt19937_64 rng(config.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(p));

    Dataset poison = train.select_rows(idx);
    poison.true_theta.reset();
    for (Eigen::Index i = 0; i < poison.rows(); ++i) {
        poison.response(i) = (config.init == PoisonInit::bflip)
                                 ? bflip(poison.response(i))
                                 : 1.0 - poison.response(i);
    }
    return poison;
}

Eigen::VectorXd poison_gradient(const Dataset& contaminated, const Dataset& validation,
                                Eigen::Index row, double victim_lambda) {
    const auto N = contaminated.rows();
    const auto d = contaminated.dims();

    const Eigen::MatrixXd Z = augment(contaminated.features);
    const Eigen::MatrixXd A = victim_system(Z, victim_lambda);
    const auto llt = A.ldlt();
    const Eigen::VectorXd theta =
        llt.solve(Z.transpose() * contaminated.response / static_cast<double>(N));

    const Eigen::MatrixXd Zv = augment(validation.features);
    const Eigen::VectorXd dW_dtheta = 2.0 * Zv.transpose() * (Zv * theta - validation.response) /
                                      static_cast<double>(validation.rows());
    const Eigen::VectorXd g = llt.solve(dW_dtheta);

    const Eigen::VectorXd z_row = Z.row(row);
    const double y_row = contaminated.response(row);
    const double resid = y_row - z_row.dot(theta);
    const double g_dot_z = g.dot(z_row);

    // d(valMSE)/d x_{row,l} = (g_l * (y - y_hat) - (g.z) * theta_l) / N,
    // d(valMSE)/d y_row     = (g.z) / N, from differentiating A theta = c.
    Eigen::VectorXd grad(d + 1);
    for (Eigen::Index l = 0; l < d; ++l) {
        grad(l) = (g(l) * resid - g_dot_z * theta(l)) / static_cast<double>(N);
    }
    grad(d) = g_dot_z / static_cast<double>(N);
    return grad;
}

PoisonResult opt_attack(const Dataset& train, const Dataset& validation,
                        const AttackConfig& config, double victim_lambda) {
    if (config.eta_grid.empty()) throw std::invalid_argument("opt_attack: empty eta grid");
    check_disjoint(train, validation);

    PoisonResult result;
    result.init_mode = config.init;

    const auto n = train.rows();
    const auto p = config.poison_count(n);
    if (p == 0) {
        result.contaminated = train;
        return result;
    }

    const Dataset poison = init_poison(train, config);
    const auto d = train.dims();

    Dataset cur;
    cur.features.resize(n + p, d);
    cur.features.topRows(n) = train.features;
    cur.features.bottomRows(p) = poison.features;
    cur.response.resize(n + p);
    cur.response.head(n) = train.response;
    cur.response.tail(p) = poison.response;
    cur.feature_names = train.feature_names;

    double best_mse = validation_mse_of(cur, validation, victim_lambda);
    result.trace.push_back(best_mse);

    for (int iter = 0; iter < config.max_iters; ++iter) {
        const double sweep_start_mse = best_mse;
        for (Eigen::Index j = n; j < n + p; ++j) {
            const Eigen::VectorXd grad = poison_gradient(cur, validation, j, victim_lambda);
            const Eigen::VectorXd x0 = cur.features.row(j);
            const double y0 = cur.response(j);

            Eigen::VectorXd best_x = x0;
            double best_y = y0;
            bool improved = false;
            for (const double eta : config.eta_grid) {
                if (!(eta > 0.0)) throw std::invalid_argument("opt_attack: eta must be positive");
                cur.features.row(j) =
                    (x0 + eta * grad.head(d)).cwiseMax(0.0).cwiseMin(1.0).transpose();
                if (config.optimize_y) {
                    cur.response(j) = std::clamp(y0 + eta * grad(d), 0.0, 1.0);
                }
                const double candidate = validation_mse_of(cur, validation, victim_lambda);
                if (candidate > best_mse) {
                    best_mse = candidate;
                    best_x = cur.features.row(j);
                    best_y = cur.response(j);
                    improved = true;
                }
            }
            cur.features.row(j) = (improved ? best_x : x0).transpose();
            cur.response(j) = improved ? best_y : y0;
        }
        result.trace.push_back(best_mse);
        if (best_mse - sweep_start_mse < config.rel_tol * std::max(sweep_start_mse, 1e-12)) break;
    }

    // Shuffle so a naive defense cannot exploit row order.
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n + p));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::mt19937_64 rng(config.seed ^ 0xc2b2ae3d27d4eb4fULL);
    std::shuffle(perm.begin(), perm.end(), rng);

    result.contaminated = cur.select_rows(perm);
    result.contaminated.true_theta = train.true_theta;
    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
        if (perm[pos] >= n) result.poisoned_indices.push_back(static_cast<Eigen::Index>(pos));
    }
    return result;
}

void export_poison_result(const PoisonResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    save_csv(result.contaminated, (fs::path(out_dir) / "contaminated.csv").string());

    std::ofstream idx((fs::path(out_dir) / "poisoned_indices.csv").string());
    if (!idx) throw std::runtime_error("cannot write poisoned_indices.csv");
    idx << "index\n";
    for (const auto i : result.poisoned_indices) idx << i << '\n';

    std::ofstream tr((fs::path(out_dir) / "trace.csv").string());
    if (!tr) throw std::runtime_error("cannot write trace.csv");
    tr.precision(17);
    tr << "iteration,validation_mse\n";
    for (std::size_t i = 0; i < result.trace.size(); ++i) tr << i << ',' << result.trace[i] << '\n';
}

} // namespace nlid
