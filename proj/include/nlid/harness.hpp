#pragma once

#include "nlid/attack.hpp"
#include "nlid/dataset.hpp"
#include "nlid/regressors.hpp"
#include "nlid/weighting.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nlid {

struct DefenseSpec {
    std::string tag;               // ridge | nlid-lr | nlid-cvx | nlid-linear | nlid-concave |
                                   // trim | ransac | huber
    int k = 20;                    // neighborhood size for the nlid-* defenses
    std::vector<int> k_grid;       // when nonempty, tune-k searches this grid
};

struct ExperimentConfig {
    // Dataset source: a CSV path + response column, or a synthetic spec when path is empty.
    std::string dataset_path;
    std::string response_column = "target";
    Eigen::Index synth_n = 300;
    Eigen::Index synth_d = 50;
    double synth_noise_sd = 0.05;

    int fold_count = 5;
    std::vector<double> poisoning_rates = {0.0, 0.04, 0.08, 0.12, 0.16, 0.20};
    std::vector<PoisonInit> inits = {PoisonInit::bflip};
    std::vector<DefenseSpec> defenses;
    double lambda = 0.0223;
    std::vector<double> eta_grid = {0.01, 0.03, 0.05, 0.1, 0.3, 0.5};
    int attack_max_iters = 30;
    double attack_rel_tol = 1e-5;
    std::uint64_t seed = 1;
};

struct CellResult {
    std::string defense;
    std::string init;
    double rate = 0.0;
    int fold = 0;
    double mse = 0.0;
    double seconds = 0.0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<CellResult> cells;

    double mean_mse(const std::string& defense, const std::string& init, double rate) const;
    double mean_seconds(const std::string& defense, const std::string& init, double rate) const;
};

/// Fits one defense on a (possibly contaminated) training set. `clean_count`
/// is what TRIM assumes about the number of normal rows. The LR defense
/// learns its weight curve from a labeled attack the harness simulates on
/// `lr_sim_base` — a pristine copy of the training data when the harness has
/// one (the paper's exaggerated-capability baseline); when null, the
/// simulation falls back to the received, possibly contaminated data.
LinearModel fit_defense(const DefenseSpec& spec, const Dataset& train, double lambda,
                        Eigen::Index clean_count, const AttackConfig& sim_attack,
                        const Dataset* lr_sim_base = nullptr);

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Smallest grid k minimizing mean validation MSE of the given N-LID defense
/// on internal folds of `train`. Grid entries >= fold-train size are dropped.
int tune_k(const Dataset& train, const DefenseSpec& spec, const ExperimentConfig& config);

/// Writes results.csv, timings.csv, summary.csv, curves.csv and manifest.json.
void emit_report(const ExperimentReport& report, const std::string& out_dir);

std::string init_name(PoisonInit init);

} // namespace nlid
