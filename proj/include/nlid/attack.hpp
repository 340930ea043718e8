#pragma once

#include "nlid/dataset.hpp"

#include <cstdint>
#include <vector>

namespace nlid {

enum class PoisonInit { bflip, iflip };

struct AttackConfig {
    double poisoning_rate = 0.2; // p / (p + n)
    PoisonInit init = PoisonInit::bflip;
    std::vector<double> eta_grid = {0.01, 0.03, 0.05, 0.1, 0.3, 0.5};
    int max_iters = 30;
    double rel_tol = 1e-5;
    bool optimize_y = true;
    std::uint64_t seed = 0;

    Eigen::Index poison_count(Eigen::Index n) const;
};

struct PoisonResult {
    Dataset contaminated;                 // n + p rows, shuffled
    std::vector<Eigen::Index> poisoned_indices; // positions within `contaminated`
    std::vector<double> trace;            // validation MSE after each accepted sweep
    PoisonInit init_mode = PoisonInit::bflip;
};

/// Initial poisoned rows: p source rows copied, response flipped to 1-y
/// (IFlip) or round(1-y) with half-up ties (BFlip).
Dataset init_poison(const Dataset& train, const AttackConfig& config);

/// Gradient-ascent poisoning against a ridge victim: each poisoned row is
/// stepped along the implicit-differentiation gradient of validation MSE,
/// with the step size line-searched over the eta grid and the row projected
/// back into the unit box.
PoisonResult opt_attack(const Dataset& train, const Dataset& validation,
                        const AttackConfig& config, double victim_lambda);

/// Gradient of validation MSE w.r.t. one poisoned row's features (length d)
/// and response (last entry). Exposed for finite-difference verification.
Eigen::VectorXd poison_gradient(const Dataset& contaminated, const Dataset& validation,
                                Eigen::Index row, double victim_lambda);

void export_poison_result(const PoisonResult& result, const std::string& out_dir);

} // namespace nlid
