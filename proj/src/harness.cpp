#include "nlid/harness.hpp"

#include "nlid/lid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nlid {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = seed;
    for (std::uint64_t v : {a + 1, b + 1, c + 1}) {
        h ^= v * 0x9e3779b97f4a7c15ULL;
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
        h ^= h >> 31;
    }
    return h;
}

int effective_k(int k, Eigen::Index n) {
    return std::min<int>(k, static_cast<int>(n) - 1);
}

WeightScheme scheme_of(const std::string& tag) {
    if (tag == "nlid-cvx") return WeightScheme::convex;
    if (tag == "nlid-linear") return WeightScheme::linear;
    if (tag == "nlid-concave") return WeightScheme::concave;
    throw std::invalid_argument("unknown N-LID scheme tag: " + tag);
}

// LR baseline: simulate a labeled attack on a disjoint copy of `base`, learn
// the weight curve from the simulation's known labels, then score the
// received data with it.
WeightVector lr_defense_weights(const Dataset& train, const Dataset& base, int k,
                                double lambda, AttackConfig sim) {
    sim.poisoning_rate = 0.2; // the defense does not know the true rate; assume the worst
    sim.seed = mix_seed(sim.seed, 0x51, 0, 0);

    const auto split = make_folds(base.rows(), 5, sim.seed + 1);
    const Dataset sim_train = base.select_rows(split.complement_indices(0));
    const Dataset sim_val = base.select_rows(split.fold_indices(0));

    const PoisonResult simulated = opt_attack(sim_train, sim_val, sim, lambda);
    const int k_sim = effective_k(k, simulated.contaminated.rows());
    const NlidScores sim_scores = nlid_scores(simulated.contaminated, k_sim);

    std::vector<char> poisoned(static_cast<std::size_t>(simulated.contaminated.rows()), 0);
    for (const auto i : simulated.poisoned_indices) poisoned[static_cast<std::size_t>(i)] = 1;
    std::vector<Eigen::Index> normal_idx, poison_idx;
    for (std::size_t i = 0; i < poisoned.size(); ++i) {
        (poisoned[i] ? poison_idx : normal_idx).push_back(static_cast<Eigen::Index>(i));
    }

    const WeightCurve curve = fit_lr_curve(sim_scores, normal_idx, poison_idx, sim.seed);
    return apply_curve(curve, nlid_scores(train, effective_k(k, train.rows())));
}

} // namespace

std::string init_name(PoisonInit init) {
    return init == PoisonInit::bflip ? "bflip" : "iflip";
}

LinearModel fit_defense(const DefenseSpec& spec, const Dataset& train, double lambda,
                        Eigen::Index clean_count, const AttackConfig& sim_attack,
                        const Dataset* lr_sim_base) {
    const auto start = Clock::now();
    LinearModel model;
    if (spec.tag == "ridge") {
        model = fit_ridge(train, lambda);
    } else if (spec.tag == "huber") {
        model = fit_huber(train, huber_default_delta(train, lambda), lambda);
    } else if (spec.tag == "ransac") {
        model = fit_ransac(train, 100, ransac_default_threshold(train, lambda),
                           train.dims() + 1, lambda, sim_attack.seed);
    } else if (spec.tag == "trim") {
        model = fit_trim(train, clean_count, lambda, sim_attack.seed);
    } else if (spec.tag == "nlid-lr") {
        const WeightVector beta = lr_defense_weights(
            train, lr_sim_base ? *lr_sim_base : train, spec.k, lambda, sim_attack);
        model = fit_weighted_ridge(train, beta, lambda);
    } else {
        const NlidScores scores = nlid_scores(train, effective_k(spec.k, train.rows()));
        const WeightVector beta = attack_unaware_weights(scores, scheme_of(spec.tag));
        model = fit_weighted_ridge(train, beta, lambda);
    }
    model.defense_tag = spec.tag;
    model.train_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return model;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    if (config.defenses.empty()) throw std::invalid_argument("run_experiment: no defenses configured");
    for (const double r : config.poisoning_rates) {
        if (r < 0.0 || r > 0.2 + 1e-12) throw std::invalid_argument("poisoning rate outside [0, 0.2]");
    }
    if (config.lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");

    Dataset full = config.dataset_path.empty()
                       ? synth_linear(config.synth_n, config.synth_d, config.synth_noise_sd, config.seed)
                       : load_csv(config.dataset_path, config.response_column);

    // The undefended ridge column is the denominator for all comparisons.
    std::vector<DefenseSpec> defenses = config.defenses;
    if (std::none_of(defenses.begin(), defenses.end(),
                     [](const DefenseSpec& s) { return s.tag == "ridge"; })) {
        defenses.insert(defenses.begin(), DefenseSpec{.tag = "ridge"});
    }

    ExperimentReport report;
    report.config = config;

    // Synthetic data is generated inside the unit box already; re-scaling it
    // per fold would stretch the response and change the problem. Only raw
    // CSV data goes through the min-max normalizer.
    const bool needs_normalization = !config.dataset_path.empty();

    const FoldPlan folds = make_folds(full.rows(), config.fold_count, config.seed);
    for (int fold = 0; fold < config.fold_count; ++fold) {
        const Dataset raw_rest = full.select_rows(folds.complement_indices(fold));
        const Dataset raw_test = full.select_rows(folds.fold_indices(fold));
        Dataset rest = raw_rest;
        Dataset test = raw_test;
        if (needs_normalization) {
            const Normalizer norm = fit_normalizer(raw_rest);
            rest = norm.apply(raw_rest);
            test = norm.apply(raw_test);
        }

        // 20% of the training fold is held out as the attacker's pristine
        // validation set; it never enters any defense fit.
        const FoldPlan inner = make_folds(rest.rows(), 5, mix_seed(config.seed, fold, 17, 0));
        const Dataset train = rest.select_rows(inner.complement_indices(0));
        const Dataset attack_val = rest.select_rows(inner.fold_indices(0));

        for (std::size_t ii = 0; ii < config.inits.size(); ++ii) {
            for (std::size_t ri = 0; ri < config.poisoning_rates.size(); ++ri) {
                const double rate = config.poisoning_rates[ri];
                AttackConfig atk;
                atk.poisoning_rate = rate;
                atk.init = config.inits[ii];
                atk.eta_grid = config.eta_grid;
                atk.max_iters = config.attack_max_iters;
                atk.rel_tol = config.attack_rel_tol;
                atk.seed = mix_seed(config.seed, static_cast<std::uint64_t>(fold), ri, ii);

                Dataset contaminated;
                if (atk.poison_count(train.rows()) == 0) {
                    contaminated = train;
                } else {
                    contaminated = opt_attack(train, attack_val, atk, config.lambda).contaminated;
                }

                for (const auto& spec : defenses) {
                    const LinearModel model =
                        fit_defense(spec, contaminated, config.lambda, train.rows(), atk, &train);
                    CellResult cell;
                    cell.defense = spec.tag;
                    cell.init = init_name(atk.init);
                    cell.rate = rate;
                    cell.fold = fold;
                    cell.mse = mse(model, test);
                    cell.seconds = model.train_seconds;
                    report.cells.push_back(cell);
                }
            }
        }
    }
    return report;
}

double ExperimentReport::mean_mse(const std::string& defense, const std::string& init,
                                  double rate) const {
    double sum = 0.0;
    int count = 0;
    for (const auto& c : cells) {
        if (c.defense == defense && c.init == init && c.rate == rate) {
            sum += c.mse;
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("no cells for " + defense + "/" + init);
    return sum / count;
}

double ExperimentReport::mean_seconds(const std::string& defense, const std::string& init,
                                      double rate) const {
    double sum = 0.0;
    int count = 0;
    for (const auto& c : cells) {
        if (c.defense == defense && c.init == init && c.rate == rate) {
            sum += c.seconds;
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("no cells for " + defense + "/" + init);
    return sum / count;
}

int tune_k(const Dataset& train, const DefenseSpec& spec, const ExperimentConfig& config) {
    std::vector<int> grid = spec.k_grid;
    if (grid.empty()) grid = {10, 20, 30, 40, 50, 60, 70, 80, 90};

    const FoldPlan folds = make_folds(train.rows(), config.fold_count, config.seed);
    Eigen::Index min_fold_train = train.rows();
    for (int f = 0; f < config.fold_count; ++f) {
        min_fold_train = std::min(
            min_fold_train, static_cast<Eigen::Index>(folds.complement_indices(f).size()));
    }

    double best_mse = std::numeric_limits<double>::infinity();
    int best_k = -1;
    for (const int k : grid) {
        if (static_cast<Eigen::Index>(k) >= min_fold_train) continue; // truncate the grid
        double sum = 0.0;
        for (int f = 0; f < config.fold_count; ++f) {
            const Dataset fit_part = train.select_rows(folds.complement_indices(f));
            const Dataset val_part = train.select_rows(folds.fold_indices(f));
            DefenseSpec with_k = spec;
            with_k.k = k;
            AttackConfig sim;
            sim.eta_grid = config.eta_grid;
            sim.max_iters = config.attack_max_iters;
            sim.seed = mix_seed(config.seed, static_cast<std::uint64_t>(f), 29, static_cast<std::uint64_t>(k));
            const LinearModel model =
                fit_defense(with_k, fit_part, config.lambda, fit_part.rows(), sim);
            sum += mse(model, val_part);
        }
        const double mean = sum / config.fold_count;
        if (mean < best_mse - 1e-15) { // ties resolve to the smallest k
            best_mse = mean;
            best_k = k;
        }
    }
    if (best_k < 0) throw std::invalid_argument("tune_k: grid exhausts the sample count");
    return best_k;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

} // namespace

void emit_report(const ExperimentReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        std::ofstream out((fs::path(out_dir) / "results.csv").string());
        if (!out) throw std::runtime_error("cannot write results.csv");
        out << "defense,init,rate,fold,mse\n";
        for (const auto& c : report.cells) {
            out << c.defense << ',' << c.init << ',' << fmt(c.rate) << ',' << c.fold << ','
                << fmt(c.mse) << '\n';
        }
    }
    {
        std::ofstream out((fs::path(out_dir) / "timings.csv").string());
        if (!out) throw std::runtime_error("cannot write timings.csv");
        out << "defense,init,rate,fold,seconds\n";
        for (const auto& c : report.cells) {
            out << c.defense << ',' << c.init << ',' << fmt(c.rate) << ',' << c.fold << ','
                << fmt(c.seconds) << '\n';
        }
    }

    // (defense, init, rate) aggregates, undefended ridge as the baseline.
    std::vector<std::tuple<std::string, std::string, double>> keys;
    for (const auto& c : report.cells) {
        const auto key = std::make_tuple(c.defense, c.init, c.rate);
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    {
        std::ofstream out((fs::path(out_dir) / "summary.csv").string());
        if (!out) throw std::runtime_error("cannot write summary.csv");
        out << "defense,init,rate,mean_mse,pct_change_vs_ridge,time_factor\n";
        for (const auto& [defense, init, rate] : keys) {
            const double m = report.mean_mse(defense, init, rate);
            const double base = report.mean_mse("ridge", init, rate);
            const double t = report.mean_seconds(defense, init, rate);
            const double tbase = report.mean_seconds("ridge", init, rate);
            out << defense << ',' << init << ',' << fmt(rate) << ',' << fmt(m) << ','
                << fmt(100.0 * (m - base) / base) << ','
                << fmt(t / std::max(tbase, 1e-12)) << '\n';
        }
    }
    {
        std::ofstream out((fs::path(out_dir) / "curves.csv").string());
        if (!out) throw std::runtime_error("cannot write curves.csv");
        out << "defense,init,rate,mean_mse\n";
        for (const auto& [defense, init, rate] : keys) {
            out << defense << ',' << init << ',' << fmt(rate) << ','
                << fmt(report.mean_mse(defense, init, rate)) << '\n';
        }
    }
    {
        std::ofstream out((fs::path(out_dir) / "manifest.json").string());
        if (!out) throw std::runtime_error("cannot write manifest.json");
        const auto& cfg = report.config;
        out << "{\n  \"seed\": " << cfg.seed << ",\n  \"lambda\": " << cfg.lambda
            << ",\n  \"fold_count\": " << cfg.fold_count << ",\n  \"dataset\": \""
            << (cfg.dataset_path.empty() ? "synthetic" : cfg.dataset_path)
            << "\",\n  \"rates\": [";
        for (std::size_t i = 0; i < cfg.poisoning_rates.size(); ++i) {
            out << (i ? "," : "") << cfg.poisoning_rates[i];
        }
        out << "],\n  \"defenses\": [";
        for (std::size_t i = 0; i < cfg.defenses.size(); ++i) {
            out << (i ? "," : "") << '"' << cfg.defenses[i].tag << '"';
        }
        out << "]\n}\n";
    }
}

} // namespace nlid
