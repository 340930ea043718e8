#include "nlid/harness.hpp"
#include "nlid/lid.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

using nlid::AttackConfig;
using nlid::Dataset;
using nlid::DefenseSpec;
using nlid::ExperimentConfig;
using nlid::PoisonInit;

namespace {

PoisonInit parse_init(const std::string& name) {
    if (name == "bflip") return PoisonInit::bflip;
    if (name == "iflip") return PoisonInit::iflip;
    throw CLI::ValidationError("--init", "expected 'bflip' or 'iflip'");
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;

    ExperimentConfig cfg;
    cfg.dataset_path = j.value("dataset", cfg.dataset_path);
    cfg.response_column = j.value("response_column", cfg.response_column);
    if (j.contains("synth")) {
        const auto& s = j["synth"];
        cfg.synth_n = s.value("n", cfg.synth_n);
        cfg.synth_d = s.value("d", cfg.synth_d);
        cfg.synth_noise_sd = s.value("noise_sd", cfg.synth_noise_sd);
    }
    cfg.fold_count = j.value("fold_count", cfg.fold_count);
    if (j.contains("rates")) cfg.poisoning_rates = j["rates"].get<std::vector<double>>();
    if (j.contains("inits")) {
        cfg.inits.clear();
        for (const auto& name : j["inits"]) cfg.inits.push_back(parse_init(name.get<std::string>()));
    }
    if (j.contains("defenses")) {
        cfg.defenses.clear();
        for (const auto& d : j["defenses"]) {
            DefenseSpec spec;
            spec.tag = d.at("tag").get<std::string>();
            spec.k = d.value("k", spec.k);
            if (d.contains("k_grid")) spec.k_grid = d["k_grid"].get<std::vector<int>>();
            cfg.defenses.push_back(spec);
        }
    }
    cfg.lambda = j.value("lambda", cfg.lambda);
    if (j.contains("eta_grid")) cfg.eta_grid = j["eta_grid"].get<std::vector<double>>();
    if (j.contains("attack")) {
        cfg.attack_max_iters = j["attack"].value("max_iters", cfg.attack_max_iters);
        cfg.attack_rel_tol = j["attack"].value("rel_tol", cfg.attack_rel_tol);
    }
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

std::vector<DefenseSpec> parse_defenses(const std::vector<std::string>& tags, int k) {
    std::vector<DefenseSpec> out;
    for (const auto& tag : tags) out.push_back(DefenseSpec{.tag = tag, .k = k});
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"N-LID weighted regression: poisoning attacks, defenses, and sweeps"};
    app.require_subcommand(1);

    // --- synth ---
    auto* synth = app.add_subcommand("synth", "Generate a synthetic linear dataset CSV");
    Eigen::Index synth_n = 300, synth_d = 50;
    double synth_noise = 0.05;
    std::uint64_t synth_seed = 1;
    std::string synth_out = "synth.csv";
    synth->add_option("--n", synth_n, "Number of rows");
    synth->add_option("--d", synth_d, "Number of features");
    synth->add_option("--noise-sd", synth_noise, "Gaussian response noise sd");
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--out", synth_out, "Output CSV path")->required();

    // --- attack ---
    auto* attack = app.add_subcommand("attack", "Poison a dataset with the Opt attack");
    std::string atk_data, atk_response = "target", atk_out = "attack_out", atk_init = "bflip";
    double atk_rate = 0.2, atk_lambda = 0.0223, atk_rel_tol = 1e-5;
    int atk_iters = 30;
    std::uint64_t atk_seed = 1;
    std::vector<double> atk_eta = {0.01, 0.03, 0.05, 0.1, 0.3, 0.5};
    attack->add_option("--data", atk_data, "Training CSV")->required();
    attack->add_option("--response", atk_response, "Response column name");
    attack->add_option("--rate", atk_rate, "Poisoning rate p/(p+n), in [0, 0.2]");
    attack->add_option("--init", atk_init, "bflip or iflip");
    attack->add_option("--lambda", atk_lambda, "Victim ridge lambda");
    attack->add_option("--eta", atk_eta, "Line-search step grid");
    attack->add_option("--max-iters", atk_iters, "Maximum outer iterations");
    attack->add_option("--rel-tol", atk_rel_tol, "Relative MSE convergence tolerance");
    attack->add_option("--seed", atk_seed, "RNG seed");
    attack->add_option("--out-dir", atk_out, "Directory for contaminated/indices/trace CSVs");

    // --- defend ---
    auto* defend = app.add_subcommand("defend", "Fit a defended model on a training CSV");
    std::string def_data, def_response = "target", def_tag = "nlid-cvx";
    std::string def_model_out, def_weights_out, def_scores_out;
    double def_lambda = 0.0223;
    int def_k = 20;
    Eigen::Index def_clean = 0;
    std::uint64_t def_seed = 1;
    defend->add_option("--data", def_data, "Training CSV (possibly contaminated)")->required();
    defend->add_option("--response", def_response, "Response column name");
    defend->add_option("--defense", def_tag,
                       "ridge | nlid-lr | nlid-cvx | nlid-linear | nlid-concave | trim | ransac | huber");
    defend->add_option("--k", def_k, "Neighborhood size for N-LID defenses");
    defend->add_option("--lambda", def_lambda, "Ridge lambda");
    defend->add_option("--clean-count", def_clean, "Assumed clean-row count for TRIM (default: all rows)");
    defend->add_option("--seed", def_seed, "RNG seed");
    defend->add_option("--model-out", def_model_out, "Write the fitted model to this file");
    defend->add_option("--weights-out", def_weights_out, "Export the beta vector as CSV");
    defend->add_option("--scores-out", def_scores_out, "Export lid/nlid scores as CSV");

    // --- evaluate ---
    auto* evaluate = app.add_subcommand("evaluate", "MSE of a saved model on a CSV");
    std::string eval_model, eval_data, eval_response = "target";
    evaluate->add_option("--model", eval_model, "Model file from 'defend'")->required();
    evaluate->add_option("--data", eval_data, "Evaluation CSV")->required();
    evaluate->add_option("--response", eval_response, "Response column name");

    // --- sweep ---
    auto* sweep = app.add_subcommand("sweep", "Full cross-validated attack/defense sweep");
    std::string sweep_config, sweep_out = "sweep_out", sweep_data, sweep_response;
    std::vector<std::string> sweep_defenses;
    std::vector<double> sweep_rates;
    std::vector<std::string> sweep_inits;
    double sweep_lambda = -1.0;
    int sweep_k = 20, sweep_folds = 0, sweep_atk_iters = 0;
    std::int64_t sweep_seed = -1;
    Eigen::Index sweep_synth_n = 0, sweep_synth_d = 0;
    sweep->add_option("--config", sweep_config, "JSON config file (flags override it)");
    sweep->add_option("--data", sweep_data, "Dataset CSV (omit for synthetic)");
    sweep->add_option("--response", sweep_response, "Response column name");
    sweep->add_option("--synth-n", sweep_synth_n, "Synthetic rows");
    sweep->add_option("--synth-d", sweep_synth_d, "Synthetic features");
    sweep->add_option("--defenses", sweep_defenses, "Defense tags");
    sweep->add_option("--rates", sweep_rates, "Poisoning rates");
    sweep->add_option("--inits", sweep_inits, "Attack inits (bflip/iflip)");
    sweep->add_option("--lambda", sweep_lambda, "Ridge lambda");
    sweep->add_option("--k", sweep_k, "Neighborhood size for N-LID defenses");
    sweep->add_option("--folds", sweep_folds, "Cross-validation fold count");
    sweep->add_option("--attack-iters", sweep_atk_iters, "Attack outer iterations");
    sweep->add_option("--seed", sweep_seed, "RNG seed");
    sweep->add_option("--out-dir", sweep_out, "Report directory");

    // --- tune-k ---
    auto* tunek = app.add_subcommand("tune-k", "Pick k by validation MSE of an N-LID defense");
    std::string tk_data, tk_response = "target", tk_tag = "nlid-cvx";
    std::vector<int> tk_grid;
    double tk_lambda = 0.0223;
    std::uint64_t tk_seed = 1;
    tunek->add_option("--data", tk_data, "Training CSV")->required();
    tunek->add_option("--response", tk_response, "Response column name");
    tunek->add_option("--defense", tk_tag, "N-LID defense tag");
    tunek->add_option("--k-grid", tk_grid, "Candidate k values (default 10..90 step 10)");
    tunek->add_option("--lambda", tk_lambda, "Ridge lambda");
    tunek->add_option("--seed", tk_seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            const Dataset data = nlid::synth_linear(synth_n, synth_d, synth_noise, synth_seed);
            nlid::save_csv(data, synth_out);
            std::cout << "wrote " << synth_out << " (" << data.rows() << " x " << data.dims() << ")\n";
        } else if (*attack) {
            const Dataset data = nlid::load_csv(atk_data, atk_response);
            const auto split = nlid::make_folds(data.rows(), 5, atk_seed + 1);
            const Dataset train = data.select_rows(split.complement_indices(0));
            const Dataset val = data.select_rows(split.fold_indices(0));
            AttackConfig cfg;
            cfg.poisoning_rate = atk_rate;
            cfg.init = parse_init(atk_init);
            cfg.eta_grid = atk_eta;
            cfg.max_iters = atk_iters;
            cfg.rel_tol = atk_rel_tol;
            cfg.seed = atk_seed;
            const auto result = nlid::opt_attack(train, val, cfg, atk_lambda);
            nlid::export_poison_result(result, atk_out);
            std::cout << "wrote " << atk_out << "/: " << result.contaminated.rows() << " rows, "
                      << result.poisoned_indices.size() << " poisoned\n";
        } else if (*defend) {
            const Dataset data = nlid::load_csv(def_data, def_response);
            DefenseSpec spec{.tag = def_tag, .k = def_k};
            AttackConfig sim;
            sim.seed = def_seed;
            const auto clean = def_clean > 0 ? def_clean : data.rows();
            const auto model = nlid::fit_defense(spec, data, def_lambda, clean, sim);
            std::cout << "fit " << def_tag << " in " << model.train_seconds << " s, train MSE "
                      << nlid::mse(model, data) << '\n';
            if (!def_model_out.empty()) {
                std::ofstream out(def_model_out);
                out << model.serialize();
            }
            if (!def_weights_out.empty() || !def_scores_out.empty()) {
                const auto scores =
                    nlid::nlid_scores(data, std::min<int>(def_k, static_cast<int>(data.rows()) - 1));
                if (!def_scores_out.empty()) nlid::export_scores_csv(scores, def_scores_out);
                if (!def_weights_out.empty()) {
                    const auto beta = nlid::attack_unaware_weights(scores, nlid::WeightScheme::convex);
                    nlid::export_weights_csv(beta, def_weights_out);
                }
            }
        } else if (*evaluate) {
            std::ifstream in(eval_model);
            if (!in) throw std::runtime_error("cannot open model file: " + eval_model);
            std::stringstream buf;
            buf << in.rdbuf();
            const auto model = nlid::LinearModel::deserialize(buf.str());
            const Dataset data = nlid::load_csv(eval_data, eval_response);
            std::cout << "mse " << nlid::mse(model, data) << '\n';
        } else if (*sweep) {
            ExperimentConfig cfg;
            if (!sweep_config.empty()) cfg = load_config_file(sweep_config);
            if (!sweep_data.empty()) cfg.dataset_path = sweep_data;
            if (!sweep_response.empty()) cfg.response_column = sweep_response;
            if (sweep_synth_n > 0) cfg.synth_n = sweep_synth_n;
            if (sweep_synth_d > 0) cfg.synth_d = sweep_synth_d;
            if (!sweep_defenses.empty()) cfg.defenses = parse_defenses(sweep_defenses, sweep_k);
            if (!sweep_rates.empty()) cfg.poisoning_rates = sweep_rates;
            if (!sweep_inits.empty()) {
                cfg.inits.clear();
                for (const auto& name : sweep_inits) cfg.inits.push_back(parse_init(name));
            }
            if (sweep_lambda >= 0.0) cfg.lambda = sweep_lambda;
            if (sweep_folds > 0) cfg.fold_count = sweep_folds;
            if (sweep_atk_iters > 0) cfg.attack_max_iters = sweep_atk_iters;
            if (sweep_seed >= 0) cfg.seed = static_cast<std::uint64_t>(sweep_seed);
            if (cfg.defenses.empty()) {
                cfg.defenses = parse_defenses({"ridge", "nlid-lr", "nlid-cvx", "trim", "ransac", "huber"},
                                              sweep_k);
            }
            const auto report = nlid::run_experiment(cfg);
            nlid::emit_report(report, sweep_out);
            std::cout << "wrote " << sweep_out << "/results.csv (" << report.cells.size() << " cells)\n";
        } else if (*tunek) {
            const Dataset data = nlid::load_csv(tk_data, tk_response);
            DefenseSpec spec{.tag = tk_tag, .k_grid = tk_grid};
            ExperimentConfig cfg;
            cfg.lambda = tk_lambda;
            cfg.seed = tk_seed;
            std::cout << "k " << nlid::tune_k(data, spec, cfg) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
