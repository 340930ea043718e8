#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlid/dataset.hpp"
#include "nlid/regressors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace nlid;

namespace {

std::string write_temp(const std::string& content) {
    static int counter = 0;
    const auto path = std::filesystem::temp_directory_path() /
                      ("nlid_test_" + std::to_string(counter++) + ".csv");
    std::ofstream out(path);
    out << content;
    return path.string();
}

} // namespace

TEST_CASE("load_csv parses a small file") {
    const auto path = write_temp("a,b,target\n1,2,0.5\n3,4,0.25\n5,6,0.75\n");
    const Dataset data = load_csv(path, "target");
    CHECK(data.rows() == 3);
    CHECK(data.dims() == 2);
    CHECK(data.features(1, 0) == 3.0);
    CHECK(data.response(2) == 0.75);
    CHECK(data.feature_names == std::vector<std::string>{"a", "b"});
    std::remove(path.c_str());
}

TEST_CASE("load_csv error paths") {
    CHECK_THROWS(load_csv("/nonexistent/file.csv", "target"));

    const auto missing_col = write_temp("a,b\n1,2\n");
    CHECK_THROWS_WITH_AS(load_csv(missing_col, "target"),
                         doctest::Contains("target"), std::runtime_error);

    const auto nan_cell = write_temp("a,target\n1,0.5\nNaN,0.25\n");
    try {
        load_csv(nan_cell, "target");
        FAIL("expected throw");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 3") != std::string::npos);
        CHECK(msg.find("'a'") != std::string::npos);
    }

    const auto empty = write_temp("");
    CHECK_THROWS(load_csv(empty, "target"));
    std::remove(missing_col.c_str());
    std::remove(nan_cell.c_str());
    std::remove(empty.c_str());
}

TEST_CASE("normalizer min-max scaling") {
    Dataset data;
    data.features.resize(3, 1);
    data.features << 2, 4, 6;
    data.response.resize(3);
    data.response << 0, 1, 2;

    const Normalizer norm = fit_normalizer(data);
    CHECK(norm.col_min(0) == 2.0);
    CHECK(norm.col_max(0) == 6.0);

    const Dataset scaled = norm.apply(data);
    CHECK(scaled.features(1, 0) == doctest::Approx(0.5));

    SUBCASE("out-of-range values clamp to [0,1]") {
        Dataset held;
        held.features.resize(1, 1);
        held.features << 8;
        held.response.resize(1);
        held.response << -1;
        const Dataset out = norm.apply(held);
        CHECK(out.features(0, 0) == 1.0);
        CHECK(out.response(0) == 0.0);
    }
}

TEST_CASE("constant column maps to zero") {
    Dataset data;
    data.features.resize(2, 1);
    data.features << 5, 5;
    data.response.resize(2);
    data.response << 0.1, 0.9;
    const Dataset scaled = fit_normalizer(data).apply(data);
    CHECK(scaled.features(0, 0) == 0.0);
    CHECK(scaled.features(1, 0) == 0.0);
}

TEST_CASE("normalizer round-trip within 1e-12") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    Dataset data;
    data.features.resize(50, 4);
    data.response.resize(50);
    for (Eigen::Index i = 0; i < 50; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) data.features(i, j) = u(rng);
        data.response(i) = u(rng);
    }
    const Normalizer norm = fit_normalizer(data);
    const Dataset back = norm.invert(norm.apply(data));
    for (Eigen::Index i = 0; i < 50; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
            CHECK(back.features(i, j) ==
                  doctest::Approx(data.features(i, j)).epsilon(1e-12));
        }
        CHECK(back.response(i) == doctest::Approx(data.response(i)).epsilon(1e-12));
    }
}

TEST_CASE("normalizer JSON round-trip") {
    Dataset data;
    data.features.resize(2, 2);
    data.features << 0.25, -3, 4, 9;
    data.response.resize(2);
    data.response << 0, 1;
    const Normalizer norm = fit_normalizer(data);
    const Normalizer back = Normalizer::from_json(norm.to_json());
    CHECK(back.col_min.isApprox(norm.col_min));
    CHECK(back.col_max.isApprox(norm.col_max));
}

TEST_CASE("make_folds sizes and determinism") {
    SUBCASE("even split") {
        const auto plan = make_folds(10, 5, 3);
        for (int f = 0; f < 5; ++f) CHECK(plan.fold_indices(f).size() == 2);
    }
    SUBCASE("remainder rule") {
        const auto plan = make_folds(11, 5, 3);
        std::vector<std::size_t> sizes;
        for (int f = 0; f < 5; ++f) sizes.push_back(plan.fold_indices(f).size());
        std::sort(sizes.begin(), sizes.end());
        CHECK(sizes == std::vector<std::size_t>{2, 2, 2, 2, 3});
    }
    SUBCASE("determinism") {
        const auto a = make_folds(840, 5, 7);
        const auto b = make_folds(840, 5, 7);
        CHECK(a.assignments == b.assignments);
    }
    SUBCASE("partition property") {
        const auto plan = make_folds(97, 5, 11);
        std::size_t total = 0;
        for (int f = 0; f < 5; ++f) total += plan.fold_indices(f).size();
        CHECK(total == 97);
        for (const int a : plan.assignments) {
            CHECK(a >= 0);
            CHECK(a < 5);
        }
    }
    SUBCASE("fold_count > n errors") { CHECK_THROWS(make_folds(3, 5, 1)); }
}

TEST_CASE("synth_linear noiseless data is exactly linear") {
    const Dataset data = synth_linear(100, 5, 0.0, 42);
    const LinearModel fit = fit_ridge(data, 0.0);
    const Eigen::VectorXd& theta = *data.true_theta;
    CHECK((fit.omega - theta.head(5)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(fit.bias == doctest::Approx(theta(5)).epsilon(1e-8));
}

TEST_CASE("synth_linear is deterministic") {
    const Dataset a = synth_linear(500, 50, 0.05, 9);
    const Dataset b = synth_linear(500, 50, 0.05, 9);
    CHECK(a.features == b.features);
    CHECK(a.response == b.response);
}

TEST_CASE("ridge test MSE tracks the noise variance") {
    const double noise_sd = 0.05;
    double total = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        const Dataset data = synth_linear(500, 50, noise_sd, 100 + s);
        const auto plan = make_folds(data.rows(), 5, 1);
        const Dataset train = data.select_rows(plan.complement_indices(0));
        const Dataset test = data.select_rows(plan.fold_indices(0));
        total += mse(fit_ridge(train, 1e-6), test);
    }
    const double mean_mse = total / seeds;
    const double noise_var = noise_sd * noise_sd;
    CHECK(mean_mse > noise_var / 2.0);
    CHECK(mean_mse < noise_var * 2.0);
}

TEST_CASE("csv round-trip through save/load") {
    const Dataset data = synth_linear(20, 3, 0.01, 5);
    const auto path = write_temp("");
    save_csv(data, path, "target");
    const Dataset back = load_csv(path, "target");
    CHECK(back.rows() == data.rows());
    CHECK(back.features.isApprox(data.features, 1e-14));
    CHECK(back.response.isApprox(data.response, 1e-14));
    std::remove(path.c_str());
}
