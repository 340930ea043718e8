#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlid/lid.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace nlid;

namespace {

Dataset random_dataset(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Dataset data;
    data.features.resize(n, d);
    data.response = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) data.features(i, j) = u(rng);
    }
    return data;
}

// Points uniform on an m-dimensional axis-aligned subspace of ambient dims.
Dataset subspace_dataset(Eigen::Index n, Eigen::Index ambient, Eigen::Index m,
                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Dataset data;
    data.features = Eigen::MatrixXd::Zero(n, ambient);
    data.response = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) data.features(i, j) = u(rng);
    }
    return data;
}

double median_of(Eigen::VectorXd v) {
    std::vector<double> vals(v.data(), v.data() + v.size());
    std::sort(vals.begin(), vals.end());
    const auto mid = vals.size() / 2;
    return vals.size() % 2 ? vals[mid] : 0.5 * (vals[mid - 1] + vals[mid]);
}

double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    auto ranks = [](const Eigen::VectorXd& v) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(v.size()));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::sort(order.begin(), order.end(),
                  [&](Eigen::Index x, Eigen::Index y) { return v(x) < v(y); });
        Eigen::VectorXd r(v.size());
        for (std::size_t i = 0; i < order.size(); ++i) r(order[i]) = static_cast<double>(i);
        return r;
    };
    const Eigen::VectorXd ra = ranks(a), rb = ranks(b);
    const double ma = ra.mean(), mb = rb.mean();
    const double cov = ((ra.array() - ma) * (rb.array() - mb)).sum();
    const double sa = std::sqrt((ra.array() - ma).square().sum());
    const double sb = std::sqrt((rb.array() - mb).square().sum());
    return cov / (sa * sb);
}

} // namespace

TEST_CASE("knn on three collinear points") {
    Dataset data;
    data.features.resize(3, 1);
    data.features << 0, 1, 3;
    data.response = Eigen::VectorXd::Zero(3);
    const auto table = knn(data, 1);
    CHECK(table.indices(0, 0) == 1);
    CHECK(table.indices(1, 0) == 0);
    CHECK(table.indices(2, 0) == 1);
    CHECK(table.distances(2, 0) == doctest::Approx(2.0));
}

TEST_CASE("knn with k = n-1 covers every other index") {
    const auto data = random_dataset(12, 3, 1);
    const auto table = knn(data, 11);
    for (Eigen::Index i = 0; i < 12; ++i) {
        std::vector<Eigen::Index> seen;
        for (int m = 0; m < 11; ++m) seen.push_back(table.indices(i, m));
        std::sort(seen.begin(), seen.end());
        std::vector<Eigen::Index> expected;
        for (Eigen::Index j = 0; j < 12; ++j) {
            if (j != i) expected.push_back(j);
        }
        CHECK(seen == expected);
        for (int m = 1; m < 11; ++m) CHECK(table.distances(i, m) >= table.distances(i, m - 1));
    }
}

TEST_CASE("knn matches the brute-force all-pairs oracle") {
    const auto data = random_dataset(100, 10, 2);
    const int k = 7;
    const auto table = knn(data, k);
    for (Eigen::Index i = 0; i < 100; ++i) {
        std::vector<std::pair<double, Eigen::Index>> all;
        for (Eigen::Index j = 0; j < 100; ++j) {
            if (j != i) all.emplace_back((data.features.row(i) - data.features.row(j)).norm(), j);
        }
        std::sort(all.begin(), all.end());
        for (int m = 0; m < k; ++m) {
            CHECK(table.indices(i, m) == all[static_cast<std::size_t>(m)].second);
        }
    }
}

TEST_CASE("knn parallel kernel agrees with the serial reference") {
    const auto data = random_dataset(200, 8, 3);
    const auto par = knn(data, 15);
    const auto ser = serial::knn(data, 15);
    CHECK(par.indices == ser.indices);
    CHECK(par.distances == ser.distances);
    CHECK(lid_mle(par) == serial::lid_mle(ser));
}

TEST_CASE("knn rejects out-of-range k") {
    const auto data = random_dataset(10, 2, 4);
    CHECK_THROWS(knn(data, 0));
    CHECK_THROWS(knn(data, 10));
}

TEST_CASE("lid_mle closed-form case") {
    NeighborTable table;
    table.k = 2;
    table.indices.resize(1, 2);
    table.indices << 0, 0;
    table.distances.resize(1, 2);
    const double r_max = 0.7;
    table.distances << r_max * std::exp(-1.0), r_max;
    const auto lid = lid_mle(table);
    CHECK(lid(0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("lid_mle clamps the all-equal-distance degenerate case") {
    NeighborTable table;
    table.k = 3;
    table.indices.resize(1, 3);
    table.indices << 0, 0, 0;
    table.distances.resize(1, 3);
    table.distances << 0.5, 0.5, 0.5;
    CHECK(lid_mle(table)(0) == kLidMax);
}

TEST_CASE("lid_mle is scale invariant") {
    auto data = random_dataset(300, 6, 5);
    const auto base = lid_mle(knn(data, 20));
    data.features *= 37.5;
    const auto scaled = lid_mle(knn(data, 20));
    CHECK((base - scaled).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("median LID recovers the subspace dimension") {
    const auto data = subspace_dataset(1000, 20, 4, 6);
    const auto lid = lid_mle(knn(data, 50));
    const double med = median_of(lid);
    CHECK(med > 4.0 * 0.7);
    CHECK(med < 4.0 * 1.3);
}

TEST_CASE("nlid of equal lid values is exactly 1") {
    const auto data = random_dataset(50, 3, 7);
    const auto table = knn(data, 5);
    const auto scores = nlid_ratio(Eigen::VectorXd::Constant(50, 3.7), table);
    for (Eigen::Index i = 0; i < 50; ++i) {
        CHECK(scores.nlid(i) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("nlid direct ratio") {
    // sample 0's neighbors all carry lid 2c while it has lid c
    Dataset data;
    data.features.resize(4, 1);
    data.features << 0.0, 0.1, 0.2, 0.9;
    data.response = Eigen::VectorXd::Zero(4);
    const auto table = knn(data, 2);
    Eigen::VectorXd lid(4);
    const double c = 1.5;
    lid << c, 2 * c, 2 * c, 2 * c;
    const auto scores = nlid_ratio(lid, table);
    CHECK(scores.nlid(0) == doctest::Approx(2.0));
}

TEST_CASE("nlid rejects mismatched lengths") {
    const auto data = random_dataset(20, 2, 8);
    const auto table = knn(data, 3);
    CHECK_THROWS(nlid_ratio(Eigen::VectorXd::Zero(19), table));
}

TEST_CASE("nlid is permutation invariant") {
    const auto data = random_dataset(120, 5, 9);
    const auto scores = nlid_scores(data, 10);

    std::vector<Eigen::Index> perm(120);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::mt19937_64 rng(4);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto permuted = nlid_scores(data.select_rows(perm), 10);
    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
        CHECK(permuted.nlid(static_cast<Eigen::Index>(pos)) ==
              doctest::Approx(scores.nlid(perm[pos])).epsilon(1e-12));
    }
}

TEST_CASE("displaced points are separated by mean nlid") {
    // normal points on a 4-dim subspace, 10% displaced off-subspace in random
    // directions (signed offsets, so the displaced points do not form their
    // own cluster)
    int hits = 0;
    for (int s = 0; s < 10; ++s) {
        auto data = subspace_dataset(400, 20, 4, 100 + s);
        std::mt19937_64 rng(200 + s);
        std::uniform_real_distribution<double> u(-0.3, 0.3);
        std::vector<bool> displaced(400, false);
        for (Eigen::Index i = 0; i < 40; ++i) {
            displaced[static_cast<std::size_t>(i * 10)] = true;
            for (Eigen::Index j = 4; j < 20; ++j) data.features(i * 10, j) = u(rng);
        }
        const auto scores = nlid_scores(data, 20);
        double mean_disp = 0.0, mean_norm = 0.0;
        for (Eigen::Index i = 0; i < 400; ++i) {
            (displaced[static_cast<std::size_t>(i)] ? mean_disp : mean_norm) += scores.nlid(i);
        }
        mean_disp /= 40.0;
        mean_norm /= 360.0;
        if (std::abs(mean_disp - mean_norm) >= 0.5) ++hits;
    }
    CHECK(hits >= 8); // allow rare borderline seeds
}

TEST_CASE("minibatch with batch_size = n reduces to the full computation") {
    const auto data = random_dataset(80, 4, 11);
    const auto full = nlid_scores(data, 10);
    const auto mini = nlid_minibatch(data, 10, 80, 99);
    CHECK(full.nlid == mini.nlid);
    CHECK(full.lid == mini.lid);
}

TEST_CASE("minibatch rejects batches that cannot hold k neighbors") {
    const auto data = random_dataset(50, 4, 12);
    CHECK_THROWS(nlid_minibatch(data, 10, 10, 1));
}

TEST_CASE("half-size minibatch preserves the lid ranking") {
    // Alternate rows on a 2-dim subspace and in the full 8-dim box so the
    // ranking carries real structure instead of estimator noise.
    for (int s = 0; s < 5; ++s) {
        std::mt19937_64 rng(300 + s);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Dataset data;
        data.features = Eigen::MatrixXd::Zero(1000, 8);
        data.response = Eigen::VectorXd::Zero(1000);
        for (Eigen::Index i = 0; i < 1000; ++i) {
            const Eigen::Index lim = (i % 2) ? 2 : 8;
            for (Eigen::Index j = 0; j < lim; ++j) data.features(i, j) = u(rng);
        }
        const auto full = nlid_scores(data, 20);
        const auto mini = nlid_minibatch(data, 20, 500, 400 + s);
        CHECK(spearman(full.lid, mini.lid) >= 0.8);
    }
}
