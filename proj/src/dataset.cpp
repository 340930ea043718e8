#include "nlid/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nlid {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding whitespace and CR
        auto b = cell.find_first_not_of(" \t\r");
        auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        throw std::runtime_error("non-numeric cell at row " + std::to_string(row) +
                                 ", column '" + col + "': '" + cell + "'");
    }
    return v;
}

} // namespace

Dataset Dataset::select_rows(const std::vector<Eigen::Index>& idx) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(idx.size()), dims());
    out.response.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) = features.row(idx[i]);
        out.response(static_cast<Eigen::Index>(i)) = response(idx[i]);
    }
    out.feature_names = feature_names;
    out.true_theta = true_theta;
    return out;
}

Dataset load_csv(const std::string& path, const std::string& response_column) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
    const auto header = split_line(line);
    const auto it = std::find(header.begin(), header.end(), response_column);
    if (it == header.end()) {
        throw std::runtime_error("response column '" + response_column +
                                 "' not found in " + path);
    }
    const std::size_t resp_idx = static_cast<std::size_t>(it - header.begin());

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error("row " + std::to_string(lineno) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        }
        std::vector<double> vals(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            vals[c] = parse_cell(cells[c], lineno, header[c]);
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw std::runtime_error("no data rows in " + path);

    Dataset data;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(header.size() - 1);
    data.features.resize(n, d);
    data.response.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index f = 0;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == resp_idx) {
                data.response(i) = rows[static_cast<std::size_t>(i)][c];
            } else {
                data.features(i, f++) = rows[static_cast<std::size_t>(i)][c];
            }
        }
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != resp_idx) data.feature_names.push_back(header[c]);
    }
    return data;
}

void save_csv(const Dataset& data, const std::string& path,
              const std::string& response_column) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.precision(17);
    for (Eigen::Index j = 0; j < data.dims(); ++j) {
        if (j < static_cast<Eigen::Index>(data.feature_names.size())) {
            out << data.feature_names[static_cast<std::size_t>(j)];
        } else {
            out << "f" << j;
        }
        out << ',';
    }
    out << response_column << '\n';
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.dims(); ++j) out << data.features(i, j) << ',';
        out << data.response(i) << '\n';
    }
}

Normalizer fit_normalizer(const Dataset& data) {
    if (data.rows() < 1) throw std::invalid_argument("fit_normalizer: empty dataset");
    Normalizer norm;
    const auto d = data.dims();
    norm.col_min.resize(d + 1);
    norm.col_max.resize(d + 1);
    for (Eigen::Index j = 0; j < d; ++j) {
        norm.col_min(j) = data.features.col(j).minCoeff();
        norm.col_max(j) = data.features.col(j).maxCoeff();
    }
    norm.col_min(d) = data.response.minCoeff();
    norm.col_max(d) = data.response.maxCoeff();
    return norm;
}

namespace {

double scale_value(double v, double lo, double hi) {
    if (hi <= lo) return 0.0;
    return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

} // namespace

Dataset Normalizer::apply(const Dataset& data) const {
    const auto d = data.dims();
    if (col_min.size() != d + 1) throw std::invalid_argument("Normalizer: dimension mismatch");
    Dataset out = data;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            out.features(i, j) = scale_value(data.features(i, j), col_min(j), col_max(j));
        }
        out.response(i) = scale_value(data.response(i), col_min(d), col_max(d));
    }
    return out;
}

Dataset Normalizer::invert(const Dataset& data) const {
    const auto d = data.dims();
    if (col_min.size() != d + 1) throw std::invalid_argument("Normalizer: dimension mismatch");
    Dataset out = data;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            out.features(i, j) = col_min(j) + data.features(i, j) * (col_max(j) - col_min(j));
        }
        out.response(i) = col_min(d) + data.response(i) * (col_max(d) - col_min(d));
    }
    return out;
}

std::string Normalizer::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"min\":[";
    for (Eigen::Index j = 0; j < col_min.size(); ++j) os << (j ? "," : "") << col_min(j);
    os << "],\"max\":[";
    for (Eigen::Index j = 0; j < col_max.size(); ++j) os << (j ? "," : "") << col_max(j);
    os << "]}";
    return os.str();
}

Normalizer Normalizer::from_json(const std::string& text) {
    auto read_array = [&](const std::string& key) {
        auto pos = text.find("\"" + key + "\"");
        if (pos == std::string::npos) throw std::runtime_error("Normalizer: missing key " + key);
        pos = text.find('[', pos);
        auto end = text.find(']', pos);
        std::vector<double> vals;
        std::stringstream ss(text.substr(pos + 1, end - pos - 1));
        std::string cell;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        return vals;
    };
    const auto mins = read_array("min");
    const auto maxs = read_array("max");
    Normalizer norm;
    norm.col_min = Eigen::Map<const Eigen::VectorXd>(mins.data(), static_cast<Eigen::Index>(mins.size()));
    norm.col_max = Eigen::Map<const Eigen::VectorXd>(maxs.data(), static_cast<Eigen::Index>(maxs.size()));
    return norm;
}

std::vector<Eigen::Index> FoldPlan::fold_indices(int fold) const {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] == fold) out.push_back(static_cast<Eigen::Index>(i));
    }
    return out;
}

std::vector<Eigen::Index> FoldPlan::complement_indices(int fold) const {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] != fold) out.push_back(static_cast<Eigen::Index>(i));
    }
    return out;
}

FoldPlan make_folds(Eigen::Index n, int fold_count, std::uint64_t seed) {
    if (fold_count < 1 || static_cast<Eigen::Index>(fold_count) > n) {
        throw std::invalid_argument("make_folds: fold_count must be in [1, n]");
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    FoldPlan plan;
    plan.seed = seed;
    plan.fold_count = fold_count;
    plan.assignments.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i) {
        plan.assignments[static_cast<std::size_t>(order[i])] =
            static_cast<int>(i % static_cast<std::size_t>(fold_count));
    }
    return plan;
}

Dataset synth_linear(Eigen::Index n, Eigen::Index d, double noise_sd, std::uint64_t seed) {
    if (n < d + 1 || d < 1) throw std::invalid_argument("synth_linear: need n >= d+1, d >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);

    // |omega . (x - 0.5)| <= 0.3 keeps the noiseless response inside [0.2, 0.8].
    Eigen::VectorXd omega(d);
    for (Eigen::Index j = 0; j < d; ++j) omega(j) = 0.6 * sym(rng) / static_cast<double>(d);
    const double bias = 0.5;

    Dataset data;
    data.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) data.features(i, j) = unit(rng);
    }
    data.response = data.features * omega;
    data.response.array() += bias;
    if (noise_sd > 0.0) {
        std::normal_distribution<double> gauss(0.0, noise_sd);
        for (Eigen::Index i = 0; i < n; ++i) data.response(i) += gauss(rng);
    }
    data.response = data.response.cwiseMax(0.0).cwiseMin(1.0);

    Eigen::VectorXd theta(d + 1);
    theta.head(d) = omega;
    theta(d) = bias;
    data.true_theta = theta;
    return data;
}

} // namespace nlid
