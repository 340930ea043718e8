// Compares the OpenMP kNN/LID kernels against the serial reference and
// checks that both produce identical scores.

#include "nlid/lid.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <omp.h>

using Clock = std::chrono::steady_clock;

static double time_of(const std::function<void()>& fn) {
    const auto t0 = Clock::now();
    fn();
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int main(int argc, char** argv) {
    const Eigen::Index n = argc > 1 ? std::atoll(argv[1]) : 4000;
    const Eigen::Index d = argc > 2 ? std::atoll(argv[2]) : 50;
    const int k = argc > 3 ? std::atoi(argv[3]) : 50;

    const auto data = nlid::synth_linear(n, d, 0.05, 42);
    std::printf("n=%lld d=%lld k=%d threads=%d\n", static_cast<long long>(n),
                static_cast<long long>(d), k, omp_get_max_threads());

    nlid::NeighborTable serial_table, parallel_table;
    const double t_serial = time_of([&] { serial_table = nlid::serial::knn(data, k); });
    const double t_parallel = time_of([&] { parallel_table = nlid::knn(data, k); });
    std::printf("knn      serial %.3fs  parallel %.3fs  speedup %.2fx\n", t_serial, t_parallel,
                t_serial / t_parallel);

    Eigen::VectorXd lid_serial, lid_parallel;
    const double l_serial = time_of([&] { lid_serial = nlid::serial::lid_mle(serial_table); });
    const double l_parallel = time_of([&] { lid_parallel = nlid::lid_mle(parallel_table); });
    std::printf("lid_mle  serial %.3fs  parallel %.3fs  speedup %.2fx\n", l_serial, l_parallel,
                l_serial / l_parallel);

    const bool idx_match = (serial_table.indices == parallel_table.indices);
    const double lid_diff = (lid_serial - lid_parallel).cwiseAbs().maxCoeff();
    std::printf("agreement: indices %s, max |lid diff| %.3g\n", idx_match ? "identical" : "DIFFER",
                lid_diff);
    return (idx_match && lid_diff == 0.0) ? 0 : 1;
}
