// Compares the serial reference kernels against their OpenMP builds.
// Usage: kernel_bench [threads] [reps]   (defaults: OMP max threads, 5)

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include <omp.h>

#include "keepaug/image.hpp"
#include "keepaug/kernels.hpp"

using namespace keepaug;

namespace {

double median_time(int reps, auto fn) {
    std::vector<double> t;
    for (int r = 0; r < reps; ++r) {
        double t0 = omp_get_wtime();
        fn();
        t.push_back(omp_get_wtime() - t0);
    }
    std::sort(t.begin(), t.end());
    return t[t.size() / 2];
}

void report(const char* name, double serial_s, double omp_s) {
    std::printf("%-28s %10.3f ms %10.3f ms %8.2fx\n", name, serial_s * 1e3, omp_s * 1e3,
                serial_s / omp_s);
}

} // namespace

int main(int argc, char** argv) {
    int threads = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
    int reps = argc > 2 ? std::atoi(argv[2]) : 5;
    if (threads < 2) threads = 2;
    std::printf("threads: %d   reps (median): %d\n", threads, reps);
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    RngStream rng(7, 0);

    // conv kernels at 224x224, 3->8 channels
    const int h = 224, w = 224, cin = 3, cout = 8;
    std::vector<double> in(static_cast<size_t>(h) * w * cin);
    for (double& v : in) v = rng.next_double();
    std::vector<double> wgt(static_cast<size_t>(cout) * cin * 9);
    for (double& v : wgt) v = rng.next_normal() * 0.1;
    std::vector<double> bias(cout, 0.0);
    std::vector<double> out(static_cast<size_t>(h) * w * cout);

    report("conv3x3 forward 224x224",
           median_time(reps, [&] { kernels::serial::conv3x3_forward(in.data(), h, w, cin, wgt.data(), bias.data(), cout, out.data()); }),
           median_time(reps, [&] { kernels::conv3x3_forward(in.data(), h, w, cin, wgt.data(), bias.data(), cout, out.data(), threads); }));

    std::vector<double> gin(in.size());
    report("conv3x3 backward-input",
           median_time(reps, [&] { kernels::serial::conv3x3_backward_input(out.data(), h, w, cout, wgt.data(), cin, gin.data()); }),
           median_time(reps, [&] { kernels::conv3x3_backward_input(out.data(), h, w, cout, wgt.data(), cin, gin.data(), threads); }));

    std::vector<double> gw(wgt.size()), gb(bias.size());
    report("conv3x3 backward-params",
           median_time(reps, [&] { kernels::serial::conv3x3_backward_params(in.data(), out.data(), h, w, cin, cout, gw.data(), gb.data()); }),
           median_time(reps, [&] { kernels::conv3x3_backward_params(in.data(), out.data(), h, w, cin, cout, gw.data(), gb.data(), threads); }));

    // bicubic 448 -> 224
    Image big(448, 448, 3);
    for (double& v : big.data) v = rng.next_double();
    Image small(224, 224, 3);
    report("bicubic 448->224",
           median_time(reps, [&] { kernels::serial::bicubic_resize(big.data.data(), 448, 448, 3, small.data.data(), 224, 224); }),
           median_time(reps, [&] { kernels::bicubic_resize(big.data.data(), 448, 448, 3, small.data.data(), 224, 224, threads); }));

    // SAT + window sums on a 2048x2048 map
    const int mh = 2048, mw = 2048;
    std::vector<double> map(static_cast<size_t>(mh) * mw);
    for (double& v : map) v = rng.next_double();
    std::vector<double> table(static_cast<size_t>(mh + 1) * (mw + 1));
    report("sat build 2048x2048",
           median_time(reps, [&] { kernels::serial::sat_build(map.data(), mh, mw, table.data()); }),
           median_time(reps, [&] { kernels::sat_build(map.data(), mh, mw, table.data(), threads); }));

    const int rh = 64, rw = 64;
    int gh = mh - rh + 1, gw2 = mw - rw + 1;
    std::vector<double> sums(static_cast<size_t>(gh) * gw2);
    report("window sums 64x64/2048",
           median_time(reps, [&] { kernels::serial::window_sums(table.data(), mh, mw, rh, rw, 1, gh, gw2, sums.data()); }),
           median_time(reps, [&] { kernels::window_sums(table.data(), mh, mw, rh, rw, 1, gh, gw2, sums.data(), threads); }));

    return 0;
}
