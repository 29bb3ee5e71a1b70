#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "helpers.hpp"
#include "keepaug/kernels.hpp"

using namespace keepaug;

// The OpenMP builds must be bit-identical to the serial references: both
// accumulate each output element in the same order, only the outer loop is
// split. Exact equality, not approximate.

namespace {

std::vector<double> random_vec(RngStream& rng, size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.next_range(lo, hi);
    return v;
}

} // namespace

TEST_CASE("conv3x3 forward: omp == serial, bit-exact") {
    RngStream rng(1, 0);
    const int h = 23, w = 31, cin = 3, cout = 8;
    auto in = random_vec(rng, static_cast<size_t>(h) * w * cin);
    auto wgt = random_vec(rng, static_cast<size_t>(cout) * cin * 9);
    auto bias = random_vec(rng, cout);
    std::vector<double> a(static_cast<size_t>(h) * w * cout), b(a.size());
    kernels::serial::conv3x3_forward(in.data(), h, w, cin, wgt.data(), bias.data(), cout, a.data());
    kernels::conv3x3_forward(in.data(), h, w, cin, wgt.data(), bias.data(), cout, b.data(), 4);
    CHECK(a == b);
}

TEST_CASE("conv3x3 backward input: omp == serial, bit-exact") {
    RngStream rng(2, 0);
    const int h = 17, w = 19, cin = 4, cout = 6;
    auto gout = random_vec(rng, static_cast<size_t>(h) * w * cout);
    auto wgt = random_vec(rng, static_cast<size_t>(cout) * cin * 9);
    std::vector<double> a(static_cast<size_t>(h) * w * cin), b(a.size());
    kernels::serial::conv3x3_backward_input(gout.data(), h, w, cout, wgt.data(), cin, a.data());
    kernels::conv3x3_backward_input(gout.data(), h, w, cout, wgt.data(), cin, b.data(), 4);
    CHECK(a == b);
}

TEST_CASE("conv3x3 backward params: omp == serial, bit-exact") {
    RngStream rng(3, 0);
    const int h = 15, w = 14, cin = 3, cout = 5;
    auto in = random_vec(rng, static_cast<size_t>(h) * w * cin);
    auto gout = random_vec(rng, static_cast<size_t>(h) * w * cout);
    std::vector<double> gw_a(static_cast<size_t>(cout) * cin * 9), gw_b(gw_a.size());
    std::vector<double> gb_a(cout), gb_b(cout);
    kernels::serial::conv3x3_backward_params(in.data(), gout.data(), h, w, cin, cout,
                                             gw_a.data(), gb_a.data());
    kernels::conv3x3_backward_params(in.data(), gout.data(), h, w, cin, cout,
                                     gw_b.data(), gb_b.data(), 4);
    CHECK(gw_a == gw_b);
    CHECK(gb_a == gb_b);
}

TEST_CASE("conv3x3 forward matches a direct triple-loop oracle") {
    RngStream rng(4, 0);
    const int h = 9, w = 7, cin = 2, cout = 3;
    auto in = random_vec(rng, static_cast<size_t>(h) * w * cin);
    auto wgt = random_vec(rng, static_cast<size_t>(cout) * cin * 9);
    auto bias = random_vec(rng, cout);
    std::vector<double> got(static_cast<size_t>(h) * w * cout);
    kernels::serial::conv3x3_forward(in.data(), h, w, cin, wgt.data(), bias.data(), cout, got.data());

    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int f = 0; f < cout; ++f) {
                double want = bias[f];
                for (int c = 0; c < cin; ++c)
                    for (int di = -1; di <= 1; ++di)
                        for (int dj = -1; dj <= 1; ++dj) {
                            int si = i + di, sj = j + dj;
                            if (si < 0 || si >= h || sj < 0 || sj >= w) continue;
                            want += wgt[(static_cast<size_t>(f) * cin + c) * 9 + (di + 1) * 3 + (dj + 1)] *
                                    in[(static_cast<size_t>(si) * w + sj) * cin + c];
                        }
                CHECK(got[(static_cast<size_t>(i) * w + j) * cout + f] == doctest::Approx(want).epsilon(1e-12));
            }
}

TEST_CASE("conv backward input is the adjoint of forward") {
    // <conv(x), g> == <x, conv_backward_input(g)> for zero bias
    RngStream rng(5, 0);
    const int h = 8, w = 6, cin = 3, cout = 4;
    auto x = random_vec(rng, static_cast<size_t>(h) * w * cin);
    auto g = random_vec(rng, static_cast<size_t>(h) * w * cout);
    auto wgt = random_vec(rng, static_cast<size_t>(cout) * cin * 9);
    std::vector<double> bias(cout, 0.0);

    std::vector<double> y(g.size());
    kernels::serial::conv3x3_forward(x.data(), h, w, cin, wgt.data(), bias.data(), cout, y.data());
    std::vector<double> gx(x.size());
    kernels::serial::conv3x3_backward_input(g.data(), h, w, cout, wgt.data(), cin, gx.data());

    double lhs = 0.0, rhs = 0.0;
    for (size_t i = 0; i < y.size(); ++i) lhs += y[i] * g[i];
    for (size_t i = 0; i < x.size(); ++i) rhs += x[i] * gx[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("avgpool handles even and odd dims") {
    // 3x3 single channel: corner windows shrink at the border
    std::vector<double> in = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<double> out(4);
    kernels::serial::avgpool2_forward(in.data(), 3, 3, 1, out.data());
    CHECK(out[0] == doctest::Approx((1 + 2 + 4 + 5) / 4.0));
    CHECK(out[1] == doctest::Approx((3 + 6) / 2.0));
    CHECK(out[2] == doctest::Approx((7 + 8) / 2.0));
    CHECK(out[3] == doctest::Approx(9.0));

    // backward distributes grad / window size
    std::vector<double> gout = {4.0, 2.0, 2.0, 1.0};
    std::vector<double> gin(9);
    kernels::serial::avgpool2_backward(gout.data(), 3, 3, 1, gin.data());
    CHECK(gin[0] == doctest::Approx(1.0));
    CHECK(gin[2] == doctest::Approx(1.0));
    CHECK(gin[8] == doctest::Approx(1.0));
}

TEST_CASE("bicubic resize: omp == serial, bit-exact") {
    RngStream rng(6, 0);
    const int h = 37, w = 41, c = 3;
    auto in = random_vec(rng, static_cast<size_t>(h) * w * c, 0.0, 1.0);
    std::vector<double> a(static_cast<size_t>(19) * 23 * c), b(a.size());
    kernels::serial::bicubic_resize(in.data(), h, w, c, a.data(), 19, 23);
    kernels::bicubic_resize(in.data(), h, w, c, b.data(), 19, 23, 4);
    CHECK(a == b);
}

TEST_CASE("sat build: omp == serial, bit-exact") {
    RngStream rng(7, 0);
    const int h = 33, w = 29;
    auto map = random_vec(rng, static_cast<size_t>(h) * w, 0.0, 1.0);
    std::vector<double> a(static_cast<size_t>(h + 1) * (w + 1)), b(a.size());
    kernels::serial::sat_build(map.data(), h, w, a.data());
    kernels::sat_build(map.data(), h, w, b.data(), 4);
    CHECK(a == b);
}

TEST_CASE("window sums: omp == serial, bit-exact") {
    RngStream rng(8, 0);
    const int h = 24, w = 26, rh = 5, rw = 7, stride = 2;
    auto map = random_vec(rng, static_cast<size_t>(h) * w, 0.0, 1.0);
    std::vector<double> table(static_cast<size_t>(h + 1) * (w + 1));
    kernels::serial::sat_build(map.data(), h, w, table.data());
    int gh = (h - rh) / stride + 1, gw = (w - rw) / stride + 1;
    std::vector<double> a(static_cast<size_t>(gh) * gw), b(a.size());
    kernels::serial::window_sums(table.data(), h, w, rh, rw, stride, gh, gw, a.data());
    kernels::window_sums(table.data(), h, w, rh, rw, stride, gh, gw, b.data(), 4);
    CHECK(a == b);
}
