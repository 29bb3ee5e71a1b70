#include "keepaug/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace keepaug::kernels {

namespace {

// Row bodies shared by the serial and OpenMP builds so that both accumulate
// every output element in the same order.

inline void conv_forward_row(const double* in, int h, int w, int in_c,
                             const double* wgt, const double* bias, int out_c,
                             double* out, int i) {
    for (int j = 0; j < w; ++j) {
        double* o = out + (static_cast<size_t>(i) * w + j) * out_c;
        for (int f = 0; f < out_c; ++f) {
            double acc = bias[f];
            const double* wf = wgt + static_cast<size_t>(f) * in_c * 9;
            for (int c = 0; c < in_c; ++c) {
                const double* wc = wf + c * 9;
                for (int ki = 0; ki < 3; ++ki) {
                    int si = i + ki - 1;
                    if (si < 0 || si >= h) continue;
                    for (int kj = 0; kj < 3; ++kj) {
                        int sj = j + kj - 1;
                        if (sj < 0 || sj >= w) continue;
                        acc += wc[ki * 3 + kj] * in[(static_cast<size_t>(si) * w + sj) * in_c + c];
                    }
                }
            }
            o[f] = acc;
        }
    }
}

inline void conv_backward_input_row(const double* gout, int h, int w, int out_c,
                                    const double* wgt, int in_c, double* gin, int i) {
    // out[oi][oj][f] consumed in[i][j][c] with weight wgt[f][c][i-oi+1][j-oj+1]
    for (int j = 0; j < w; ++j) {
        double* g = gin + (static_cast<size_t>(i) * w + j) * in_c;
        for (int c = 0; c < in_c; ++c) {
            double acc = 0.0;
            for (int ki = 0; ki < 3; ++ki) {
                int oi = i - (ki - 1);
                if (oi < 0 || oi >= h) continue;
                for (int kj = 0; kj < 3; ++kj) {
                    int oj = j - (kj - 1);
                    if (oj < 0 || oj >= w) continue;
                    const double* go = gout + (static_cast<size_t>(oi) * w + oj) * out_c;
                    for (int f = 0; f < out_c; ++f) {
                        acc += go[f] * wgt[(static_cast<size_t>(f) * in_c + c) * 9 + ki * 3 + kj];
                    }
                }
            }
            g[c] = acc;
        }
    }
}

// One (f, c, ki, kj) weight entry; whole-image reduction in row-major order.
inline double conv_weight_grad_entry(const double* in, const double* gout,
                                     int h, int w, int in_c, int out_c,
                                     int f, int c, int ki, int kj) {
    double acc = 0.0;
    for (int i = 0; i < h; ++i) {
        int si = i + ki - 1;
        if (si < 0 || si >= h) continue;
        for (int j = 0; j < w; ++j) {
            int sj = j + kj - 1;
            if (sj < 0 || sj >= w) continue;
            acc += gout[(static_cast<size_t>(i) * w + j) * out_c + f] *
                   in[(static_cast<size_t>(si) * w + sj) * in_c + c];
        }
    }
    return acc;
}

inline double conv_bias_grad_entry(const double* gout, int h, int w, int out_c, int f) {
    double acc = 0.0;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            acc += gout[(static_cast<size_t>(i) * w + j) * out_c + f];
    return acc;
}

// Catmull-Rom weight for tap offset t in [-2, 2], a = -0.5.
inline double cr_weight(double t) {
    double at = std::fabs(t);
    if (at <= 1.0) return ((1.5 * at - 2.5) * at) * at + 1.0;
    if (at < 2.0) return (((-0.5 * at + 2.5) * at) - 4.0) * at + 2.0;
    return 0.0;
}

inline void bicubic_row(const double* in, int in_h, int in_w, int c,
                        double* out, int out_h, int out_w, int oi) {
    double sy = static_cast<double>(in_h) / out_h;
    double sx = static_cast<double>(in_w) / out_w;
    double fy = (oi + 0.5) * sy - 0.5;
    int iy = static_cast<int>(std::floor(fy));
    double ty = fy - iy;
    double wy[4];
    for (int k = 0; k < 4; ++k) wy[k] = cr_weight(ty - (k - 1));
    for (int oj = 0; oj < out_w; ++oj) {
        double fx = (oj + 0.5) * sx - 0.5;
        int ix = static_cast<int>(std::floor(fx));
        double tx = fx - ix;
        double wx[4];
        for (int k = 0; k < 4; ++k) wx[k] = cr_weight(tx - (k - 1));
        for (int ch = 0; ch < c; ++ch) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) {
                int si = std::clamp(iy + k - 1, 0, in_h - 1);
                double row = 0.0;
                for (int l = 0; l < 4; ++l) {
                    int sj = std::clamp(ix + l - 1, 0, in_w - 1);
                    row += wx[l] * in[(static_cast<size_t>(si) * in_w + sj) * c + ch];
                }
                acc += wy[k] * row;
            }
            out[(static_cast<size_t>(oi) * out_w + oj) * c + ch] = std::clamp(acc, 0.0, 1.0);
        }
    }
}

inline void sat_row_prefix(const double* map, int w, double* table, int wp, int i) {
    // table row i+1 gets row prefix sums of map row i; row 0 stays zero.
    double* t = table + static_cast<size_t>(i + 1) * wp;
    const double* m = map + static_cast<size_t>(i) * w;
    t[0] = 0.0;
    double acc = 0.0;
    for (int j = 0; j < w; ++j) {
        acc += m[j];
        t[j + 1] = acc;
    }
}

inline void sat_col_accumulate(double* table, int h, int wp, int j) {
    double acc = 0.0;
    for (int i = 1; i <= h; ++i) {
        acc += table[static_cast<size_t>(i) * wp + j];
        table[static_cast<size_t>(i) * wp + j] = acc;
    }
}

inline void window_sums_row(const double* table, int w, int h_r, int w_r,
                            int stride, int grid_w, double* out, int gi) {
    int wp = w + 1;
    int t = gi * stride;
    const double* top = table + static_cast<size_t>(t) * wp;
    const double* bot = table + static_cast<size_t>(t + h_r) * wp;
    for (int gj = 0; gj < grid_w; ++gj) {
        int l = gj * stride;
        out[static_cast<size_t>(gi) * grid_w + gj] =
            bot[l + w_r] - top[l + w_r] - bot[l] + top[l];
    }
}

} // namespace

namespace serial {

void conv3x3_forward(const double* in, int h, int w, int in_c,
                     const double* wgt, const double* bias, int out_c, double* out) {
    for (int i = 0; i < h; ++i)
        conv_forward_row(in, h, w, in_c, wgt, bias, out_c, out, i);
}

void conv3x3_backward_input(const double* gout, int h, int w, int out_c,
                            const double* wgt, int in_c, double* gin) {
    for (int i = 0; i < h; ++i)
        conv_backward_input_row(gout, h, w, out_c, wgt, in_c, gin, i);
}

void conv3x3_backward_params(const double* in, const double* gout,
                             int h, int w, int in_c, int out_c,
                             double* gw, double* gb) {
    for (int f = 0; f < out_c; ++f) {
        for (int c = 0; c < in_c; ++c)
            for (int k = 0; k < 9; ++k)
                gw[(static_cast<size_t>(f) * in_c + c) * 9 + k] =
                    conv_weight_grad_entry(in, gout, h, w, in_c, out_c, f, c, k / 3, k % 3);
        gb[f] = conv_bias_grad_entry(gout, h, w, out_c, f);
    }
}

void avgpool2_forward(const double* in, int h, int w, int c, double* out) {
    int oh = pooled_dim(h), ow = pooled_dim(w);
    for (int i = 0; i < oh; ++i) {
        int i0 = 2 * i, i1 = std::min(2 * i + 2, h);
        for (int j = 0; j < ow; ++j) {
            int j0 = 2 * j, j1 = std::min(2 * j + 2, w);
            double inv = 1.0 / ((i1 - i0) * (j1 - j0));
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int si = i0; si < i1; ++si)
                    for (int sj = j0; sj < j1; ++sj)
                        acc += in[(static_cast<size_t>(si) * w + sj) * c + ch];
                out[(static_cast<size_t>(i) * ow + j) * c + ch] = acc * inv;
            }
        }
    }
}

void avgpool2_backward(const double* gout, int h, int w, int c, double* gin) {
    int ow = pooled_dim(w);
    for (int si = 0; si < h; ++si) {
        int i = si / 2;
        int i0 = 2 * i, i1 = std::min(2 * i + 2, h);
        for (int sj = 0; sj < w; ++sj) {
            int j = sj / 2;
            int j0 = 2 * j, j1 = std::min(2 * j + 2, w);
            double inv = 1.0 / ((i1 - i0) * (j1 - j0));
            for (int ch = 0; ch < c; ++ch)
                gin[(static_cast<size_t>(si) * w + sj) * c + ch] =
                    gout[(static_cast<size_t>(i) * ow + j) * c + ch] * inv;
        }
    }
}

void bicubic_resize(const double* in, int in_h, int in_w, int c,
                    double* out, int out_h, int out_w) {
    for (int oi = 0; oi < out_h; ++oi)
        bicubic_row(in, in_h, in_w, c, out, out_h, out_w, oi);
}

void sat_build(const double* map, int h, int w, double* table) {
    int wp = w + 1;
    for (int j = 0; j < wp; ++j) table[j] = 0.0;
    for (int i = 0; i < h; ++i) sat_row_prefix(map, w, table, wp, i);
    for (int j = 1; j < wp; ++j) sat_col_accumulate(table, h, wp, j);
}

void window_sums(const double* table, int /*h*/, int w, int h_r, int w_r,
                 int stride, int grid_h, int grid_w, double* out) {
    for (int gi = 0; gi < grid_h; ++gi)
        window_sums_row(table, w, h_r, w_r, stride, grid_w, out, gi);
}

} // namespace serial

void conv3x3_forward(const double* in, int h, int w, int in_c,
                     const double* wgt, const double* bias, int out_c,
                     double* out, int threads) {
    if (threads <= 1) {
        serial::conv3x3_forward(in, h, w, in_c, wgt, bias, out_c, out);
        return;
    }
    #pragma omp parallel for num_threads(threads) schedule(static)
    for (int i = 0; i < h; ++i)
        conv_forward_row(in, h, w, in_c, wgt, bias, out_c, out, i);
}

void conv3x3_backward_input(const double* gout, int h, int w, int out_c,
                            const double* wgt, int in_c, double* gin, int threads) {
    if (threads <= 1) {
        serial::conv3x3_backward_input(gout, h, w, out_c, wgt, in_c, gin);
        return;
    }
    #pragma omp parallel for num_threads(threads) schedule(static)
    for (int i = 0; i < h; ++i)
        conv_backward_input_row(gout, h, w, out_c, wgt, in_c, gin, i);
}

void conv3x3_backward_params(const double* in, const double* gout,
                             int h, int w, int in_c, int out_c,
                             double* gw, double* gb, int threads) {
    if (threads <= 1) {
        serial::conv3x3_backward_params(in, gout, h, w, in_c, out_c, gw, gb);
        return;
    }
    int entries = out_c * in_c * 9;
    #pragma omp parallel for num_threads(threads) schedule(static)
    for (int e = 0; e < entries; ++e) {
        int f = e / (in_c * 9);
        int c = (e / 9) % in_c;
        int k = e % 9;
        gw[e] = conv_weight_grad_entry(in, gout, h, w, in_c, out_c, f, c, k / 3, k % 3);
    }
    #pragma omp parallel for num_threads(threads) schedule(static)
    for (int f = 0; f < out_c; ++f)
        gb[f] = conv_bias_grad_entry(gout, h, w, out_c, f);
}

void bicubic_resize(const double* in, int in_h, int in_w, int c,
                    double* out, int out_h, int out_w, int threads) {
    if (threads <= 1) {
        serial::bicubic_resize(in, in_h, in_w, c, out, out_h, out_w);
        return;
    }
    #pragma omp parallel for num_threads(threads) schedule(static)
    for (int oi = 0; oi < out_h; ++oi)
        bicubic_row(in, in_h, in_w, c, out, out_h, out_w, oi);
}

void sat_build(const double* map, int h, int w, double* table, int threads) {
    if (threads <= 1) {
        serial::sat_build(map, h, w, table);
        return;
    }
    int wp = w + 1;
    for (int j = 0; j < wp; ++j) table[j] = 0.0;
    #pragma omp parallel for num_threads(threads) schedule(static)
    for (int i = 0; i < h; ++i) sat_row_prefix(map, w, table, wp, i);
    #pragma omp parallel for num_threads(threads) schedule(static)
    for (int j = 1; j < wp; ++j) sat_col_accumulate(table, h, wp, j);
}

void window_sums(const double* table, int h, int w, int h_r, int w_r,
                 int stride, int grid_h, int grid_w, double* out, int threads) {
    if (threads <= 1) {
        serial::window_sums(table, h, w, h_r, w_r, stride, grid_h, grid_w, out);
        return;
    }
    #pragma omp parallel for num_threads(threads) schedule(static)
    for (int gi = 0; gi < grid_h; ++gi)
        window_sums_row(table, w, h_r, w_r, stride, grid_w, out, gi);
}

} // namespace keepaug::kernels
