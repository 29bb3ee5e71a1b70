#ifndef KEEPAUG_KERNELS_HPP
#define KEEPAUG_KERNELS_HPP

#include <cstddef>

namespace keepaug::kernels {

// Hot inner loops, each in two builds: a plain serial reference under
// kernels::serial, and an OpenMP version that splits the outer loop across
// threads. Every output element is accumulated in the same order in both
// builds, so the parallel results are bit-identical to the serial ones;
// tests assert exact equality and tools/kernel_bench compares wall time.
//
// Layouts: images/activations are row-major channel-fastest (i*w + j)*c + ch.
// Conv weights are [out_c][in_c][3][3], zero padding 1, stride 1.

namespace serial {

void conv3x3_forward(const double* in, int h, int w, int in_c,
                     const double* wgt, const double* bias, int out_c,
                     double* out);

// Gradient w.r.t. the conv input, gathered per input element.
void conv3x3_backward_input(const double* gout, int h, int w, int out_c,
                            const double* wgt, int in_c, double* gin);

// Gradients w.r.t. weights and bias, accumulated per parameter entry.
void conv3x3_backward_params(const double* in, const double* gout,
                             int h, int w, int in_c, int out_c,
                             double* gw, double* gb);

// 2x2 average pool, stride 2, border windows clamped (odd dims allowed).
void avgpool2_forward(const double* in, int h, int w, int c, double* out);
void avgpool2_backward(const double* gout, int h, int w, int c, double* gin);

// Catmull-Rom (a = -0.5) resampling, edge-clamped, per-pixel 16-tap gather.
void bicubic_resize(const double* in, int in_h, int in_w, int c,
                    double* out, int out_h, int out_w);

// Summed-area table with zero-padded first row/column: (h+1) x (w+1),
// entry (i,j) = sum of map over rows < i, cols < j.
void sat_build(const double* map, int h, int w, double* table);

// Sum over every contained h_r x w_r placement at the given stride,
// O(1) per placement from the table. Grid is grid_h x grid_w.
void window_sums(const double* table, int h, int w, int h_r, int w_r,
                 int stride, int grid_h, int grid_w, double* out);

} // namespace serial

// OpenMP variants; threads <= 1 falls through to the serial reference.
void conv3x3_forward(const double* in, int h, int w, int in_c,
                     const double* wgt, const double* bias, int out_c,
                     double* out, int threads);
void conv3x3_backward_input(const double* gout, int h, int w, int out_c,
                            const double* wgt, int in_c, double* gin, int threads);
void conv3x3_backward_params(const double* in, const double* gout,
                             int h, int w, int in_c, int out_c,
                             double* gw, double* gb, int threads);
void bicubic_resize(const double* in, int in_h, int in_w, int c,
                    double* out, int out_h, int out_w, int threads);
void sat_build(const double* map, int h, int w, double* table, int threads);
void window_sums(const double* table, int h, int w, int h_r, int w_r,
                 int stride, int grid_h, int grid_w, double* out, int threads);

inline int pooled_dim(int d) { return (d + 1) / 2; }

} // namespace keepaug::kernels

#endif
