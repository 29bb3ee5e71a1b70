#ifndef KEEPAUG_TOYNET_HPP
#define KEEPAUG_TOYNET_HPP

#include <vector>

#include "keepaug/dataset.hpp"
#include "keepaug/image.hpp"

namespace keepaug {

// One conv block: 3x3 conv (zero pad 1) -> softplus -> 2x2 average pool.
struct ConvBlock {
    int in_c = 0;
    int out_c = 0;
    std::vector<double> w; // [out_c][in_c][3][3]
    std::vector<double> b; // [out_c]
};

// Small differentiable classifier: a stack of conv blocks, flatten, linear
// classifier. The optional early head is a global average pool plus a linear
// layer on the first block's output. Softplus keeps the whole map smooth so
// gradient checks against finite differences are well conditioned.
struct ToyNet {
    int in_h = 0, in_w = 0, in_c = 0;
    int classes = 0;
    std::vector<ConvBlock> blocks;
    std::vector<double> fc_w; // [classes][feature_len]
    std::vector<double> fc_b; // [classes]
    bool early_head = false;
    std::vector<double> head_w; // [classes][blocks[0].out_c]
    std::vector<double> head_b; // [classes]

    // Spatial dims after `n` blocks (each block halves, rounding up).
    void dims_after(int n, int& h, int& w) const;
    int feature_len() const;

    // He-normal weights, zero biases; draw order is fixed so identical rngs
    // give identical nets.
    static ToyNet init(int in_h, int in_w, int in_c, int classes,
                       const std::vector<int>& block_channels, bool early_head,
                       RngStream& rng);
};

struct BlockActs {
    int h = 0, w = 0;   // pre/post dims
    int ph = 0, pw = 0; // pooled dims
    std::vector<double> pre, post, pooled;
};

struct Activations {
    std::vector<BlockActs> blocks;
    std::vector<double> logits;
    std::vector<double> head_gap;    // global average of block-0 pooled output
    std::vector<double> head_logits; // filled only when the net has a head
};

// Full forward pass; validates image dims against the net.
Activations forward_cache(const ToyNet& net, const Image& image, int threads = 1);
std::vector<double> forward(const ToyNet& net, const Image& image, int threads = 1);

// argmax with lowest-index tie-break.
int argmax(const std::vector<double>& v);

// Gradient of one label logit w.r.t. the input image, via backpropagation of
// that single logit (not the softmax loss). With use_early_head the gradient
// is of the auxiliary head's logit and traverses only the first block.
std::vector<double> input_gradient(const ToyNet& net, const Image& image, int label,
                                   bool use_early_head = false, int threads = 1);

struct ParamGrads {
    std::vector<std::vector<double>> block_w, block_b;
    std::vector<double> fc_w, fc_b;
    std::vector<double> head_w, head_b;

    static ParamGrads zeros_like(const ToyNet& net);
    void add_scaled(const ParamGrads& g, double s);
};

// Cross-entropy gradients for one example, accumulated into grads.
// With the early head enabled the auxiliary cross-entropy enters scaled by
// aux_coef. Returns the example's total loss.
double backprop_example(const ToyNet& net, const Image& image, int label,
                        double aux_coef, ParamGrads& grads, int threads = 1);

struct TrainResult {
    ToyNet net;
    double train_accuracy = 0.0;
    double final_loss = 0.0;
};

// Minibatch SGD on cross-entropy, deterministic batch order from rng.
// epochs = 0 returns the initialized net unchanged.
TrainResult train_toy(const Dataset& data, int epochs, double lr, bool early_head,
                      double aux_coef, RngStream& rng, int batch_size = 32,
                      const std::vector<int>& block_channels = {8, 16});

double train_accuracy(const ToyNet& net, const Dataset& data);

} // namespace keepaug

#endif
