#include "keepaug/toynet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "keepaug/kernels.hpp"

namespace keepaug {

namespace {

// Centered softplus: smooth ReLU shifted to zero at the origin. Keeps
// activations zero-mean-ish (plain SGD conditions far better) and keeps the
// whole network C-infinity for the finite-difference gradient checks.
inline double softplus(double x) {
    double sp = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    return sp - M_LN2;
}

inline double sigmoid(double x) {
    return x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

std::vector<double> softmax(const std::vector<double>& z) {
    double m = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

void require_input_match(const ToyNet& net, const Image& image) {
    if (image.height != net.in_h || image.width != net.in_w || image.channels != net.in_c)
        throw std::invalid_argument("forward: image dims do not match the net input dims");
}

} // namespace

void ToyNet::dims_after(int n, int& h, int& w) const {
    h = in_h;
    w = in_w;
    for (int i = 0; i < n; ++i) {
        h = kernels::pooled_dim(h);
        w = kernels::pooled_dim(w);
    }
}

int ToyNet::feature_len() const {
    int h, w;
    dims_after(static_cast<int>(blocks.size()), h, w);
    int c = blocks.empty() ? in_c : blocks.back().out_c;
    return h * w * c;
}

ToyNet ToyNet::init(int in_h, int in_w, int in_c, int classes,
                    const std::vector<int>& block_channels, bool early_head,
                    RngStream& rng) {
    if (in_h < 1 || in_w < 1 || in_c < 1 || classes < 2)
        throw std::invalid_argument("ToyNet::init: bad dims or class count");
    ToyNet net;
    net.in_h = in_h;
    net.in_w = in_w;
    net.in_c = in_c;
    net.classes = classes;
    int c_prev = in_c;
    for (int c_out : block_channels) {
        ConvBlock blk;
        blk.in_c = c_prev;
        blk.out_c = c_out;
        blk.w.resize(static_cast<size_t>(c_out) * c_prev * 9);
        blk.b.assign(c_out, 0.0);
        double s = std::sqrt(2.0 / (c_prev * 9));
        for (double& v : blk.w) v = s * rng.next_normal();
        net.blocks.push_back(std::move(blk));
        c_prev = c_out;
    }
    int feat = net.feature_len();
    net.fc_w.resize(static_cast<size_t>(classes) * feat);
    net.fc_b.assign(classes, 0.0);
    double s = std::sqrt(2.0 / feat);
    for (double& v : net.fc_w) v = s * rng.next_normal();
    if (early_head) {
        if (net.blocks.empty())
            throw std::invalid_argument("ToyNet::init: early head requires at least one block");
        net.early_head = true;
        int c0 = net.blocks[0].out_c;
        net.head_w.resize(static_cast<size_t>(classes) * c0);
        net.head_b.assign(classes, 0.0);
        double sh = std::sqrt(2.0 / c0);
        for (double& v : net.head_w) v = sh * rng.next_normal();
    }
    return net;
}

Activations forward_cache(const ToyNet& net, const Image& image, int threads) {
    require_input_match(net, image);
    Activations acts;
    const std::vector<double>* cur = &image.data;
    int h = net.in_h, w = net.in_w;
    for (const ConvBlock& blk : net.blocks) {
        BlockActs ba;
        ba.h = h;
        ba.w = w;
        ba.pre.resize(static_cast<size_t>(h) * w * blk.out_c);
        kernels::conv3x3_forward(cur->data(), h, w, blk.in_c, blk.w.data(),
                                 blk.b.data(), blk.out_c, ba.pre.data(), threads);
        ba.post.resize(ba.pre.size());
        for (size_t i = 0; i < ba.pre.size(); ++i) ba.post[i] = softplus(ba.pre[i]);
        ba.ph = kernels::pooled_dim(h);
        ba.pw = kernels::pooled_dim(w);
        ba.pooled.resize(static_cast<size_t>(ba.ph) * ba.pw * blk.out_c);
        kernels::serial::avgpool2_forward(ba.post.data(), h, w, blk.out_c, ba.pooled.data());
        h = ba.ph;
        w = ba.pw;
        acts.blocks.push_back(std::move(ba));
        cur = &acts.blocks.back().pooled;
    }

    const std::vector<double>& feat = *cur;
    acts.logits.assign(net.classes, 0.0);
    int feat_len = static_cast<int>(feat.size());
    for (int k = 0; k < net.classes; ++k) {
        double acc = net.fc_b[k];
        const double* wk = net.fc_w.data() + static_cast<size_t>(k) * feat_len;
        for (int f = 0; f < feat_len; ++f) acc += wk[f] * feat[f];
        acts.logits[k] = acc;
    }
    for (double v : acts.logits)
        if (!std::isfinite(v)) throw std::runtime_error("forward: non-finite logit");

    if (net.early_head) {
        const BlockActs& b0 = acts.blocks[0];
        int c0 = net.blocks[0].out_c;
        acts.head_gap.assign(c0, 0.0);
        int cells = b0.ph * b0.pw;
        for (int idx = 0; idx < cells; ++idx)
            for (int c = 0; c < c0; ++c)
                acts.head_gap[c] += b0.pooled[static_cast<size_t>(idx) * c0 + c];
        for (double& v : acts.head_gap) v /= cells;
        acts.head_logits.assign(net.classes, 0.0);
        for (int k = 0; k < net.classes; ++k) {
            double acc = net.head_b[k];
            for (int c = 0; c < c0; ++c) acc += net.head_w[static_cast<size_t>(k) * c0 + c] * acts.head_gap[c];
            acts.head_logits[k] = acc;
        }
        for (double v : acts.head_logits)
            if (!std::isfinite(v)) throw std::runtime_error("forward: non-finite auxiliary logit");
    }
    return acts;
}

std::vector<double> forward(const ToyNet& net, const Image& image, int threads) {
    return forward_cache(net, image, threads).logits;
}

int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

namespace {

// Backward through block `t`: dpooled -> gradient w.r.t. the block input.
// When grads is non-null, weight/bias gradients are accumulated using the
// block's input activations.
std::vector<double> block_backward(const ToyNet& net, const Activations& acts,
                                   const Image& image, int t,
                                   const std::vector<double>& dpooled,
                                   ParamGrads* grads, bool want_input, int threads) {
    const ConvBlock& blk = net.blocks[t];
    const BlockActs& ba = acts.blocks[t];

    std::vector<double> dpost(ba.post.size());
    kernels::serial::avgpool2_backward(dpooled.data(), ba.h, ba.w, blk.out_c, dpost.data());
    for (size_t i = 0; i < dpost.size(); ++i) dpost[i] *= sigmoid(ba.pre[i]);

    const double* block_in = (t == 0) ? image.data.data() : acts.blocks[t - 1].pooled.data();
    if (grads) {
        std::vector<double> gw(blk.w.size()), gb(blk.b.size());
        kernels::conv3x3_backward_params(block_in, dpost.data(), ba.h, ba.w,
                                         blk.in_c, blk.out_c, gw.data(), gb.data(), threads);
        for (size_t i = 0; i < gw.size(); ++i) grads->block_w[t][i] += gw[i];
        for (size_t i = 0; i < gb.size(); ++i) grads->block_b[t][i] += gb[i];
    }

    if (!want_input) return {};
    std::vector<double> dinput(static_cast<size_t>(ba.h) * ba.w * blk.in_c);
    kernels::conv3x3_backward_input(dpost.data(), ba.h, ba.w, blk.out_c,
                                    blk.w.data(), blk.in_c, dinput.data(), threads);
    return dinput;
}

// Shared backward driver. dlogits drives the classifier path (may be empty to
// skip it), dhead drives the auxiliary path. Returns the input gradient when
// want_input is true.
std::vector<double> backward(const ToyNet& net, const Activations& acts, const Image& image,
                             const std::vector<double>& dlogits,
                             const std::vector<double>& dhead,
                             ParamGrads* grads, bool want_input, int threads) {
    int n_blocks = static_cast<int>(net.blocks.size());
    int feat_len = net.feature_len();

    std::vector<double> dfeat(feat_len, 0.0);
    if (!dlogits.empty()) {
        for (int k = 0; k < net.classes; ++k) {
            double dk = dlogits[k];
            if (dk == 0.0) continue;
            const double* wk = net.fc_w.data() + static_cast<size_t>(k) * feat_len;
            for (int f = 0; f < feat_len; ++f) dfeat[f] += dk * wk[f];
        }
        if (grads) {
            const double* feat = n_blocks ? acts.blocks.back().pooled.data() : image.data.data();
            for (int k = 0; k < net.classes; ++k) {
                double dk = dlogits[k];
                grads->fc_b[k] += dk;
                if (dk == 0.0) continue;
                double* gk = grads->fc_w.data() + static_cast<size_t>(k) * feat_len;
                for (int f = 0; f < feat_len; ++f) gk[f] += dk * feat[f];
            }
        }
    }

    if (n_blocks == 0) return dfeat; // linear-only net: dfeat is the input gradient

    std::vector<double> dpooled = std::move(dfeat);
    for (int t = n_blocks - 1; t >= 0; --t) {
        if (t == 0 && !dhead.empty()) {
            // auxiliary head: d(gap)/d(pooled cell) = 1/cells, broadcast
            const BlockActs& b0 = acts.blocks[0];
            int c0 = net.blocks[0].out_c;
            int cells = b0.ph * b0.pw;
            std::vector<double> dgap(c0, 0.0);
            for (int k = 0; k < net.classes; ++k) {
                double dk = dhead[k];
                if (grads) grads->head_b[k] += dk;
                for (int c = 0; c < c0; ++c) {
                    dgap[c] += dk * net.head_w[static_cast<size_t>(k) * c0 + c];
                    if (grads) grads->head_w[static_cast<size_t>(k) * c0 + c] += dk * acts.head_gap[c];
                }
            }
            for (int idx = 0; idx < cells; ++idx)
                for (int c = 0; c < c0; ++c)
                    dpooled[static_cast<size_t>(idx) * c0 + c] += dgap[c] / cells;
        }
        bool need_below = t > 0 || want_input;
        if (!need_below && grads == nullptr) break;
        std::vector<double> dinput = block_backward(net, acts, image, t, dpooled, grads, need_below, threads);
        dpooled = std::move(dinput);
    }
    return dpooled;
}

} // namespace

std::vector<double> input_gradient(const ToyNet& net, const Image& image, int label,
                                   bool use_early_head, int threads) {
    if (label < 0 || label >= net.classes)
        throw std::invalid_argument("input_gradient: label out of range");
    if (use_early_head) {
        if (!net.early_head)
            throw std::invalid_argument("input_gradient: net lacks an early head");
        require_input_match(net, image);
        // Truncated pass: only the first block is ever evaluated or traversed;
        // that is the whole point of the approximation.
        const ConvBlock& blk = net.blocks[0];
        Activations acts;
        BlockActs ba;
        ba.h = net.in_h;
        ba.w = net.in_w;
        ba.pre.resize(static_cast<size_t>(ba.h) * ba.w * blk.out_c);
        kernels::conv3x3_forward(image.data.data(), ba.h, ba.w, blk.in_c, blk.w.data(),
                                 blk.b.data(), blk.out_c, ba.pre.data(), threads);
        ba.post.resize(ba.pre.size());
        for (size_t i = 0; i < ba.pre.size(); ++i) ba.post[i] = softplus(ba.pre[i]);
        ba.ph = kernels::pooled_dim(ba.h);
        ba.pw = kernels::pooled_dim(ba.w);
        ba.pooled.resize(static_cast<size_t>(ba.ph) * ba.pw * blk.out_c);
        kernels::serial::avgpool2_forward(ba.post.data(), ba.h, ba.w, blk.out_c, ba.pooled.data());
        acts.blocks.push_back(std::move(ba));

        const BlockActs& b0 = acts.blocks[0];
        int c0 = blk.out_c;
        int cells = b0.ph * b0.pw;
        std::vector<double> dpooled(b0.pooled.size(), 0.0);
        for (int c = 0; c < c0; ++c) {
            double dgap = net.head_w[static_cast<size_t>(label) * c0 + c];
            for (int idx = 0; idx < cells; ++idx)
                dpooled[static_cast<size_t>(idx) * c0 + c] = dgap / cells;
        }
        return block_backward(net, acts, image, 0, dpooled, nullptr, true, threads);
    }
    Activations acts = forward_cache(net, image, threads);
    std::vector<double> dlogits(net.classes, 0.0);
    dlogits[label] = 1.0;
    return backward(net, acts, image, dlogits, {}, nullptr, true, threads);
}

ParamGrads ParamGrads::zeros_like(const ToyNet& net) {
    ParamGrads g;
    for (const ConvBlock& b : net.blocks) {
        g.block_w.emplace_back(b.w.size(), 0.0);
        g.block_b.emplace_back(b.b.size(), 0.0);
    }
    g.fc_w.assign(net.fc_w.size(), 0.0);
    g.fc_b.assign(net.fc_b.size(), 0.0);
    g.head_w.assign(net.head_w.size(), 0.0);
    g.head_b.assign(net.head_b.size(), 0.0);
    return g;
}

void ParamGrads::add_scaled(const ParamGrads& g, double s) {
    for (size_t t = 0; t < block_w.size(); ++t) {
        for (size_t i = 0; i < block_w[t].size(); ++i) block_w[t][i] += s * g.block_w[t][i];
        for (size_t i = 0; i < block_b[t].size(); ++i) block_b[t][i] += s * g.block_b[t][i];
    }
    for (size_t i = 0; i < fc_w.size(); ++i) fc_w[i] += s * g.fc_w[i];
    for (size_t i = 0; i < fc_b.size(); ++i) fc_b[i] += s * g.fc_b[i];
    for (size_t i = 0; i < head_w.size(); ++i) head_w[i] += s * g.head_w[i];
    for (size_t i = 0; i < head_b.size(); ++i) head_b[i] += s * g.head_b[i];
}

double backprop_example(const ToyNet& net, const Image& image, int label,
                        double aux_coef, ParamGrads& grads, int threads) {
    Activations acts = forward_cache(net, image, threads);
    std::vector<double> p = softmax(acts.logits);
    double loss = -std::log(std::max(p[label], 1e-300));
    std::vector<double> dlogits(net.classes);
    for (int k = 0; k < net.classes; ++k) dlogits[k] = p[k] - (k == label ? 1.0 : 0.0);

    std::vector<double> dhead;
    if (net.early_head && aux_coef != 0.0) {
        std::vector<double> pa = softmax(acts.head_logits);
        loss += aux_coef * -std::log(std::max(pa[label], 1e-300));
        dhead.resize(net.classes);
        for (int k = 0; k < net.classes; ++k)
            dhead[k] = aux_coef * (pa[k] - (k == label ? 1.0 : 0.0));
    }
    backward(net, acts, image, dlogits, dhead, &grads, false, threads);
    return loss;
}

TrainResult train_toy(const Dataset& data, int epochs, double lr, bool early_head,
                      double aux_coef, RngStream& rng, int batch_size,
                      const std::vector<int>& block_channels) {
    if (data.empty())
        throw std::invalid_argument("train_toy: empty dataset");
    for (const DatasetRecord& r : data.records)
        if (r.label < 0 || r.label >= data.num_classes)
            throw std::invalid_argument("train_toy: label out of range");

    const Image& first = data.records[0].image;
    ToyNet net = ToyNet::init(first.height, first.width, first.channels,
                              data.num_classes, block_channels, early_head, rng);

    size_t n = data.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});

    double last_loss = 0.0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        // Fisher-Yates with the training stream; batches then run in order.
        for (size_t i = n - 1; i > 0; --i) {
            size_t j = rng.next_below(i + 1);
            std::swap(order[i], order[j]);
        }
        double epoch_loss = 0.0;
        for (size_t start = 0; start < n; start += batch_size) {
            size_t end = std::min(start + batch_size, n);
            ParamGrads grads = ParamGrads::zeros_like(net);
            for (size_t i = start; i < end; ++i) {
                const DatasetRecord& r = data.records[order[i]];
                epoch_loss += backprop_example(net, r.image, r.label, aux_coef, grads);
            }
            double step = -lr / static_cast<double>(end - start);
            for (size_t t = 0; t < net.blocks.size(); ++t) {
                for (size_t i = 0; i < net.blocks[t].w.size(); ++i) net.blocks[t].w[i] += step * grads.block_w[t][i];
                for (size_t i = 0; i < net.blocks[t].b.size(); ++i) net.blocks[t].b[i] += step * grads.block_b[t][i];
            }
            for (size_t i = 0; i < net.fc_w.size(); ++i) net.fc_w[i] += step * grads.fc_w[i];
            for (size_t i = 0; i < net.fc_b.size(); ++i) net.fc_b[i] += step * grads.fc_b[i];
            for (size_t i = 0; i < net.head_w.size(); ++i) net.head_w[i] += step * grads.head_w[i];
            for (size_t i = 0; i < net.head_b.size(); ++i) net.head_b[i] += step * grads.head_b[i];
        }
        last_loss = epoch_loss / static_cast<double>(n);
    }

    TrainResult result;
    result.net = std::move(net);
    result.final_loss = last_loss;
    result.train_accuracy = train_accuracy(result.net, data);
    return result;
}

double train_accuracy(const ToyNet& net, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("train_accuracy: empty dataset");
    size_t correct = 0;
    for (const DatasetRecord& r : data.records)
        if (argmax(forward(net, r.image)) == r.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

} // namespace keepaug
