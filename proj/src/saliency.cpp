#include "keepaug/saliency.hpp"

#include <cmath>

#include "keepaug/kernels.hpp"

namespace keepaug {

SaliencyVariant saliency_variant_from_name(const std::string& name) {
    if (name == "full") return SaliencyVariant::full;
    if (name == "low-res") return SaliencyVariant::low_res;
    if (name == "early-head") return SaliencyVariant::early_head;
    if (name == "max-logit") return SaliencyVariant::max_logit;
    if (name == "external") return SaliencyVariant::external;
    throw std::invalid_argument("unknown saliency strategy: " + name);
}

std::string saliency_variant_name(SaliencyVariant v) {
    switch (v) {
        case SaliencyVariant::full: return "full";
        case SaliencyVariant::low_res: return "low-res";
        case SaliencyVariant::early_head: return "early-head";
        case SaliencyVariant::max_logit: return "max-logit";
        case SaliencyVariant::external: return "external";
    }
    return "?";
}

namespace {

SaliencyMap channel_max_abs(const std::vector<double>& grad, int h, int w, int c) {
    SaliencyMap map(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const double* g = grad.data() + (static_cast<size_t>(i) * w + j) * c;
            double m = 0.0;
            for (int ch = 0; ch < c; ++ch) m = std::max(m, std::fabs(g[ch]));
            map.at(i, j) = m;
        }
    return map;
}

} // namespace

SaliencyMap vanilla_saliency(const ToyNet& net, const Image& image, int label, int threads) {
    std::vector<double> grad = input_gradient(net, image, label, false, threads);
    return channel_max_abs(grad, image.height, image.width, image.channels);
}

SaliencyMap maxlogit_saliency(const ToyNet& net, const Image& image, int threads) {
    int label = argmax(forward(net, image, threads));
    return vanilla_saliency(net, image, label, threads);
}

SaliencyMap lowres_saliency(const ToyNet& net_lr, const Image& image, int label,
                            int factor, int threads) {
    if (factor < 2)
        throw std::invalid_argument("lowres_saliency: factor must be >= 2");
    int lh = (image.height + factor - 1) / factor;
    int lw = (image.width + factor - 1) / factor;
    Image low = resize_bicubic(image, lh, lw, threads);
    SaliencyMap small = vanilla_saliency(net_lr, low, label, threads);
    return upscale_nearest(small, image.height, image.width);
}

SaliencyMap earlyhead_saliency(const ToyNet& net, const Image& image, int label, int threads) {
    if (!net.early_head)
        throw std::invalid_argument("earlyhead_saliency: net lacks an early head");
    std::vector<double> grad = input_gradient(net, image, label, true, threads);
    return channel_max_abs(grad, image.height, image.width, image.channels);
}

} // namespace keepaug
