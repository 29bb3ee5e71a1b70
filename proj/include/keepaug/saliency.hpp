#ifndef KEEPAUG_SALIENCY_HPP
#define KEEPAUG_SALIENCY_HPP

#include <string>

#include "keepaug/image.hpp"
#include "keepaug/toynet.hpp"

namespace keepaug {

enum class SaliencyVariant { full, low_res, early_head, max_logit, external };

struct SaliencyStrategy {
    SaliencyVariant variant = SaliencyVariant::full;
    int factor = 2;   // low_res downscale factor
    std::string file; // external maps location

    SaliencyStrategy() = default;
    SaliencyStrategy(SaliencyVariant v, int factor_ = 2) : variant(v), factor(factor_) {}
};

SaliencyVariant saliency_variant_from_name(const std::string& name);
std::string saliency_variant_name(SaliencyVariant v);

// |d logit_label / d input|, channel-wise max per pixel. Gradient of the raw
// label logit, not the softmax loss.
SaliencyMap vanilla_saliency(const ToyNet& net, const Image& image, int label, int threads = 1);

// vanilla_saliency at label = argmax of the forward logits (lowest-index
// tie-break); used when no label is available.
SaliencyMap maxlogit_saliency(const ToyNet& net, const Image& image, int threads = 1);

// Bicubic downscale by `factor` (dims round up), saliency on the copy with the
// low-resolution net, nearest-neighbor map back to the input resolution.
SaliencyMap lowres_saliency(const ToyNet& net_lr, const Image& image, int label,
                            int factor = 2, int threads = 1);

// Gradient of the auxiliary head's label logit; traverses only the first block.
SaliencyMap earlyhead_saliency(const ToyNet& net, const Image& image, int label, int threads = 1);

} // namespace keepaug

#endif
