#ifndef KEEPAUG_AUGMENT_HPP
#define KEEPAUG_AUGMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "keepaug/dataset.hpp"
#include "keepaug/image.hpp"
#include "keepaug/policy.hpp"
#include "keepaug/region.hpp"
#include "keepaug/saliency.hpp"

namespace keepaug {

enum class AugmentMode {
    keep_cutout,
    keep_erase,
    keep_paste,
    keep_cutmix,
    plain_cutout,
    plain_erase,
    plain_policy,
};

AugmentMode augment_mode_from_name(const std::string& name);
std::string augment_mode_name(AugmentMode mode);
bool mode_needs_saliency(AugmentMode mode);

// Pairwise label mix; weights are positive and sum to 1. Equal classes merge
// into a single entry.
struct MixedLabel {
    std::vector<std::pair<int, double>> entries;

    static MixedLabel pure(int label) { return MixedLabel{{{label, 1.0}}}; }
    static MixedLabel mix(int label_a, double weight_a, int label_b, double weight_b);
    int primary() const; // class with the largest weight, first entry on ties
    void check_valid() const;
};

struct RegionSize {
    int h = 16;
    int w = 16;
};

struct AugmentConfig {
    AugmentMode mode = AugmentMode::keep_cutout;
    double tau = 0.6;
    RegionSize region; // cut length / paste-back length
    TransformPolicy policy;
    SaliencyStrategy saliency;
    uint64_t seed = 0;
    int stride = 0;      // 0 = auto (1 up to 64 px, 2 above)
    int parallelism = 0; // 0 = KEEPAUG_THREADS or 1 (resolved by the caller)

    int effective_stride(int image_h, int image_w) const {
        return stride > 0 ? stride : auto_stride(image_h, image_w);
    }
    void check_valid() const;
};

// Everything needed to replay one augmented example without the rng; written
// to the run manifest sidecar (always on) and used by reconstruction tests.
struct AugmentRecord {
    bool has_region = false;
    Rect region{0, 0, 0, 0};
    std::vector<ResolvedOp> policy_ops;
    MixedLabel label;
    double lambda = 1.0;
    int64_t donor_index = -1; // cutmix partner's dataset index
};

struct AugmentedExample {
    Image image;
    AugmentRecord rec;
};

// Selective-cut: score all region placements on the map, threshold at the
// tau-quantile, cut a uniformly drawn below-threshold region (zeros, or
// uniform noise in keep-erase mode).
AugmentedExample keep_cutout(const Image& image, const SaliencyMap& map,
                             const AugmentConfig& cfg, RngStream& rng);

// Selective-paste: image-level policy transform, then paste back a uniformly
// drawn above-threshold region of the original at its own coordinates.
AugmentedExample keep_paste(const Image& image, const SaliencyMap& map,
                            const AugmentConfig& cfg, RngStream& rng);

// Selective CutMix: replace a below-threshold region of A with B's content at
// the same coordinates; labels mix by the uncorrupted area fraction lambda.
AugmentedExample keep_cutmix(const Image& image_a, int label_a,
                             const Image& image_b, int label_b,
                             const SaliencyMap& map_a, const AugmentConfig& cfg,
                             RngStream& rng);

// Baselines. Placement is uniform over all contained positions.
Image plain_cutout(const Image& image, int length, RngStream& rng, Rect* chosen = nullptr);
Image plain_erase(const Image& image, int length, RngStream& rng, Rect* chosen = nullptr);

struct SaliencySource {
    const ToyNet* net = nullptr;                     // full / low-res / early-head / max-logit
    const std::vector<SaliencyMap>* external = nullptr; // aligned with the batch
};

// Computes or fetches a map per cfg.saliency. For low-res the supplied net is
// the half-resolution net.
SaliencyMap saliency_for(const Image& image, int label, size_t batch_pos,
                         const AugmentConfig& cfg, const SaliencySource& source,
                         int threads = 1);

// Per-image dispatch over cfg.mode; output order matches input order and each
// image draws from its own (seed, dataset-index) stream, so results do not
// depend on worker count or scheduling.
std::vector<AugmentedExample> augment_batch(const std::vector<DatasetRecord>& records,
                                            const AugmentConfig& cfg,
                                            const SaliencySource& source,
                                            int parallelism = 1);

} // namespace keepaug

#endif
