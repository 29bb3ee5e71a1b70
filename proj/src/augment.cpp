#include "keepaug/augment.hpp"

#include <cmath>
#include <exception>

namespace keepaug {

namespace {

const char* kModeNames[] = {"keep-cutout", "keep-erase",  "keep-paste", "keep-cutmix",
                            "plain-cutout", "plain-erase", "plain-policy"};

void require_map_match(const SaliencyMap& map, const Image& image, const char* op) {
    if (map.height != image.height || map.width != image.width)
        throw std::invalid_argument(std::string(op) + ": map dims != image dims");
}

CandidateScores scored_candidates(const SaliencyMap& map, const AugmentConfig& cfg) {
    CandidateScores scores = candidate_scores(map, cfg.region.h, cfg.region.w,
                                              cfg.effective_stride(map.height, map.width));
    quantile_threshold(scores, cfg.tau);
    return scores;
}

} // namespace

AugmentMode augment_mode_from_name(const std::string& name) {
    for (size_t i = 0; i < std::size(kModeNames); ++i)
        if (name == kModeNames[i]) return static_cast<AugmentMode>(i);
    throw std::invalid_argument("unknown augment mode: " + name);
}

std::string augment_mode_name(AugmentMode mode) {
    return kModeNames[static_cast<size_t>(mode)];
}

bool mode_needs_saliency(AugmentMode mode) {
    switch (mode) {
        case AugmentMode::keep_cutout:
        case AugmentMode::keep_erase:
        case AugmentMode::keep_paste:
        case AugmentMode::keep_cutmix:
            return true;
        default:
            return false;
    }
}

MixedLabel MixedLabel::mix(int label_a, double weight_a, int label_b, double weight_b) {
    MixedLabel m;
    if (label_a == label_b) {
        m.entries.emplace_back(label_a, weight_a + weight_b);
    } else {
        if (weight_a > 0.0) m.entries.emplace_back(label_a, weight_a);
        if (weight_b > 0.0) m.entries.emplace_back(label_b, weight_b);
    }
    m.check_valid();
    return m;
}

int MixedLabel::primary() const {
    if (entries.empty()) throw std::logic_error("MixedLabel::primary: empty");
    size_t best = 0;
    for (size_t i = 1; i < entries.size(); ++i)
        if (entries[i].second > entries[best].second) best = i;
    return entries[best].first;
}

void MixedLabel::check_valid() const {
    if (entries.empty() || entries.size() > 2)
        throw std::invalid_argument("MixedLabel: must hold 1 or 2 entries");
    double sum = 0.0;
    for (auto& [label, weight] : entries) {
        if (label < 0) throw std::invalid_argument("MixedLabel: negative class");
        if (!(weight > 0.0)) throw std::invalid_argument("MixedLabel: weights must be > 0");
        sum += weight;
    }
    if (std::fabs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("MixedLabel: weights must sum to 1");
}

void AugmentConfig::check_valid() const {
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("config: tau must be in (0,1)");
    if (region.h < 1 || region.w < 1)
        throw std::invalid_argument("config: region dims must be >= 1");
    if (stride < 0) throw std::invalid_argument("config: stride must be >= 0");
    if (parallelism < 0) throw std::invalid_argument("config: parallelism must be >= 0");
    if (policy.n_ops < 0) throw std::invalid_argument("config: n_ops must be >= 0");
    if (policy.magnitude < 0 || policy.magnitude > 30)
        throw std::invalid_argument("config: magnitude must be 0..30");
    if (policy.ops.empty()) throw std::invalid_argument("config: policy op set is empty");
    if (saliency.factor < 2) throw std::invalid_argument("config: saliency factor must be >= 2");
}

AugmentedExample keep_cutout(const Image& image, const SaliencyMap& map,
                             const AugmentConfig& cfg, RngStream& rng) {
    require_map_match(map, image, "keep_cutout");
    CandidateScores scores = scored_candidates(map, cfg);
    Rect s = sample_low_region(scores, rng);
    AugmentedExample out;
    out.image = (cfg.mode == AugmentMode::keep_erase) ? cut_random(image, s, rng)
                                                      : cut_zero(image, s);
    out.rec.has_region = true;
    out.rec.region = s;
    return out;
}

AugmentedExample keep_paste(const Image& image, const SaliencyMap& map,
                            const AugmentConfig& cfg, RngStream& rng) {
    require_map_match(map, image, "keep_paste");
    AugmentedExample out;
    Image transformed = apply_policy(image, cfg.policy, rng, &out.rec.policy_ops);
    CandidateScores scores = scored_candidates(map, cfg);
    Rect s = sample_high_region(scores, rng);
    out.image = paste_region(image, transformed, s);
    out.rec.has_region = true;
    out.rec.region = s;
    return out;
}

AugmentedExample keep_cutmix(const Image& image_a, int label_a,
                             const Image& image_b, int label_b,
                             const SaliencyMap& map_a, const AugmentConfig& cfg,
                             RngStream& rng) {
    if (!image_a.same_dims(image_b))
        throw std::invalid_argument("keep_cutmix: image dims differ");
    require_map_match(map_a, image_a, "keep_cutmix");
    CandidateScores scores = scored_candidates(map_a, cfg);
    Rect s = sample_low_region(scores, rng);

    AugmentedExample out;
    out.image = paste_region(image_b, image_a, s); // B's patch lands inside s
    double corrupted = static_cast<double>(s.area()) /
                       (static_cast<double>(image_a.height) * image_a.width);
    double lambda = 1.0 - corrupted;
    out.rec.has_region = true;
    out.rec.region = s;
    out.rec.lambda = lambda;
    out.rec.label = MixedLabel::mix(label_a, lambda, label_b, 1.0 - lambda);
    return out;
}

namespace {

Rect draw_plain_rect(const Image& image, int length, RngStream& rng) {
    if (length < 1 || length > image.height || length > image.width)
        throw std::invalid_argument("plain cut: length exceeds image dims");
    int top = static_cast<int>(rng.next_below(image.height - length + 1));
    int left = static_cast<int>(rng.next_below(image.width - length + 1));
    return Rect{top, left, length, length};
}

} // namespace

Image plain_cutout(const Image& image, int length, RngStream& rng, Rect* chosen) {
    Rect s = draw_plain_rect(image, length, rng);
    if (chosen) *chosen = s;
    return cut_zero(image, s);
}

Image plain_erase(const Image& image, int length, RngStream& rng, Rect* chosen) {
    Rect s = draw_plain_rect(image, length, rng);
    if (chosen) *chosen = s;
    return cut_random(image, s, rng);
}

SaliencyMap saliency_for(const Image& image, int label, size_t batch_pos,
                         const AugmentConfig& cfg, const SaliencySource& source,
                         int threads) {
    switch (cfg.saliency.variant) {
        case SaliencyVariant::external: {
            if (!source.external)
                throw std::invalid_argument("saliency: external maps not provided");
            if (batch_pos >= source.external->size())
                throw std::invalid_argument("saliency: missing external map for image " +
                                            std::to_string(batch_pos));
            return (*source.external)[batch_pos];
        }
        case SaliencyVariant::full:
            if (!source.net) throw std::invalid_argument("saliency: model not provided");
            return vanilla_saliency(*source.net, image, label, threads);
        case SaliencyVariant::max_logit:
            if (!source.net) throw std::invalid_argument("saliency: model not provided");
            return maxlogit_saliency(*source.net, image, threads);
        case SaliencyVariant::low_res:
            if (!source.net) throw std::invalid_argument("saliency: model not provided");
            return lowres_saliency(*source.net, image, label, cfg.saliency.factor, threads);
        case SaliencyVariant::early_head:
            if (!source.net) throw std::invalid_argument("saliency: model not provided");
            return earlyhead_saliency(*source.net, image, label, threads);
    }
    throw std::logic_error("saliency_for: bad variant");
}

namespace {

AugmentedExample augment_one(const std::vector<DatasetRecord>& records, size_t pos,
                             const AugmentConfig& cfg, const SaliencySource& source) {
    const DatasetRecord& rec = records[pos];
    RngStream rng = RngStream::for_image(cfg.seed, rec.index);
    AugmentedExample out;
    switch (cfg.mode) {
        case AugmentMode::keep_cutout:
        case AugmentMode::keep_erase: {
            SaliencyMap map = saliency_for(rec.image, rec.label, pos, cfg, source);
            out = keep_cutout(rec.image, map, cfg, rng);
            out.rec.label = MixedLabel::pure(rec.label);
            break;
        }
        case AugmentMode::keep_paste: {
            SaliencyMap map = saliency_for(rec.image, rec.label, pos, cfg, source);
            out = keep_paste(rec.image, map, cfg, rng);
            out.rec.label = MixedLabel::pure(rec.label);
            break;
        }
        case AugmentMode::keep_cutmix: {
            size_t donor = pos;
            if (records.size() > 1) {
                uint64_t pick = rng.next_below(records.size() - 1);
                donor = (pick >= pos) ? pick + 1 : pick;
            }
            SaliencyMap map = saliency_for(rec.image, rec.label, pos, cfg, source);
            out = keep_cutmix(rec.image, rec.label, records[donor].image,
                              records[donor].label, map, cfg, rng);
            out.rec.donor_index = static_cast<int64_t>(records[donor].index);
            break;
        }
        case AugmentMode::plain_cutout: {
            Rect s;
            out.image = plain_cutout(rec.image, cfg.region.h, rng, &s);
            out.rec.has_region = true;
            out.rec.region = s;
            out.rec.label = MixedLabel::pure(rec.label);
            break;
        }
        case AugmentMode::plain_erase: {
            Rect s;
            out.image = plain_erase(rec.image, cfg.region.h, rng, &s);
            out.rec.has_region = true;
            out.rec.region = s;
            out.rec.label = MixedLabel::pure(rec.label);
            break;
        }
        case AugmentMode::plain_policy: {
            out.image = apply_policy(rec.image, cfg.policy, rng, &out.rec.policy_ops);
            out.rec.label = MixedLabel::pure(rec.label);
            break;
        }
    }
    return out;
}

} // namespace

std::vector<AugmentedExample> augment_batch(const std::vector<DatasetRecord>& records,
                                            const AugmentConfig& cfg,
                                            const SaliencySource& source,
                                            int parallelism) {
    cfg.check_valid();
    if (cfg.saliency.variant == SaliencyVariant::external && mode_needs_saliency(cfg.mode)) {
        if (!source.external)
            throw std::invalid_argument("augment_batch: external saliency maps not provided");
        if (source.external->size() < records.size()) {
            // name the first index without a map
            throw std::invalid_argument("augment_batch: missing external map for image " +
                                        std::to_string(source.external->size()));
        }
    }

    std::vector<AugmentedExample> out(records.size());
    int threads = std::max(1, parallelism);
    std::exception_ptr error;

    #pragma omp parallel for num_threads(threads) schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(records.size()); ++i) {
        try {
            out[i] = augment_one(records, static_cast<size_t>(i), cfg, source);
        } catch (...) {
            #pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

} // namespace keepaug
