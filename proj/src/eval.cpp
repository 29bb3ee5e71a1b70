#include "keepaug/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace keepaug {

using nlohmann::json;

namespace {

// One stream per (record index, trial); trials land in the high bits so the
// trial-0 streams coincide with the plain per-image streams.
RngStream trial_stream(uint64_t seed, uint64_t index, int trial) {
    return RngStream::for_image(seed, index + (static_cast<uint64_t>(trial) << 40));
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

} // namespace

double fidelity(const ToyNet& oracle, const Dataset& data, const AugmentFn& augment,
                int trials, uint64_t seed, int threads) {
    if (data.empty()) throw std::invalid_argument("fidelity: empty dataset");
    if (trials < 1) throw std::invalid_argument("fidelity: trials must be >= 1");

    long long n = static_cast<long long>(data.size());
    long long same = 0;

    #pragma omp parallel for num_threads(std::max(1, threads)) schedule(dynamic) reduction(+ : same)
    for (long long i = 0; i < n; ++i) {
        const DatasetRecord& rec = data.records[i];
        int pred_clean = argmax(forward(oracle, rec.image));
        for (int t = 0; t < trials; ++t) {
            RngStream rng = trial_stream(seed, rec.index, t);
            Image augmented = augment(rec, rng);
            if (argmax(forward(oracle, augmented)) == pred_clean) ++same;
        }
    }
    return static_cast<double>(same) / (static_cast<double>(n) * trials);
}

namespace {

AugmentFn make_augment_fn(const ToyNet& oracle, AugmentMode mode, int magnitude,
                          const AugmentConfig& base_cfg) {
    AugmentConfig cfg = base_cfg;
    cfg.mode = mode;
    switch (mode) {
        case AugmentMode::plain_cutout:
            return [magnitude](const DatasetRecord& r, RngStream& rng) {
                return plain_cutout(r.image, magnitude, rng);
            };
        case AugmentMode::plain_erase:
            return [magnitude](const DatasetRecord& r, RngStream& rng) {
                return plain_erase(r.image, magnitude, rng);
            };
        case AugmentMode::plain_policy: {
            cfg.policy.magnitude = magnitude;
            return [cfg](const DatasetRecord& r, RngStream& rng) {
                return apply_policy(r.image, cfg.policy, rng);
            };
        }
        case AugmentMode::keep_cutout:
        case AugmentMode::keep_erase: {
            cfg.region.h = cfg.region.w = magnitude;
            return [cfg, &oracle](const DatasetRecord& r, RngStream& rng) {
                SaliencyMap map = vanilla_saliency(oracle, r.image, r.label);
                return keep_cutout(r.image, map, cfg, rng).image;
            };
        }
        case AugmentMode::keep_paste: {
            cfg.policy.magnitude = magnitude;
            return [cfg, &oracle](const DatasetRecord& r, RngStream& rng) {
                SaliencyMap map = vanilla_saliency(oracle, r.image, r.label);
                return keep_paste(r.image, map, cfg, rng).image;
            };
        }
        case AugmentMode::keep_cutmix:
            throw std::invalid_argument("fidelity_sweep: keep-cutmix mixes labels and has no fidelity sweep");
    }
    throw std::logic_error("make_augment_fn: bad mode");
}

} // namespace

FidelityReport fidelity_sweep(const ToyNet& oracle, const Dataset& data, AugmentMode mode,
                              const std::vector<int>& magnitudes, int trials, uint64_t seed,
                              const AugmentConfig& base_cfg, int threads) {
    if (magnitudes.empty())
        throw std::invalid_argument("fidelity_sweep: magnitudes must be non-empty");
    for (size_t i = 1; i < magnitudes.size(); ++i)
        if (magnitudes[i] <= magnitudes[i - 1])
            throw std::invalid_argument("fidelity_sweep: magnitudes must be ascending");

    FidelityReport report;
    report.augmentation = augment_mode_name(mode);
    report.magnitudes = magnitudes;
    report.trials = trials;
    report.oracle_clean_accuracy = train_accuracy(oracle, data);
    for (int m : magnitudes) {
        AugmentFn fn = make_augment_fn(oracle, mode, m, base_cfg);
        report.fidelity.push_back(fidelity(oracle, data, fn, trials, seed, threads));
    }
    return report;
}

std::string FidelityReport::to_json_text() const {
    json j;
    j["augmentation"] = augmentation;
    j["magnitudes"] = magnitudes;
    j["fidelity"] = fidelity;
    j["trials"] = trials;
    j["oracle_clean_accuracy"] = oracle_clean_accuracy;
    return j.dump();
}

std::string FidelityReport::to_table() const {
    std::ostringstream os;
    os << "augmentation: " << augmentation << "   trials: " << trials
       << "   oracle clean accuracy: " << oracle_clean_accuracy << "\n";
    os << "magnitude  fidelity\n";
    char line[64];
    for (size_t i = 0; i < magnitudes.size(); ++i) {
        std::snprintf(line, sizeof(line), "%-9d  %.4f\n", magnitudes[i], fidelity[i]);
        os << line;
    }
    return os.str();
}

BenchReport bench_saliency(const std::vector<SaliencyStrategy>& strategies,
                           const ToyNet& net, const ToyNet* net_lr,
                           const Dataset& data, int repetitions) {
    if (data.size() < 10)
        throw std::invalid_argument("bench_saliency: need at least 10 images");
    if (repetitions < 3)
        throw std::invalid_argument("bench_saliency: need at least 3 repetitions");

    auto time_strategy = [&](const SaliencyStrategy& s) {
        std::vector<double> per_rep;
        for (int rep = 0; rep < repetitions; ++rep) {
            double t0 = now_seconds();
            for (const DatasetRecord& rec : data.records) {
                switch (s.variant) {
                    case SaliencyVariant::full:
                        vanilla_saliency(net, rec.image, rec.label);
                        break;
                    case SaliencyVariant::max_logit:
                        maxlogit_saliency(net, rec.image);
                        break;
                    case SaliencyVariant::low_res:
                        if (!net_lr)
                            throw std::invalid_argument("bench_saliency: low-res needs a half-resolution net");
                        lowres_saliency(*net_lr, rec.image, rec.label, s.factor);
                        break;
                    case SaliencyVariant::early_head:
                        earlyhead_saliency(net, rec.image, rec.label);
                        break;
                    case SaliencyVariant::external:
                        throw std::invalid_argument("bench_saliency: external maps have no compute cost to time");
                }
            }
            per_rep.push_back((now_seconds() - t0) / static_cast<double>(data.size()));
        }
        std::sort(per_rep.begin(), per_rep.end());
        return per_rep[per_rep.size() / 2]; // median (upper on even counts)
    };

    // Always time the baseline so speedups are well-defined.
    double full_time = time_strategy(SaliencyStrategy{SaliencyVariant::full});

    BenchReport report;
    report.images = static_cast<int>(data.size());
    report.repetitions = repetitions;
    for (const SaliencyStrategy& s : strategies) {
        BenchEntry e;
        e.strategy = saliency_variant_name(s.variant);
        e.per_image_seconds =
            (s.variant == SaliencyVariant::full) ? full_time : time_strategy(s);
        e.speedup = full_time / e.per_image_seconds;
        report.entries.push_back(e);
    }
    return report;
}

std::string BenchReport::to_json_text() const {
    json arr = json::array();
    for (const BenchEntry& e : entries)
        arr.push_back({{"strategy", e.strategy},
                       {"per_image_seconds", e.per_image_seconds},
                       {"speedup", e.speedup}});
    json j;
    j["images"] = images;
    j["repetitions"] = repetitions;
    j["strategies"] = arr;
    return j.dump();
}

std::string BenchReport::to_table() const {
    std::ostringstream os;
    os << "images: " << images << "   repetitions: " << repetitions << "\n";
    os << "strategy     per-image (ms)  speedup\n";
    char line[80];
    for (const BenchEntry& e : entries) {
        std::snprintf(line, sizeof(line), "%-11s  %14.3f  %7.2f\n", e.strategy.c_str(),
                      e.per_image_seconds * 1e3, e.speedup);
        os << line;
    }
    return os.str();
}

} // namespace keepaug
