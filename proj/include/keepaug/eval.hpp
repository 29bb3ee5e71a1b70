#ifndef KEEPAUG_EVAL_HPP
#define KEEPAUG_EVAL_HPP

#include <functional>
#include <string>
#include <vector>

#include "keepaug/augment.hpp"
#include "keepaug/dataset.hpp"
#include "keepaug/toynet.hpp"

namespace keepaug {

// Stochastic augmentation under test: record in, augmented image out. The
// rng handed in is derived from (seed, record index, trial), so the metric
// does not depend on dataset ordering or on how trials are grouped.
using AugmentFn = std::function<Image(const DatasetRecord&, RngStream&)>;

struct FidelityReport {
    std::string augmentation;
    std::vector<int> magnitudes;
    std::vector<double> fidelity; // one value per magnitude, each in [0,1]
    int trials = 0;
    double oracle_clean_accuracy = 0.0;

    std::string to_json_text() const;
    std::string to_table() const;
};

// Fraction of (example, trial) pairs where the oracle's argmax prediction on
// the augmented image matches its prediction on the original.
double fidelity(const ToyNet& oracle, const Dataset& data, const AugmentFn& augment,
                int trials, uint64_t seed, int threads = 1);

// Fidelity per magnitude. For cutout/erase modes the magnitude is the cut
// length; for policy-based modes it is the policy distortion magnitude.
// Keep-* modes compute saliency with the oracle itself (full gradients).
FidelityReport fidelity_sweep(const ToyNet& oracle, const Dataset& data, AugmentMode mode,
                              const std::vector<int>& magnitudes, int trials, uint64_t seed,
                              const AugmentConfig& base_cfg = {}, int threads = 1);

struct BenchEntry {
    std::string strategy;
    double per_image_seconds = 0.0; // median over repetitions
    double speedup = 0.0;           // full-resolution time / this time
};

struct BenchReport {
    std::vector<BenchEntry> entries;
    int images = 0;
    int repetitions = 0;

    std::string to_json_text() const;
    std::string to_table() const;
};

// Wall-clock comparison of saliency strategies, strictly single-threaded.
// The full-resolution strategy is always timed as the speedup baseline.
// net_lr (half-resolution input dims) is required only when low-res is
// among the strategies; labels come from the dataset records.
BenchReport bench_saliency(const std::vector<SaliencyStrategy>& strategies,
                           const ToyNet& net, const ToyNet* net_lr,
                           const Dataset& data, int repetitions);

} // namespace keepaug

#endif
