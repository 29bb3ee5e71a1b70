#ifndef KEEPAUG_DATASET_HPP
#define KEEPAUG_DATASET_HPP

#include <optional>
#include <vector>

#include "keepaug/image.hpp"

namespace keepaug {

struct DatasetRecord {
    Image image;
    int label = 0;
    // Stable dataset index (file order / generation order). Per-image RNG
    // streams key off this, so batch permutations cannot change results.
    uint64_t index = 0;
};

struct Dataset {
    std::vector<DatasetRecord> records;
    int num_classes = 0;

    size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

// Per-record generation metadata for the synthetic set; class-0 records
// have no patch.
struct SyntheticMeta {
    std::vector<std::optional<Rect>> patch;
};

// Two-class desk-scale set: class 1 carries one bright 4x4 patch
// (values 0.9-1.0) at a random contained position over low-amplitude
// noise in [0, 0.2); class 0 is pure background. Linearly separable by
// construction. size is the square image side (>= 8), channels = 3.
Dataset make_synthetic(int n, int size, RngStream& rng, SyntheticMeta* meta = nullptr);

} // namespace keepaug

#endif
