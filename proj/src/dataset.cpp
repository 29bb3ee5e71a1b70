#include "keepaug/dataset.hpp"

namespace keepaug {

Dataset make_synthetic(int n, int size, RngStream& rng, SyntheticMeta* meta) {
    if (size < 8)
        throw std::invalid_argument("make_synthetic: size must be >= 8");
    if (n < 1)
        throw std::invalid_argument("make_synthetic: n must be >= 1");

    constexpr int kPatch = 4;
    Dataset data;
    data.num_classes = 2;
    data.records.reserve(n);
    if (meta) meta->patch.clear();

    for (int idx = 0; idx < n; ++idx) {
        DatasetRecord rec;
        rec.index = static_cast<uint64_t>(idx);
        rec.label = idx % 2; // alternating keeps the balance at n/2 +- 1
        rec.image = Image(size, size, 3);
        for (double& v : rec.image.data) v = rng.next_range(0.0, 0.2);
        if (rec.label == 1) {
            int top = static_cast<int>(rng.next_below(size - kPatch + 1));
            int left = static_cast<int>(rng.next_below(size - kPatch + 1));
            Rect patch{top, left, kPatch, kPatch};
            for (int i = top; i < top + kPatch; ++i)
                for (int j = left; j < left + kPatch; ++j)
                    for (int c = 0; c < 3; ++c)
                        rec.image.at(i, j, c) = rng.next_range(0.9, 1.0);
            if (meta) meta->patch.push_back(patch);
        } else if (meta) {
            meta->patch.push_back(std::nullopt);
        }
        data.records.push_back(std::move(rec));
    }
    return data;
}

} // namespace keepaug
