#ifndef KEEPAUG_REGION_HPP
#define KEEPAUG_REGION_HPP

#include <vector>

#include "keepaug/image.hpp"

namespace keepaug {

// Cumulative sums of a saliency map, zero-padded first row/column.
// region_sum over rows [t,b), cols [l,r) is T[b][r] - T[t][r] - T[b][l] + T[t][l].
struct SummedAreaTable {
    int height = 0; // of the underlying map
    int width = 0;
    std::vector<double> table; // (height+1) x (width+1)

    double at(int i, int j) const { return table[static_cast<size_t>(i) * (width + 1) + j]; }
};

// Importance score of every contained h x w placement at a fixed stride,
// plus the adaptive threshold once quantile_threshold has filled it.
struct CandidateScores {
    int region_h = 0;
    int region_w = 0;
    int stride = 1;
    int grid_h = 0;
    int grid_w = 0;
    std::vector<double> scores; // grid_h x grid_w, row-major
    double threshold = 0.0;
    bool threshold_set = false;

    size_t count() const { return scores.size(); }
    double score_at(size_t idx) const { return scores[idx]; }
    Rect rect_at(size_t idx) const {
        int gi = static_cast<int>(idx) / grid_w;
        int gj = static_cast<int>(idx) % grid_w;
        return Rect{gi * stride, gj * stride, region_h, region_w};
    }
};

SummedAreaTable build_sat(const SaliencyMap& map, int threads = 1);

// Exact sum of the map over s, O(1) from the table.
double region_score(const SummedAreaTable& sat, const Rect& s);

CandidateScores candidate_scores(const SaliencyMap& map, int region_h, int region_w,
                                 int stride = 1, int threads = 1);

// Nearest-rank quantile: ascending sort, element at index ceil(tau*N) - 1.
// Stores the value into scores.threshold and returns it.
double quantile_threshold(CandidateScores& scores, double tau);

// Uniform draw over candidates with score <= threshold. The nearest-rank
// construction guarantees the accept set is non-empty, so this always
// terminates, unlike a literal rejection loop on a degenerate map.
Rect sample_low_region(const CandidateScores& scores, RngStream& rng);

// Uniform draw over candidates with score >= threshold (the max always qualifies).
Rect sample_high_region(const CandidateScores& scores, RngStream& rng);

// Stride rule used when a config leaves stride = 0 (auto).
inline int auto_stride(int h, int w) { return (h > 64 || w > 64) ? 2 : 1; }

} // namespace keepaug

#endif
