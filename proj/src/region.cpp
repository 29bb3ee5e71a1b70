#include "keepaug/region.hpp"

#include <algorithm>
#include <cmath>

#include "keepaug/kernels.hpp"

namespace keepaug {

SummedAreaTable build_sat(const SaliencyMap& map, int threads) {
    SummedAreaTable sat;
    sat.height = map.height;
    sat.width = map.width;
    sat.table.resize(static_cast<size_t>(map.height + 1) * (map.width + 1));
    kernels::sat_build(map.data.data(), map.height, map.width, sat.table.data(), threads);
    return sat;
}

double region_score(const SummedAreaTable& sat, const Rect& s) {
    if (!s.contained_in(sat.height, sat.width))
        throw std::invalid_argument("region_score: rect not contained");
    int t = s.top, b = s.top + s.height;
    int l = s.left, r = s.left + s.width;
    return sat.at(b, r) - sat.at(t, r) - sat.at(b, l) + sat.at(t, l);
}

CandidateScores candidate_scores(const SaliencyMap& map, int region_h, int region_w,
                                 int stride, int threads) {
    if (region_h < 1 || region_w < 1 || region_h > map.height || region_w > map.width)
        throw std::invalid_argument("candidate_scores: region must fit inside the map");
    if (stride < 1)
        throw std::invalid_argument("candidate_scores: stride must be >= 1");

    SummedAreaTable sat = build_sat(map, threads);

    CandidateScores cs;
    cs.region_h = region_h;
    cs.region_w = region_w;
    cs.stride = stride;
    cs.grid_h = (map.height - region_h) / stride + 1;
    cs.grid_w = (map.width - region_w) / stride + 1;
    cs.scores.resize(static_cast<size_t>(cs.grid_h) * cs.grid_w);
    kernels::window_sums(sat.table.data(), map.height, map.width, region_h, region_w,
                         stride, cs.grid_h, cs.grid_w, cs.scores.data(), threads);
    return cs;
}

double quantile_threshold(CandidateScores& scores, double tau) {
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("quantile_threshold: tau must be in (0,1)");
    if (scores.scores.empty())
        throw std::invalid_argument("quantile_threshold: no candidates");
    std::vector<double> sorted = scores.scores;
    std::sort(sorted.begin(), sorted.end());
    size_t n = sorted.size();
    size_t rank = static_cast<size_t>(std::ceil(tau * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    scores.threshold = sorted[rank - 1];
    scores.threshold_set = true;
    return scores.threshold;
}

namespace {

template <class Pred>
Rect sample_filtered(const CandidateScores& scores, RngStream& rng, Pred accept, const char* op) {
    if (!scores.threshold_set)
        throw std::logic_error(std::string(op) + ": threshold not set");
    size_t eligible = 0;
    for (double s : scores.scores)
        if (accept(s)) ++eligible;
    if (eligible == 0)
        throw std::logic_error(std::string(op) + ": empty accept set"); // unreachable by construction
    uint64_t pick = rng.next_below(eligible);
    for (size_t idx = 0; idx < scores.scores.size(); ++idx) {
        if (!accept(scores.scores[idx])) continue;
        if (pick == 0) return scores.rect_at(idx);
        --pick;
    }
    throw std::logic_error(std::string(op) + ": selection overran accept set");
}

} // namespace

Rect sample_low_region(const CandidateScores& scores, RngStream& rng) {
    double thr = scores.threshold;
    return sample_filtered(scores, rng, [thr](double s) { return s <= thr; }, "sample_low_region");
}

Rect sample_high_region(const CandidateScores& scores, RngStream& rng) {
    double thr = scores.threshold;
    return sample_filtered(scores, rng, [thr](double s) { return s >= thr; }, "sample_high_region");
}

} // namespace keepaug
