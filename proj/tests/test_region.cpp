#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "keepaug/region.hpp"

using namespace keepaug;
using keepaug::test::random_map;

namespace {

// Naive double-loop region sum, the oracle for every SAT-based score.
double naive_region_sum(const SaliencyMap& map, const Rect& s) {
    double acc = 0.0;
    for (int i = s.top; i < s.top + s.height; ++i)
        for (int j = s.left; j < s.left + s.width; ++j)
            acc += map.at(i, j);
    return acc;
}

// Second nearest-rank implementation via nth_element.
double nearest_rank_oracle(std::vector<double> values, double tau) {
    size_t n = values.size();
    size_t rank = static_cast<size_t>(std::ceil(tau * static_cast<double>(n)));
    std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
    return values[rank - 1];
}

SaliencyMap hot_block_map(int size, int top, int left, double background = 0.0) {
    SaliencyMap map(size, size, background);
    for (int i = top; i < top + 4; ++i)
        for (int j = left; j < left + 4; ++j) map.at(i, j) = 1.0;
    return map;
}

bool overlaps(const Rect& a, int top, int left, int h, int w) {
    return a.top < top + h && top < a.top + a.height &&
           a.left < left + w && left < a.left + a.width;
}

} // namespace

TEST_CASE("build_sat hand example and zero map") {
    SaliencyMap map(2, 2);
    map.at(0, 0) = 1;
    map.at(0, 1) = 2;
    map.at(1, 0) = 3;
    map.at(1, 1) = 4;
    SummedAreaTable sat = build_sat(map);
    CHECK(sat.at(1, 1) == 1.0);
    CHECK(sat.at(1, 2) == 3.0);
    CHECK(sat.at(2, 1) == 4.0);
    CHECK(sat.at(2, 2) == 10.0);
    for (int j = 0; j <= 2; ++j) CHECK(sat.at(0, j) == 0.0);
    for (int i = 0; i <= 2; ++i) CHECK(sat.at(i, 0) == 0.0);

    SaliencyMap zero(5, 4, 0.0);
    SummedAreaTable zsat = build_sat(zero);
    for (double v : zsat.table) CHECK(v == 0.0);
}

TEST_CASE("region_score equals naive sums") {
    SaliencyMap uniform(8, 8, 1.0);
    SummedAreaTable sat = build_sat(uniform);
    CHECK(region_score(sat, Rect{2, 3, 4, 4}) == doctest::Approx(16.0));

    SaliencyMap hot(6, 6, 0.0);
    hot.at(3, 2) = 5.0;
    SummedAreaTable hsat = build_sat(hot);
    CHECK(region_score(hsat, Rect{2, 1, 3, 3}) == doctest::Approx(5.0));
    CHECK(region_score(hsat, Rect{0, 0, 2, 2}) == doctest::Approx(0.0));

    RngStream rng(1, 0);
    for (int trial = 0; trial < 50; ++trial) {
        SaliencyMap map = random_map(rng, 16, 16);
        SummedAreaTable s = build_sat(map);
        Rect r{static_cast<int>(rng.next_below(12)), static_cast<int>(rng.next_below(12)), 0, 0};
        r.height = 1 + static_cast<int>(rng.next_below(16 - r.top));
        r.width = 1 + static_cast<int>(rng.next_below(16 - r.left));
        double naive = naive_region_sum(map, r);
        CHECK(region_score(s, r) == doctest::Approx(naive).epsilon(1e-4));
    }

    CHECK_THROWS_AS(region_score(sat, Rect{6, 6, 4, 4}), std::invalid_argument);
}

TEST_CASE("candidate_scores covers exactly the contained placements") {
    RngStream rng4(2, 0);
    SaliencyMap map4 = random_map(rng4, 4, 4);
    CandidateScores one = candidate_scores(map4, 4, 4);
    CHECK(one.count() == 1);
    double total = 0.0;
    for (double v : map4.data) total += v;
    CHECK(one.score_at(0) == doctest::Approx(total).epsilon(1e-9));

    RngStream rng(3, 0);
    SaliencyMap map8 = random_map(rng, 8, 8);
    CandidateScores cs = candidate_scores(map8, 4, 4, 1);
    CHECK(cs.count() == 25);
    for (size_t idx = 0; idx < cs.count(); ++idx) {
        Rect r = cs.rect_at(idx);
        CHECK(cs.score_at(idx) == doctest::Approx(naive_region_sum(map8, r)).epsilon(1e-6));
    }

    CandidateScores strided = candidate_scores(map8, 4, 4, 2);
    CHECK(strided.grid_h == 3);
    CHECK(strided.grid_w == 3);
    CHECK(strided.rect_at(4) == Rect{2, 2, 4, 4});

    CHECK_THROWS_AS(candidate_scores(map8, 9, 4), std::invalid_argument);
}

TEST_CASE("quantile_threshold nearest-rank") {
    CandidateScores cs;
    cs.region_h = cs.region_w = 1;
    cs.grid_h = 1;
    cs.grid_w = 5;
    cs.scores = {5, 1, 4, 2, 3}; // unsorted on purpose
    CHECK(quantile_threshold(cs, 0.6) == 3.0);
    CHECK(cs.threshold_set);

    cs.scores = {7, 7, 7, 7};
    CHECK(quantile_threshold(cs, 0.3) == 7.0);

    CHECK_THROWS_AS(quantile_threshold(cs, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(quantile_threshold(cs, 1.0), std::invalid_argument);

    RngStream rng(4, 0);
    std::vector<double> values(1000);
    for (double& v : values) v = rng.next_double();
    cs.scores = values;
    CHECK(quantile_threshold(cs, 0.6) == nearest_rank_oracle(values, 0.6));
}

TEST_CASE("samplers respect the threshold over random maps") {
    RngStream rng(5, 0);
    for (int trial = 0; trial < 200; ++trial) {
        int size = 6 + static_cast<int>(rng.next_below(10));
        SaliencyMap map = random_map(rng, size, size);
        int region = 1 + static_cast<int>(rng.next_below(size));
        CandidateScores cs = candidate_scores(map, region, region);
        quantile_threshold(cs, 0.6);
        SummedAreaTable sat = build_sat(map);
        for (int d = 0; d < 5; ++d) {
            Rect lo = sample_low_region(cs, rng);
            Rect hi = sample_high_region(cs, rng);
            CHECK(region_score(sat, lo) <= cs.threshold);
            CHECK(region_score(sat, hi) >= cs.threshold);
        }
    }
}

TEST_CASE("threshold is monotone in tau") {
    RngStream rng(6, 0);
    for (int trial = 0; trial < 100; ++trial) {
        SaliencyMap map = random_map(rng, 12, 12);
        CandidateScores cs = candidate_scores(map, 3, 3);
        double prev = -1.0;
        for (double tau : {0.2, 0.4, 0.6, 0.8}) {
            double thr = quantile_threshold(cs, tau);
            CHECK(thr >= prev);
            prev = thr;
        }
    }
}

TEST_CASE("uniform map: low sampler is uniform over placements") {
    SaliencyMap map(8, 8, 1.0);
    CandidateScores cs = candidate_scores(map, 4, 4);
    quantile_threshold(cs, 0.6);
    RngStream rng(7, 0);
    const int draws = 10000;
    std::vector<int> counts(cs.count(), 0);
    for (int d = 0; d < draws; ++d) {
        Rect r = sample_low_region(cs, rng);
        ++counts[static_cast<size_t>(r.top) * cs.grid_w + r.left];
    }
    double expected = static_cast<double>(draws) / cs.count();
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // df = 24, 99.9% critical value ~ 51.2
    CHECK(chi2 < 51.2);

    // high sampler sees the same accept set on a constant map
    std::vector<int> hi_counts(cs.count(), 0);
    for (int d = 0; d < draws; ++d) {
        Rect r = sample_high_region(cs, rng);
        ++hi_counts[static_cast<size_t>(r.top) * cs.grid_w + r.left];
    }
    double chi2_hi = 0.0;
    for (int c : hi_counts) chi2_hi += (c - expected) * (c - expected) / expected;
    CHECK(chi2_hi < 51.2);
}

TEST_CASE("hot block on a 12x12 map is never drawn by the low sampler") {
    // Block at (1,1): 25 of 81 placements touch it, 56 (69%) miss it, so the
    // 0.6-quantile threshold is 0 and every accepted placement misses.
    SaliencyMap map = hot_block_map(12, 1, 1);
    CandidateScores cs = candidate_scores(map, 4, 4);
    CHECK(cs.count() == 81);
    double thr = quantile_threshold(cs, 0.6);
    CHECK(thr == 0.0);

    SummedAreaTable sat = build_sat(map);
    CHECK(region_score(sat, Rect{1, 1, 4, 4}) == doctest::Approx(16.0));
    CHECK(region_score(sat, Rect{1, 1, 4, 4}) > thr);

    RngStream rng(8, 0);
    for (int d = 0; d < 1000; ++d) {
        Rect r = sample_low_region(cs, rng);
        CHECK_FALSE(overlaps(r, 1, 1, 4, 4));
    }
}

TEST_CASE("high sampler sticks to the hot block when tau is high") {
    SaliencyMap map = hot_block_map(12, 4, 4);
    CandidateScores cs = candidate_scores(map, 4, 4);
    quantile_threshold(cs, 0.9);
    CHECK(cs.threshold > 0.0);
    RngStream rng(9, 0);
    for (int d = 0; d < 1000; ++d) {
        Rect r = sample_high_region(cs, rng);
        CHECK(overlaps(r, 4, 4, 4, 4));
    }
}

TEST_CASE("single candidate is always returned") {
    RngStream rng(10, 0);
    SaliencyMap map = random_map(rng, 5, 6);
    CandidateScores cs = candidate_scores(map, 5, 6);
    quantile_threshold(cs, 0.6);
    for (int d = 0; d < 10; ++d) {
        CHECK(sample_low_region(cs, rng) == Rect{0, 0, 5, 6});
        CHECK(sample_high_region(cs, rng) == Rect{0, 0, 5, 6});
    }
}

TEST_CASE("auto stride switches to 2 above 64 px") {
    CHECK(auto_stride(64, 64) == 1);
    CHECK(auto_stride(8, 8) == 1);
    CHECK(auto_stride(65, 64) == 2);
    CHECK(auto_stride(32, 96) == 2);
}

TEST_CASE("samplers demand a threshold") {
    SaliencyMap map(4, 4, 1.0);
    CandidateScores cs = candidate_scores(map, 2, 2);
    RngStream rng(11, 0);
    CHECK_THROWS_AS(sample_low_region(cs, rng), std::logic_error);
    CHECK_THROWS_AS(sample_high_region(cs, rng), std::logic_error);
}

TEST_CASE("positive rescaling leaves accept sets unchanged") {
    // Powers of two scale doubles exactly, so the comparison is exact.
    RngStream rng(12, 0);
    for (double scale : {0.25, 4.0, 1024.0}) {
        SaliencyMap map = random_map(rng, 10, 10);
        SaliencyMap scaled(10, 10);
        for (size_t i = 0; i < map.data.size(); ++i) scaled.data[i] = map.data[i] * scale;

        CandidateScores a = candidate_scores(map, 3, 3);
        CandidateScores b = candidate_scores(scaled, 3, 3);
        quantile_threshold(a, 0.6);
        quantile_threshold(b, 0.6);
        for (size_t idx = 0; idx < a.count(); ++idx) {
            CHECK((a.score_at(idx) <= a.threshold) == (b.score_at(idx) <= b.threshold));
            CHECK((a.score_at(idx) >= a.threshold) == (b.score_at(idx) >= b.threshold));
        }
    }
}

TEST_CASE("argmax placement is excluded from the low accept set when strictly above threshold") {
    RngStream rng(13, 0);
    for (int trial = 0; trial < 100; ++trial) {
        SaliencyMap map = random_map(rng, 9, 9);
        CandidateScores cs = candidate_scores(map, 3, 3);
        quantile_threshold(cs, 0.6);
        size_t best = 0;
        for (size_t i = 1; i < cs.count(); ++i)
            if (cs.score_at(i) > cs.score_at(best)) best = i;
        if (cs.score_at(best) > cs.threshold) {
            Rect best_rect = cs.rect_at(best);
            for (int d = 0; d < 10; ++d) CHECK_FALSE(sample_low_region(cs, rng) == best_rect);
        }
    }
}
