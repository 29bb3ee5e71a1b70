#include "keepaug/image.hpp"

#include <cmath>

#include "keepaug/kernels.hpp"

namespace keepaug {

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c),
      data(static_cast<size_t>(h) * w * c, fill) {
    if (h <= 0 || w <= 0 || c <= 0)
        throw std::invalid_argument("image dims must be positive");
}

void Image::check_valid(const std::string& what) const {
    if (height <= 0 || width <= 0 || channels <= 0)
        throw std::invalid_argument(what + ": dims must be positive");
    if (data.size() != static_cast<size_t>(height) * width * channels)
        throw std::invalid_argument(what + ": data length != H*W*C");
    for (double v : data)
        if (!std::isfinite(v))
            throw std::invalid_argument(what + ": non-finite value");
}

SaliencyMap::SaliencyMap(int h, int w, double fill)
    : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {
    if (h <= 0 || w <= 0)
        throw std::invalid_argument("saliency map dims must be positive");
}

void SaliencyMap::check_valid(const std::string& what) const {
    if (height <= 0 || width <= 0)
        throw std::invalid_argument(what + ": dims must be positive");
    if (data.size() != static_cast<size_t>(height) * width)
        throw std::invalid_argument(what + ": data length != H*W");
    for (double v : data)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument(what + ": values must be finite and >= 0");
}

namespace {

constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void require_contained(const Rect& s, const Image& image, const char* op) {
    if (!s.contained_in(image.height, image.width))
        throw std::invalid_argument(std::string(op) + ": rect not contained in image");
}

} // namespace

RngStream::RngStream(uint64_t seed_, uint64_t stream_id_)
    : seed(seed_), stream_id(stream_id_),
      state_(mix64(seed_) ^ mix64(stream_id_ + kGamma)) {}

uint64_t RngStream::next_u64() {
    state_ += kGamma;
    return mix64(state_);
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t RngStream::next_below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below: n must be > 0");
    // Lemire multiply-shift with rejection of the biased fringe.
    uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    uint64_t lo = static_cast<uint64_t>(m);
    if (lo < n) {
        uint64_t threshold = (0 - n) % n;
        while (lo < threshold) {
            x = next_u64();
            m = static_cast<__uint128_t>(x) * n;
            lo = static_cast<uint64_t>(m);
        }
    }
    return static_cast<uint64_t>(m >> 64);
}

double RngStream::next_range(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

int RngStream::next_sign() {
    return (next_u64() & 1) ? 1 : -1;
}

double RngStream::next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * M_PI * u2);
}

Image cut_zero(const Image& image, const Rect& s) {
    require_contained(s, image, "cut_zero");
    Image out = image;
    for (int i = s.top; i < s.top + s.height; ++i)
        for (int j = s.left; j < s.left + s.width; ++j)
            for (int c = 0; c < out.channels; ++c)
                out.at(i, j, c) = 0.0;
    return out;
}

Image cut_random(const Image& image, const Rect& s, RngStream& rng) {
    require_contained(s, image, "cut_random");
    Image out = image;
    for (int i = s.top; i < s.top + s.height; ++i)
        for (int j = s.left; j < s.left + s.width; ++j)
            for (int c = 0; c < out.channels; ++c)
                out.at(i, j, c) = rng.next_double();
    return out;
}

Image paste_region(const Image& source, const Image& target, const Rect& s) {
    if (!source.same_dims(target))
        throw std::invalid_argument("paste_region: source/target dims differ");
    require_contained(s, source, "paste_region");
    Image out = target;
    for (int i = s.top; i < s.top + s.height; ++i)
        for (int j = s.left; j < s.left + s.width; ++j)
            for (int c = 0; c < out.channels; ++c)
                out.at(i, j, c) = source.at(i, j, c);
    return out;
}

Image resize_bicubic(const Image& image, int out_h, int out_w, int threads) {
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("resize_bicubic: output dims must be >= 1");
    Image out(out_h, out_w, image.channels);
    kernels::bicubic_resize(image.data.data(), image.height, image.width,
                            image.channels, out.data.data(), out_h, out_w, threads);
    return out;
}

SaliencyMap upscale_nearest(const SaliencyMap& map, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("upscale_nearest: output dims must be >= 1");
    SaliencyMap out(out_h, out_w);
    for (int i = 0; i < out_h; ++i) {
        int si = static_cast<int>((i + 0.5) * map.height / out_h);
        si = std::min(si, map.height - 1);
        for (int j = 0; j < out_w; ++j) {
            int sj = static_cast<int>((j + 0.5) * map.width / out_w);
            sj = std::min(sj, map.width - 1);
            out.at(i, j) = map.at(si, sj);
        }
    }
    return out;
}

} // namespace keepaug
