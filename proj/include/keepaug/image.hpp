#ifndef KEEPAUG_IMAGE_HPP
#define KEEPAUG_IMAGE_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace keepaug {

// Dense H x W x C image, row-major, channel-fastest, values nominally in [0,1].
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0);

    double& at(int i, int j, int c) { return data[(static_cast<size_t>(i) * width + j) * channels + c]; }
    double at(int i, int j, int c) const { return data[(static_cast<size_t>(i) * width + j) * channels + c]; }

    size_t size() const { return data.size(); }
    bool same_dims(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    // Throws if dims are non-positive, the buffer length is wrong, or any value is non-finite.
    void check_valid(const std::string& what = "image") const;
};

// Axis-aligned rectangle, fully contained in the image it is used with.
// Stands in for the binary mask of the region; the mask is never materialized.
struct Rect {
    int top = 0;
    int left = 0;
    int height = 0;
    int width = 0;

    bool contained_in(int image_h, int image_w) const {
        return top >= 0 && left >= 0 && height > 0 && width > 0 &&
               top + height <= image_h && left + width <= image_w;
    }
    bool contains(int i, int j) const {
        return i >= top && i < top + height && j >= left && j < left + width;
    }
    long long area() const { return static_cast<long long>(height) * width; }
    bool operator==(const Rect& o) const = default;
};

// Per-pixel non-negative importance field. Dims match the image it describes.
struct SaliencyMap {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    SaliencyMap() = default;
    SaliencyMap(int h, int w, double fill = 0.0);

    double& at(int i, int j) { return data[static_cast<size_t>(i) * width + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * width + j]; }

    void check_valid(const std::string& what = "saliency map") const;
};

// Deterministic counter-based RNG (splitmix64 core). Identical (seed, stream_id)
// pairs yield identical draw sequences on every platform; std distributions are
// avoided on purpose since their outputs are not pinned by the standard.
struct RngStream {
    uint64_t seed = 0;
    uint64_t stream_id = 0;

    RngStream(uint64_t seed_, uint64_t stream_id_);

    // Per-image stream: stream-id derived as seed XOR image index.
    static RngStream for_image(uint64_t seed, uint64_t image_index) {
        return RngStream(seed, seed ^ image_index);
    }

    uint64_t next_u64();
    double next_double();                    // uniform [0,1)
    uint64_t next_below(uint64_t n);         // uniform [0,n), unbiased
    double next_range(double lo, double hi); // uniform [lo,hi)
    int next_sign();                         // -1 or +1
    double next_normal();                    // standard normal, Box-Muller

private:
    uint64_t state_;
};

// Region primitives (pure functions; inputs are never mutated).

// Zero out region s; everything outside is copied through.
Image cut_zero(const Image& image, const Rect& s);

// Replace region s with i.i.d. uniform [0,1) draws from rng.
Image cut_random(const Image& image, const Rect& s, RngStream& rng);

// target outside s, source inside s; exact copies, no blending.
Image paste_region(const Image& source, const Image& target, const Rect& s);

// Catmull-Rom bicubic (a = -0.5), edge-clamped sampling, output clamped to [0,1].
Image resize_bicubic(const Image& image, int out_h, int out_w, int threads = 1);

// Nearest-neighbor upscale/downscale of a saliency map; preserves non-negativity.
SaliencyMap upscale_nearest(const SaliencyMap& map, int out_h, int out_w);

} // namespace keepaug

#endif
