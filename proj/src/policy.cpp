#include "keepaug/policy.hpp"

#include <algorithm>
#include <cmath>

namespace keepaug {

namespace {

const char* kOpNames[] = {"identity", "horizontal-flip", "rotate",   "translate", "solarize",
                          "posterize", "invert",          "brightness", "contrast"};

Image horizontal_flip(const Image& in) {
    Image out(in.height, in.width, in.channels);
    for (int i = 0; i < in.height; ++i)
        for (int j = 0; j < in.width; ++j)
            for (int c = 0; c < in.channels; ++c)
                out.at(i, j, c) = in.at(i, in.width - 1 - j, c);
    return out;
}

// Bilinear sample with zero fill outside the image.
double sample_bilinear(const Image& in, double y, double x, int c) {
    int y0 = static_cast<int>(std::floor(y));
    int x0 = static_cast<int>(std::floor(x));
    double fy = y - y0, fx = x - x0;
    double acc = 0.0;
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
            int yi = y0 + dy, xi = x0 + dx;
            if (yi < 0 || yi >= in.height || xi < 0 || xi >= in.width) continue;
            double w = (dy ? fy : 1.0 - fy) * (dx ? fx : 1.0 - fx);
            acc += w * in.at(yi, xi, c);
        }
    return acc;
}

Image rotate(const Image& in, double angle_deg) {
    double a = angle_deg * M_PI / 180.0;
    double ca = std::cos(a), sa = std::sin(a);
    double cy = (in.height - 1) / 2.0, cx = (in.width - 1) / 2.0;
    Image out(in.height, in.width, in.channels);
    for (int i = 0; i < in.height; ++i)
        for (int j = 0; j < in.width; ++j) {
            // inverse map: rotate output coords by -angle about the center
            double dy = i - cy, dx = j - cx;
            double sy = cy + ca * dy + sa * dx;
            double sx = cx - sa * dy + ca * dx;
            for (int c = 0; c < in.channels; ++c)
                out.at(i, j, c) = std::clamp(sample_bilinear(in, sy, sx, c), 0.0, 1.0);
        }
    return out;
}

Image translate(const Image& in, int dx, int dy) {
    Image out(in.height, in.width, in.channels);
    for (int i = 0; i < in.height; ++i)
        for (int j = 0; j < in.width; ++j) {
            int si = i - dy, sj = j - dx;
            bool inside = si >= 0 && si < in.height && sj >= 0 && sj < in.width;
            for (int c = 0; c < in.channels; ++c)
                out.at(i, j, c) = inside ? in.at(si, sj, c) : 0.0;
        }
    return out;
}

Image map_values(const Image& in, auto f) {
    Image out = in;
    for (double& v : out.data) v = std::clamp(f(v), 0.0, 1.0);
    return out;
}

Image posterize(const Image& in, int bits) {
    int shift = 8 - bits;
    int mask = ~((1 << shift) - 1) & 0xFF;
    return map_values(in, [&](double v) {
        int u = static_cast<int>(std::floor(v * 255.0 + 0.5));
        u = std::clamp(u, 0, 255) & mask;
        return u / 255.0;
    });
}

} // namespace

PolicyOp policy_op_from_name(const std::string& name) {
    for (size_t i = 0; i < std::size(kOpNames); ++i)
        if (name == kOpNames[i]) return static_cast<PolicyOp>(i);
    throw std::invalid_argument("unknown policy op: " + name);
}

std::string policy_op_name(PolicyOp op) {
    return kOpNames[static_cast<size_t>(op)];
}

const std::vector<PolicyOp>& all_policy_ops() {
    static const std::vector<PolicyOp> ops = [] {
        std::vector<PolicyOp> v;
        for (size_t i = 0; i < std::size(kOpNames); ++i) v.push_back(static_cast<PolicyOp>(i));
        return v;
    }();
    return ops;
}

Image apply_resolved_op(const Image& image, const ResolvedOp& r) {
    switch (r.op) {
        case PolicyOp::identity: return image;
        case PolicyOp::horizontal_flip: return horizontal_flip(image);
        case PolicyOp::rotate: return rotate(image, r.angle_deg);
        case PolicyOp::translate: return translate(image, r.dx, r.dy);
        case PolicyOp::solarize:
            return map_values(image, [&](double v) { return v >= r.threshold ? 1.0 - v : v; });
        case PolicyOp::posterize: return posterize(image, r.bits);
        case PolicyOp::invert: return map_values(image, [](double v) { return 1.0 - v; });
        case PolicyOp::brightness:
            return map_values(image, [&](double v) { return v * r.factor; });
        case PolicyOp::contrast:
            return map_values(image, [&](double v) { return 0.5 + r.factor * (v - 0.5); });
    }
    throw std::logic_error("apply_resolved_op: bad op");
}

Image apply_resolved(const Image& image, const std::vector<ResolvedOp>& ops) {
    Image out = image;
    for (const ResolvedOp& r : ops) out = apply_resolved_op(out, r);
    return out;
}

Image apply_policy(const Image& image, const TransformPolicy& policy, RngStream& rng,
                   std::vector<ResolvedOp>* applied) {
    if (policy.ops.empty())
        throw std::invalid_argument("apply_policy: empty op set");
    if (policy.magnitude < 0 || policy.magnitude > 30)
        throw std::invalid_argument("apply_policy: magnitude must be 0..30");
    if (policy.n_ops < 0)
        throw std::invalid_argument("apply_policy: n_ops must be >= 0");

    double m = policy.magnitude / 30.0;
    Image out = image;
    for (int k = 0; k < policy.n_ops; ++k) {
        PolicyOp op = policy.ops[rng.next_below(policy.ops.size())];
        ResolvedOp r;
        r.op = op;
        switch (op) {
            case PolicyOp::rotate:
                r.angle_deg = rng.next_sign() * (m * 30.0);
                break;
            case PolicyOp::translate: {
                int d = static_cast<int>(std::lround(m * (image.width / 3)));
                int v = rng.next_sign() * d;
                if (rng.next_below(2) == 0) r.dx = v; else r.dy = v;
                break;
            }
            case PolicyOp::solarize:
                r.threshold = 1.0 - m;
                break;
            case PolicyOp::posterize:
                r.bits = 8 - (policy.magnitude * 6) / 30;
                break;
            case PolicyOp::brightness:
            case PolicyOp::contrast:
                r.factor = 1.0 + rng.next_sign() * m;
                break;
            default:
                break;
        }
        out = apply_resolved_op(out, r);
        if (applied) applied->push_back(r);
    }
    return out;
}

} // namespace keepaug
