#ifndef KEEPAUG_POLICY_HPP
#define KEEPAUG_POLICY_HPP

#include <string>
#include <vector>

#include "keepaug/image.hpp"

namespace keepaug {

enum class PolicyOp {
    identity,
    horizontal_flip,
    rotate,
    translate,
    solarize,
    posterize,
    invert,
    brightness,
    contrast,
};

PolicyOp policy_op_from_name(const std::string& name);
std::string policy_op_name(PolicyOp op);
const std::vector<PolicyOp>& all_policy_ops();

// Image-level transform pool. Every op maps [0,1] images to [0,1] images of
// identical dims; magnitude 0..30 scales linearly into each op's range:
//   rotate      0 -> 0 deg,  30 -> 30 deg
//   translate   0 -> 0 px,   30 -> floor(W/3) px (random axis, random sign)
//   solarize    threshold 1 - m/30
//   posterize   bits 8 - floor(m*6/30)
//   brightness / contrast   factor 1 +- m/30 (random sign)
struct TransformPolicy {
    std::vector<PolicyOp> ops = all_policy_ops();
    int n_ops = 3;
    int magnitude = 15;
};

// One applied op with its drawn parameters resolved, enough to replay the
// transform without the rng (sidecar logging + reconstruction tests).
struct ResolvedOp {
    PolicyOp op = PolicyOp::identity;
    double angle_deg = 0.0; // rotate
    int dx = 0, dy = 0;     // translate
    double threshold = 0.0; // solarize
    int bits = 8;           // posterize
    double factor = 1.0;    // brightness / contrast
};

// Draws n_ops ops uniformly with replacement (plus their sign/axis choices)
// and applies them in order. The resolved sequence is appended to `applied`
// when it is non-null.
Image apply_policy(const Image& image, const TransformPolicy& policy, RngStream& rng,
                   std::vector<ResolvedOp>* applied = nullptr);

// Deterministic replay of a resolved sequence.
Image apply_resolved(const Image& image, const std::vector<ResolvedOp>& ops);
Image apply_resolved_op(const Image& image, const ResolvedOp& op);

} // namespace keepaug

#endif
