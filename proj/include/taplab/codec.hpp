#pragma once

#include <span>
#include <vector>

#include "taplab/frame.hpp"

namespace taplab {

inline constexpr int kDefaultSearchRadius = 32;

struct BlockMatch {
  MotionField motion;
  ResidualMap residual;
};

/// Exhaustive integer-pel block matching. For every macroblock the returned
/// vector minimizes SAD over all candidates with |dx|,|dy| <= search_radius
/// whose source block lies inside the reference frame; ties prefer the
/// smallest |dx|+|dy|, then the smallest dy, then the smallest dx.
///
/// Throws std::invalid_argument on dimension mismatch or sizes that are not
/// multiples of 16.
BlockMatch block_match_encode(const FrameBuffer& current, const FrameBuffer& reference,
                              int search_radius = kDefaultSearchRadius);

/// Motion-compensated prediction plus residual:
/// out[p][c] = clamp(reference[clamp(p - Mv[p])][c] + res[p][c], 0, 255).
FrameBuffer motion_compensate_decode(const FrameBuffer& reference, const MotionField& mv,
                                     const ResidualMap& res);

/// The prediction alone (zero residual); source coordinates clamp into the frame.
FrameBuffer motion_compensate(const FrameBuffer& reference, const MotionField& mv);

/// Sum of absolute differences between the block at (bx, by) in `current`
/// and its source block displaced by `v` in `reference` (source clamped per pixel).
long block_sad(const FrameBuffer& current, const FrameBuffer& reference, int bx, int by,
               MotionVector v);

}  // namespace taplab
