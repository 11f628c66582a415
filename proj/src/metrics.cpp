#include "stag/metrics.hpp"

namespace stag {

int horizon_frames(double seconds, double fps, Index length) {
  const long frames = std::lround(seconds * fps);
  if (frames < 1) throw ShapeError("horizon shorter than one frame");
  if (frames > length)
    throw ShapeError("horizon of " + std::to_string(seconds) + " s exceeds the " +
                     std::to_string(length) + "-frame prediction");
  return static_cast<int>(frames);
}

}  // namespace stag
