#pragma once

// Binary mask utilities shared by the tracker, the metrics, and the tests.

#include <array>
#include <cstdint>
#include <vector>

namespace slottrack::world {

inline std::vector<std::uint8_t> binarize_mask(const float* soft, int pixels,
                                               float threshold = 0.5f) {
  std::vector<std::uint8_t> out(pixels);
  for (int i = 0; i < pixels; ++i) out[i] = soft[i] >= threshold ? 1 : 0;
  return out;
}

inline double mask_iou(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  long inter = 0, uni = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] & b[i]);
    uni += (a[i] | b[i]);
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double mask_mean(const float* soft, int pixels) {
  double s = 0;
  for (int i = 0; i < pixels; ++i) s += soft[i];
  return s / pixels;
}

// Tight pixel-extent box of a binary mask, normalized; all-zero masks give
// the empty box (0,0,0,0).
inline std::array<float, 4> mask_box(const std::vector<std::uint8_t>& bin, int H, int W) {
  int r0 = H, r1 = -1, c0 = W, c1 = -1;
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      if (bin[static_cast<long>(r) * W + c]) {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
  if (r1 < 0) return {0.f, 0.f, 0.f, 0.f};
  return {static_cast<float>(c0) / W, static_cast<float>(r0) / H,
          static_cast<float>(c1 + 1) / W, static_cast<float>(r1 + 1) / H};
}

inline double box_area(const std::array<float, 4>& b) {
  return std::max(0.0f, b[2] - b[0]) * static_cast<double>(std::max(0.0f, b[3] - b[1]));
}

inline double box_intersection(const std::array<float, 4>& a, const std::array<float, 4>& b) {
  const float w = std::min(a[2], b[2]) - std::max(a[0], b[0]);
  const float h = std::min(a[3], b[3]) - std::max(a[1], b[1]);
  return (w > 0 && h > 0) ? static_cast<double>(w) * h : 0.0;
}

inline double box_iou(const std::array<float, 4>& a, const std::array<float, 4>& b) {
  const double inter = box_intersection(a, b);
  const double uni = box_area(a) + box_area(b) - inter;
  return uni <= 0 ? 0.0 : inter / uni;
}

}  // namespace slottrack::world
