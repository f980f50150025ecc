#pragma once

// Synthetic 2-D world: Gaussian-blob objects moving at constant velocity in
// the unit square with elastic boundary reflection and a fixed per-video depth
// order. Ground truth is rendered on the decoder grid so that a noise-free
// slot decodes to exactly the ground-truth amodal mask.

#include <array>
#include <cstdint>
#include <vector>

#include "slottrack/core/rng.hpp"

namespace slottrack::world {

struct WorldObject {
  int id = 0;
  double cx = 0, cy = 0;
  double vx = 0, vy = 0;
  double log_sx = 0, log_sy = 0;
  std::array<double, 3> color{};
  int depth = 0;  // smaller is closer to the camera
};

struct WorldConfig {
  int objects = 8;
  double scale_min = 0.05;
  double scale_max = 0.13;
  double speed_max = 0.03;  // per-axis, units per frame
  double color_min = 0.15;
  double color_max = 0.95;
  double margin = 0.1;  // initial placement margin from the walls
};

// Blob support: exp(-r^2/2) >= 0.5  <=>  r^2 <= 2 ln 2.
inline constexpr double kBlobRadiusSq = 1.3862943611198906;  // 2 ln 2

std::vector<WorldObject> init_world(const WorldConfig& cfg, core::Rng& rng);

// Constant velocity plus elastic reflection; total for any input.
void step_world(std::vector<WorldObject>& objects);

struct ObjectGt {
  std::vector<std::uint8_t> amodal;   // H*W in {0,1}
  std::vector<std::uint8_t> visible;  // pixel-disjoint across objects
  double vis_frac = 0;
  std::array<float, 4> box{};  // x0,y0,x1,y1 normalized, from the amodal mask
};

struct FrameGt {
  std::vector<ObjectGt> objects;
};

FrameGt render_gt(const std::vector<WorldObject>& objects, int H, int W);

}  // namespace slottrack::world
