#pragma once

// Emits the corrupted slot stream that stands in for a frozen object-centric
// grouping module: part-whole splits, duplicates, misses under occlusion, and
// background clutter, with the slot order freshly permuted every frame.

#include <map>
#include <vector>

#include "slottrack/core/rng.hpp"
#include "slottrack/world/decoder.hpp"
#include "slottrack/world/world.hpp"

namespace slottrack::world {

struct EmitterConfig {
  int n_slots = 12;
  double p_split = 0.15;
  double p_dup = 0.10;
  double p_miss = 0.80;  // applied when visibility < v_min
  double v_min = 0.15;
  double noise = 0.02;  // latent-space Gaussian noise
  double appearance_scale = 1.0;
  double bg_scale_min = 0.012;
  double bg_scale_max = 0.03;
};

struct SlotFrame {
  std::vector<float> slots;   // n_slots x dim, row-major
  std::vector<int> gt_owner;  // object id or -1; diagnostics only
  int frame_index = 0;
};

struct EmitStats {
  long clamped = 0;
  long dropped_overflow = 0;
};

// Per-video table of appearance codes; one draw per object id, so feature
// similarity carries identity across frames.
class AppearanceTable {
 public:
  AppearanceTable(int dims, double scale, core::Rng rng)
      : dims_(dims), scale_(scale), rng_(rng) {}

  const std::vector<double>& codes(int object_id) {
    auto it = table_.find(object_id);
    if (it != table_.end()) return it->second;
    std::vector<double> v(dims_);
    for (auto& x : v) x = rng_.normal() * scale_;
    return table_.emplace(object_id, std::move(v)).first->second;
  }

 private:
  int dims_;
  double scale_;
  core::Rng rng_;
  std::map<int, std::vector<double>> table_;
};

// Inverts the decoder on its parameter dims and adds latent noise.
std::vector<double> encode_object(const WorldObject& obj, const std::vector<double>& appearance,
                                  const DecoderSpec& spec, double noise, core::Rng& rng,
                                  EmitStats* stats = nullptr);

SlotFrame emit_slots(const std::vector<WorldObject>& objects, const FrameGt& gt,
                     const EmitterConfig& cfg, const DecoderSpec& spec,
                     AppearanceTable& appearance, core::Rng& rng, int frame_index,
                     EmitStats* stats = nullptr);

}  // namespace slottrack::world
