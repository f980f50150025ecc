#include "slottrack/world/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slottrack/world/emitter.hpp"
#include "slottrack/world/masks.hpp"

namespace slottrack::world {

std::vector<WorldObject> init_world(const WorldConfig& cfg, core::Rng& rng) {
  std::vector<WorldObject> objects(cfg.objects);
  std::vector<int> depth(cfg.objects);
  std::iota(depth.begin(), depth.end(), 0);
  rng.shuffle(depth.begin(), depth.end());
  for (int i = 0; i < cfg.objects; ++i) {
    auto& o = objects[i];
    o.id = i;
    o.cx = rng.uniform(cfg.margin, 1.0 - cfg.margin);
    o.cy = rng.uniform(cfg.margin, 1.0 - cfg.margin);
    o.vx = rng.uniform(-cfg.speed_max, cfg.speed_max);
    o.vy = rng.uniform(-cfg.speed_max, cfg.speed_max);
    o.log_sx = std::log(rng.uniform(cfg.scale_min, cfg.scale_max));
    o.log_sy = std::log(rng.uniform(cfg.scale_min, cfg.scale_max));
    for (auto& c : o.color) c = rng.uniform(cfg.color_min, cfg.color_max);
    o.depth = depth[i];
  }
  return objects;
}

namespace {

void reflect(double& pos, double& vel) {
  pos += vel;
  while (pos < 0.0 || pos > 1.0) {
    if (pos > 1.0) {
      pos = 2.0 - pos;
      vel = -vel;
    } else {
      pos = -pos;
      vel = -vel;
    }
  }
}

}  // namespace

void step_world(std::vector<WorldObject>& objects) {
  for (auto& o : objects) {
    reflect(o.cx, o.vx);
    reflect(o.cy, o.vy);
  }
}

FrameGt render_gt(const std::vector<WorldObject>& objects, int H, int W) {
  FrameGt gt;
  gt.objects.resize(objects.size());
  const int P = H * W;
  for (auto& og : gt.objects) {
    og.amodal.assign(P, 0);
    og.visible.assign(P, 0);
  }

  // front-most owner per pixel (painter by depth)
  std::vector<int> owner(P, -1);
  std::vector<int> owner_depth(P, 0);
  for (size_t k = 0; k < objects.size(); ++k) {
    const auto& o = objects[k];
    const double sx = std::exp(o.log_sx), sy = std::exp(o.log_sy);
    auto& og = gt.objects[k];
    long amodal_count = 0;
    for (int r = 0; r < H; ++r) {
      const double dy = ((r + 0.5) / H - o.cy) / sy;
      for (int c = 0; c < W; ++c) {
        const double dx = ((c + 0.5) / W - o.cx) / sx;
        if (dx * dx + dy * dy <= kBlobRadiusSq) {
          const int p = r * W + c;
          og.amodal[p] = 1;
          ++amodal_count;
          if (owner[p] < 0 || o.depth < owner_depth[p]) {
            owner[p] = static_cast<int>(k);
            owner_depth[p] = o.depth;
          }
        }
      }
    }
    og.box = mask_box(og.amodal, H, W);
    og.vis_frac = amodal_count;  // denominator, fixed below
  }

  std::vector<long> visible_count(objects.size(), 0);
  for (int p = 0; p < P; ++p)
    if (owner[p] >= 0) {
      gt.objects[owner[p]].visible[p] = 1;
      ++visible_count[owner[p]];
    }
  for (size_t k = 0; k < objects.size(); ++k) {
    const double amodal = gt.objects[k].vis_frac;
    gt.objects[k].vis_frac = amodal > 0 ? visible_count[k] / amodal : 0.0;
  }
  return gt;
}

namespace {

double logit_clamped(double x, EmitStats* stats) {
  const double lo = 1e-4, hi = 1.0 - 1e-4;
  if (x < lo || x > hi) {
    if (stats) ++stats->clamped;
    x = std::clamp(x, lo, hi);
  }
  return std::log(x / (1.0 - x));
}

}  // namespace

std::vector<double> encode_object(const WorldObject& obj, const std::vector<double>& appearance,
                                  const DecoderSpec& spec, double noise, core::Rng& rng,
                                  EmitStats* stats) {
  std::vector<double> z(spec.dim, 0.0);
  z[spec.idx_cx] = logit_clamped(obj.cx, stats);
  z[spec.idx_cy] = logit_clamped(obj.cy, stats);
  double lsx = obj.log_sx, lsy = obj.log_sy;
  if (lsx < spec.log_scale_min || lsx > spec.log_scale_max ||
      lsy < spec.log_scale_min || lsy > spec.log_scale_max) {
    if (stats) ++stats->clamped;
    lsx = std::clamp(lsx, spec.log_scale_min, spec.log_scale_max);
    lsy = std::clamp(lsy, spec.log_scale_min, spec.log_scale_max);
  }
  z[spec.idx_lsx] = lsx;
  z[spec.idx_lsy] = lsy;
  for (int c = 0; c < 3; ++c) z[spec.idx_color + c] = logit_clamped(obj.color[c], stats);
  const int app_dims = spec.dim - (spec.idx_color + 3);
  for (int i = 0; i < app_dims; ++i) z[spec.idx_color + 3 + i] = appearance[i];
  if (noise > 0)
    for (auto& v : z) v += rng.normal() * noise;
  return z;
}

SlotFrame emit_slots(const std::vector<WorldObject>& objects, const FrameGt& gt,
                     const EmitterConfig& cfg, const DecoderSpec& spec,
                     AppearanceTable& appearance, core::Rng& rng, int frame_index,
                     EmitStats* stats) {
  if (cfg.n_slots <= 0) throw std::invalid_argument("emit_slots: n_slots must be positive");

  enum class Kind { Object, Part, Duplicate };
  struct Candidate {
    std::vector<double> z;
    int owner;
    Kind kind;
  };
  std::vector<Candidate> cands;

  for (size_t k = 0; k < objects.size(); ++k) {
    const auto& o = objects[k];
    const auto& app = appearance.codes(o.id);
    const double vis = gt.objects[k].vis_frac;
    if (vis >= cfg.v_min) {
      if (rng.bernoulli(cfg.p_split)) {
        // left/right halves: centers offset by ±sx/2, sx halved
        const double sx = std::exp(o.log_sx);
        for (const double side : {-1.0, 1.0}) {
          WorldObject part = o;
          part.cx = std::clamp(o.cx + side * sx / 2.0, 0.0, 1.0);
          part.log_sx = o.log_sx - std::log(2.0);
          cands.push_back({encode_object(part, app, spec, cfg.noise, rng, stats),
                           o.id, Kind::Part});
        }
      } else {
        cands.push_back({encode_object(o, app, spec, cfg.noise, rng, stats), o.id, Kind::Object});
      }
      if (rng.bernoulli(cfg.p_dup))
        cands.push_back({encode_object(o, app, spec, cfg.noise, rng, stats), o.id, Kind::Duplicate});
    } else if (!rng.bernoulli(cfg.p_miss)) {
      cands.push_back({encode_object(o, app, spec, cfg.noise, rng, stats), o.id, Kind::Object});
    }
  }

  // capacity: drop duplicates first, then trailing object/part slots
  if (static_cast<int>(cands.size()) > cfg.n_slots) {
    for (int i = static_cast<int>(cands.size()) - 1; i >= 0 && static_cast<int>(cands.size()) > cfg.n_slots; --i)
      if (cands[i].kind == Kind::Duplicate) {
        cands.erase(cands.begin() + i);
        if (stats) ++stats->dropped_overflow;
      }
    while (static_cast<int>(cands.size()) > cfg.n_slots) {
      cands.pop_back();
      if (stats) ++stats->dropped_overflow;
    }
  }

  // fill with background clutter: small random blobs, fresh appearance
  while (static_cast<int>(cands.size()) < cfg.n_slots) {
    WorldObject bg;
    bg.cx = rng.uniform(0.05, 0.95);
    bg.cy = rng.uniform(0.05, 0.95);
    bg.log_sx = std::log(rng.uniform(cfg.bg_scale_min, cfg.bg_scale_max));
    bg.log_sy = std::log(rng.uniform(cfg.bg_scale_min, cfg.bg_scale_max));
    for (auto& c : bg.color) c = rng.uniform(0.05, 0.95);
    std::vector<double> app(spec.dim - (spec.idx_color + 3));
    for (auto& v : app) v = rng.normal() * cfg.appearance_scale;
    cands.push_back({encode_object(bg, app, spec, cfg.noise, rng, stats), -1, Kind::Object});
  }

  std::vector<int> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());

  SlotFrame frame;
  frame.frame_index = frame_index;
  frame.slots.resize(static_cast<size_t>(cfg.n_slots) * spec.dim);
  frame.gt_owner.resize(cfg.n_slots);
  for (int i = 0; i < cfg.n_slots; ++i) {
    const auto& c = cands[order[i]];
    for (int j = 0; j < spec.dim; ++j)
      frame.slots[static_cast<size_t>(i) * spec.dim + j] = static_cast<float>(c.z[j]);
    frame.gt_owner[i] = c.owner;
  }
  return frame;
}

}  // namespace slottrack::world
