#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "slottrack/core/gradcheck.hpp"
#include "slottrack/world/dataset.hpp"
#include "slottrack/world/decoder.hpp"
#include "slottrack/world/emitter.hpp"
#include "slottrack/world/masks.hpp"
#include "slottrack/world/world.hpp"

using namespace slottrack;
using namespace slottrack::world;
using slottrack::core::TensorD;

namespace {

// analytic blob on the grid, straight from object parameters
std::vector<std::uint8_t> analytic_amodal(const WorldObject& o, int H, int W) {
  std::vector<std::uint8_t> m(static_cast<size_t>(H) * W, 0);
  const double sx = std::exp(o.log_sx), sy = std::exp(o.log_sy);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      const double dx = ((c + 0.5) / W - o.cx) / sx;
      const double dy = ((r + 0.5) / H - o.cy) / sy;
      if (dx * dx + dy * dy <= kBlobRadiusSq) m[static_cast<size_t>(r) * W + c] = 1;
    }
  return m;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("step_world: linear motion, reflection, fixed point") {
  std::vector<WorldObject> objs(3);
  objs[0].cx = 0.2; objs[0].cy = 0.2; objs[0].vx = 0.1;
  objs[1].cx = 0.98; objs[1].cy = 0.5; objs[1].vx = 0.05;
  objs[2].cx = 0.4; objs[2].cy = 0.6;
  step_world(objs);
  CHECK(objs[0].cx == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(objs[0].cy == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(objs[1].cx == doctest::Approx(0.97).epsilon(1e-12));
  CHECK(objs[1].vx == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(objs[2].cx == 0.4);
  CHECK(objs[2].cy == 0.6);
}

TEST_CASE("decode: peak of 1 at a pixel-centered blob") {
  DecoderSpec spec;
  // center on the pixel (8, 12): x = 12.5/32, y = 8.5/32
  const double cx = 12.5 / 32.0, cy = 8.5 / 32.0;
  std::vector<double> z(spec.dim, 0.0);
  z[0] = std::log(cx / (1 - cx));
  z[1] = std::log(cy / (1 - cy));
  z[2] = std::log(0.125);
  z[3] = std::log(0.1);
  auto dec = decode(TensorD::constant(1, spec.dim, z), spec);
  CHECK(dec.mask.at(0, 8 * 32 + 12) == 1.0);
}

TEST_CASE("decode: value exp(-1/2) at one sigma from the center") {
  DecoderSpec spec;
  const double cx = 12.5 / 32.0, cy = 8.5 / 32.0;
  std::vector<double> z(spec.dim, 0.0);
  z[0] = std::log(cx / (1 - cx));
  z[1] = std::log(cy / (1 - cy));
  z[2] = std::log(4.0 / 32.0);  // sx spans exactly 4 pixels
  z[3] = std::log(0.1);
  auto dec = decode(TensorD::constant(1, spec.dim, z), spec);
  CHECK(dec.mask.at(0, 8 * 32 + 16) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
}

TEST_CASE("decode: zero color dims reconstruct at half mask value") {
  DecoderSpec spec;
  std::vector<double> z(spec.dim, 0.0);
  z[2] = z[3] = std::log(0.2);
  auto dec = decode(TensorD::constant(1, spec.dim, z), spec);
  const int P = spec.pixels();
  for (int p = 0; p < P; p += 97)
    for (int c = 0; c < 3; ++c)
      CHECK(dec.recon.at(0, c * P + p) == doctest::Approx(0.5 * dec.mask.at(0, p)).epsilon(1e-12));
}

TEST_CASE("decode is bitwise deterministic") {
  DecoderSpec spec;
  core::Rng rng(3);
  std::vector<double> z(2 * spec.dim);
  for (auto& v : z) v = rng.normal();
  auto a = decode(TensorD::constant(2, spec.dim, z), spec);
  auto b = decode(TensorD::constant(2, spec.dim, z), spec);
  CHECK(a.mask.value() == b.mask.value());
  CHECK(a.recon.value() == b.recon.value());
}

TEST_CASE("grad_check: decode mask and recon") {
  DecoderSpec spec;
  spec.H = spec.W = 8;  // small grid keeps the finite differencing quick
  core::Rng rng(5);
  std::vector<double> z(spec.dim);
  for (auto& v : z) v = rng.normal() * 0.5;
  z[2] = -1.2;
  z[3] = -1.5;
  auto f = [&spec](const TensorD& zz) {
    auto dec = decode(zz, spec);
    return add(mean(mul(dec.mask, dec.mask)), mean(dec.recon));
  };
  CHECK(core::grad_check(f, z, 1, spec.dim) < 1e-4);
}

TEST_CASE("encode then decode reproduces the analytic blob") {
  DecoderSpec spec;
  WorldObject o;
  o.cx = 0.37; o.cy = 0.61;
  o.log_sx = std::log(0.11); o.log_sy = std::log(0.08);
  o.color = {0.3, 0.5, 0.8};
  core::Rng rng(1);
  std::vector<double> app(spec.dim - 7, 0.5);
  auto z = encode_object(o, app, spec, 0.0, rng);
  std::vector<float> soft(spec.pixels());
  decode_mask_raw(z.data(), spec, soft.data());
  const double sx = 0.11, sy = 0.08;
  for (int r = 0; r < spec.H; ++r)
    for (int c = 0; c < spec.W; ++c) {
      const double dx = (spec.px(c) - o.cx) / sx, dy = (spec.py(r) - o.cy) / sy;
      CHECK(soft[r * spec.W + c] ==
            doctest::Approx(std::exp(-0.5 * (dx * dx + dy * dy))).epsilon(1e-6));
    }
  CHECK(binarize_mask(soft.data(), spec.pixels()) == analytic_amodal(o, spec.H, spec.W));
}

TEST_CASE("appearance codes persist per object id") {
  AppearanceTable table(25, 1.0, core::Rng(9));
  auto a = table.codes(4);
  auto b = table.codes(7);
  CHECK(table.codes(4) == a);
  CHECK(table.codes(7) == b);
  CHECK(a != b);
}

TEST_CASE("emit_slots: corruption-free case fills with background") {
  DecoderSpec spec;
  EmitterConfig ecfg;
  ecfg.n_slots = 4;
  ecfg.p_split = ecfg.p_dup = ecfg.p_miss = 0.0;
  ecfg.noise = 0.0;
  std::vector<WorldObject> objs(2);
  objs[0].id = 0; objs[0].cx = 0.25; objs[0].cy = 0.3; objs[0].log_sx = objs[0].log_sy = std::log(0.1);
  objs[1].id = 1; objs[1].cx = 0.7; objs[1].cy = 0.7; objs[1].log_sx = objs[1].log_sy = std::log(0.1);
  objs[1].depth = 1;
  auto gt = render_gt(objs, spec.H, spec.W);
  AppearanceTable table(spec.dim - 7, 1.0, core::Rng(2));
  core::Rng rng(3);
  auto frame = emit_slots(objs, gt, ecfg, spec, table, rng, 0);
  REQUIRE(static_cast<int>(frame.gt_owner.size()) == 4);
  std::multiset<int> owners(frame.gt_owner.begin(), frame.gt_owner.end());
  CHECK(owners.count(0) == 1);
  CHECK(owners.count(1) == 1);
  CHECK(owners.count(-1) == 2);

  // each owned slot decodes to IoU 1 with its amodal ground truth
  for (int i = 0; i < 4; ++i) {
    if (frame.gt_owner[i] < 0) continue;
    std::vector<float> soft(spec.pixels());
    decode_mask_raw(frame.slots.data() + static_cast<size_t>(i) * spec.dim, spec, soft.data());
    auto bin = binarize_mask(soft.data(), spec.pixels());
    CHECK(mask_iou(bin, gt.objects[frame.gt_owner[i]].amodal) > 0.9);
  }
}

TEST_CASE("emit_slots: forced split yields two part slots that cover the object") {
  DecoderSpec spec;
  spec.H = spec.W = 64;
  EmitterConfig ecfg;
  ecfg.n_slots = 3;
  ecfg.p_split = 1.0;
  ecfg.p_dup = 0.0;
  ecfg.noise = 0.0;
  std::vector<WorldObject> objs(1);
  objs[0].cx = objs[0].cy = 0.5;
  objs[0].log_sx = objs[0].log_sy = std::log(0.12);
  auto gt = render_gt(objs, spec.H, spec.W);
  AppearanceTable table(spec.dim - 7, 1.0, core::Rng(2));
  core::Rng rng(3);
  auto frame = emit_slots(objs, gt, ecfg, spec, table, rng, 0);
  std::vector<std::vector<std::uint8_t>> parts;
  for (size_t i = 0; i < frame.gt_owner.size(); ++i) {
    if (frame.gt_owner[i] != 0) continue;
    std::vector<float> soft(spec.pixels());
    decode_mask_raw(frame.slots.data() + i * spec.dim, spec, soft.data());
    parts.push_back(binarize_mask(soft.data(), spec.pixels()));
  }
  REQUIRE(parts.size() == 2);
  std::vector<std::uint8_t> uni(spec.pixels());
  for (int p = 0; p < spec.pixels(); ++p) uni[p] = parts[0][p] | parts[1][p];
  CHECK(mask_iou(uni, gt.objects[0].amodal) > 0.6);
  CHECK(mask_iou(parts[0], gt.objects[0].amodal) > 0.15);
  CHECK(mask_iou(parts[1], gt.objects[0].amodal) > 0.15);
  CHECK(mask_iou(parts[0], gt.objects[0].amodal) < 0.9);
}

TEST_CASE("emit_slots: certain miss of a fully occluded object") {
  DecoderSpec spec;
  EmitterConfig ecfg;
  ecfg.n_slots = 4;
  ecfg.p_split = ecfg.p_dup = 0.0;
  ecfg.p_miss = 1.0;
  ecfg.v_min = 0.15;
  std::vector<WorldObject> objs(2);
  objs[0].id = 0; objs[0].cx = objs[0].cy = 0.5; objs[0].log_sx = objs[0].log_sy = std::log(0.2);
  objs[0].depth = 0;  // front
  objs[1].id = 1; objs[1].cx = objs[1].cy = 0.5; objs[1].log_sx = objs[1].log_sy = std::log(0.05);
  objs[1].depth = 1;  // fully hidden behind object 0
  auto gt = render_gt(objs, spec.H, spec.W);
  REQUIRE(gt.objects[1].vis_frac == 0.0);
  AppearanceTable table(spec.dim - 7, 1.0, core::Rng(2));
  core::Rng rng(3);
  auto frame = emit_slots(objs, gt, ecfg, spec, table, rng, 0);
  for (int owner : frame.gt_owner) CHECK(owner != 1);
}

TEST_CASE("render_gt: visible masks are pixel-disjoint and fractions consistent") {
  WorldConfig wcfg;
  core::Rng rng(11);
  auto objs = init_world(wcfg, rng);
  auto gt = render_gt(objs, 32, 32);
  std::vector<int> covered(32 * 32, 0);
  for (size_t k = 0; k < gt.objects.size(); ++k) {
    const auto& og = gt.objects[k];
    long vis = 0, amodal = 0;
    for (int p = 0; p < 32 * 32; ++p) {
      covered[p] += og.visible[p];
      vis += og.visible[p];
      amodal += og.amodal[p];
      if (og.visible[p]) CHECK(og.amodal[p] == 1);
    }
    if (amodal > 0) CHECK(og.vis_frac == doctest::Approx(double(vis) / amodal).epsilon(1e-12));
    CHECK(og.box == mask_box(og.amodal, 32, 32));
  }
  for (int p = 0; p < 32 * 32; ++p) CHECK(covered[p] <= 1);
}

TEST_CASE("slot order carries no identity") {
  DatasetConfig cfg;
  cfg.videos = 1;
  cfg.frames = 48;
  cfg.seed = 21;
  auto v = generate_video(cfg, 0);
  std::set<int> owners_at_zero;
  for (int t = 0; t < cfg.frames; ++t)
    owners_at_zero.insert(static_cast<int>(v.owners_at(t, cfg.emitter.n_slots)[0]));
  CHECK(owners_at_zero.size() >= 3);
}

TEST_CASE("dataset: counts, determinism, bit-exact round trip") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "slottrack_test_dataset";
  fs::create_directories(dir);
  DatasetConfig cfg;
  cfg.videos = 2;
  cfg.frames = 8;
  cfg.seed = 7;
  const auto p1 = (dir / "a.bin").string(), p2 = (dir / "b.bin").string();
  write_dataset(p1, cfg);
  write_dataset(p2, cfg);
  const auto bytes1 = file_bytes(p1);
  CHECK(bytes1 == file_bytes(p2));

  DatasetReader reader(p1);
  CHECK(reader.videos() == 2);
  auto v0 = reader.read_video(0);
  CHECK(v0.frames == 8);
  CHECK(static_cast<int>(v0.gt.size()) == 8);
  CHECK(v0.objects == cfg.world.objects);

  auto slots_only = reader.read_slots(1);
  auto full = reader.read_video(1);
  CHECK(slots_only.slots == full.slots);
  CHECK(slots_only.owners == full.owners);

  // re-serialize from parsed state: identical bytes
  fs::remove(p2);
  {
    DatasetConfig echo = reader.config();
    write_dataset(p2, echo);
  }
  CHECK(bytes1 == file_bytes(p2));
  fs::remove_all(dir);
}

TEST_CASE("dataset config validation rejects bad probabilities") {
  DatasetConfig cfg;
  cfg.emitter.p_split = 1.5;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.emitter.p_split = 0.1;
  cfg.emitter.n_slots = 2;  // below object count
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("default config produces occlusion events in most videos") {
  DatasetConfig cfg;
  cfg.videos = 12;
  cfg.frames = 64;
  cfg.seed = 5;
  int with_occlusion = 0;
  for (int i = 0; i < cfg.videos; ++i) {
    auto v = generate_video(cfg, i);
    bool occluded = false;
    for (const auto& frame : v.gt)
      for (const auto& og : frame.objects) occluded = occluded || og.vis_frac < 0.5;
    with_occlusion += occluded;
  }
  CHECK(with_occlusion >= 11);
}
