#include "slottrack/world/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "dataset container assumes a little-endian host");

namespace slottrack::world {

using nlohmann::json;

void validate(const DatasetConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("dataset config: " + msg); };
  if (cfg.videos < 1) fail("videos must be >= 1");
  if (cfg.frames < 1) fail("frames must be >= 1");
  if (cfg.world.objects < 1) fail("objects must be >= 1");
  if (cfg.world.scale_min <= 0 || cfg.world.scale_max < cfg.world.scale_min)
    fail("invalid scale range");
  if (cfg.decoder.H < 4 || cfg.decoder.W < 4) fail("grid too small");
  if (cfg.decoder.dim < cfg.decoder.idx_color + 3) fail("latent dim too small for the layout");
  if (cfg.emitter.n_slots < cfg.world.objects) fail("n_slots must cover the object count");
  for (double p : {cfg.emitter.p_split, cfg.emitter.p_dup, cfg.emitter.p_miss, cfg.emitter.v_min})
    if (p < 0.0 || p > 1.0) fail("probabilities must lie in [0,1]");
  if (cfg.emitter.noise < 0) fail("noise must be nonnegative");
  if (cfg.emitter.bg_scale_min <= 0 || cfg.emitter.bg_scale_max < cfg.emitter.bg_scale_min)
    fail("invalid background scale range");
}

json dataset_config_to_json(const DatasetConfig& cfg) {
  json j;
  j["videos"] = cfg.videos;
  j["frames"] = cfg.frames;
  j["seed"] = cfg.seed;
  j["world"] = {{"objects", cfg.world.objects},
                {"scale_min", cfg.world.scale_min},
                {"scale_max", cfg.world.scale_max},
                {"speed_max", cfg.world.speed_max},
                {"color_min", cfg.world.color_min},
                {"color_max", cfg.world.color_max},
                {"margin", cfg.world.margin}};
  j["emitter"] = {{"n_slots", cfg.emitter.n_slots},
                  {"p_split", cfg.emitter.p_split},
                  {"p_dup", cfg.emitter.p_dup},
                  {"p_miss", cfg.emitter.p_miss},
                  {"v_min", cfg.emitter.v_min},
                  {"noise", cfg.emitter.noise},
                  {"appearance_scale", cfg.emitter.appearance_scale},
                  {"bg_scale_min", cfg.emitter.bg_scale_min},
                  {"bg_scale_max", cfg.emitter.bg_scale_max}};
  j["decoder"] = {{"H", cfg.decoder.H},
                  {"W", cfg.decoder.W},
                  {"dim", cfg.decoder.dim},
                  {"log_scale_min", cfg.decoder.log_scale_min},
                  {"log_scale_max", cfg.decoder.log_scale_max}};
  return j;
}

DatasetConfig dataset_config_from_json(const json& j) {
  DatasetConfig cfg;
  cfg.videos = j.at("videos").get<int>();
  cfg.frames = j.at("frames").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  const auto& w = j.at("world");
  cfg.world.objects = w.at("objects").get<int>();
  cfg.world.scale_min = w.at("scale_min").get<double>();
  cfg.world.scale_max = w.at("scale_max").get<double>();
  cfg.world.speed_max = w.at("speed_max").get<double>();
  cfg.world.color_min = w.at("color_min").get<double>();
  cfg.world.color_max = w.at("color_max").get<double>();
  cfg.world.margin = w.at("margin").get<double>();
  const auto& e = j.at("emitter");
  cfg.emitter.n_slots = e.at("n_slots").get<int>();
  cfg.emitter.p_split = e.at("p_split").get<double>();
  cfg.emitter.p_dup = e.at("p_dup").get<double>();
  cfg.emitter.p_miss = e.at("p_miss").get<double>();
  cfg.emitter.v_min = e.at("v_min").get<double>();
  cfg.emitter.noise = e.at("noise").get<double>();
  cfg.emitter.appearance_scale = e.at("appearance_scale").get<double>();
  cfg.emitter.bg_scale_min = e.at("bg_scale_min").get<double>();
  cfg.emitter.bg_scale_max = e.at("bg_scale_max").get<double>();
  const auto& d = j.at("decoder");
  cfg.decoder.H = d.at("H").get<int>();
  cfg.decoder.W = d.at("W").get<int>();
  cfg.decoder.dim = d.at("dim").get<int>();
  cfg.decoder.log_scale_min = d.at("log_scale_min").get<double>();
  cfg.decoder.log_scale_max = d.at("log_scale_max").get<double>();
  return cfg;
}

namespace {

// rng stream purposes per video
enum : std::uint64_t { kStreamWorld = 0, kStreamEmitter = 1, kStreamAppearance = 2 };

core::Rng video_stream(const DatasetConfig& cfg, int video, std::uint64_t purpose) {
  return core::Rng::stream(cfg.seed, static_cast<std::uint64_t>(video) * 8 + purpose);
}

void put_floats(std::string& out, const float* data, size_t n) {
  const size_t pos = out.size();
  out.resize(pos + n * sizeof(float));
  std::memcpy(out.data() + pos, data, n * sizeof(float));
}

size_t video_payload_floats(const DatasetConfig& cfg) {
  const size_t per_frame_slots =
      static_cast<size_t>(cfg.emitter.n_slots) * cfg.decoder.dim + cfg.emitter.n_slots;
  const size_t per_obj = 2 * static_cast<size_t>(cfg.decoder.pixels()) + 1 + 4;
  return static_cast<size_t>(cfg.frames) *
         (per_frame_slots + static_cast<size_t>(cfg.world.objects) * per_obj);
}

std::string serialize_video(const VideoData& v, const DatasetConfig& cfg) {
  std::string out;
  out.reserve(video_payload_floats(cfg) * sizeof(float));
  put_floats(out, v.slots.data(), v.slots.size());
  put_floats(out, v.owners.data(), v.owners.size());
  const int P = cfg.decoder.pixels();
  std::vector<float> buf(P);
  for (const auto& frame : v.gt)
    for (const auto& og : frame.objects) {
      for (int p = 0; p < P; ++p) buf[p] = og.amodal[p] ? 1.0f : 0.0f;
      put_floats(out, buf.data(), P);
      for (int p = 0; p < P; ++p) buf[p] = og.visible[p] ? 1.0f : 0.0f;
      put_floats(out, buf.data(), P);
      const float vf = static_cast<float>(og.vis_frac);
      put_floats(out, &vf, 1);
      put_floats(out, og.box.data(), 4);
    }
  return out;
}

}  // namespace

VideoData generate_video(const DatasetConfig& cfg, int video_index, EmitStats* stats) {
  auto world_rng = video_stream(cfg, video_index, kStreamWorld);
  auto emit_rng = video_stream(cfg, video_index, kStreamEmitter);
  AppearanceTable appearance(cfg.decoder.dim - (cfg.decoder.idx_color + 3),
                             cfg.emitter.appearance_scale,
                             video_stream(cfg, video_index, kStreamAppearance));

  VideoData v;
  v.index = video_index;
  v.frames = cfg.frames;
  v.objects = cfg.world.objects;
  v.slots.reserve(static_cast<size_t>(cfg.frames) * cfg.emitter.n_slots * cfg.decoder.dim);
  v.owners.reserve(static_cast<size_t>(cfg.frames) * cfg.emitter.n_slots);
  v.gt.reserve(cfg.frames);

  auto objects = init_world(cfg.world, world_rng);
  for (int t = 0; t < cfg.frames; ++t) {
    auto gt = render_gt(objects, cfg.decoder.H, cfg.decoder.W);
    auto frame = emit_slots(objects, gt, cfg.emitter, cfg.decoder, appearance, emit_rng, t, stats);
    v.slots.insert(v.slots.end(), frame.slots.begin(), frame.slots.end());
    for (int owner : frame.gt_owner) v.owners.push_back(static_cast<float>(owner));
    v.gt.push_back(std::move(gt));
    step_world(objects);
  }
  return v;
}

void write_dataset(const std::string& path, const DatasetConfig& cfg) {
  validate(cfg);

  std::vector<std::string> blocks(cfg.videos);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < cfg.videos; ++i)
    blocks[i] = serialize_video(generate_video(cfg, i), cfg);

  json manifest;
  manifest["format"] = "slottrack-dataset";
  manifest["version"] = 1;
  manifest["seed"] = cfg.seed;
  manifest["config"] = dataset_config_to_json(cfg);
  json videos = json::array();
  std::uint64_t offset = 0;
  for (int i = 0; i < cfg.videos; ++i) {
    videos.push_back({{"index", i},
                      {"offset", offset},
                      {"bytes", blocks[i].size()},
                      {"frames", cfg.frames},
                      {"objects", cfg.world.objects}});
    offset += blocks[i].size();
  }
  manifest["videos"] = std::move(videos);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("dataset: cannot open for writing: " + path);
  out << manifest.dump() << '\n';
  for (const auto& b : blocks) out.write(b.data(), static_cast<std::streamsize>(b.size()));
  if (!out) throw std::runtime_error("dataset: write failed: " + path);
}

DatasetReader::DatasetReader(const std::string& path) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("dataset: cannot open: " + path);
  std::getline(in, manifest_);
  if (!in) throw std::runtime_error("dataset: missing manifest: " + path);
  payload_start_ = manifest_.size() + 1;
  json m = json::parse(manifest_);
  if (m.at("format").get<std::string>() != "slottrack-dataset")
    throw std::runtime_error("dataset: unrecognized format");
  config_ = dataset_config_from_json(m.at("config"));
  for (const auto& v : m.at("videos")) {
    Entry e;
    e.offset = v.at("offset").get<std::uint64_t>();
    e.bytes = v.at("bytes").get<std::uint64_t>();
    e.frames = v.at("frames").get<int>();
    e.objects = v.at("objects").get<int>();
    entries_.push_back(e);
  }
}

VideoData DatasetReader::read(int index, bool with_gt) const {
  if (index < 0 || index >= videos()) throw std::invalid_argument("dataset: video index out of range");
  const auto& e = entries_[index];
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw std::runtime_error("dataset: cannot open: " + path_);
  in.seekg(static_cast<std::streamoff>(payload_start_ + e.offset));

  VideoData v;
  v.index = index;
  v.frames = e.frames;
  v.objects = e.objects;
  const int N = config_.emitter.n_slots, d = config_.decoder.dim, P = config_.decoder.pixels();
  v.slots.resize(static_cast<size_t>(e.frames) * N * d);
  v.owners.resize(static_cast<size_t>(e.frames) * N);
  in.read(reinterpret_cast<char*>(v.slots.data()),
          static_cast<std::streamsize>(v.slots.size() * sizeof(float)));
  in.read(reinterpret_cast<char*>(v.owners.data()),
          static_cast<std::streamsize>(v.owners.size() * sizeof(float)));
  if (!with_gt) {
    if (!in) throw std::runtime_error("dataset: truncated video block");
    return v;
  }

  std::vector<float> buf(P);
  v.gt.resize(e.frames);
  for (int t = 0; t < e.frames; ++t) {
    v.gt[t].objects.resize(e.objects);
    for (int o = 0; o < e.objects; ++o) {
      auto& og = v.gt[t].objects[o];
      in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(P * sizeof(float)));
      og.amodal.resize(P);
      for (int p = 0; p < P; ++p) og.amodal[p] = buf[p] != 0.0f;
      in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(P * sizeof(float)));
      og.visible.resize(P);
      for (int p = 0; p < P; ++p) og.visible[p] = buf[p] != 0.0f;
      float vf = 0;
      in.read(reinterpret_cast<char*>(&vf), sizeof(float));
      og.vis_frac = vf;
      in.read(reinterpret_cast<char*>(og.box.data()), 4 * sizeof(float));
    }
  }
  if (!in) throw std::runtime_error("dataset: truncated video block");
  return v;
}

VideoData DatasetReader::read_video(int index) const { return read(index, true); }
VideoData DatasetReader::read_slots(int index) const { return read(index, false); }

}  // namespace slottrack::world
