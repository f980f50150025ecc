#pragma once

// Dataset container: a single file holding a one-line JSON manifest (config
// echo, seed, per-video byte offsets) followed by per-video binary blocks of
// little-endian 32-bit floats. Per video the payload is
//   slots for all frames (frames * N * d), gt_owner for all frames (frames * N),
//   then for each frame, for each object:
//     amodal mask (H*W), visible mask (H*W), visibility fraction (1), box (4)
// Round trips are bit exact.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "slottrack/world/emitter.hpp"
#include "slottrack/world/world.hpp"

namespace slottrack::world {

struct DatasetConfig {
  WorldConfig world;
  EmitterConfig emitter;
  DecoderSpec decoder;
  int videos = 8;
  int frames = 64;
  std::uint64_t seed = 0;
};

void validate(const DatasetConfig& cfg);  // throws std::invalid_argument

nlohmann::json dataset_config_to_json(const DatasetConfig& cfg);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);

struct VideoData {
  int index = 0;
  int frames = 0;
  int objects = 0;
  std::vector<float> slots;   // frames * n_slots * dim
  std::vector<float> owners;  // frames * n_slots
  std::vector<FrameGt> gt;    // one per frame

  const float* slots_at(int t, int n_slots, int dim) const {
    return slots.data() + static_cast<size_t>(t) * n_slots * dim;
  }
  const float* owners_at(int t, int n_slots) const {
    return owners.data() + static_cast<size_t>(t) * n_slots;
  }
};

VideoData generate_video(const DatasetConfig& cfg, int video_index, EmitStats* stats = nullptr);

void write_dataset(const std::string& path, const DatasetConfig& cfg);

class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path);

  int videos() const { return static_cast<int>(entries_.size()); }
  const DatasetConfig& config() const { return config_; }
  std::uint64_t seed() const { return config_.seed; }
  const std::string& manifest_json() const { return manifest_; }

  // Reads are stateless with respect to the reader, safe from multiple threads.
  VideoData read_video(int index) const;
  // Slots-only view used by training; skips the ground-truth section.
  VideoData read_slots(int index) const;

 private:
  struct Entry {
    std::uint64_t offset = 0, bytes = 0;
    int frames = 0, objects = 0;
  };
  VideoData read(int index, bool with_gt) const;

  std::string path_;
  std::string manifest_;
  std::uint64_t payload_start_ = 0;
  DatasetConfig config_;
  std::vector<Entry> entries_;
};

}  // namespace slottrack::world
