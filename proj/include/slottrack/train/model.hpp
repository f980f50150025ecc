#pragma once

// The trainable parameter bundle: the rollout transformer plus the two
// (or one shared) association attention blocks.

#include <string>
#include <vector>

#include "slottrack/assoc/indexmerge.hpp"
#include "slottrack/mem/rollout.hpp"

namespace slottrack::train {

struct ModelConfig {
  int dim = 32;
  int rollout_width = 64;
  int rollout_layers = 2;
  int rollout_heads = 4;
  int t_max = 6;
  int assoc_heads = 4;
  assoc::IndexVariant variant = assoc::IndexVariant::TwoMha;

  void validate() const {
    if (dim < 1 || t_max < 1) throw std::invalid_argument("model config: bad dimensions");
    if (rollout_width % rollout_heads != 0)
      throw std::invalid_argument("model config: rollout heads must divide width");
    if (dim % assoc_heads != 0)
      throw std::invalid_argument("model config: assoc heads must divide dim");
  }
};

struct ModelBundle {
  ModelConfig config;
  mem::RolloutModel<float> rollout;
  assoc::AssocParams<float> assoc;

  // Unique trainable tensors in a stable order (aliased tensors listed once).
  std::vector<std::pair<std::string, core::TensorF>> named_params() const {
    auto out = rollout.named_params();
    for (auto& p : assoc.named_params()) out.push_back(p);
    return out;
  }

  std::vector<core::TensorF> params() const {
    std::vector<core::TensorF> out;
    for (auto& [name, t] : named_params()) out.push_back(t);
    return out;
  }
};

inline ModelBundle init_models(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelBundle b;
  b.config = cfg;
  mem::RolloutConfig rc;
  rc.dim = cfg.dim;
  rc.width = cfg.rollout_width;
  rc.layers = cfg.rollout_layers;
  rc.heads = cfg.rollout_heads;
  rc.t_max = cfg.t_max;
  auto rollout_rng = core::Rng::stream(seed, 100);
  b.rollout = mem::RolloutModel<float>::init(rc, rollout_rng);
  auto assoc_rng = core::Rng::stream(seed, 101);
  b.assoc = assoc::AssocParams<float>::init(cfg.dim, cfg.assoc_heads, cfg.variant, assoc_rng);
  return b;
}

}  // namespace slottrack::train
