#pragma once

// Autoregressive rollout over stored memory states: a small pre-norm causal
// transformer (GPT-2 layout) applied to each buffer's ring independently.
// Buffers are batched through one forward pass by concatenating their
// sequences and using a block-diagonal causal attention mask, which is
// equivalent to per-buffer evaluation.

#include <string>
#include <vector>

#include "slottrack/core/attention.hpp"
#include "slottrack/core/tensor.hpp"
#include "slottrack/mem/bank.hpp"

namespace slottrack::mem {

struct RolloutConfig {
  int dim = 32;  // memory representation width
  int width = 64;
  int layers = 2;
  int heads = 4;
  int t_max = 6;
};

template <typename T>
struct LayerNormParams {
  core::Tensor<T> gamma, beta;

  static LayerNormParams init(int n) {
    return {core::Tensor<T>::from(1, n, std::vector<T>(n, T(1)), true),
            core::Tensor<T>::from(1, n, std::vector<T>(n, T(0)), true)};
  }
};

template <typename T>
class RolloutModel {
 public:
  struct Block {
    LayerNormParams<T> ln1, ln2;
    core::MhaParams<T> attn;
    core::Tensor<T> fc1_w, fc1_b, fc2_w, fc2_b;
  };

  RolloutModel() = default;

  static RolloutModel init(const RolloutConfig& cfg, core::Rng& rng) {
    RolloutModel m;
    m.cfg_ = cfg;
    auto uniform = [&rng](int r, int c) {
      const double s = 1.0 / std::sqrt(static_cast<double>(r));
      std::vector<T> v(static_cast<size_t>(r) * c);
      for (auto& x : v) x = static_cast<T>(rng.uniform(-s, s));
      return core::Tensor<T>::param(r, c, std::move(v));
    };
    auto zeros = [](int c) {
      return core::Tensor<T>::from(1, c, std::vector<T>(c, T(0)), true);
    };
    m.embed_w_ = uniform(cfg.dim, cfg.width);
    m.embed_b_ = zeros(cfg.width);
    m.pos_ = uniform(cfg.t_max, cfg.width);
    for (int l = 0; l < cfg.layers; ++l) {
      Block b;
      b.ln1 = LayerNormParams<T>::init(cfg.width);
      b.attn = core::MhaParams<T>::init(cfg.width, cfg.heads, rng);
      b.ln2 = LayerNormParams<T>::init(cfg.width);
      b.fc1_w = uniform(cfg.width, 4 * cfg.width);
      b.fc1_b = zeros(4 * cfg.width);
      b.fc2_w = uniform(4 * cfg.width, cfg.width);
      b.fc2_b = zeros(cfg.width);
      m.blocks_.push_back(std::move(b));
    }
    m.lnf_ = LayerNormParams<T>::init(cfg.width);
    m.out_w_ = uniform(cfg.width, cfg.dim);
    m.out_b_ = zeros(cfg.dim);
    return m;
  }

  const RolloutConfig& config() const { return cfg_; }

  // sequences: per buffer, its stored entries oldest first (each len_i >= 1,
  // len_i <= t_max). Returns one row per buffer: the transformer output at the
  // last occupied position.
  core::Tensor<T> forward_last(const std::vector<core::Tensor<T>>& sequences) const {
    if (sequences.empty()) throw std::invalid_argument("rollout: no sequences");
    std::vector<int> lengths;
    for (const auto& s : sequences) {
      if (s.cols() != cfg_.dim) throw std::invalid_argument("rollout: entry width mismatch");
      if (s.rows() < 1 || s.rows() > cfg_.t_max)
        throw std::invalid_argument("rollout: sequence length out of range");
      lengths.push_back(s.rows());
    }
    auto x = core::concat_rows(sequences);
    auto all = forward_all(x, lengths);
    std::vector<int> last;
    int off = 0;
    for (int len : lengths) {
      last.push_back(off + len - 1);
      off += len;
    }
    return core::gather_rows(all, last);
  }

  // Outputs at every position of a single sequence; the causality test hook.
  core::Tensor<T> forward_positions(const core::Tensor<T>& seq) const {
    return forward_all(seq, {seq.rows()});
  }

  std::vector<std::pair<std::string, core::Tensor<T>>> named_params() const {
    std::vector<std::pair<std::string, core::Tensor<T>>> out;
    out.emplace_back("rollout.embed.w", embed_w_);
    out.emplace_back("rollout.embed.b", embed_b_);
    out.emplace_back("rollout.pos", pos_);
    for (size_t l = 0; l < blocks_.size(); ++l) {
      const auto& b = blocks_[l];
      const std::string p = "rollout.block" + std::to_string(l) + ".";
      out.emplace_back(p + "ln1.g", b.ln1.gamma);
      out.emplace_back(p + "ln1.b", b.ln1.beta);
      out.emplace_back(p + "attn.wq", b.attn.wq);
      out.emplace_back(p + "attn.bq", b.attn.bq);
      out.emplace_back(p + "attn.wk", b.attn.wk);
      out.emplace_back(p + "attn.bk", b.attn.bk);
      out.emplace_back(p + "attn.wv", b.attn.wv);
      out.emplace_back(p + "attn.bv", b.attn.bv);
      out.emplace_back(p + "attn.wo", b.attn.wo);
      out.emplace_back(p + "attn.bo", b.attn.bo);
      out.emplace_back(p + "ln2.g", b.ln2.gamma);
      out.emplace_back(p + "ln2.b", b.ln2.beta);
      out.emplace_back(p + "fc1.w", b.fc1_w);
      out.emplace_back(p + "fc1.b", b.fc1_b);
      out.emplace_back(p + "fc2.w", b.fc2_w);
      out.emplace_back(p + "fc2.b", b.fc2_b);
    }
    out.emplace_back("rollout.lnf.g", lnf_.gamma);
    out.emplace_back("rollout.lnf.b", lnf_.beta);
    out.emplace_back("rollout.out.w", out_w_);
    out.emplace_back("rollout.out.b", out_b_);
    return out;
  }

 private:
  core::Tensor<T> forward_all(const core::Tensor<T>& input, const std::vector<int>& lengths) const {
    const int P = input.rows();

    std::vector<int> pos_idx;
    pos_idx.reserve(P);
    for (int len : lengths)
      for (int t = 0; t < len; ++t) pos_idx.push_back(t);

    // block-diagonal causal mask
    std::vector<T> mv(static_cast<size_t>(P) * P, T(0));
    int off = 0;
    for (int len : lengths) {
      for (int q = 0; q < len; ++q)
        for (int k = 0; k <= q; ++k) mv[static_cast<long>(off + q) * P + off + k] = T(1);
      off += len;
    }
    auto mask = core::Tensor<T>::constant(P, P, std::move(mv));

    auto x = add(add(matmul(input, embed_w_), broadcast_row(embed_b_, P)),
                 gather_rows(pos_, pos_idx));
    for (const auto& b : blocks_) {
      auto h = core::layer_norm(x, b.ln1.gamma, b.ln1.beta, static_cast<T>(1e-5));
      x = add(x, core::multi_head_attention(h, h, h, &mask, b.attn).output);
      auto h2 = core::layer_norm(x, b.ln2.gamma, b.ln2.beta, static_cast<T>(1e-5));
      auto f = add(matmul(gelu(add(matmul(h2, b.fc1_w), broadcast_row(b.fc1_b, P))), b.fc2_w),
                   broadcast_row(b.fc2_b, P));
      x = add(x, f);
    }
    x = core::layer_norm(x, lnf_.gamma, lnf_.beta, static_cast<T>(1e-5));
    return add(matmul(x, out_w_), broadcast_row(out_b_, P));
  }

  RolloutConfig cfg_;
  core::Tensor<T> embed_w_, embed_b_, pos_;
  std::vector<Block> blocks_;
  LayerNormParams<T> lnf_;
  core::Tensor<T> out_w_, out_b_;
};

// Rollout over every alive buffer, row order by ascending buffer id.
template <typename T>
core::Tensor<T> rollout(const MemoryBank<T>& bank, const RolloutModel<T>& model) {
  std::vector<core::Tensor<T>> sequences;
  for (int id : bank.live_ids()) {
    const auto& ring = bank.buffer(id).ring;
    if (ring.empty()) throw std::runtime_error("rollout: alive buffer with empty ring");
    std::vector<core::Tensor<T>> entries;
    for (const auto& e : ring) entries.push_back(e.repr);
    sequences.push_back(core::concat_rows(entries));
  }
  if (sequences.empty()) throw std::runtime_error("rollout: no alive buffers");
  return model.forward_last(sequences);
}

}  // namespace slottrack::mem
