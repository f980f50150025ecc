#pragma once

// Frozen analytic decoder shared by slots and memory. A latent decodes to an
// axis-aligned Gaussian blob mask plus a color reconstruction:
//   mask(x,y) = exp(-0.5 [((x-cx)/sx)^2 + ((y-cy)/sy)^2])
//   recon_c   = mask * sigmoid(color_c)
// with cx,cy the sigmoid of the position dims and sx,sy the exp of the
// clamped log-scale dims. No trainable parameters.

#include <vector>

#include "slottrack/core/tensor.hpp"

namespace slottrack::world {

struct DecoderSpec {
  int H = 32, W = 32;
  int dim = 32;
  int idx_cx = 0, idx_cy = 1, idx_lsx = 2, idx_lsy = 3, idx_color = 4;
  double log_scale_min = -5.0, log_scale_max = 0.0;

  int pixels() const { return H * W; }
  // pixel centers in scene units
  double px(int col) const { return (col + 0.5) / W; }
  double py(int row) const { return (row + 0.5) / H; }
};

template <typename T>
struct Decoded {
  core::Tensor<T> mask;   // R x H*W in (0,1)
  core::Tensor<T> recon;  // R x 3*H*W, channel-major blocks
};

namespace detail {

template <typename T>
core::Tensor<T> grid_row(const DecoderSpec& spec, bool horizontal) {
  std::vector<T> v(spec.pixels());
  for (int r = 0; r < spec.H; ++r)
    for (int c = 0; c < spec.W; ++c)
      v[static_cast<long>(r) * spec.W + c] =
          static_cast<T>(horizontal ? spec.px(c) : spec.py(r));
  return core::Tensor<T>::constant(1, spec.pixels(), std::move(v));
}

}  // namespace detail

// Decodes a batch of latents (R x dim). Differentiable in z.
template <typename T>
Decoded<T> decode(const core::Tensor<T>& z, const DecoderSpec& spec) {
  using core::Tensor;
  if (z.cols() != spec.dim) throw std::invalid_argument("decode: latent width mismatch");
  const int R = z.rows(), P = spec.pixels();

  auto cx = sigmoid(slice_cols(z, spec.idx_cx, 1));
  auto cy = sigmoid(slice_cols(z, spec.idx_cy, 1));
  auto inv_sx = reciprocal(exp(clamp(slice_cols(z, spec.idx_lsx, 1),
                                     static_cast<T>(spec.log_scale_min),
                                     static_cast<T>(spec.log_scale_max))));
  auto inv_sy = reciprocal(exp(clamp(slice_cols(z, spec.idx_lsy, 1),
                                     static_cast<T>(spec.log_scale_min),
                                     static_cast<T>(spec.log_scale_max))));

  auto gx = broadcast_row(detail::grid_row<T>(spec, true), R);
  auto gy = broadcast_row(detail::grid_row<T>(spec, false), R);
  auto qx = mul(sub(gx, broadcast_col(cx, P)), broadcast_col(inv_sx, P));
  auto qy = mul(sub(gy, broadcast_col(cy, P)), broadcast_col(inv_sy, P));
  auto mask = exp(mul_scalar(add(mul(qx, qx), mul(qy, qy)), static_cast<T>(-0.5)));

  std::vector<Tensor<T>> channels;
  for (int c = 0; c < 3; ++c) {
    auto col = sigmoid(slice_cols(z, spec.idx_color + c, 1));
    channels.push_back(mul(mask, broadcast_col(col, P)));
  }

  Decoded<T> out;
  out.mask = mask;
  out.recon = concat_cols(channels);
  return out;
}

// Plain single-latent mask evaluation for the inference and metric paths.
template <typename T>
void decode_mask_raw(const T* z, const DecoderSpec& spec, float* out) {
  auto sigm = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const double cx = sigm(z[spec.idx_cx]);
  const double cy = sigm(z[spec.idx_cy]);
  const double sx = std::exp(std::clamp(static_cast<double>(z[spec.idx_lsx]),
                                        spec.log_scale_min, spec.log_scale_max));
  const double sy = std::exp(std::clamp(static_cast<double>(z[spec.idx_lsy]),
                                        spec.log_scale_min, spec.log_scale_max));
  for (int r = 0; r < spec.H; ++r) {
    const double dy = (spec.py(r) - cy) / sy;
    for (int c = 0; c < spec.W; ++c) {
      const double dx = (spec.px(c) - cx) / sx;
      out[static_cast<long>(r) * spec.W + c] =
          static_cast<float>(std::exp(-0.5 * (dx * dx + dy * dy)));
    }
  }
}

}  // namespace slottrack::world
