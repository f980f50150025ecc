#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "slottrack/core/gradcheck.hpp"
#include "slottrack/core/rng.hpp"
#include "slottrack/loss/emloss.hpp"
#include "slottrack/world/decoder.hpp"

using namespace slottrack;
using namespace slottrack::loss;
using slottrack::core::TensorD;
using slottrack::world::DecoderSpec;

namespace {

TensorD random_latents(int r, const DecoderSpec& spec, core::Rng& rng) {
  std::vector<double> v(static_cast<size_t>(r) * spec.dim);
  for (auto& x : v) x = rng.normal() * 0.8;
  return TensorD::constant(r, spec.dim, v);
}

// Independent plain-loop cost: decode each latent directly, then average.
double oracle_cost(const std::vector<double>& s, const std::vector<double>& m,
                   const LossWeights& w, const DecoderSpec& spec) {
  auto sigm = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  auto decode_one = [&](const std::vector<double>& z, std::vector<double>& mask,
                        std::vector<double>& recon) {
    const double cx = sigm(z[0]), cy = sigm(z[1]);
    const double sx = std::exp(std::clamp(z[2], spec.log_scale_min, spec.log_scale_max));
    const double sy = std::exp(std::clamp(z[3], spec.log_scale_min, spec.log_scale_max));
    mask.resize(spec.pixels());
    recon.resize(3 * spec.pixels());
    for (int r = 0; r < spec.H; ++r)
      for (int c = 0; c < spec.W; ++c) {
        const double dx = (spec.px(c) - cx) / sx, dy = (spec.py(r) - cy) / sy;
        const int p = r * spec.W + c;
        mask[p] = std::exp(-0.5 * (dx * dx + dy * dy));
        for (int ch = 0; ch < 3; ++ch) recon[ch * spec.pixels() + p] = mask[p] * sigm(z[4 + ch]);
      }
  };
  std::vector<double> tm, tr, pm, pr;
  decode_one(s, tm, tr);
  decode_one(m, pm, pr);
  double bce = 0, mse = 0, feat = 0;
  for (int p = 0; p < spec.pixels(); ++p) {
    const double pc = std::clamp(pm[p], kBceEps, 1.0 - kBceEps);
    bce += -(tm[p] * std::log(pc) + (1.0 - tm[p]) * std::log(1.0 - pc));
  }
  bce /= spec.pixels();
  for (int p = 0; p < 3 * spec.pixels(); ++p) mse += (tr[p] - pr[p]) * (tr[p] - pr[p]);
  mse /= 3 * spec.pixels();
  for (int j = 0; j < spec.dim; ++j) feat += (s[j] - m[j]) * (s[j] - m[j]);
  feat /= spec.dim;
  return w.mask_bce * bce + w.pixel_mse * mse + w.feature_mse * feat;
}

std::vector<double> row_of(const TensorD& t, int i) {
  std::vector<double> v(t.cols());
  for (int j = 0; j < t.cols(); ++j) v[j] = t.at(i, j);
  return v;
}

// The normative definition: the explicit double loop over the oracle costs.
double brute_force_em_loss(const TensorD& slots, const TensorD& merged, const TensorD& rollout,
                           const TensorD& index, const LossWeights& w, const DecoderSpec& spec) {
  double total = 0;
  for (int i = 0; i < slots.rows(); ++i)
    for (int j = 0; j < merged.rows(); ++j)
      total += index.at(i, j) * (oracle_cost(row_of(slots, i), row_of(merged, j), w, spec) +
                                 oracle_cost(row_of(slots, i), row_of(rollout, j), w, spec));
  return total;
}

}  // namespace

TEST_CASE("feature-only cost of identical representations is zero") {
  DecoderSpec spec;
  LossWeights w{0.0, 0.0, 1.0};
  core::Rng rng(1);
  auto s = random_latents(1, spec, rng);
  CHECK(assign_cost(s, s, w, spec).item() == 0.0);
}

TEST_CASE("mask BCE of identical representations is the mask self-entropy") {
  DecoderSpec spec;
  LossWeights w{1.0, 0.0, 0.0};
  core::Rng rng(2);
  auto s = random_latents(1, spec, rng);
  const double got = assign_cost(s, s, w, spec).item();
  CHECK(got > 0.0);

  std::vector<float> soft(spec.pixels());
  std::vector<double> z = row_of(s, 0);
  world::decode_mask_raw(z.data(), spec, soft.data());
  double expect = 0;
  for (int p = 0; p < spec.pixels(); ++p) {
    const double v = std::clamp(static_cast<double>(soft[p]), kBceEps, 1.0 - kBceEps);
    expect += -(soft[p] * std::log(v) + (1.0 - soft[p]) * std::log(1.0 - v));
  }
  expect /= spec.pixels();
  CHECK(got == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("feature cost of a unit difference in one of 32 dims is 1/32") {
  DecoderSpec spec;
  LossWeights w{0.0, 0.0, 1.0};
  std::vector<double> a(spec.dim, 0.25), b(spec.dim, 0.25);
  b[5] += 1.0;
  const double got = assign_cost(TensorD::constant(1, spec.dim, a),
                                 TensorD::constant(1, spec.dim, b), w, spec)
                         .item();
  CHECK(got == 1.0 / 32.0);
}

TEST_CASE("em_loss with one slot and one buffer is the sum of two costs") {
  DecoderSpec spec;
  spec.H = spec.W = 8;
  LossWeights w{1.0, 0.1, 0.0};
  core::Rng rng(3);
  auto s = random_latents(1, spec, rng);
  auto m = random_latents(1, spec, rng);
  auto r = random_latents(1, spec, rng);
  auto one = TensorD::constant(1, 1, {1.0});
  const double got = em_loss(s, m, r, one, w, spec).item();
  const double expect = assign_cost(s, m, w, spec).item() + assign_cost(s, r, w, spec).item();
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("one-hot index reduces the expectation to the indicator sum") {
  DecoderSpec spec;
  spec.H = spec.W = 8;
  LossWeights w{1.0, 0.1, 0.05};
  core::Rng rng(4);
  auto slots = random_latents(3, spec, rng);
  auto merged = random_latents(2, spec, rng);
  auto roll = random_latents(2, spec, rng);
  auto hard = TensorD::constant(3, 2, {1, 0, 0, 1, 1, 0});
  const double got = em_loss(slots, merged, roll, hard, w, spec).item();
  double expect = 0;
  const int z[3] = {0, 1, 0};
  for (int i = 0; i < 3; ++i)
    expect += oracle_cost(row_of(slots, i), row_of(merged, z[i]), w, spec) +
              oracle_cost(row_of(slots, i), row_of(roll, z[i]), w, spec);
  CHECK(got == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("vectorized em_loss equals the brute-force double sum") {
  DecoderSpec spec;
  core::Rng rng(5);
  LossWeights w{1.0, 0.1, 0.0};
  for (int trial = 0; trial < 10; ++trial) {
    auto slots = random_latents(3, spec, rng);
    auto merged = random_latents(2, spec, rng);
    auto roll = random_latents(2, spec, rng);
    std::vector<double> iv(6);
    for (int i = 0; i < 3; ++i) {
      double s = 0;
      for (int j = 0; j < 2; ++j) {
        iv[i * 2 + j] = rng.uniform(0.01, 1.0);
        s += iv[i * 2 + j];
      }
      for (int j = 0; j < 2; ++j) iv[i * 2 + j] /= s;
    }
    auto index = TensorD::constant(3, 2, iv);
    const double got = em_loss(slots, merged, roll, index, w, spec).item();
    const double expect = brute_force_em_loss(slots, merged, roll, index, w, spec);
    CHECK(got == doctest::Approx(expect).epsilon(1e-6));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("monotone gating: the loss is linear in the index weights") {
  DecoderSpec spec;
  spec.H = spec.W = 8;
  LossWeights w{1.0, 0.1, 0.0};
  core::Rng rng(6);
  auto slots = random_latents(2, spec, rng);
  auto merged = random_latents(2, spec, rng);
  auto roll = random_latents(2, spec, rng);
  auto i1 = TensorD::constant(2, 2, {0.5, 0.5, 0.3, 0.7});
  auto i2 = TensorD::constant(2, 2, {0.8, 0.2, 0.3, 0.7});
  const double l1 = em_loss(slots, merged, roll, i1, w, spec).item();
  const double l2 = em_loss(slots, merged, roll, i2, w, spec).item();
  double delta = 0;
  for (int j = 0; j < 2; ++j)
    delta += (i2.at(0, j) - i1.at(0, j)) *
             (oracle_cost(row_of(slots, 0), row_of(merged, j), w, spec) +
              oracle_cost(row_of(slots, 0), row_of(roll, j), w, spec));
  CHECK(l2 - l1 == doctest::Approx(delta).epsilon(1e-8));
}

TEST_CASE("grad_check: em_loss on a 3-slot/2-buffer instance") {
  DecoderSpec spec;
  spec.H = spec.W = 8;
  spec.dim = 10;
  LossWeights w{1.0, 0.1, 0.0};
  core::Rng rng(7);
  auto make = [&](int r) {
    std::vector<double> v(static_cast<size_t>(r) * spec.dim);
    for (auto& x : v) x = rng.normal() * 0.8;
    return TensorD::param(r, spec.dim, v);
  };
  auto slots = make(3);
  auto merged = make(2);
  auto roll = make(2);
  auto index = TensorD::param(3, 2, {0.6, 0.4, 0.25, 0.75, 0.5, 0.5});
  auto build = [&]() { return em_loss(slots, merged, roll, index, w, spec); };
  CHECK(core::grad_check_params(build, {slots, merged, roll, index}) < 1e-4);
}

TEST_CASE("stop-gradient flag blocks the index weighting term") {
  DecoderSpec spec;
  spec.H = spec.W = 8;
  LossWeights w{1.0, 0.1, 0.0};
  core::Rng rng(8);
  auto slots = random_latents(2, spec, rng);
  std::vector<double> mv(2 * spec.dim), rv(2 * spec.dim);
  for (auto& x : mv) x = rng.normal() * 0.5;
  for (auto& x : rv) x = rng.normal() * 0.5;
  auto merged = TensorD::param(2, spec.dim, mv);
  auto roll = TensorD::param(2, spec.dim, rv);
  auto index = TensorD::param(2, 2, {0.5, 0.5, 0.4, 0.6});

  index.zero_grad();
  backward(em_loss(slots, merged, roll, index, w, spec, true));
  CHECK(index.has_grad());

  index.zero_grad();
  merged.zero_grad();
  backward(em_loss(slots, merged, roll, index, w, spec, false));
  CHECK(!index.has_grad());
  CHECK(merged.has_grad());
}

TEST_CASE("appendix likelihood assembly differs from the cost by a constant") {
  // -log p assembled from the three likelihoods (per-element normalization):
  //   p1: Bernoulli over pixels with the slot mask as target
  //   p2: N(Dec(m); Dec(s), I) over reconstruction values, exponent 2*l2
  //   p3: N(m; s, I) over feature dims, exponent 2*l3
  DecoderSpec spec;
  spec.H = spec.W = 8;
  LossWeights w{1.0, 0.1, 0.2};
  auto assembled = [&](const std::vector<double>& s, const std::vector<double>& m) {
    auto sigm = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    auto decode_one = [&](const std::vector<double>& z, std::vector<double>& mask,
                          std::vector<double>& recon) {
      const double cx = sigm(z[0]), cy = sigm(z[1]);
      const double sx = std::exp(std::clamp(z[2], spec.log_scale_min, spec.log_scale_max));
      const double sy = std::exp(std::clamp(z[3], spec.log_scale_min, spec.log_scale_max));
      mask.resize(spec.pixels());
      recon.resize(3 * spec.pixels());
      for (int r = 0; r < spec.H; ++r)
        for (int c = 0; c < spec.W; ++c) {
          const double dx = (spec.px(c) - cx) / sx, dy = (spec.py(r) - cy) / sy;
          const int p = r * spec.W + c;
          mask[p] = std::exp(-0.5 * (dx * dx + dy * dy));
          for (int ch = 0; ch < 3; ++ch) recon[ch * spec.pixels() + p] = mask[p] * sigm(z[4 + ch]);
        }
    };
    std::vector<double> tm, tr, pm, pr;
    decode_one(s, tm, tr);
    decode_one(m, pm, pr);
    // log p1 = mean_p [ t log q + (1-t) log(1-q) ]
    double log_p1 = 0;
    for (int p = 0; p < spec.pixels(); ++p) {
      const double q = std::clamp(pm[p], kBceEps, 1.0 - kBceEps);
      log_p1 += tm[p] * std::log(q) + (1.0 - tm[p]) * std::log(1.0 - q);
    }
    log_p1 /= spec.pixels();
    // log p2 = -0.5 mean (x - mu)^2 - 0.5 log 2pi   (per element)
    double sq2 = 0;
    for (int p = 0; p < 3 * spec.pixels(); ++p) sq2 += (tr[p] - pr[p]) * (tr[p] - pr[p]);
    const double log_p2 = -0.5 * sq2 / (3 * spec.pixels()) - 0.5 * std::log(2.0 * M_PI);
    double sq3 = 0;
    for (int j = 0; j < spec.dim; ++j) sq3 += (s[j] - m[j]) * (s[j] - m[j]);
    const double log_p3 = -0.5 * sq3 / spec.dim - 0.5 * std::log(2.0 * M_PI);
    // -log p,  p ~ p1^l1 * p2^(2 l2) * p3^(2 l3)
    return -(w.mask_bce * log_p1 + 2.0 * w.pixel_mse * log_p2 + 2.0 * w.feature_mse * log_p3);
  };

  core::Rng rng(9);
  auto point = [&]() {
    std::vector<double> v(spec.dim);
    for (auto& x : v) x = rng.normal() * 0.8;
    return v;
  };
  auto s1 = point(), m1 = point(), s2 = point(), m2 = point();
  auto cost = [&](const std::vector<double>& s, const std::vector<double>& m) {
    return assign_cost(TensorD::constant(1, spec.dim, s), TensorD::constant(1, spec.dim, m), w, spec)
        .item();
  };
  const double delta1 = assembled(s1, m1) - cost(s1, m1);
  const double delta2 = assembled(s2, m2) - cost(s2, m2);
  CHECK(std::fabs(delta1 - delta2) < 1e-6);
  // the constant is the Gaussian normalizers
  const double expect_c = (w.pixel_mse + w.feature_mse) * std::log(2.0 * M_PI);
  CHECK(delta1 == doctest::Approx(expect_c).epsilon(1e-9));
}

TEST_CASE("loss weight validation") {
  CHECK_THROWS_AS(LossWeights({0.0, 0.0, 0.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(LossWeights({-1.0, 0.1, 0.0}).validate(), std::invalid_argument);
}
