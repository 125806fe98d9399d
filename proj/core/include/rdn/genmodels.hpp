#pragma once

#include "rdn/params.hpp"
#include "rdn/rng.hpp"

namespace rdn {

struct LatentVector {
  std::vector<int> bits;  // entries in {0,1}
  int64_t size() const { return static_cast<int64_t>(bits.size()); }
};

LatentVector sample_z(Rng& rng, int64_t n_bits);

// Transposed-convolution generator: the latent bits seed a coarse grid which
// is upsampled by repeated (conv-transpose stride 2, batch norm, tanh)
// blocks; the final block drops batch norm and instead applies a bounded
// learned output scale, then a fixed periodic Gaussian blur.
struct GeneratorConfig {
  int64_t n_bits = 16;
  int64_t n_species = 0;
  int64_t out_h = 64, out_w = 64;
  int64_t n_blocks = 0;     // derived from out_h/out_w when 0
  int64_t base_width = 32;  // channels of the last hidden block
  int64_t max_width = 256;
  int64_t kernel = 4;
  double blur_sigma = 1.0;
  double out_max = 10.0;

  int64_t blocks() const;
  int64_t seed_h() const { return out_h >> blocks(); }
  int64_t seed_w() const { return out_w >> blocks(); }
};

struct EncoderConfig {
  int64_t n_bits = 16;
  int64_t n_species = 0;
  int64_t in_h = 64, in_w = 64;
  int64_t n_blocks = 0;
  int64_t base_width = 32;
  int64_t max_width = 256;
  int64_t kernel = 4;

  int64_t blocks() const;
  int64_t final_h() const { return in_h >> blocks(); }
  int64_t final_w() const { return in_w >> blocks(); }
};

/// Registers freshly initialized parameters under "gen.*" / "enc.*".
void init_generator_params(const GeneratorConfig& cfg, Rng& rng, ParamStore& store);
void init_encoder_params(const EncoderConfig& cfg, Rng& rng, ParamStore& store);

/// X0 batch [B, N_s, H, W]; outputs lie in [0, out_max].
Tensor generate_x0_batch(const std::vector<LatentVector>& zs,
                         const GeneratorConfig& cfg, const TensorMap& params);
/// Single sample, [N_s, H, W].
Tensor generate_x0(const LatentVector& z, const GeneratorConfig& cfg,
                   const TensorMap& params);

/// Per-bit logits [B, n_bits] from states [B, N_s, H, W] (or [N_s,H,W]).
/// Bit prediction is logit > 0.
Tensor encode_z(const Tensor& X, const EncoderConfig& cfg, const TensorMap& params);

}  // namespace rdn
