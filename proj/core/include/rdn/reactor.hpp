#pragma once

#include "rdn/crn.hpp"
#include "rdn/rng.hpp"

namespace rdn {

inline constexpr double kDiffusionMin = 0.05e-5;  // m^2/s
inline constexpr double kDiffusionMax = 0.2e-5;
inline constexpr double kFlowMin = 0.01;  // 1/s
inline constexpr double kFlowMax = 1.0;
inline constexpr double kDefaultCellSize = 0.01;  // m

struct NoiseSettings {
  double amplitude = 0.0;     // max of the per-cell Unif(0, amplitude) draw
  double filter_sigma = 1.0;  // Gaussian low-pass width, cells
};

struct ReactorParams {
  CrnSpec crn;
  std::vector<double> diffusion;  // per species, m^2/s
  double flow_rate = 0.1;         // 1/s, shared across species
  bool flow_pinned = false;       // pinned flows bypass the [0.01, 1] bound
  std::vector<double> feed;       // per-species feed concentration
  NoiseSettings noise;
  double dt = 1.0;   // s
  double h = kDefaultCellSize;
};

/// Parameter bundle as tensors; leaves during optimization, constants in
/// forward-only simulation.
struct ParamTensors {
  Tensor k;     // [2R] rate constants, forward block then reverse block
  Tensor D;     // [N]
  Tensor f;     // [1]
  Tensor feed;  // [N]
};

ParamTensors constant_param_tensors(const ReactorParams& p);
ParamTensors leaf_param_tensors(Tape& tape, const ReactorParams& p);
/// Writes tensor values back into the plain parameter struct.
void update_reactor_params(ReactorParams& p, const ParamTensors& t);

/// 9-point isotropic stencil (1/(6h^2)) [[1,4,1],[4,-20,4],[1,4,1]] with
/// toroidal wrap. Accepts [H,W] or per-species [N,H,W].
Tensor laplacian(const Tensor& field, double h);

/// D_i * lap(X_i) per species; D checked against the stability bounds.
Tensor diffusion_delta(const Tensor& X, const Tensor& D, double h);

/// Normalized periodic Gaussian blur (sigma in cells; sigma <= 0 is identity).
Tensor gaussian_blur_periodic(const Tensor& x, double sigma);

/// Per-cell Unif(0, amplitude) low-pass filtered; values stay in [0, amplitude].
Tensor sample_flow_noise(Rng& rng, int64_t h_cells, int64_t w_cells,
                         double amplitude, double filter_sigma);

/// Flow-reactor exchange: f*(feed - X), or (f + eps)*(feed - X) with noise.
Tensor drive_delta(const Tensor& X, const ParamTensors& p, const Tensor& noise,
                   bool flow_pinned);

struct StepResult {
  Tensor next;   // clamped at zero
  Tensor delta;  // next - X, exactly
  int64_t clamp_events = 0;
};

/// One forward Euler step: X + (rxn + drive + diffusion) * dt, clamped at 0.
StepResult step(const Tensor& X, const CrnSpec& crn, const ParamTensors& p,
                double dt, double h, const Tensor& noise, bool flow_pinned);

struct Trajectory {
  std::vector<Tensor> states;        // T+1 entries
  std::vector<Tensor> deltas;        // T entries, states[t+1] - states[t]
  std::vector<Tensor> noise_fields;  // T entries; undefined tensors when off
  int64_t clamp_events = 0;
  uint64_t noise_base_seed = 0;

  int64_t timesteps() const { return static_cast<int64_t>(deltas.size()); }
};

/// Per-step flow noise stream: deterministic function of (base_seed, t).
Tensor flow_noise_at(uint64_t base_seed, int64_t t, int64_t h_cells,
                     int64_t w_cells, const NoiseSettings& noise);

Trajectory rollout(const Tensor& X0, const ReactorParams& params,
                   const ParamTensors& pt, int64_t T, Rng& rng);
/// Forward-only convenience: parameters enter as constants.
Trajectory rollout(const Tensor& X0, const ReactorParams& params, int64_t T,
                   Rng& rng);

/// The coupled Gray-Scott demo preset: two Gray-Scott subsystems sharing a
/// drive, linked by interconversion of their autocatalysts (5 species).
ReactorParams gray_scott_coupled_params();
Tensor gray_scott_coupled_x0(int64_t h_cells, int64_t w_cells, Rng& rng);

}  // namespace rdn
