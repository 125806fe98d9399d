#pragma once

#include "rdn/reactor.hpp"

namespace rdn {

struct EntropyConfig {
  double k_B = 1.0;            // natural units by default; concentrations are arbitrary
  double rate_floor = 1e-5;    // nu stabilizer
  double dif_stabilizer = 0.1; // added to X in the diffusion denominator
};

/// Reaction entropy production rate per cell:
///   k_B * sum_j (nu_j+ - nu_j-) ln(nu_j+/nu_j-), nu := max(nu, rate_floor).
/// Zero exactly under detailed balance; non-negative everywhere.
Tensor sigma_rxn(const Tensor& X, const CrnSpec& crn, const Tensor& k,
                 const EntropyConfig& cfg = {});

/// Diffusion entropy production rate per cell:
///   k_B * sum_i D_i / (X_i + 0.1) * |grad X_i|^2,
/// with central differences at spacing h and periodic wrap.
Tensor sigma_dif(const Tensor& X, const Tensor& D, double h,
                 const EntropyConfig& cfg = {});

struct EntropyRates {
  Tensor rxn;  // per-cell [H,W]
  Tensor dif;
  Tensor tot;
};

EntropyRates entropy_rates(const Tensor& X, const CrnSpec& crn,
                           const ParamTensors& p, double h,
                           const EntropyConfig& cfg = {});

struct MeanEntropyRates {
  Tensor rxn;  // scalars, differentiable
  Tensor dif;
  Tensor tot;
};

/// Arithmetic means over cells and trajectory states ("average of the
/// instantaneous rates" rather than the integrated entropy change).
MeanEntropyRates mean_entropy_rates(const Trajectory& traj, const CrnSpec& crn,
                                    const ParamTensors& p, double h,
                                    const EntropyConfig& cfg = {});

}  // namespace rdn
