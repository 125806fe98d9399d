#include "rdn/thermo.hpp"

namespace rdn {

Tensor sigma_rxn(const Tensor& X, const CrnSpec& crn, const Tensor& k,
                 const EntropyConfig& cfg) {
  const int R = crn.n_reversible();
  const int64_t H = X.dim(1), W = X.dim(2);
  Tensor rates = reshape(reaction_rates(X, crn, k), {2 * R, H * W});
  Tensor nu_f = max_scalar(slice(rates, 0, 0, R), cfg.rate_floor);
  Tensor nu_r = max_scalar(slice(rates, 0, R, R), cfg.rate_floor);
  // (nu+ - nu-) and ln(nu+) - ln(nu-) share sign, so every summand is >= 0.
  Tensor summand = mul(sub(nu_f, nu_r), sub(log(nu_f), log(nu_r)));
  Tensor per_cell = reduce_sum(summand, {0});
  return reshape(mul(per_cell, Tensor::scalar(cfg.k_B)), {H, W});
}

Tensor sigma_dif(const Tensor& X, const Tensor& D, double h,
                 const EntropyConfig& cfg) {
  if (X.rank() != 3 || D.numel() != X.dim(0)) {
    throw ShapeError("sigma_dif: X [N,H,W] and D [N] required");
  }
  const double inv2h = 1.0 / (2.0 * h);
  // Central differences: dX/du at row i is (X[i+1] - X[i-1]) / 2h.
  Tensor gu = mul(sub(translate(X, 1, -1), translate(X, 1, 1)), Tensor::scalar(inv2h));
  Tensor gv = mul(sub(translate(X, 2, -1), translate(X, 2, 1)), Tensor::scalar(inv2h));
  Tensor grad2 = add(square(gu), square(gv));
  Tensor denom = add(X, Tensor::scalar(cfg.dif_stabilizer));
  Tensor per_species = div(mul(reshape(D, {D.numel(), 1, 1}), grad2), denom);
  return mul(reduce_sum(per_species, {0}), Tensor::scalar(cfg.k_B));
}

EntropyRates entropy_rates(const Tensor& X, const CrnSpec& crn,
                           const ParamTensors& p, double h,
                           const EntropyConfig& cfg) {
  EntropyRates out;
  out.rxn = sigma_rxn(X, crn, p.k, cfg);
  out.dif = sigma_dif(X, p.D, h, cfg);
  out.tot = add(out.rxn, out.dif);
  return out;
}

MeanEntropyRates mean_entropy_rates(const Trajectory& traj, const CrnSpec& crn,
                                    const ParamTensors& p, double h,
                                    const EntropyConfig& cfg) {
  if (traj.states.empty()) throw Error("mean_entropy_rates: empty trajectory");
  Tensor rxn_acc, dif_acc;
  for (const Tensor& X : traj.states) {
    Tensor r = mean_all(sigma_rxn(X, crn, p.k, cfg));
    Tensor d = mean_all(sigma_dif(X, p.D, h, cfg));
    rxn_acc = rxn_acc.defined() ? add(rxn_acc, r) : r;
    dif_acc = dif_acc.defined() ? add(dif_acc, d) : d;
  }
  Tensor inv_n = Tensor::scalar(1.0 / static_cast<double>(traj.states.size()));
  MeanEntropyRates out;
  out.rxn = mul(rxn_acc, inv_n);
  out.dif = mul(dif_acc, inv_n);
  out.tot = add(out.rxn, out.dif);
  return out;
}

}  // namespace rdn
