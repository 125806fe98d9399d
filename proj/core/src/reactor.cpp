#include "rdn/reactor.hpp"

#include <cmath>

namespace rdn {

ParamTensors constant_param_tensors(const ReactorParams& p) {
  ParamTensors t;
  t.k = Tensor::constant({p.crn.n_directed()}, p.crn.rate_vector());
  t.D = Tensor::constant({static_cast<int64_t>(p.diffusion.size())}, p.diffusion);
  t.f = Tensor::constant({1}, {p.flow_rate});
  t.feed = Tensor::constant({static_cast<int64_t>(p.feed.size())}, p.feed);
  return t;
}

ParamTensors leaf_param_tensors(Tape& tape, const ReactorParams& p) {
  ParamTensors t;
  t.k = tape.leaf({p.crn.n_directed()}, p.crn.rate_vector());
  t.D = tape.leaf({static_cast<int64_t>(p.diffusion.size())}, p.diffusion);
  t.f = tape.leaf({1}, {p.flow_rate});
  t.feed = tape.leaf({static_cast<int64_t>(p.feed.size())}, p.feed);
  return t;
}

void update_reactor_params(ReactorParams& p, const ParamTensors& t) {
  auto kv = t.k.values();
  p.crn.set_rate_vector({kv.data(), kv.size()});
  p.diffusion.assign(t.D.values().begin(), t.D.values().end());
  p.flow_rate = t.f.item();
  p.feed.assign(t.feed.values().begin(), t.feed.values().end());
}

Tensor laplacian(const Tensor& field, double h) {
  const double s = 1.0 / (6.0 * h * h);
  Tensor kernel = Tensor::constant(
      {3, 3}, {s, 4 * s, s, 4 * s, -20 * s, 4 * s, s, 4 * s, s});
  if (field.rank() == 2) {
    Tensor x3 = reshape(field, {1, field.dim(0), field.dim(1)});
    return reshape(conv2d_depthwise_periodic(x3, kernel), field.shape());
  }
  if (field.rank() == 3) {
    return conv2d_depthwise_periodic(field, kernel);
  }
  throw ShapeError("laplacian expects [H,W] or [N,H,W], got " +
                   shape_str(field.shape()));
}

Tensor diffusion_delta(const Tensor& X, const Tensor& D, double h) {
  if (X.rank() != 3 || D.numel() != X.dim(0)) {
    throw ShapeError("diffusion_delta: X [N,H,W] and D [N] required");
  }
  for (double d : D.values()) {
    if (d < kDiffusionMin - 1e-15 || d > kDiffusionMax + 1e-15) {
      throw Error("diffusion coefficient " + std::to_string(d) +
                  " outside stable range [5e-07, 2e-06]");
    }
  }
  Tensor lap = laplacian(X, h);
  return mul(reshape(D, {D.numel(), 1, 1}), lap);
}

Tensor gaussian_blur_periodic(const Tensor& x, double sigma) {
  if (sigma <= 0.0) return x;
  const int64_t r = static_cast<int64_t>(std::ceil(3.0 * sigma));
  const int64_t k = 2 * r + 1;
  std::vector<double> w(static_cast<size_t>(k * k));
  double total = 0.0;
  for (int64_t i = 0; i < k; ++i) {
    for (int64_t j = 0; j < k; ++j) {
      const double di = static_cast<double>(i - r), dj = static_cast<double>(j - r);
      const double v = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      w[static_cast<size_t>(i * k + j)] = v;
      total += v;
    }
  }
  for (double& v : w) v /= total;  // unit mass; blur conserves domain totals
  Tensor kernel = Tensor::constant({k, k}, std::move(w));
  if (x.rank() == 2) {
    Tensor x3 = reshape(x, {1, x.dim(0), x.dim(1)});
    return reshape(conv2d_depthwise_periodic(x3, kernel), x.shape());
  }
  return conv2d_depthwise_periodic(x, kernel);
}

Tensor sample_flow_noise(Rng& rng, int64_t h_cells, int64_t w_cells,
                         double amplitude, double filter_sigma) {
  if (amplitude < 0) throw Error("noise amplitude must be >= 0");
  std::vector<double> v(static_cast<size_t>(h_cells * w_cells));
  for (double& x : v) x = rng.uniform(0.0, amplitude);
  Tensor field = Tensor::constant({h_cells, w_cells}, std::move(v));
  if (amplitude == 0.0) return field;
  return gaussian_blur_periodic(field, filter_sigma);
}

Tensor flow_noise_at(uint64_t base_seed, int64_t t, int64_t h_cells,
                     int64_t w_cells, const NoiseSettings& noise) {
  Rng r = Rng(base_seed).split(static_cast<uint64_t>(t) + 1);
  return sample_flow_noise(r, h_cells, w_cells, noise.amplitude, noise.filter_sigma);
}

Tensor drive_delta(const Tensor& X, const ParamTensors& p, const Tensor& noise,
                   bool flow_pinned) {
  const double fv = p.f.item();
  if (!flow_pinned && (fv < kFlowMin || fv > kFlowMax)) {
    throw Error("flow rate " + std::to_string(fv) + " outside [0.01, 1.0]");
  }
  Tensor feed_b = reshape(p.feed, {p.feed.numel(), 1, 1});
  Tensor inflow_gap = sub(feed_b, X);
  if (!noise.defined()) {
    return mul(p.f, inflow_gap);
  }
  Tensor f_field = add(p.f, reshape(noise, {1, noise.dim(0), noise.dim(1)}));
  return mul(f_field, inflow_gap);
}

StepResult step(const Tensor& X, const CrnSpec& crn, const ParamTensors& p,
                double dt, double h, const Tensor& noise, bool flow_pinned) {
  if (dt <= 0) throw Error("time step must be positive");
  Tensor rate = add(add(reaction_delta(X, crn, p.k), drive_delta(X, p, noise, flow_pinned)),
                    diffusion_delta(X, p.D, h));
  Tensor raw_next = add(X, mul(rate, Tensor::scalar(dt)));
  StepResult out;
  for (double v : raw_next.values()) {
    if (v < 0.0) ++out.clamp_events;
  }
  out.next = max_scalar(raw_next, 0.0);
  out.delta = sub(out.next, X);
  return out;
}

Trajectory rollout(const Tensor& X0, const ReactorParams& params,
                   const ParamTensors& pt, int64_t T, Rng& rng) {
  if (T < 0) throw Error("rollout: negative step count");
  Trajectory traj;
  traj.states.reserve(static_cast<size_t>(T + 1));
  traj.states.push_back(X0);
  traj.noise_base_seed = rng.next_u64();
  const bool noisy = params.noise.amplitude > 0;
  const int64_t H = X0.dim(1), W = X0.dim(2);
  for (int64_t t = 0; t < T; ++t) {
    Tensor eps;
    if (noisy) {
      eps = flow_noise_at(traj.noise_base_seed, t, H, W, params.noise);
    }
    try {
      StepResult s = step(traj.states.back(), params.crn, pt, params.dt, params.h,
                          eps, params.flow_pinned);
      traj.states.push_back(s.next);
      traj.deltas.push_back(s.delta);
      traj.noise_fields.push_back(eps);
      traj.clamp_events += s.clamp_events;
    } catch (const NumericError& e) {
      throw NumericError("rollout failed at step " + std::to_string(t) + ": " +
                         e.what());
    }
  }
  return traj;
}

Trajectory rollout(const Tensor& X0, const ReactorParams& params, int64_t T,
                   Rng& rng) {
  ParamTensors pt = constant_param_tensors(params);
  return rollout(X0, params, pt, T, rng);
}

// ---------------------------------------------------------------------------
// Coupled Gray-Scott demo: species U1,V1,U2,V2,P. Each (Ui,Vi) pair runs the
// classic substrate/autocatalyst scheme Ui+2Vi -> 3Vi with decay Vi -> P; the
// two autocatalysts interconvert via V1 <-> V2. Kinetics are scaled to the
// diffusion range this model permits.

ReactorParams gray_scott_coupled_params() {
  const double speed = 0.1;  // global kinetic scale relative to textbook rates
  ReactorParams p;
  p.crn = build_dense_crn(5, {Prototype::P1, Prototype::P2, Prototype::P3});
  // Indices: U1=0, V1=1, U2=2, V2=3, P=4. All rates start at zero.
  for (Reaction& r : p.crn.reactions) {
    if (r.proto == Prototype::P3 && r.species[0] == 0 && r.species[1] == 1) {
      r.k_f = 1.0 * speed;  // U1 + 2V1 -> 3V1
    }
    if (r.proto == Prototype::P3 && r.species[0] == 2 && r.species[1] == 3) {
      r.k_f = 1.0 * speed;  // U2 + 2V2 -> 3V2
    }
    if (r.proto == Prototype::P2 && r.species[0] == 1 && r.species[1] == 4) {
      r.k_f = 0.062 * speed;  // V1 -> P (kill)
    }
    if (r.proto == Prototype::P2 && r.species[0] == 3 && r.species[1] == 4) {
      r.k_f = 0.061 * speed;  // V2 -> P
    }
    if (r.proto == Prototype::P2 && r.species[0] == 1 && r.species[1] == 3) {
      r.k_f = 0.004 * speed;  // V1 <-> V2 coupling
      r.k_r = 0.004 * speed;
    }
  }
  p.diffusion = {2.0e-6, 1.0e-6, 2.0e-6, 1.0e-6, 1.0e-6};
  p.flow_rate = 0.035 * speed;
  p.flow_pinned = true;  // below the optimizer bound; fixed by the preset
  p.feed = {1.0, 0.0, 1.0, 0.0, 0.0};
  p.dt = 1.0;
  return p;
}

Tensor gray_scott_coupled_x0(int64_t h_cells, int64_t w_cells, Rng& rng) {
  const int64_t n = 5;
  std::vector<double> v(static_cast<size_t>(n * h_cells * w_cells), 0.0);
  auto at = [&](int64_t s, int64_t i, int64_t j) -> double& {
    return v[static_cast<size_t>((s * h_cells + i) * w_cells + j)];
  };
  for (int64_t i = 0; i < h_cells; ++i) {
    for (int64_t j = 0; j < w_cells; ++j) {
      at(0, i, j) = 1.0;
      at(2, i, j) = 1.0;
    }
  }
  // Two seeded patches, one per subsystem, with slight noise to break symmetry.
  auto patch = [&](int64_t s, int64_t ci, int64_t cj, int64_t r) {
    for (int64_t i = ci - r; i <= ci + r; ++i) {
      for (int64_t j = cj - r; j <= cj + r; ++j) {
        const int64_t ii = (i % h_cells + h_cells) % h_cells;
        const int64_t jj = (j % w_cells + w_cells) % w_cells;
        at(s, ii, jj) = 0.25 + 0.05 * rng.uniform();
        at(s - 1, ii, jj) = 0.5;
      }
    }
  };
  patch(1, h_cells / 3, w_cells / 3, h_cells / 10 + 2);
  patch(3, (2 * h_cells) / 3, (2 * w_cells) / 3, h_cells / 10 + 2);
  return Tensor::constant({n, h_cells, w_cells}, std::move(v));
}

}  // namespace rdn
