#include "rdn/crn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rdn {

const char* prototype_name(Prototype p) {
  switch (p) {
    case Prototype::P1: return "P1";
    case Prototype::P2: return "P2";
    case Prototype::P3: return "P3";
  }
  return "?";
}

int CrnSpec::count(Prototype p) const {
  int c = 0;
  for (const Reaction& r : reactions) c += r.proto == p ? 1 : 0;
  return c;
}

namespace {

// Forward-direction stoichiometry of one reversible reaction.
void stoich_of(const Reaction& r, int n, std::vector<int>& reactants,
               std::vector<int>& products) {
  reactants.assign(static_cast<size_t>(n), 0);
  products.assign(static_cast<size_t>(n), 0);
  switch (r.proto) {
    case Prototype::P1:
      reactants[static_cast<size_t>(r.species[0])] = 1;
      reactants[static_cast<size_t>(r.species[1])] = 1;
      products[static_cast<size_t>(r.species[2])] = 2;
      break;
    case Prototype::P2:
      reactants[static_cast<size_t>(r.species[0])] = 1;
      products[static_cast<size_t>(r.species[1])] = 1;
      break;
    case Prototype::P3:
      reactants[static_cast<size_t>(r.species[0])] = 1;
      reactants[static_cast<size_t>(r.species[1])] = 2;
      products[static_cast<size_t>(r.species[1])] = 3;
      break;
  }
}

}  // namespace

StoichMatrices CrnSpec::stoichiometry() const {
  StoichMatrices m;
  m.n_species = n_species;
  m.n_reversible = n_reversible();
  const int R = m.n_reversible;
  const int N = n_species;
  m.order.assign(static_cast<size_t>(2 * R * N), 0);
  m.net.assign(static_cast<size_t>(2 * R * N), 0);
  std::vector<int> re, pr;
  for (int j = 0; j < R; ++j) {
    stoich_of(reactions[static_cast<size_t>(j)], N, re, pr);
    for (int i = 0; i < N; ++i) {
      m.order[static_cast<size_t>(j * N + i)] = re[static_cast<size_t>(i)];
      m.order[static_cast<size_t>((R + j) * N + i)] = pr[static_cast<size_t>(i)];
      m.net[static_cast<size_t>(j * N + i)] =
          pr[static_cast<size_t>(i)] - re[static_cast<size_t>(i)];
      m.net[static_cast<size_t>((R + j) * N + i)] =
          re[static_cast<size_t>(i)] - pr[static_cast<size_t>(i)];
    }
  }
  return m;
}

std::vector<double> CrnSpec::rate_vector() const {
  const int R = n_reversible();
  std::vector<double> k(static_cast<size_t>(2 * R));
  for (int j = 0; j < R; ++j) {
    k[static_cast<size_t>(j)] = reactions[static_cast<size_t>(j)].k_f;
    k[static_cast<size_t>(R + j)] = reactions[static_cast<size_t>(j)].k_r;
  }
  return k;
}

void CrnSpec::set_rate_vector(std::span<const double> k) {
  const int R = n_reversible();
  if (static_cast<int>(k.size()) != 2 * R) {
    throw ShapeError("rate vector length must be " + std::to_string(2 * R));
  }
  for (int j = 0; j < R; ++j) {
    if (k[static_cast<size_t>(j)] < 0 || k[static_cast<size_t>(R + j)] < 0) {
      throw Error("rate constants must be non-negative");
    }
    reactions[static_cast<size_t>(j)].k_f = k[static_cast<size_t>(j)];
    reactions[static_cast<size_t>(j)].k_r = k[static_cast<size_t>(R + j)];
  }
}

CrnSpec build_dense_crn(int n_species, const std::vector<Prototype>& prototypes) {
  if (n_species < 2) throw Error("dense CRN requires at least 2 species");
  CrnSpec crn;
  crn.n_species = n_species;
  crn.prototypes = prototypes;
  std::sort(crn.prototypes.begin(), crn.prototypes.end());
  crn.prototypes.erase(std::unique(crn.prototypes.begin(), crn.prototypes.end()),
                       crn.prototypes.end());

  auto enabled = [&](Prototype p) {
    return std::find(crn.prototypes.begin(), crn.prototypes.end(), p) !=
           crn.prototypes.end();
  };

  if (enabled(Prototype::P1)) {
    if (n_species < 3) throw Error("prototype P1 (A+B<->2C) requires >= 3 species");
    // Unordered reactant pair {a,b} (mass action is symmetric in the pair),
    // any third species c.
    for (int a = 0; a < n_species; ++a) {
      for (int b = a + 1; b < n_species; ++b) {
        for (int c = 0; c < n_species; ++c) {
          if (c == a || c == b) continue;
          crn.reactions.push_back({Prototype::P1, {a, b, c}, 0.0, 0.0});
        }
      }
    }
  }
  if (enabled(Prototype::P2)) {
    for (int a = 0; a < n_species; ++a) {
      for (int b = a + 1; b < n_species; ++b) {
        crn.reactions.push_back({Prototype::P2, {a, b, -1}, 0.0, 0.0});
      }
    }
  }
  if (enabled(Prototype::P3)) {
    for (int a = 0; a < n_species; ++a) {
      for (int b = 0; b < n_species; ++b) {
        if (a == b) continue;
        crn.reactions.push_back({Prototype::P3, {a, b, -1}, 0.0, 0.0});
      }
    }
  }
  return crn;
}

std::string species_name(int i) {
  if (i < 26) return std::string(1, static_cast<char>('A' + i));
  return "S" + std::to_string(i);
}

namespace {

std::string fmt_rate(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

std::string side_string(const std::vector<int>& stoich) {
  std::string out;
  bool first = true;
  for (size_t i = 0; i < stoich.size(); ++i) {
    if (stoich[i] == 0) continue;
    if (!first) out += " + ";
    out += std::to_string(stoich[i]) + " " + species_name(static_cast<int>(i));
    first = false;
  }
  return out;
}

}  // namespace

std::string reaction_line(const Reaction& r) {
  const int n = 1 + std::max({r.species[0], r.species[1], r.species[2]});
  std::vector<int> re, pr;
  stoich_of(r, n, re, pr);
  return side_string(re) + " <-> " + side_string(pr) + " | kf=" + fmt_rate(r.k_f) +
         " kr=" + fmt_rate(r.k_r);
}

std::string format_reactions(const CrnSpec& crn) {
  std::string out;
  for (const Reaction& r : crn.reactions) {
    out += reaction_line(r);
    out += "\n";
  }
  return out;
}

namespace {

// Reactions grouped by (prototype, direction) share an algebraic form, so
// the whole rate field reduces to a few gathers (matmuls) and elementwise
// products, exactly the matrix formulation of mass-action kinetics.
struct ProtoBlock {
  Prototype proto;
  int offset;  // index of first reaction of this prototype (reversible order)
  int count;
};

std::vector<ProtoBlock> proto_blocks(const CrnSpec& crn) {
  std::vector<ProtoBlock> blocks;
  int idx = 0;
  for (Prototype p : {Prototype::P1, Prototype::P2, Prototype::P3}) {
    const int c = crn.count(p);
    if (c > 0) blocks.push_back({p, idx, c});
    idx += c;
  }
  return blocks;
}

/// [rows x N] 0/1 matrix selecting species `which` of each reaction in the block.
Tensor gather_matrix(const CrnSpec& crn, const ProtoBlock& blk, int which) {
  std::vector<double> g(static_cast<size_t>(blk.count * crn.n_species), 0.0);
  for (int r = 0; r < blk.count; ++r) {
    const Reaction& rx = crn.reactions[static_cast<size_t>(blk.offset + r)];
    g[static_cast<size_t>(r * crn.n_species + rx.species[which])] = 1.0;
  }
  return Tensor::constant({blk.count, crn.n_species}, std::move(g));
}

void check_concentrations(const Tensor& X) {
  for (double v : X.values()) {
    if (v < -1e-12) {
      throw NumericError("negative concentration below tolerance: " +
                         std::to_string(v));
    }
  }
}

}  // namespace

Tensor reaction_rates(const Tensor& X, const CrnSpec& crn, const Tensor& k) {
  if (X.rank() != 3 || X.dim(0) != crn.n_species) {
    throw ShapeError("reaction_rates: X must be [N,H,W] with N=" +
                     std::to_string(crn.n_species) + ", got " + shape_str(X.shape()));
  }
  const int R = crn.n_reversible();
  if (k.numel() != 2 * R) {
    throw ShapeError("reaction_rates: rate vector must have 2R=" +
                     std::to_string(2 * R) + " entries");
  }
  check_concentrations(X);
  const int64_t H = X.dim(1), W = X.dim(2);
  const int64_t M = H * W;
  Tensor Xm = reshape(X, {crn.n_species, M});

  auto blocks = proto_blocks(crn);
  auto k_col = [&](int offset, int count) {
    return reshape(slice(k, 0, offset, count), {count, 1});
  };

  std::vector<Tensor> fwd, rev;
  for (const ProtoBlock& blk : blocks) {
    Tensor kf = k_col(blk.offset, blk.count);
    Tensor kr = k_col(R + blk.offset, blk.count);
    switch (blk.proto) {
      case Prototype::P1: {
        Tensor xa = matmul(gather_matrix(crn, blk, 0), Xm);
        Tensor xb = matmul(gather_matrix(crn, blk, 1), Xm);
        Tensor xc = matmul(gather_matrix(crn, blk, 2), Xm);
        fwd.push_back(mul(kf, mul(xa, xb)));
        rev.push_back(mul(kr, pow_int(xc, 2)));
        break;
      }
      case Prototype::P2: {
        Tensor xa = matmul(gather_matrix(crn, blk, 0), Xm);
        Tensor xb = matmul(gather_matrix(crn, blk, 1), Xm);
        fwd.push_back(mul(kf, xa));
        rev.push_back(mul(kr, xb));
        break;
      }
      case Prototype::P3: {
        Tensor xa = matmul(gather_matrix(crn, blk, 0), Xm);
        Tensor xb = matmul(gather_matrix(crn, blk, 1), Xm);
        fwd.push_back(mul(kf, mul(xa, pow_int(xb, 2))));
        rev.push_back(mul(kr, pow_int(xb, 3)));
        break;
      }
    }
  }
  std::vector<Tensor> all = fwd;
  all.insert(all.end(), rev.begin(), rev.end());
  Tensor rates = all.size() == 1 ? all[0] : concat(all, 0);
  return reshape(rates, {2 * R, H, W});
}

Tensor reaction_rates(const Tensor& X, const CrnSpec& crn) {
  return reaction_rates(X, crn, Tensor::constant({crn.n_directed()}, crn.rate_vector()));
}

Tensor reaction_delta(const Tensor& X, const CrnSpec& crn, const Tensor& k) {
  const int R = crn.n_reversible();
  const int N = crn.n_species;
  const int64_t H = X.dim(1), W = X.dim(2);
  Tensor rates = reaction_rates(X, crn, k);
  Tensor flat = reshape(rates, {2 * R, H * W});
  // Net flux per reversible reaction; exact zero under detailed balance.
  Tensor net_flux = sub(slice(flat, 0, 0, R), slice(flat, 0, R, R));

  auto sm = crn.stoichiometry();
  std::vector<double> st(static_cast<size_t>(N * R));
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < R; ++j) {
      st[static_cast<size_t>(i * R + j)] = static_cast<double>(sm.net_at(j, i));
    }
  }
  Tensor SfT = Tensor::constant({N, R}, std::move(st));
  return reshape(matmul(SfT, net_flux), {N, H, W});
}

Tensor reaction_delta(const Tensor& X, const CrnSpec& crn) {
  return reaction_delta(X, crn, Tensor::constant({crn.n_directed()}, crn.rate_vector()));
}

}  // namespace rdn
