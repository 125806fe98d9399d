#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "rdn/ops.hpp"

namespace rdn {

// Reaction prototypes over distinct species:
//   P1: A + B <-> 2C
//   P2: A <-> B
//   P3: A + 2B <-> 3B   (autocatalytic)
enum class Prototype : uint8_t { P1 = 0, P2 = 1, P3 = 2 };

const char* prototype_name(Prototype p);

struct Reaction {
  Prototype proto;
  // P1: {a,b,c}, a<b, forward a+b -> 2c.
  // P2: {a,b,-1}, a<b, forward a -> b.
  // P3: {a,b,-1}, a!=b, forward a+2b -> 3b.
  std::array<int, 3> species;
  double k_f = 0.0;
  double k_r = 0.0;
};

// Matrix view of the directed reaction system. Rows [0,R) are the forward
// directions in canonical order, rows [R,2R) the reverses.
struct StoichMatrices {
  int n_species = 0;
  int n_reversible = 0;
  std::vector<int> order;  // [2R * N] reactant exponents, entries in {0..3}
  std::vector<int> net;    // [2R * N] products minus reactants; rows sum to 0

  int order_at(int directed, int species) const {
    return order[static_cast<size_t>(directed * n_species + species)];
  }
  int net_at(int directed, int species) const {
    return net[static_cast<size_t>(directed * n_species + species)];
  }
};

struct CrnSpec {
  int n_species = 0;
  std::vector<Prototype> prototypes;  // enabled subset, ascending
  std::vector<Reaction> reactions;    // canonical: by prototype, then species

  int n_reversible() const { return static_cast<int>(reactions.size()); }
  int n_directed() const { return 2 * n_reversible(); }
  int count(Prototype p) const;

  StoichMatrices stoichiometry() const;

  /// Rate constants as one vector: forward block [0,R) then reverse [R,2R).
  std::vector<double> rate_vector() const;
  void set_rate_vector(std::span<const double> k);
};

/// Enumerates every reaction matching the enabled prototypes over n_species
/// species. Counts: |P1| = C(N,2)(N-2), |P2| = C(N,2), |P3| = N(N-1).
CrnSpec build_dense_crn(int n_species, const std::vector<Prototype>& prototypes);

std::string species_name(int i);
/// One reaction per line, e.g. "1 A + 1 B <-> 2 C | kf=1 kr=0.001".
std::string reaction_line(const Reaction& r);
std::string format_reactions(const CrnSpec& crn);

/// Per-cell directed mass-action rates: nu_j(u,v) = k_j * prod_i X_i^order_ji.
/// X is [N,H,W] non-negative (tolerance -1e-12), k is [2R]; result [2R,H,W].
Tensor reaction_rates(const Tensor& X, const CrnSpec& crn, const Tensor& k);
Tensor reaction_rates(const Tensor& X, const CrnSpec& crn);

/// Net concentration change per unit time, S^T nu; conserves the per-cell
/// total molecule count. X [N,H,W] -> [N,H,W].
Tensor reaction_delta(const Tensor& X, const CrnSpec& crn, const Tensor& k);
Tensor reaction_delta(const Tensor& X, const CrnSpec& crn);

}  // namespace rdn
