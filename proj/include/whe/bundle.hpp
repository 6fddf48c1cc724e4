#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "whe/grid.hpp"

namespace whe {

struct EquivariantLineBundle {
  int degree = 0;
  int w0 = 0;  // moment value at mu = 0
  int w1 = 0;  // moment value at mu = 1

  static EquivariantLineBundle make(int degree, int w0, int w1);
  std::string describe() const;
};

// Invariant homomorphism L_from -> L_to given by the monomial z^k.
struct Coupling {
  int from = 0;
  int to = 0;
  int k = 0;

  bool operator==(const Coupling&) const = default;
};

class EquivariantBundle {
 public:
  EquivariantBundle() = default;
  // Throws InvalidBundle if a summand or coupling is inadmissible.
  EquivariantBundle(std::vector<EquivariantLineBundle> summands, std::vector<Coupling> couplings);

  static EquivariantBundle with_all_couplings(std::vector<EquivariantLineBundle> summands);

  int rank() const { return static_cast<int>(summands_.size()); }
  int degree() const;
  const std::vector<EquivariantLineBundle>& summands() const { return summands_; }
  const EquivariantLineBundle& summand(int i) const { return summands_.at(i); }
  const std::vector<Coupling>& couplings() const { return couplings_; }
  // Coupling attached to the unordered pair {i,j}, or nullptr.
  const Coupling* coupling_between(int i, int j) const;

  // Sub-bundle made of the listed summands, without couplings.
  EquivariantBundle restrict_to(const std::vector<int>& idx) const;

  // Connected components of the coupling graph, each sorted.
  std::vector<std::vector<int>> blocks() const;

  nlohmann::json to_json() const;
  std::string describe() const;

 private:
  std::vector<EquivariantLineBundle> summands_;
  std::vector<Coupling> couplings_;
};

bool coupling_admissible(const EquivariantLineBundle& from, const EquivariantLineBundle& to, int k);
std::vector<Coupling> admissible_couplings(const std::vector<EquivariantLineBundle>& s);

// Reference pointwise norm squared of the invariant homomorphism:
// mu^k (1-mu)^(d_to - d_from - k).
double coupling_norm_sq(const EquivariantBundle& b, const Coupling& c, double mu);
Vec coupling_norm_sq(const EquivariantBundle& b, const Coupling& c, const Grid& g);

// {"summands":[{"degree":d,"weights":[w0,w1]}], "couplings":"auto"|[{"from","to","k"}]}
EquivariantBundle make_bundle(const nlohmann::json& spec);

}  // namespace whe
