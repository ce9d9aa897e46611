#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "crnem/intlat.hpp"

namespace crnem::crn {

/// Data species are the X-species, parameter species the θ-species.
enum class SpeciesKind { generic, data, parameter };

struct Species {
  std::string name;
  SpeciesKind kind = SpeciesKind::generic;

  friend bool operator==(const Species&, const Species&) = default;
};

/// Stoichiometric vector indexed like the network's species list.
using Complex = std::vector<int>;

struct Reaction {
  Complex reactant;
  Complex product;
  double rate = 1.0;

  std::vector<int> net_change() const;
  friend bool operator==(const Reaction&, const Reaction&) = default;
};

/// Species plus mass-action reactions; rates are always present and positive
/// (purely structural networks carry unit rates).
class ReactionNetwork {
 public:
  ReactionNetwork() = default;
  explicit ReactionNetwork(std::vector<Species> species);

  /// Throws ValidationError on an invalid or duplicate name.
  std::size_t add_species(std::string name, SpeciesKind kind = SpeciesKind::generic);
  std::optional<std::size_t> find_species(std::string_view name) const;

  /// Validates shape, nonnegativity, positive rate and reactant != product.
  void add_reaction(Reaction reaction);

  const std::vector<Species>& species() const noexcept { return species_; }
  const std::vector<Reaction>& reactions() const noexcept { return reactions_; }
  std::size_t species_count() const noexcept { return species_.size(); }
  std::size_t reaction_count() const noexcept { return reactions_.size(); }

  std::string complex_to_string(const Complex& c) const;
  std::string reaction_to_string(const Reaction& r) const;

  friend bool operator==(const ReactionNetwork&, const ReactionNetwork&) = default;

 private:
  std::vector<Species> species_;
  std::vector<Reaction> reactions_;
};

bool is_valid_identifier(std::string_view name);

// ---- text format -------------------------------------------------------

ReactionNetwork parse_network(std::string_view text);
std::string print_network(const ReactionNetwork& net);

// ---- constructions -----------------------------------------------------

/// b⁺ ⇌ b⁻ for every basis vector; species X1..Xn unless names are given.
ReactionNetwork network_generated_by(const intlat::LatticeBasis& basis,
                                     const std::vector<std::string>& names = {});

// ---- structural analyses -----------------------------------------------

/// Columns are the reaction vectors y' - y.
Eigen::MatrixXd stoichiometric_matrix(const ReactionNetwork& net);

/// Orthonormal basis (columns) of H_R, the span of the reaction vectors.
Eigen::MatrixXd stoichiometric_subspace(const ReactionNetwork& net);

/// Orthonormal basis (columns) of the orthogonal complement of H_R.
Eigen::MatrixXd conservation_basis(const ReactionNetwork& net);

bool is_weakly_reversible(const ReactionNetwork& net);

/// For each reaction the index of its reverse, if present.
std::vector<std::optional<std::size_t>> reverse_reactions(const ReactionNetwork& net);
bool is_reversible(const ReactionNetwork& net);

using SpeciesSet = std::vector<std::size_t>;  ///< sorted species indices

struct CriticalWitness {
  Eigen::VectorXd x;  ///< x >= 0 with zero set exactly T
  Eigen::VectorXd y;  ///< y > 0 with x - y in H_R
};

struct SiphonReport {
  std::vector<SpeciesSet> minimal_siphons;
  std::vector<bool> critical;                           ///< empty until classified
  std::vector<std::optional<CriticalWitness>> certificates;
};

inline constexpr std::size_t kMaxSiphonSpecies = 25;

bool is_siphon(const ReactionNetwork& net, const SpeciesSet& t);

/// All minimal nonempty siphons; criticality left unfilled.
SiphonReport find_minimal_siphons(const ReactionNetwork& net);

struct CriticalSiphonResult {
  bool critical = false;
  std::optional<CriticalWitness> witness;
};

/// Throws ValidationError if t is not a siphon.
CriticalSiphonResult is_critical_siphon(const ReactionNetwork& net, const SpeciesSet& t);

/// Minimal siphons with criticality decided for each.
SiphonReport analyze_siphons(const ReactionNetwork& net);

/// Residual checks for a witness: support, positivity, distance to H_R.
bool verify_critical_witness(const ReactionNetwork& net, const SpeciesSet& t,
                             const CriticalWitness& w, double tol = 1e-9);

/// Lattice primality: the network generated by B is prime iff L_B is saturated.
bool is_prime_lattice_network(const intlat::LatticeBasis& basis);

/// When the network has the shape b⁺ ⇌ b⁻ (reversible, disjoint supports),
/// returns the generator vectors b = b⁺ - b⁻, one per reversible pair.
std::optional<intlat::IntMatrix> lattice_generators(const ReactionNetwork& net);

struct DetailedBalance {
  Eigen::VectorXd point;
  double log_residual = 0.0;
};

/// Least-squares solve of (y - y')·log q = log(k_rev/k_fwd); returns the
/// point only if every equation holds to 1e-9. Throws if not reversible.
std::optional<DetailedBalance> detailed_balance_point(const ReactionNetwork& net);

}  // namespace crnem::crn
