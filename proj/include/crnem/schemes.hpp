#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "crnem/dynamics.hpp"
#include "crnem/intlat.hpp"
#include "crnem/network.hpp"

namespace crnem::schemes {

/// A partially observed exponential-family estimation problem.
struct ModelSpec {
  std::size_t n = 0;           ///< data dimension (X-species)
  std::size_t m = 0;           ///< parameter dimension (θ-species)
  intlat::IntMatrix A;         ///< m x n design matrix, nonnegative
  std::vector<double> c;       ///< n positive scaling constants
  intlat::IntMatrix S;         ///< sensitivity matrix with n columns
  std::vector<double> x0;      ///< n nonnegative observed data
  std::vector<double> theta0;  ///< m positive initial parameters
  std::vector<std::string> species_x;
  std::vector<std::string> species_theta;
  /// E-projection prior; defaults to y_A(theta0).
  std::optional<std::vector<double>> y;
  /// k⁺ for the θ-producing reactions (length n); default all ones.
  std::vector<double> k_plus_theta;
  /// k⁺ for the X-converting reactions (one per kernel vector); default all ones.
  std::vector<double> k_plus_x;

  /// Throws ValidationError when an invariant fails.
  void validate() const;
  std::vector<std::string> x_names() const;
  std::vector<std::string> theta_names() const;
};

/// y_A(θ) = (c_j θ^{a_.j})_j
std::vector<double> family_point(const intlat::IntMatrix& a, const std::vector<double>& c,
                                 const std::vector<double>& theta);

enum class Scheme { eprojection, mprojection, em };
const char* to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

struct Provenance {
  Scheme scheme = Scheme::em;
  std::optional<intlat::LatticeBasis> basis;
  std::vector<std::vector<int>> d;  ///< per basis vector, θ-catalyst on the forward reaction
  std::vector<std::vector<int>> e;  ///< per basis vector, θ-catalyst on the reverse reaction
  intlat::IntMatrix A;
  intlat::IntMatrix S;
  std::vector<double> c;
  std::vector<double> y;  ///< E-projection detailed-balance point
  std::vector<double> x;  ///< M-projection data
};

struct CompiledSystem {
  crn::ReactionNetwork network;
  std::vector<std::size_t> x_species;
  std::vector<std::size_t> theta_species;
  Provenance provenance;
  std::vector<std::string> warnings;
};

struct EProjectionInput {
  std::optional<intlat::IntMatrix> S;
  std::optional<intlat::LatticeBasis> B;  ///< overrides the kernel of S
  std::vector<double> y;
  std::vector<std::string> names;
};

struct MProjectionInput {
  intlat::IntMatrix A;
  std::vector<double> c;
  std::vector<double> x;
  std::vector<std::string> names;
};

CompiledSystem compile_eprojection(const EProjectionInput& in);
CompiledSystem compile_mprojection(const MProjectionInput& in);
CompiledSystem compile_em(const ModelSpec& spec);

/// Compiles the given scheme from a model: E uses (S, prior y), M uses (A, c, x0).
CompiledSystem compile(const ModelSpec& spec, Scheme scheme);

/// Initial state of a compiled system built from `spec`.
Eigen::VectorXd initial_state(const CompiledSystem& sys, const ModelSpec& spec);

/// The divergence that decreases along trajectories of the compiled system.
dynamics::DivergenceModel lyapunov_model(const CompiledSystem& sys);

/// Rows of S (zero-padded over θ-species) or, for M-systems, none.
Eigen::MatrixXd conservation_functionals(const CompiledSystem& sys);

dynamics::SimulationSetup simulation_setup(const CompiledSystem& sys);

struct ExampleOptions {
  double c = 0.2;  ///< bistable: concentration of X2
};

/// die, bistable, extinction, boltzmann3
ModelSpec builtin_example(std::string_view name, const ExampleOptions& opts = {});
std::vector<std::string> builtin_example_names();

}  // namespace crnem::schemes
