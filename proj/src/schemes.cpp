#include "crnem/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "crnem/error.hpp"

namespace crnem::schemes {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

std::vector<std::string> default_names(const std::string& prefix, std::size_t count) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i + 1));
  return names;
}

// Σ_j b_j log c_j, exponentiated: the scalar y(1)^b.
double monomial(const std::vector<double>& base, const std::vector<std::int64_t>& exponent) {
  double log_value = 0.0;
  for (std::size_t j = 0; j < base.size(); ++j)
    if (exponent[j] != 0) log_value += static_cast<double>(exponent[j]) * std::log(base[j]);
  return std::exp(log_value);
}

crn::Complex split_positive(const std::vector<std::int64_t>& b, bool positive_part) {
  crn::Complex out(b.size(), 0);
  for (std::size_t j = 0; j < b.size(); ++j) {
    const std::int64_t v = positive_part ? b[j] : -b[j];
    if (v > 0) {
      if (v > std::numeric_limits<int>::max()) throw OverflowError("stoichiometric coefficient too large");
      out[j] = static_cast<int>(v);
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> ModelSpec::x_names() const {
  return species_x.empty() ? default_names("X", n) : species_x;
}

std::vector<std::string> ModelSpec::theta_names() const {
  return species_theta.empty() ? default_names("th", m) : species_theta;
}

void ModelSpec::validate() const {
  require(n >= 1, "model: n must be at least 1");
  require(A.rows() == m && A.cols() == n, "model: A must be m x n");
  require(S.cols() == n || (S.rows() == 0), "model: S must have n columns");
  require(c.size() == n, "model: c must have length n");
  require(x0.size() == n, "model: x0 must have length n");
  require(theta0.size() == m, "model: theta0 must have length m");
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) require(A(i, j) >= 0, "model: A must be nonnegative");
  require(std::all_of(c.begin(), c.end(), [](double v) { return v > 0 && std::isfinite(v); }),
          "model: c must be positive");
  require(std::all_of(x0.begin(), x0.end(), [](double v) { return v >= 0 && std::isfinite(v); }),
          "model: x0 must be nonnegative");
  require(std::all_of(theta0.begin(), theta0.end(), [](double v) { return v > 0 && std::isfinite(v); }),
          "model: theta0 must be positive");
  require(species_x.empty() || species_x.size() == n, "model: species_x must have length n");
  require(species_theta.empty() || species_theta.size() == m, "model: species_theta must have length m");
  if (y) {
    require(y->size() == n, "model: y must have length n");
    require(std::all_of(y->begin(), y->end(), [](double v) { return v > 0 && std::isfinite(v); }),
            "model: y must be positive");
  }
  require(k_plus_theta.empty() || k_plus_theta.size() == n, "model: theta rates must have length n");
  auto positive = [](double v) { return v > 0 && std::isfinite(v); };
  require(std::all_of(k_plus_theta.begin(), k_plus_theta.end(), positive), "model: rates must be positive");
  require(std::all_of(k_plus_x.begin(), k_plus_x.end(), positive), "model: rates must be positive");
}

std::vector<double> family_point(const intlat::IntMatrix& a, const std::vector<double>& c,
                                 const std::vector<double>& theta) {
  std::vector<double> y(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) {
    double v = c[j];
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto e = a.at_int64(i, j);
      if (e != 0) v *= std::pow(theta[i], static_cast<double>(e));
    }
    y[j] = v;
  }
  return y;
}

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::eprojection: return "e";
    case Scheme::mprojection: return "m";
    case Scheme::em: return "em";
  }
  return "?";
}

Scheme scheme_from_string(std::string_view s) {
  if (s == "e") return Scheme::eprojection;
  if (s == "m") return Scheme::mprojection;
  if (s == "em") return Scheme::em;
  throw ValidationError("unknown scheme '" + std::string(s) + "' (expected e, m or em)");
}

CompiledSystem compile_eprojection(const EProjectionInput& in) {
  CompiledSystem sys;
  sys.provenance.scheme = Scheme::eprojection;
  const std::size_t n = in.y.size();
  require(n >= 1, "E-projection: y must be nonempty");
  require(std::all_of(in.y.begin(), in.y.end(), [](double v) { return v > 0 && std::isfinite(v); }),
          "E-projection: y must be strictly positive");

  intlat::LatticeBasis basis(n);
  if (in.B) {
    require(in.B->ambient_dim() == n, "E-projection: basis dimension does not match y");
    basis = *in.B;
    if (!intlat::is_saturated(basis))
      sys.warnings.push_back("supplied basis generates an unsaturated lattice; the network is not prime "
                             "and may have critical siphons");
  } else {
    require(in.S.has_value(), "E-projection: need S or B");
    require(in.S->cols() == n, "E-projection: S must have one column per entry of y");
    basis = intlat::integer_kernel_basis(*in.S);
    sys.provenance.S = *in.S;
  }

  sys.network = crn::network_generated_by(basis, in.names);
  // rates: k(b⁺→b⁻) = 1, k(b⁻→b⁺) = y^b
  crn::ReactionNetwork rated(sys.network.species());
  const auto rows = basis.matrix().to_int64();
  for (const auto& b : rows) {
    const auto plus = split_positive(b, true), minus = split_positive(b, false);
    rated.add_reaction({plus, minus, 1.0});
    rated.add_reaction({minus, plus, monomial(in.y, b)});
  }
  sys.network = std::move(rated);
  for (std::size_t j = 0; j < n; ++j) sys.x_species.push_back(j);
  sys.provenance.basis = basis;
  sys.provenance.y = in.y;
  return sys;
}

CompiledSystem compile_mprojection(const MProjectionInput& in) {
  const std::size_t m = in.A.rows(), n = in.A.cols();
  require(in.c.size() == n && in.x.size() == n, "M-projection: c and x must have one entry per column of A");
  require(std::all_of(in.x.begin(), in.x.end(), [](double v) { return v > 0 && std::isfinite(v); }),
          "M-projection: x must be strictly positive");
  require(std::all_of(in.c.begin(), in.c.end(), [](double v) { return v > 0 && std::isfinite(v); }),
          "M-projection: c must be strictly positive");
  require(in.names.empty() || in.names.size() == m, "M-projection: need one name per row of A");

  CompiledSystem sys;
  sys.provenance.scheme = Scheme::mprojection;
  const auto names = in.names.empty() ? default_names("th", m) : in.names;
  for (const auto& name : names) sys.theta_species.push_back(sys.network.add_species(name, crn::SpeciesKind::parameter));

  const auto a = in.A.to_int64();
  for (std::size_t j = 0; j < n; ++j) {
    crn::Complex col(m, 0);
    bool zero = true;
    for (std::size_t i = 0; i < m; ++i) {
      require(a[i][j] >= 0, "M-projection: A must be nonnegative");
      col[i] = static_cast<int>(a[i][j]);
      zero = zero && a[i][j] == 0;
    }
    require(!zero, "M-projection: column " + std::to_string(j + 1) + " of A is zero (reaction 0 <-> 0)");
    const crn::Complex empty(m, 0);
    sys.network.add_reaction({empty, col, in.x[j]});
    sys.network.add_reaction({col, empty, in.c[j]});
  }
  sys.provenance.A = in.A;
  sys.provenance.c = in.c;
  sys.provenance.x = in.x;
  return sys;
}

CompiledSystem compile_em(const ModelSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n, m = spec.m;
  CompiledSystem sys;
  sys.provenance.scheme = Scheme::em;
  for (const auto& name : spec.x_names()) sys.x_species.push_back(sys.network.add_species(name, crn::SpeciesKind::data));
  for (const auto& name : spec.theta_names())
    sys.theta_species.push_back(sys.network.add_species(name, crn::SpeciesKind::parameter));
  const std::size_t total = n + m;

  const auto a = spec.A.to_int64();
  // (i) θ-subnetwork, X_j catalytic
  for (std::size_t j = 0; j < n; ++j) {
    crn::Complex theta(total, 0);
    bool zero = true;
    for (std::size_t i = 0; i < m; ++i) {
      theta[n + i] = static_cast<int>(a[i][j]);
      zero = zero && a[i][j] == 0;
    }
    if (zero) {
      sys.warnings.push_back("column " + std::to_string(j + 1) +
                             " of A is zero; its two reactions are null and were omitted");
      continue;
    }
    const double k_plus = spec.k_plus_theta.empty() ? 1.0 : spec.k_plus_theta[j];
    crn::Complex xj(total, 0);
    xj[j] = 1;
    crn::Complex xj_theta = theta;
    xj_theta[j] = 1;
    sys.network.add_reaction({xj, xj_theta, k_plus});
    sys.network.add_reaction({theta, crn::Complex(total, 0), spec.c[j] * k_plus});
  }

  // (ii) X-subnetwork, θ catalytic
  const intlat::LatticeBasis basis = intlat::integer_kernel_basis(spec.S);
  if (!intlat::is_saturated(basis)) throw MathError("EM: kernel basis is not saturated");
  const auto rows = basis.matrix().to_int64();
  require(spec.k_plus_x.empty() || spec.k_plus_x.size() == rows.size(),
          "model: X-reaction rates must have one entry per kernel basis vector (" +
              std::to_string(rows.size()) + ")");
  for (std::size_t l = 0; l < rows.size(); ++l) {
    const auto& b = rows[l];
    std::vector<int> d(m, 0), e(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      std::int64_t dot = 0;
      for (std::size_t j = 0; j < n; ++j) dot += a[i][j] * b[j];
      if (dot > 0) e[i] = static_cast<int>(dot);
      if (dot < 0) d[i] = static_cast<int>(-dot);
    }
    crn::Complex fwd_lhs(total, 0), fwd_rhs(total, 0), rev_lhs(total, 0), rev_rhs(total, 0);
    const auto plus = split_positive(b, true), minus = split_positive(b, false);
    for (std::size_t j = 0; j < n; ++j) {
      fwd_lhs[j] = rev_rhs[j] = plus[j];
      fwd_rhs[j] = rev_lhs[j] = minus[j];
    }
    for (std::size_t i = 0; i < m; ++i) {
      fwd_lhs[n + i] = fwd_rhs[n + i] = d[i];
      rev_lhs[n + i] = rev_rhs[n + i] = e[i];
    }
    const double k_plus = spec.k_plus_x.empty() ? 1.0 : spec.k_plus_x[l];
    sys.network.add_reaction({fwd_lhs, fwd_rhs, k_plus});
    sys.network.add_reaction({rev_lhs, rev_rhs, k_plus * monomial(spec.c, b)});
    sys.provenance.d.push_back(std::move(d));
    sys.provenance.e.push_back(std::move(e));
  }

  sys.provenance.basis = basis;
  sys.provenance.A = spec.A;
  sys.provenance.S = spec.S;
  sys.provenance.c = spec.c;
  return sys;
}

CompiledSystem compile(const ModelSpec& spec, Scheme scheme) {
  spec.validate();
  switch (scheme) {
    case Scheme::eprojection: {
      EProjectionInput in;
      in.S = spec.S;
      in.y = spec.y ? *spec.y : family_point(spec.A, spec.c, spec.theta0);
      in.names = spec.x_names();
      CompiledSystem sys = compile_eprojection(in);
      sys.provenance.A = spec.A;
      sys.provenance.c = spec.c;
      return sys;
    }
    case Scheme::mprojection: {
      MProjectionInput in{spec.A, spec.c, spec.x0, spec.theta_names()};
      CompiledSystem sys = compile_mprojection(in);
      sys.provenance.S = spec.S;
      return sys;
    }
    case Scheme::em: return compile_em(spec);
  }
  throw ValidationError("unknown scheme");
}

Eigen::VectorXd initial_state(const CompiledSystem& sys, const ModelSpec& spec) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.network.species_count()));
  if (!sys.x_species.empty())
    for (std::size_t j = 0; j < sys.x_species.size(); ++j)
      x(static_cast<Eigen::Index>(sys.x_species[j])) = spec.x0[j];
  for (std::size_t i = 0; i < sys.theta_species.size(); ++i)
    x(static_cast<Eigen::Index>(sys.theta_species[i])) = spec.theta0[i];
  return x;
}

dynamics::DivergenceModel lyapunov_model(const CompiledSystem& sys) {
  dynamics::DivergenceModel model;
  const Provenance& p = sys.provenance;
  model.x_index = sys.x_species;
  model.theta_index = sys.theta_species;
  if (p.A.rows() > 0) {
    const auto a = p.A.to_int64();
    for (const auto& row : a) model.design.emplace_back(row.begin(), row.end());
  }
  model.scale = p.c;
  switch (p.scheme) {
    case Scheme::eprojection:
      model.mode = dynamics::LyapunovMode::e;
      model.y_ref = p.y;
      break;
    case Scheme::mprojection:
      model.mode = dynamics::LyapunovMode::m;
      model.x_data = p.x;
      break;
    case Scheme::em: model.mode = dynamics::LyapunovMode::em; break;
  }
  return model;
}

Eigen::MatrixXd conservation_functionals(const CompiledSystem& sys) {
  const auto total = static_cast<Eigen::Index>(sys.network.species_count());
  const intlat::IntMatrix& s = sys.provenance.S;
  if (sys.provenance.scheme == Scheme::mprojection || s.rows() == 0)
    return crn::conservation_basis(sys.network).transpose();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.rows()), total);
  for (std::size_t r = 0; r < s.rows(); ++r)
    for (std::size_t j = 0; j < s.cols(); ++j)
      f(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(sys.x_species[j])) =
          static_cast<double>(s.at_int64(r, j));
  return f;
}

dynamics::SimulationSetup simulation_setup(const CompiledSystem& sys) {
  return {lyapunov_model(sys), conservation_functionals(sys)};
}

std::vector<std::string> builtin_example_names() { return {"die", "bistable", "extinction", "boltzmann3"}; }

ModelSpec builtin_example(std::string_view name, const ExampleOptions& opts) {
  ModelSpec spec;
  const intlat::IntMatrix die_design{{2, 1, 0}, {0, 1, 2}};
  if (name == "die") {
    spec.n = 3, spec.m = 2;
    spec.A = die_design;
    spec.S = {{1, 1, 1}, {1, 1, 0}};
    spec.x0 = {1, 23, 25};
    spec.theta0 = {1, 1};
  } else if (name == "bistable") {
    const double c = opts.c;
    require(c > 0 && c < 1, "bistable: X2 concentration must lie in (0, 1)");
    spec.n = 3, spec.m = 2;
    spec.A = die_design;
    spec.S = {{1, 0, 1}, {1, 1, 1}};
    // total mass 1 with X2 = c; the X1/X3 split is deliberately asymmetric
    spec.x0 = {0.6 * (1 - c), c, 0.4 * (1 - c)};
    spec.theta0 = {1, 1};
  } else if (name == "extinction") {
    spec.n = 3, spec.m = 2;
    spec.A = die_design;
    spec.S = {{1, -1, 0}, {1, 1, 1}};
    spec.x0 = {0.05, 0.05, 0.9};
    spec.theta0 = {0.1, 1.0};
  } else if (name == "boltzmann3") {
    spec.n = 8, spec.m = 5;
    // columns X_ijk in order 000,001,...,111; rows th1, th2, th3, th12, th23
    spec.A = {{0, 0, 0, 0, 1, 1, 1, 1},
              {0, 0, 1, 1, 0, 0, 1, 1},
              {0, 1, 0, 1, 0, 1, 0, 1},
              {0, 0, 0, 0, 0, 0, 1, 1},
              {0, 0, 0, 1, 0, 0, 0, 1}};
    spec.S = {{1, 0, 1, 0, 0, 0, 0, 0},
              {0, 1, 0, 1, 0, 0, 0, 0},
              {0, 0, 0, 0, 1, 0, 1, 0},
              {0, 0, 0, 0, 0, 1, 0, 1}};
    spec.x0 = {0.24, 0.04, 0, 0, 0.17, 0.55, 0, 0};
    spec.theta0 = {1, 1, 1, 1, 1};
    spec.species_x = {"X000", "X001", "X010", "X011", "X100", "X101", "X110", "X111"};
    spec.species_theta = {"th1", "th2", "th3", "th12", "th23"};
  } else {
    throw ValidationError("unknown example '" + std::string(name) +
                          "' (expected die, bistable, extinction or boltzmann3)");
  }
  spec.c.assign(spec.n, 1.0);
  spec.validate();
  return spec;
}

}  // namespace crnem::schemes
