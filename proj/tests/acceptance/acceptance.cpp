// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "../property_suite.hpp"
#include "cli.hpp"
#include "crnem/dynamics.hpp"
#include "crnem/infogeo.hpp"
#include "crnem/intlat.hpp"
#include "crnem/network.hpp"
#include "crnem/schemes.hpp"
#include "runner.hpp"

using namespace crnem;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Verdict {
  bool ok = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& s, const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = s(static_cast<Eigen::Index>(idx[k]));
  return out;
}

double gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

Eigen::MatrixXd dense(const intlat::IntMatrix& m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j).get_d();
  return out;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

struct Run {
  schemes::CompiledSystem sys;
  dynamics::SimulationResult sim;
};

Run simulate(const schemes::ModelSpec& spec, schemes::Scheme scheme, dynamics::SimOptions opts = {}) {
  Run r{schemes::compile(spec, scheme), {}};
  r.sim = dynamics::simulate(r.sys.network, schemes::initial_state(r.sys, spec), opts, schemes::simulation_setup(r.sys));
  return r;
}

double bistable_root(double c, double sign) { return (1 - c) / 2 + sign * std::sqrt((1 - 3 * c) * (1 + c)) / 2; }

Verdict die_eprojection() {
  auto spec = schemes::builtin_example("die");
  spec.x0 = {2, 20, 27};
  spec.y = std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto t0 = Clock::now();
  const auto r = simulate(spec, schemes::Scheme::eprojection);
  const double dt = seconds_since(t0);
  const double d = gap(r.sim.report.state, vec({11, 11, 27}));
  return {r.sim.report.converged && d < 1e-6 && dt < 1.0, fmt("|x - (11,11,27)| = %.2e, %.3f s", d, dt)};
}

Verdict die_mprojection() {
  auto spec = schemes::builtin_example("die");
  spec.x0 = {11, 11, 27};
  const auto r = simulate(spec, schemes::Scheme::mprojection);
  const Eigen::VectorXd theta = gather(r.sim.report.state, r.sys.theta_species);
  const std::vector<double> th(theta.data(), theta.data() + theta.size());
  const auto yv = schemes::family_point(spec.A, spec.c, th);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));
  const Eigen::VectorXd x = vec({11, 11, 27});
  const Eigen::MatrixXd a = dense(spec.A);
  const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(spec.c.data(), static_cast<Eigen::Index>(spec.c.size()));
  const auto oracle = infogeo::m_project_oracle(x, spec.A, c);

  const double d_theta = std::max(gap(theta, vec({3, 5})), gap(oracle.point, vec({3, 5})));
  const double d_y = std::max(gap(y, vec({9, 15, 25})), gap(oracle.image, vec({9, 15, 25})));
  const double d_mom = std::max(gap(a * y, a * x), gap(a * oracle.image, a * x));
  return {r.sim.report.converged && oracle.converged && d_theta < 1e-6 && d_y < 1e-6 && d_mom < 1e-8,
          fmt("theta gap %.2e, y gap %.2e, moment gap %.2e", d_theta, d_y, d_mom)};
}

Verdict die_em_random_starts() {
  const auto spec = schemes::builtin_example("die");
  const auto t0 = Clock::now();
  const auto runs = cli::run_starts(spec, cli::draw_theta_starts(spec.m, 8, kSeed), {});
  const double dt = seconds_since(t0);
  const Eigen::VectorXd target = vec({9, 15, 25, 3, 5});
  bool ok = dt < 5.0;
  double worst = 0;
  for (const auto& o : runs) {
    const double d = gap(o.sim.report.state, target);
    worst = std::max(worst, d);
    ok = ok && o.sim.report.converged && d < 1e-5;
  }
  return {ok, fmt("8 starts, worst gap %.2e, %.2f s", worst, dt)};
}

Verdict die_mle() {
  const Eigen::Vector2d th = infogeo::die_mle_brute_force(49, 24);
  const double ratio = th(0) / th(1);
  return {std::abs(ratio - 0.6) < 1e-3, fmt("theta1/theta2 = %.6f", ratio)};
}

Verdict bistable() {
  std::string detail;
  bool ok = true;

  const double c = 0.2;
  auto spec = schemes::builtin_example("bistable", {c});
  const auto sys = schemes::compile_em(spec);
  const auto runs = cli::run_starts(spec, cli::draw_theta_starts(spec.m, 16, kSeed), {});
  const double y1 = bistable_root(c, 1), y2 = bistable_root(c, -1);
  const std::vector<Eigen::VectorXd> closed{vec({y1, c, y2, std::sqrt(y1), std::sqrt(y2)}),
                                            vec({y2, c, y1, std::sqrt(y2), std::sqrt(y1)})};
  std::vector<Eigen::VectorXd> stable;
  for (const auto& e : cli::collect_equilibria(spec, sys, runs))
    if (!e.runs.empty() && e.stability == dynamics::Stability::stable) stable.push_back(e.state);
  double worst = 0;
  std::vector<bool> hit(closed.size(), false);
  for (const auto& s : stable) {
    double best = 1e300;
    std::size_t which = 0;
    for (std::size_t k = 0; k < closed.size(); ++k)
      if (gap(s, closed[k]) < best) best = gap(s, closed[k]), which = k;
    hit[which] = true;
    worst = std::max(worst, best);
  }
  ok = ok && stable.size() == 2 && hit[0] && hit[1] && worst < 1e-6;

  const double root = 1 / std::sqrt(3.0);
  const auto saddle = dynamics::classify_equilibrium(sys.network, vec({(1 - c) / 2, c, (1 - c) / 2, root, root}));
  ok = ok && saddle.stability == dynamics::Stability::unstable;
  detail = "c=0.2: " + std::to_string(stable.size()) + " stable, gap " + fmt("%.2e", worst) +
           ", symmetric point " + dynamics::to_string(saddle.stability.value_or(dynamics::Stability::marginal));

  auto spec5 = schemes::builtin_example("bistable", {0.5});
  const auto sys5 = schemes::compile_em(spec5);
  const auto runs5 = cli::run_starts(spec5, cli::draw_theta_starts(spec5.m, 16, kSeed), {});
  const auto eq5 = cli::collect_equilibria(spec5, sys5, runs5);
  const Eigen::VectorXd sym = vec({0.25, 0.5, 0.25, root, root});
  std::size_t stable5 = 0;
  double worst5 = 0;
  for (const auto& e : eq5)
    if (e.stability == dynamics::Stability::stable) ++stable5, worst5 = std::max(worst5, gap(e.state, sym));
  ok = ok && eq5.size() == 1 && stable5 == 1 && worst5 < 1e-6;
  detail += "; c=0.5: " + std::to_string(eq5.size()) + " equilibria, " + std::to_string(stable5) + " stable, gap " +
            fmt("%.2e", worst5);
  return {ok, detail};
}

Verdict extinction() {
  auto spec = schemes::builtin_example("extinction");
  dynamics::SimOptions opts;
  opts.t_max = 1e6;
  const auto a = simulate(spec, schemes::Scheme::em, opts);
  const double da = gap(a.sim.report.state, vec({0, 0, 1, 0, 1}));

  spec.theta0 = {0.5, 1.0};
  const auto b = simulate(spec, schemes::Scheme::em);
  const double third = 1.0 / 3, root = 1 / std::sqrt(3.0);
  const double db = gap(b.sim.report.state, vec({third, third, third, root, root}));

  std::ostringstream out, err;
  const int code = cli::run_cli({"check", "--example", "extinction"}, out, err);
  bool critical = false;
  if (code == 0) {
    const auto j = nlohmann::json::parse(out.str());
    for (const auto& s : j["critical_siphons"])
      if (s == nlohmann::json({"X1", "X2", "th1"})) critical = true;
  }
  return {da < 1e-4 && db < 1e-5 && critical,
          fmt("boundary gap %.2e, interior gap %.2e", da, db) + ", {X1,X2,th1} critical: " + (critical ? "yes" : "no")};
}

Verdict boltzmann() {
  const auto spec = schemes::builtin_example("boltzmann3");
  const auto t0 = Clock::now();
  const auto r = simulate(spec, schemes::Scheme::em);
  const double dt = seconds_since(t0);
  const Eigen::VectorXd theta = gather(r.sim.report.state, r.sys.theta_species);
  const Eigen::VectorXd x = gather(r.sim.report.state, r.sys.x_species);
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(spec.x0.data(), static_cast<Eigen::Index>(spec.x0.size()));
  const Eigen::MatrixXd s = dense(spec.S);
  const double d_theta = gap(theta, vec({0.5176, 0.0018, 0.3881, 0.8246, 0.7969}));
  const double d_cons = gap(s * x, s * x0);
  return {d_theta < 5e-3 && d_cons < 1e-6 && dt < 30.0,
          fmt("theta gap %.2e, conservation gap %.2e, %.1f s", d_theta, d_cons, dt)};
}

Verdict property_suite() {
  const auto t0 = Clock::now();
  const auto outcomes = properties::run_all(properties::SuiteOptions{});
  const double dt = seconds_since(t0);
  bool ok = dt < 300.0;
  std::size_t cases = 0, violations = 0;
  std::string first;
  for (const auto& o : outcomes) {
    cases += o.cases;
    violations += o.violations;
    ok = ok && o.passed();
    if (first.empty() && !o.passed()) first = o.name + ": " + o.first_failure;
  }
  std::string detail = std::to_string(outcomes.size()) + " properties, " + std::to_string(cases) + " cases, " +
                       std::to_string(violations) + " violations, " + fmt("%.1f s", dt);
  if (!first.empty()) detail += "; " + first;
  return {ok, detail};
}

bool prime(const std::string& text) {
  const auto gens = crn::lattice_generators(crn::parse_network(text));
  return gens && intlat::generators_saturated(*gens);
}

Verdict structure() {
  const bool l1 = intlat::is_saturated(intlat::LatticeBasis::from_vectors({{1, 0}, {0, 3}}));
  const bool l2 = intlat::is_saturated(intlat::LatticeBasis::from_vectors({{1, 3}}));
  const bool two = prime("2 X -> 2 Y ; k=1\n2 Y -> 2 X ; k=1\n");
  const bool one = prime("2 X -> Y ; k=1\nY -> 2 X ; k=1\n");
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  return {!l1 && l2 && !two && one, std::string("L1 saturated: ") + yn(l1) + ", L2 saturated: " + yn(l2) +
                                        ", 2X<->2Y prime: " + yn(two) + ", 2X<->Y prime: " + yn(one)};
}

}  // namespace

int main() {
  const std::vector<std::function<Verdict()>> criteria{die_eprojection, die_mprojection, die_em_random_starts,
                                                       die_mle,         bistable,        extinction,
                                                       boltzmann,       property_suite,  structure};
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    try {
      v = criteria[k]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.ok;
    std::printf("criterion %zu: %s (%s)\n", k + 1, v.ok ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
