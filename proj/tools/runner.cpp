#include "runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "crnem/error.hpp"
#include "crnem/infogeo.hpp"

namespace crnem::cli {

namespace {

struct Reference {
  enum class Kind { state, theta } kind;
  std::vector<double> values;
  double tol;
};

std::optional<Reference> reference_for(const std::string& example) {
  if (example == "die") return Reference{Reference::Kind::state, {9, 15, 25, 3, 5}, 1e-5};
  if (example == "boltzmann3")
    return Reference{Reference::Kind::theta, {0.5176, 0.0018, 0.3881, 0.8246, 0.7969}, 5e-3};
  return std::nullopt;
}

Eigen::VectorXd gather(const Eigen::VectorXd& state, const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = state(static_cast<Eigen::Index>(idx[k]));
  return out;
}

Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double rel_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).lpNorm<Eigen::Infinity>() / std::max(1.0, b.lpNorm<Eigen::Infinity>());
}

bool is_interior(const Eigen::VectorXd& v) { return v.minCoeff() > 1e-4 * (1 + v.lpNorm<Eigen::Infinity>()); }

bool same_point(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).lpNorm<Eigen::Infinity>() <= 1e-5 * (1 + b.lpNorm<Eigen::Infinity>());
}

}  // namespace

nlohmann::ordered_json to_json(const Eigen::VectorXd& v) {
  auto out = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

std::vector<Eigen::VectorXd> draw_theta_starts(std::size_t dim, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> exponent(std::log(1e-2), std::log(1e2));
  std::vector<Eigen::VectorXd> out;
  for (std::size_t k = 0; k < count; ++k) {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = std::exp(exponent(rng));
    out.push_back(theta);
  }
  return out;
}

std::vector<StartOutcome> run_starts(const schemes::ModelSpec& spec, const std::vector<Eigen::VectorXd>& starts,
                                     const dynamics::SimOptions& opts, std::size_t threads) {
  const schemes::CompiledSystem sys = schemes::compile_em(spec);
  const dynamics::SimulationSetup setup = schemes::simulation_setup(sys);
  const Eigen::VectorXd base = schemes::initial_state(sys, spec);
  for (const auto& s : starts)
    if (s.size() != static_cast<Eigen::Index>(spec.m) || (s.array() <= 0).any())
      throw ValidationError("theta start must have " + std::to_string(spec.m) + " positive entries");

  std::vector<StartOutcome> out(starts.size());
  std::vector<std::exception_ptr> errors(starts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < starts.size(); k = next++) {
      try {
        StartOutcome& o = out[k];
        o.theta_start = starts[k];
        Eigen::VectorXd init = base;
        for (std::size_t i = 0; i < sys.theta_species.size(); ++i)
          init(static_cast<Eigen::Index>(sys.theta_species[i])) = starts[k](static_cast<Eigen::Index>(i));
        o.sim = dynamics::simulate(sys.network, init, opts, setup);
        const auto series = dynamics::lyapunov_series(o.sim.trajectory, *setup.lyapunov);
        o.lyapunov_initial = series.values.empty() ? 0.0 : series.values.front();
        o.lyapunov_rise = series.max_increase;
        const auto& res = o.sim.trajectory.conservation_residual;
        o.conservation_drift = res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
        o.conservation_scale = 1 + (*setup.conservation * init).lpNorm<Eigen::Infinity>();
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t count = std::min(starts.size(), threads ? threads : hw);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

double fixed_point_deviation(const schemes::ModelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd c = as_vector(spec.c);
  const Eigen::VectorXd y = as_vector(schemes::family_point(spec.A, spec.c, {theta.data(), theta.data() + theta.size()}));
  const auto e = infogeo::e_project_oracle(y, spec.S, as_vector(spec.x0));
  const auto m = infogeo::m_project_oracle(x, spec.A, c, theta);
  return std::max(rel_gap(x, e.point), rel_gap(y, m.image));
}

std::vector<Equilibrium> collect_equilibria(const schemes::ModelSpec& spec, const schemes::CompiledSystem& sys,
                                            const std::vector<StartOutcome>& runs) {
  std::vector<Equilibrium> out;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& rep = runs[k].sim.report;
    if (!rep.converged) continue;
    auto hit = std::find_if(out.begin(), out.end(), [&](const Equilibrium& e) { return same_point(rep.state, e.state); });
    if (hit != out.end()) {
      hit->runs.push_back(k);
      continue;
    }
    Equilibrium e;
    e.state = rep.state;
    e.stability = rep.stability.value_or(dynamics::Stability::marginal);
    e.interior = is_interior(rep.state);
    e.runs = {k};
    out.push_back(std::move(e));
  }

  const std::size_t found = out.size();
  for (std::size_t i = 0; i < found; ++i)
    for (std::size_t j = i + 1; j < found; ++j) {
      if (out[i].stability != dynamics::Stability::stable || out[j].stability != dynamics::Stability::stable) continue;
      const auto p = dynamics::refine_equilibrium(sys.network, (out[i].state + out[j].state) / 2);
      if (!p || (p->array() < 0).any()) continue;
      if (std::any_of(out.begin(), out.end(), [&](const Equilibrium& e) { return same_point(*p, e.state); })) continue;
      Equilibrium e;
      e.state = *p;
      e.stability = dynamics::classify_equilibrium(sys.network, *p).stability.value_or(dynamics::Stability::marginal);
      e.interior = is_interior(*p);
      out.push_back(std::move(e));
    }

  for (auto& e : out)
    if (e.interior)
      e.oracle_deviation =
          fixed_point_deviation(spec, gather(e.state, sys.x_species), gather(e.state, sys.theta_species));
  return out;
}

VerifyResult verify(const schemes::ModelSpec& spec, const VerifyOptions& opts) {
  spec.validate();
  if (opts.starts == 0) throw ValidationError("verify: --starts must be at least 1");
  const schemes::CompiledSystem sys = schemes::compile_em(spec);

  std::vector<Eigen::VectorXd> starts{as_vector(spec.theta0)};
  for (auto& s : draw_theta_starts(spec.m, opts.starts - 1, opts.seed)) starts.push_back(std::move(s));
  const auto runs = run_starts(spec, starts, opts.sim, opts.threads);
  const auto equilibria = collect_equilibria(spec, sys, runs);

  VerifyResult out;
  auto& r = out.report;
  r["seed"] = opts.seed;
  r["starts"] = opts.starts;
  std::vector<std::string> names;
  for (const auto& s : sys.network.species()) names.push_back(s.name);
  r["species"] = names;

  bool audits_ok = true, any_converged = false;
  auto run_list = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& o = runs[k];
    const auto& rep = o.sim.report;
    audits_ok = audits_ok && o.lyapunov_ok() && o.conservation_ok();
    any_converged = any_converged || rep.converged;
    nlohmann::ordered_json j;
    j["index"] = k;
    j["theta_start"] = to_json(o.theta_start);
    j["converged"] = rep.converged;
    j["status"] = dynamics::to_string(rep.status);
    j["t_final"] = rep.t_final;
    j["accepted_steps"] = rep.accepted_steps;
    j["state"] = to_json(rep.state);
    j["stability"] = rep.stability ? nlohmann::ordered_json(dynamics::to_string(*rep.stability)) : nullptr;
    j["lyapunov_max_increase"] = o.lyapunov_rise;
    j["lyapunov_ok"] = o.lyapunov_ok();
    j["conservation_max_residual"] = o.conservation_drift;
    j["conservation_ok"] = o.conservation_ok();
    run_list.push_back(j);
  }
  r["runs"] = run_list;

  std::size_t stable = 0, unstable = 0, marginal = 0;
  double worst_oracle = 0.0;
  auto eq_list = nlohmann::ordered_json::array();
  for (const auto& e : equilibria) {
    nlohmann::ordered_json j;
    j["state"] = to_json(e.state);
    j["stability"] = dynamics::to_string(e.stability);
    j["interior"] = e.interior;
    j["source"] = e.runs.empty() ? "refinement" : "simulation";
    j["runs"] = e.runs;
    j["oracle_deviation"] = e.oracle_deviation ? nlohmann::ordered_json(*e.oracle_deviation) : nullptr;
    if (e.oracle_deviation) worst_oracle = std::max(worst_oracle, *e.oracle_deviation);
    switch (e.stability) {
      case dynamics::Stability::stable: ++stable; break;
      case dynamics::Stability::unstable: ++unstable; break;
      case dynamics::Stability::marginal: ++marginal; break;
    }
    eq_list.push_back(j);
  }
  r["equilibria"] = eq_list;
  r["summary"] = {{"stable", stable}, {"unstable", unstable}, {"marginal", marginal}};
  r["max_oracle_deviation"] = worst_oracle;
  const bool oracle_ok = worst_oracle <= 1e-5;

  bool reference_ok = true;
  if (opts.example) {
    if (const auto ref = reference_for(*opts.example)) {
      const auto& first = runs.front().sim.report.state;
      const Eigen::VectorXd got =
          ref->kind == Reference::Kind::state ? first : gather(first, sys.theta_species);
      const double dev = (got - as_vector(ref->values)).lpNorm<Eigen::Infinity>();
      reference_ok = dev <= ref->tol;
      r["reference"] = {{"compared", ref->kind == Reference::Kind::state ? "state" : "theta"},
                        {"expected", ref->values},
                        {"observed", to_json(got)},
                        {"deviation", dev},
                        {"tolerance", ref->tol},
                        {"ok", reference_ok}};
    }
  }

  out.passed = audits_ok && any_converged && oracle_ok && reference_ok;
  r["checks"] = {{"audits", audits_ok}, {"converged", any_converged}, {"oracle", oracle_ok}, {"reference", reference_ok}};
  r["result"] = out.passed ? "PASS" : "FAIL";
  return out;
}

}  // namespace crnem::cli
