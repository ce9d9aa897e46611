#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "crnem/dynamics.hpp"
#include "crnem/error.hpp"
#include "crnem/infogeo.hpp"
#include "crnem/model_io.hpp"
#include "crnem/network.hpp"
#include "crnem/schemes.hpp"
#include "runner.hpp"

namespace crnem::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Config {
  std::uint64_t seed = 0;
  dynamics::SimOptions sim;
  std::size_t every = 1;
  std::string out_path;
  std::string report_path;

  std::string model_path;
  std::string example;
  double c = 0.2;
  std::string theta0;
  std::string scheme = "em";
  std::string network_path;
  std::string init;
  std::string which = "em";
  std::size_t starts = 8;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void require_input(const std::string& path) {
  if (!path.empty() && !fs::is_regular_file(path)) throw ValidationError("input file '" + path + "' does not exist");
}

void require_output(const std::string& path) {
  if (path.empty()) return;
  const fs::path parent = fs::absolute(fs::path(path)).parent_path();
  if (!fs::is_directory(parent)) throw ValidationError("output directory '" + parent.string() + "' does not exist");
  if (fs::is_directory(path)) throw ValidationError("output path '" + path + "' is a directory");
}

// Write-then-rename so a failed run never leaves a truncated file behind.
void write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".partial";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot write '" + path + "'");
    f << content;
    if (!f.flush()) throw ValidationError("cannot write '" + path + "'");
  }
  fs::rename(tmp, path);
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) out << content;
  else write_file(path, content);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used == 0 || used != item.size()) throw ValidationError(std::string(what) + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(std::string(what) + ": empty list");
  return out;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json matrix_json(const intlat::IntMatrix& m) {
  Json out = Json::array();
  for (const auto& row : m.to_int64()) out.push_back(row);
  return out;
}

std::vector<std::string> species_names(const crn::ReactionNetwork& net) {
  std::vector<std::string> out;
  for (const auto& s : net.species()) out.push_back(s.name);
  return out;
}

Json names_of(const crn::ReactionNetwork& net, const crn::SpeciesSet& set) {
  Json out = Json::array();
  for (std::size_t i : set) out.push_back(net.species()[i].name);
  return out;
}

schemes::ModelSpec resolve_model(const Config& cfg) {
  if (cfg.model_path.empty() == cfg.example.empty()) throw ValidationError("give exactly one of --model or --example");
  schemes::ModelSpec spec = cfg.example.empty() ? schemes::load_model(cfg.model_path)
                                                : schemes::builtin_example(cfg.example, {cfg.c});
  if (!cfg.theta0.empty()) spec.theta0 = parse_list(cfg.theta0, "--theta0");
  spec.validate();
  return spec;
}

Json provenance_json(const schemes::CompiledSystem& sys) {
  const auto& p = sys.provenance;
  Json j;
  j["scheme"] = schemes::to_string(p.scheme);
  Json species = Json::array();
  for (const auto& s : sys.network.species()) {
    const char* kind = s.kind == crn::SpeciesKind::data ? "data" : s.kind == crn::SpeciesKind::parameter ? "param" : "generic";
    species.push_back({{"name", s.name}, {"kind", kind}});
  }
  j["species"] = species;
  j["reactions"] = sys.network.reaction_count();
  j["basis"] = p.basis ? matrix_json(p.basis->matrix()) : Json(nullptr);
  j["d"] = p.d;
  j["e"] = p.e;
  j["A"] = matrix_json(p.A);
  j["S"] = matrix_json(p.S);
  j["c"] = p.c;
  j["y"] = p.y;
  j["x"] = p.x;
  j["warnings"] = sys.warnings;
  return j;
}

std::string trajectory_csv(const crn::ReactionNetwork& net, const dynamics::Trajectory& tr, std::size_t every) {
  std::string out = "t";
  for (const auto& name : species_names(net)) out += "," + name;
  out += ",D,dDdt,cons_residual\n";
  const bool has_d = !tr.lyapunov.empty();
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (k % every != 0 && k + 1 != tr.size()) continue;
    out += format_number(tr.times[k]);
    for (Eigen::Index i = 0; i < tr.states[k].size(); ++i) out += "," + format_number(tr.states[k](i));
    out += "," + (has_d ? format_number(tr.lyapunov[k]) : std::string("nan"));
    out += "," + (has_d ? format_number(tr.lyapunov_rate[k]) : std::string("nan"));
    out += "," + format_number(tr.conservation_residual.empty() ? 0.0 : tr.conservation_residual[k]) + "\n";
  }
  return out;
}

Json simulation_report(const crn::ReactionNetwork& net, const dynamics::SimulationResult& res) {
  const auto& rep = res.report;
  const auto& tr = res.trajectory;
  Json j;
  j["species"] = species_names(net);
  j["converged"] = rep.converged;
  j["status"] = dynamics::to_string(rep.status);
  j["t_final"] = rep.t_final;
  j["accepted_steps"] = rep.accepted_steps;
  j["rejected_steps"] = rep.rejected_steps;
  j["state"] = to_json(rep.state);
  j["derivative_norm"] = rep.derivative_norm;
  j["dD_dt"] = rep.dD_dt ? Json(*rep.dD_dt) : Json(nullptr);
  j["stability"] = rep.stability ? Json(dynamics::to_string(*rep.stability)) : Json(nullptr);
  j["eigen_real_parts"] = rep.eigen_real_parts;
  if (!tr.lyapunov.empty()) {
    double rise = 0;
    for (std::size_t k = 1; k < tr.lyapunov.size(); ++k) rise = std::max(rise, tr.lyapunov[k] - tr.lyapunov[k - 1]);
    j["lyapunov"] = {{"initial", tr.lyapunov.front()}, {"final", tr.lyapunov.back()}, {"max_increase", rise}};
  } else {
    j["lyapunov"] = nullptr;
  }
  double drift = 0;
  for (double r : tr.conservation_residual) drift = std::max(drift, r);
  j["conservation_max_residual"] = drift;
  const auto fit = dynamics::convergence_rate_diagnostic(tr);
  j["rate_fit"] = {{"rate", fit.rate ? Json(*fit.rate) : Json(nullptr)}, {"samples", fit.samples}, {"note", fit.note}};
  return j;
}

Json projection_json(const infogeo::ProjectionResult& r) {
  Json j;
  j["point"] = to_json(r.point);
  if (r.image.size()) j["image"] = to_json(r.image);
  j["objective"] = r.objective.finite ? Json(r.objective.value) : Json("inf");
  j["iterations"] = r.iterations;
  j["kkt_residual"] = r.kkt_residual;
  j["converged"] = r.converged;
  return j;
}

// ---- subcommands -------------------------------------------------------

int cmd_example(const Config& cfg, std::ostream& out) {
  const auto spec = schemes::builtin_example(cfg.example, {cfg.c});
  emit(cfg.out_path, schemes::model_to_json(spec) + "\n", out);
  return kExitOk;
}

int cmd_compile(const Config& cfg, std::ostream& out, std::ostream& err) {
  const auto spec = resolve_model(cfg);
  const auto sys = schemes::compile(spec, schemes::scheme_from_string(cfg.scheme));
  const std::string rxn = crn::print_network(sys.network);
  const std::string prov = dump(provenance_json(sys));
  for (const auto& w : sys.warnings) err << "warning: " << w << "\n";
  emit(cfg.out_path, rxn, out);
  std::string prov_path = cfg.report_path;
  if (prov_path.empty() && !cfg.out_path.empty()) prov_path = cfg.out_path + ".provenance.json";
  if (!prov_path.empty()) write_file(prov_path, prov);
  err << "compiled " << sys.network.reaction_count() << " reactions on " << sys.network.species_count()
      << " species\n";
  return kExitOk;
}

int cmd_simulate(const Config& cfg, std::ostream& out, std::ostream& err) {
  crn::ReactionNetwork net;
  Eigen::VectorXd init;
  dynamics::SimulationSetup setup;
  if (!cfg.network_path.empty()) {
    if (!cfg.model_path.empty() || !cfg.example.empty())
      throw ValidationError("--network cannot be combined with --model or --example");
    if (cfg.init.empty()) throw ValidationError("--network needs --init");
    net = crn::parse_network(read_text(cfg.network_path));
    const auto values = parse_list(cfg.init, "--init");
    if (values.size() != net.species_count())
      throw ValidationError("--init has " + std::to_string(values.size()) + " values for " +
                            std::to_string(net.species_count()) + " species");
    init = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  } else {
    const auto spec = resolve_model(cfg);
    const auto sys = schemes::compile(spec, schemes::scheme_from_string(cfg.scheme));
    net = sys.network;
    init = schemes::initial_state(sys, spec);
    if (!cfg.init.empty()) {
      const auto values = parse_list(cfg.init, "--init");
      if (values.size() != net.species_count()) throw ValidationError("--init length does not match the species count");
      init = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    }
    setup = schemes::simulation_setup(sys);
  }
  const auto res = dynamics::simulate(net, init, cfg.sim, setup);
  const std::string report = dump(simulation_report(net, res));
  if (!cfg.out_path.empty()) write_file(cfg.out_path, trajectory_csv(net, res.trajectory, cfg.every));
  emit(cfg.report_path, report, out);
  err << (res.report.converged ? "converged" : "not converged") << " at t=" << res.report.t_final << " after "
      << res.report.accepted_steps << " steps\n";
  return kExitOk;
}

int cmd_check(const Config& cfg, std::ostream& out) {
  crn::ReactionNetwork net;
  if (!cfg.network_path.empty()) {
    net = crn::parse_network(read_text(cfg.network_path));
  } else {
    net = schemes::compile(resolve_model(cfg), schemes::scheme_from_string(cfg.scheme)).network;
  }
  Json j;
  j["species"] = species_names(net);
  const bool reversible = crn::is_reversible(net);
  j["reversible"] = reversible;
  j["weakly_reversible"] = crn::is_weakly_reversible(net);

  const auto siphons = crn::analyze_siphons(net);
  Json minimal = Json::array(), critical = Json::array(), detail = Json::array();
  for (std::size_t k = 0; k < siphons.minimal_siphons.size(); ++k) {
    const auto& t = siphons.minimal_siphons[k];
    minimal.push_back(names_of(net, t));
    Json d;
    d["species"] = names_of(net, t);
    d["critical"] = bool(siphons.critical[k]);
    if (siphons.critical[k]) {
      critical.push_back(names_of(net, t));
      const auto& w = *siphons.certificates[k];
      d["witness"] = {{"x", to_json(w.x)}, {"y", to_json(w.y)}};
    } else {
      d["witness"] = nullptr;
    }
    detail.push_back(d);
  }
  j["minimal_siphons"] = minimal;
  j["critical_siphons"] = critical;
  j["siphons"] = detail;

  j["detailed_balance_point"] = nullptr;
  if (reversible)
    if (const auto q = crn::detailed_balance_point(net)) j["detailed_balance_point"] = to_json(q->point);
  j["prime"] = nullptr;
  if (const auto gens = crn::lattice_generators(net)) j["prime"] = intlat::generators_saturated(*gens);
  emit(cfg.report_path.empty() ? cfg.out_path : cfg.report_path, dump(j), out);
  return kExitOk;
}

bool die_shaped(const schemes::ModelSpec& spec) {
  const schemes::ModelSpec die = schemes::builtin_example("die");
  return spec.n == 3 && spec.m == 2 && spec.A == die.A && spec.S == die.S;
}

int cmd_oracle(const Config& cfg, std::ostream& out) {
  const auto spec = resolve_model(cfg);
  const auto vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  Json j;
  j["which"] = cfg.which;
  if (cfg.which == "eproj") {
    const auto y = spec.y ? *spec.y : schemes::family_point(spec.A, spec.c, spec.theta0);
    j["y"] = y;
    j["result"] = projection_json(infogeo::e_project_oracle(vec(y), spec.S, vec(spec.x0)));
  } else if (cfg.which == "mproj") {
    j["result"] = projection_json(infogeo::m_project_oracle(vec(spec.x0), spec.A, vec(spec.c)));
  } else if (cfg.which == "em") {
    const auto r = infogeo::em_alternating_oracle(spec);
    j["result"] = {{"x", to_json(r.x)},
                   {"theta", to_json(r.theta)},
                   {"objective", r.objective.finite ? Json(r.objective.value) : Json("inf")},
                   {"rounds", r.rounds},
                   {"converged", r.converged}};
  } else {
    if (!die_shaped(spec)) throw ValidationError("--which mle needs the die design and sensitivity matrices");
    const double s1 = spec.x0[0] + spec.x0[1] + spec.x0[2], s2 = spec.x0[0] + spec.x0[1];
    if (s1 != std::floor(s1) || s2 != std::floor(s2) || s1 > 1e6)
      throw ValidationError("--which mle needs integer counts in x0");
    const auto d = infogeo::die_mle_brute_force(static_cast<unsigned>(s1), static_cast<unsigned>(s2));
    j["counts"] = {s1, s2};
    j["result"] = {{"direction", {d(0), d(1)}}, {"ratio", d(1) > 0 ? Json(d(0) / d(1)) : Json(nullptr)}};
  }
  emit(cfg.report_path.empty() ? cfg.out_path : cfg.report_path, dump(j), out);
  return kExitOk;
}

int cmd_verify(const Config& cfg, std::ostream& out, std::ostream& err) {
  const auto spec = resolve_model(cfg);
  VerifyOptions opts;
  opts.starts = cfg.starts;
  opts.seed = cfg.seed;
  opts.sim = cfg.sim;
  if (!cfg.example.empty()) opts.example = cfg.example;
  const auto result = verify(spec, opts);
  emit(cfg.report_path.empty() ? cfg.out_path : cfg.report_path, dump(result.report), out);
  const auto& s = result.report["summary"];
  err << "verify: " << (result.passed ? "PASS" : "FAIL") << " (" << s["stable"].get<std::size_t>() << " stable, "
      << s["unstable"].get<std::size_t>() << " unstable, " << s["marginal"].get<std::size_t>()
      << " marginal; max oracle deviation " << result.report["max_oracle_deviation"].get<double>() << ")\n";
  return result.passed ? kExitOk : kExitVerifyFailed;
}

void add_model_options(CLI::App* sub, Config& cfg) {
  sub->add_option("--model", cfg.model_path, "model JSON file");
  sub->add_option("--example", cfg.example, "builtin example")
      ->check(CLI::IsMember(schemes::builtin_example_names()));
  sub->add_option("--c", cfg.c, "X2 concentration for the bistable example");
  sub->add_option("--theta0", cfg.theta0, "comma-separated initial parameters");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config cfg;
  CLI::App app{"Compile, simulate and verify reaction networks for exponential-family estimation"};
  app.name("crnem");
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--seed", cfg.seed, "seed for random parameter starts");
  app.add_option("--rel-tol", cfg.sim.rel_tol)->check(CLI::PositiveNumber);
  app.add_option("--abs-tol", cfg.sim.abs_tol)->check(CLI::PositiveNumber);
  app.add_option("--t-max", cfg.sim.t_max)->check(CLI::NonNegativeNumber);
  app.add_option("--tol-ss", cfg.sim.tol_ss)->check(CLI::PositiveNumber);
  app.add_option("--every", cfg.every, "write every k-th trajectory row")->check(CLI::PositiveNumber);
  app.add_option("--out", cfg.out_path, "primary output file");
  app.add_option("--report", cfg.report_path, "JSON report file");

  auto* example = app.add_subcommand("example", "print a builtin model as JSON");
  example->add_option("name", cfg.example)->required()->check(CLI::IsMember(schemes::builtin_example_names()));
  example->add_option("--c", cfg.c, "X2 concentration for the bistable example");

  const std::vector<std::string> scheme_names{"e", "m", "em"};
  auto* compile = app.add_subcommand("compile", "compile a model into a reaction network");
  add_model_options(compile, cfg);
  compile->add_option("--scheme", cfg.scheme)->check(CLI::IsMember(scheme_names));

  auto* simulate = app.add_subcommand("simulate", "integrate a compiled model or a network file");
  add_model_options(simulate, cfg);
  simulate->add_option("--scheme", cfg.scheme)->check(CLI::IsMember(scheme_names));
  simulate->add_option("--network", cfg.network_path, ".rxn network file");
  simulate->add_option("--init", cfg.init, "comma-separated initial state");

  auto* check = app.add_subcommand("check", "structural analysis of a network");
  add_model_options(check, cfg);
  check->add_option("--scheme", cfg.scheme)->check(CLI::IsMember(scheme_names));
  check->add_option("--network", cfg.network_path, ".rxn network file");

  auto* oracle = app.add_subcommand("oracle", "direct optimization oracles");
  add_model_options(oracle, cfg);
  oracle->add_option("--which", cfg.which)->check(CLI::IsMember({"eproj", "mproj", "em", "mle"}));

  auto* verify_cmd = app.add_subcommand("verify", "end-to-end multi-start verification");
  add_model_options(verify_cmd, cfg);
  verify_cmd->add_option("--starts", cfg.starts, "number of parameter starts")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    require_input(cfg.model_path);
    require_input(cfg.network_path);
    require_output(cfg.out_path);
    require_output(cfg.report_path);
    if (example->parsed()) return cmd_example(cfg, out);
    if (compile->parsed()) return cmd_compile(cfg, out, err);
    if (simulate->parsed()) return cmd_simulate(cfg, out, err);
    if (check->parsed()) return cmd_check(cfg, out);
    if (oracle->parsed()) return cmd_oracle(cfg, out);
    return cmd_verify(cfg, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const MathError& e) {
    err << "math error: " << e.what() << "\n";
    return kExitMath;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitMath;
  }
}

}  // namespace crnem::cli
