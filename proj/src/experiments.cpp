#include "sotlab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sotlab/random_measures.hpp"

namespace sotlab {

using nlohmann::json;

std::string format_double(double value) {
  char buf[64];
  auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[v & 0xF];
    v >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

// --- JSON <-> domain types -------------------------------------------------

GridMeasure measure_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("measure: expected an object");
  TorusGrid grid(j.at("dim").get<int>(), j.at("n").get<int>());
  if (j.contains("weights"))
    return GridMeasure(grid, j.at("weights").get<std::vector<double>>());
  if (j.contains("dirac")) return dirac(grid, j.at("dirac").get<int>());
  if (j.contains("uniform")) return uniform(grid);
  if (j.contains("two_atoms")) {
    const json& spec = j.at("two_atoms");
    auto sites = spec.at("sites").get<std::vector<int>>();
    std::vector<double> mass =
        spec.contains("weights") ? spec.at("weights").get<std::vector<double>>()
                                 : std::vector<double>(sites.size(), 1.0 / sites.size());
    if (sites.size() != mass.size()) throw ConfigError("two_atoms: sites/weights size mismatch");
    std::vector<double> w(grid.site_count(), 0.0);
    for (size_t i = 0; i < sites.size(); ++i) {
      if (sites[i] < 0 || sites[i] >= grid.site_count())
        throw ConfigError("two_atoms: site out of range");
      w[sites[i]] += mass[i];
    }
    return GridMeasure(grid, std::move(w));
  }
  throw ConfigError("measure: expected weights, dirac, uniform or two_atoms");
}

json measure_to_json(const GridMeasure& m) {
  return json{{"dim", m.grid().dim}, {"n", m.grid().points_per_axis}, {"weights", m.weights()}};
}

RateFunction rate_from_json(const json& j) {
  if (j.contains("constant")) return RateFunction::constant(j.at("constant").get<double>());
  if (j.contains("power")) {
    const json& p = j.at("power");
    return RateFunction::power_of_remaining(p.at("K").get<double>(), p.at("gamma").get<double>());
  }
  throw ConfigError("rate: expected {constant: v} or {power: {K, gamma}}");
}

json rate_to_json(const RateFunction& r) {
  if (r.kind == RateFunction::Kind::Constant) return json{{"constant", r.value}};
  return json{{"power", {{"K", r.scale}, {"gamma", r.exponent}}}};
}

TorusDisplacement shift_from_json(const json& j) {
  auto components = j.get<std::vector<double>>();
  if (components.empty() || components.size() > 2)
    throw ConfigError("shift: expected 1 or 2 components");
  TorusDisplacement d;
  d.dim = static_cast<int>(components.size());
  d.v[0] = minimal_image(components[0]);
  if (d.dim == 2) d.v[1] = minimal_image(components[1]);
  return d;
}

json shift_to_json(const TorusDisplacement& d) {
  std::vector<double> components{d.v[0]};
  if (d.dim == 2) components.push_back(d.v[1]);
  return json(components);
}

JumpOperator jump_from_json(const json& j) {
  if (j.contains("translate")) return JumpOperator::translation(shift_from_json(j.at("translate")));
  if (j.contains("permutation"))
    return JumpOperator::site_permutation(j.at("permutation").get<std::vector<int>>());
  throw ConfigError("jump: expected {translate: [...]} or {permutation: [...]}");
}

json jump_to_json(const JumpOperator& op) {
  if (op.kind == JumpOperator::Kind::Translation) return json{{"translate", shift_to_json(op.shift)}};
  return json{{"permutation", op.permutation}};
}

TargetProcess target_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return ConstantTarget{measure_from_json(j.at("nu"))};
  if (kind == "bernoulli")
    return BernoulliTarget{measure_from_json(j.at("nu_pre")), measure_from_json(j.at("nu1")),
                           measure_from_json(j.at("nu2")), j.at("p").get<double>()};
  if (kind == "poisson_jump") {
    PoissonJumpTarget t;
    t.nu0 = measure_from_json(j.at("nu0"));
    t.lambda = rate_from_json(j.at("lambda"));
    t.lambda_max = j.value("lambda_max", 0.0);
    t.op = jump_from_json(j.at("jump"));
    return t;
  }
  if (kind == "diffusion_translate")
    return DiffusionTranslateTarget{measure_from_json(j.at("nu0")), rate_from_json(j.at("sigma"))};
  throw ConfigError("target: unknown kind '" + kind + "'");
}

json target_to_json(const TargetProcess& target) {
  return std::visit(
      [](const auto& t) -> json {
        using P = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<P, ConstantTarget>)
          return json{{"kind", "constant"}, {"nu", measure_to_json(t.nu)}};
        else if constexpr (std::is_same_v<P, BernoulliTarget>)
          return json{{"kind", "bernoulli"},
                      {"nu_pre", measure_to_json(t.nu_pre)},
                      {"nu1", measure_to_json(t.nu1)},
                      {"nu2", measure_to_json(t.nu2)},
                      {"p", t.p}};
        else if constexpr (std::is_same_v<P, PoissonJumpTarget>)
          return json{{"kind", "poisson_jump"},
                      {"nu0", measure_to_json(t.nu0)},
                      {"lambda", rate_to_json(t.lambda)},
                      {"lambda_max", t.lambda_max},
                      {"jump", jump_to_json(t.op)}};
        else
          return json{{"kind", "diffusion_translate"},
                      {"nu0", measure_to_json(t.nu0)},
                      {"sigma", rate_to_json(t.sigma)}};
      },
      target);
}

ControlPolicy policy_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "deterministic_geodesic") return DeterministicGeodesicPolicy{};
  if (kind == "replanning") return ReplanningPolicy{};
  if (kind == "transport_then_steer")
    return TransportThenSteerPolicy{j.at("theta").get<double>()};
  if (kind == "idle") return IdlePolicy{};
  throw ConfigError("policy: unknown kind '" + kind + "'");
}

json policy_to_json(const ControlPolicy& policy) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, DeterministicGeodesicPolicy>)
          return json{{"kind", "deterministic_geodesic"}};
        else if constexpr (std::is_same_v<P, ReplanningPolicy>)
          return json{{"kind", "replanning"}};
        else if constexpr (std::is_same_v<P, TransportThenSteerPolicy>)
          return json{{"kind", "transport_then_steer"}, {"theta", p.theta}};
        else
          return json{{"kind", "idle"}};
      },
      policy);
}

PowerCost cost_from_json(const json& j) {
  return PowerCost(j.at("k").get<double>(), j.at("c").get<double>());
}

json cost_to_json(const PowerCost& c) { return json{{"k", c.exponent}, {"c", c.scale}}; }

SimConfig sim_config_from_json(const json& j, bool needs_t0) {
  SimConfig cfg;
  cfg.mu0 = measure_from_json(j.at("mu"));
  cfg.target = target_from_json(j.at("target"));
  cfg.policy = policy_from_json(j.at("policy"));
  cfg.t0 = needs_t0 ? j.at("t0").get<double>() : 0.0;
  cfg.horizon = Horizon(j.at("T").get<double>());
  cfg.cost = cost_from_json(j.at("cost"));
  cfg.n_paths = j.value("n_paths", 1LL);
  cfg.base_seed = j.value("base_seed", 0ULL);
  cfg.dt_coarse = j.value("dt_coarse", 1e-3);
  cfg.dt_min = j.value("dt_min", 1e-6);
  cfg.refine_ratio = j.value("refine_ratio", 0.5);
  cfg.keep_per_path_costs = j.value("keep_per_path", false);
  return cfg;
}

json sim_config_to_json(const SimConfig& cfg, bool with_t0) {
  json j{{"mu", measure_to_json(cfg.mu0)},
         {"target", target_to_json(cfg.target)},
         {"policy", policy_to_json(cfg.policy)},
         {"T", cfg.horizon.T},
         {"cost", cost_to_json(cfg.cost)},
         {"n_paths", cfg.n_paths},
         {"base_seed", cfg.base_seed},
         {"dt_coarse", cfg.dt_coarse},
         {"dt_min", cfg.dt_min},
         {"refine_ratio", cfg.refine_ratio},
         {"keep_per_path", cfg.keep_per_path_costs}};
  if (with_t0) j["t0"] = cfg.t0;
  return j;
}

ExperimentParams params_from_json(const std::string& experiment, const json& j) {
  if (experiment == "wasserstein")
    return WassersteinParams{measure_from_json(j.at("mu")), measure_from_json(j.at("nu")),
                             j.value("k", 2.0)};
  if (experiment == "det-value")
    return DetValueParams{j.at("t").get<double>(), Horizon(j.at("T").get<double>()),
                          cost_from_json(j.at("cost")), measure_from_json(j.at("mu")),
                          measure_from_json(j.at("nu"))};
  if (experiment == "simulate") return SimulateParams{sim_config_from_json(j, true)};
  if (experiment == "gap-curve") {
    GapCurveParams p;
    p.sim_template = sim_config_from_json(j, false);
    p.T_minus_t_list = j.at("T_minus_t_list").get<std::vector<double>>();
    p.options.n_paths_cap = j.value("n_paths_cap", 1000000LL);
    p.options.target_rel_stderr = j.value("target_rel_stderr", 0.0);
    return p;
  }
  if (experiment == "blowup-probe") {
    BlowupProbeParams p;
    p.mu = measure_from_json(j.at("mu"));
    p.nu = measure_from_json(j.at("nu"));
    p.lambda_const = j.at("lambda").get<double>();
    p.shift = shift_from_json(j.at("shift"));
    p.t = j.at("t").get<double>();
    p.horizon = Horizon(j.at("T").get<double>());
    if (j.contains("epsilons")) p.epsilons = j.at("epsilons").get<std::vector<double>>();
    return p;
  }
  if (experiment == "steering-check") {
    SteeringCheckParams p;
    p.sigma = rate_from_json(j.at("sigma"));
    p.t0 = j.value("t0", 0.0);
    p.horizon = Horizon(j.at("T").get<double>());
    p.n_paths = j.value("n_paths", 10000LL);
    p.x0_offset = j.value("x0_offset", 0.0);
    p.base_seed = j.value("base_seed", 0ULL);
    p.dt_coarse = j.value("dt_coarse", 1e-3);
    p.dt_min = j.value("dt_min", 1e-7);
    p.refine_ratio = j.value("refine_ratio", 0.5);
    return p;
  }
  if (experiment == "hjb-residual") {
    HjbResidualParams p;
    p.n = j.value("n", 16);
    p.dim = j.value("dim", 1);
    p.instances = j.value("instances", 100);
    p.atoms = j.value("atoms", 8);
    if (j.contains("T_minus_t_list"))
      p.T_minus_t_list = j.at("T_minus_t_list").get<std::vector<double>>();
    p.base_seed = j.value("base_seed", 0ULL);
    return p;
  }
  if (experiment == "superdiff-test") {
    SuperdiffTestParams p;
    if (j.contains("n_list")) p.n_list = j.at("n_list").get<std::vector<int>>();
    p.dim = j.value("dim", 1);
    p.instances = j.value("instances", 1000);
    p.base_seed = j.value("base_seed", 0ULL);
    return p;
  }
  throw ConfigError("unknown experiment '" + experiment + "'");
}

json params_to_json(const ExperimentParams& params) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, WassersteinParams>)
          return json{{"mu", measure_to_json(p.mu)}, {"nu", measure_to_json(p.nu)}, {"k", p.k}};
        else if constexpr (std::is_same_v<P, DetValueParams>)
          return json{{"t", p.t},
                      {"T", p.horizon.T},
                      {"cost", cost_to_json(p.cost)},
                      {"mu", measure_to_json(p.mu)},
                      {"nu", measure_to_json(p.nu)}};
        else if constexpr (std::is_same_v<P, SimulateParams>)
          return sim_config_to_json(p.sim, true);
        else if constexpr (std::is_same_v<P, GapCurveParams>) {
          json j = sim_config_to_json(p.sim_template, false);
          j["T_minus_t_list"] = p.T_minus_t_list;
          j["n_paths_cap"] = p.options.n_paths_cap;
          j["target_rel_stderr"] = p.options.target_rel_stderr;
          return j;
        } else if constexpr (std::is_same_v<P, BlowupProbeParams>)
          return json{{"mu", measure_to_json(p.mu)},     {"nu", measure_to_json(p.nu)},
                      {"lambda", p.lambda_const},        {"shift", shift_to_json(p.shift)},
                      {"t", p.t},                        {"T", p.horizon.T},
                      {"epsilons", p.epsilons}};
        else if constexpr (std::is_same_v<P, SteeringCheckParams>)
          return json{{"sigma", rate_to_json(p.sigma)},
                      {"t0", p.t0},
                      {"T", p.horizon.T},
                      {"n_paths", p.n_paths},
                      {"x0_offset", p.x0_offset},
                      {"base_seed", p.base_seed},
                      {"dt_coarse", p.dt_coarse},
                      {"dt_min", p.dt_min},
                      {"refine_ratio", p.refine_ratio}};
        else if constexpr (std::is_same_v<P, HjbResidualParams>)
          return json{{"n", p.n},
                      {"dim", p.dim},
                      {"instances", p.instances},
                      {"atoms", p.atoms},
                      {"T_minus_t_list", p.T_minus_t_list},
                      {"base_seed", p.base_seed}};
        else
          return json{{"n_list", p.n_list},
                      {"dim", p.dim},
                      {"instances", p.instances},
                      {"base_seed", p.base_seed}};
      },
      params);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

std::string metadata_line(const RunConfig& cfg, std::uint64_t seed) {
  std::string canonical = serialize_run_config(cfg, -1);
  return "# config_hash=" + hex64(fnv1a_hash(canonical)) + " seed=" + std::to_string(seed);
}

std::uint64_t applied_seed(const ExperimentParams& params) {
  return std::visit(
      [](const auto& p) -> std::uint64_t {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SimulateParams>)
          return p.sim.base_seed;
        else if constexpr (std::is_same_v<P, GapCurveParams>)
          return p.sim_template.base_seed;
        else if constexpr (std::is_same_v<P, SteeringCheckParams>)
          return p.base_seed;
        else if constexpr (std::is_same_v<P, HjbResidualParams>)
          return p.base_seed;
        else if constexpr (std::is_same_v<P, SuperdiffTestParams>)
          return p.base_seed;
        else
          return 0;
      },
      params);
}

void override_seed(ExperimentParams& params, std::uint64_t seed) {
  std::visit(
      [seed](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SimulateParams>)
          p.sim.base_seed = seed;
        else if constexpr (std::is_same_v<P, GapCurveParams>)
          p.sim_template.base_seed = seed;
        else if constexpr (std::is_same_v<P, SteeringCheckParams>)
          p.base_seed = seed;
        else if constexpr (std::is_same_v<P, HjbResidualParams>)
          p.base_seed = seed;
        else if constexpr (std::is_same_v<P, SuperdiffTestParams>)
          p.base_seed = seed;
      },
      params);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    RunConfig cfg;
    cfg.experiment = j.at("experiment").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    cfg.params = params_from_json(cfg.experiment, j.value("params", json::object()));
    if (cfg.seed) override_seed(cfg.params, *cfg.seed);
    return cfg;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

RunConfig load_run_config(const std::string& file_path) {
  std::ifstream in(file_path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file: " + file_path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string serialize_run_config(const RunConfig& cfg, int indent) {
  json j;
  j["experiment"] = cfg.experiment;
  if (cfg.seed) j["seed"] = *cfg.seed;
  if (cfg.output) j["output"] = *cfg.output;
  j["params"] = params_to_json(cfg.params);
  return j.dump(indent);
}

const std::vector<ExperimentInfo>& list_experiments() {
  static const std::vector<ExperimentInfo> table{
      {"wasserstein", "k-Wasserstein distance between two grid measures", "mu, nu, k"},
      {"det-value", "closed-form deterministic transport value", "t, T, cost{k,c}, mu, nu"},
      {"simulate", "Monte Carlo policy-cost estimate for a stochastic target",
       "mu, target, policy, t0, T, cost, n_paths, base_seed, dt_coarse, dt_min, refine_ratio"},
      {"gap-curve", "MC estimate vs deterministic value across times near the horizon",
       "mu, target, policy, T, cost, T_minus_t_list, n_paths[, n_paths_cap, target_rel_stderr]"},
      {"blowup-probe", "diverging lower-bound sequence for a constant-rate jump target",
       "mu, nu, lambda, shift, t, T, epsilons"},
      {"steering-check", "bridge energy identity for the steering control",
       "sigma, t0, T, n_paths, x0_offset, base_seed"},
      {"hjb-residual", "quadratic HJB residual on random equal-weight instances",
       "n, dim, instances, atoms, T_minus_t_list, base_seed"},
      {"superdiff-test", "super-differential inequality over random instances",
       "n_list, dim, instances, base_seed"},
  };
  return table;
}

std::string experiments_table() {
  std::ostringstream out;
  for (const ExperimentInfo& info : list_experiments())
    out << info.name << "\t" << info.description << "\t[" << info.fields << "]\n";
  return out.str();
}

namespace {

struct CsvWriter {
  std::ostringstream out;

  explicit CsvWriter(const std::string& header) { out << header << "\n"; }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << "\n";
  }
  std::string finish(const std::string& metadata) { return out.str() + metadata + "\n"; }
};

RunOutcome execute(const RunConfig& cfg, const std::string& out_path, int threads) {
  RunOutcome outcome;
  outcome.output_path = out_path;
  const std::uint64_t seed = applied_seed(cfg.params);
  const std::string meta = metadata_line(cfg, seed);
  std::ostringstream summary;

  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, WassersteinParams>) {
          TransportPlan plan = exact_ot(p.mu, p.nu, p.k);
          double w = p.k == 1.0 ? plan.total_cost()
                                : std::pow(plan.total_cost(), 1.0 / p.k);
          json j{{"experiment", "wasserstein"},
                 {"k", p.k},
                 {"cost", plan.total_cost()},
                 {"w", w},
                 {"config_hash", hex64(fnv1a_hash(serialize_run_config(cfg, -1)))}};
          write_text_file(out_path, j.dump(2) + "\n");
          summary << "wasserstein: W_" << p.k << " = " << format_double(w);
        } else if constexpr (std::is_same_v<P, DetValueParams>) {
          double value = u_det(p.t, p.mu, p.nu, p.cost, p.horizon);
          json j{{"experiment", "det-value"},
                 {"t", p.t},
                 {"T", p.horizon.T},
                 {"u_det", value},
                 {"config_hash", hex64(fnv1a_hash(serialize_run_config(cfg, -1)))}};
          write_text_file(out_path, j.dump(2) + "\n");
          summary << "det-value: u_det = " << format_double(value);
        } else if constexpr (std::is_same_v<P, SimulateParams>) {
          SimReport report = estimate_value(p.sim, threads);
          json j = json::parse(report.to_json_string());
          j["experiment"] = "simulate";
          j["config_hash"] = hex64(fnv1a_hash(serialize_run_config(cfg, -1)));
          j["seed"] = seed;
          write_text_file(out_path, j.dump(2) + "\n");
          summary << "simulate: mean = " << format_double(report.mean_cost)
                  << " +- " << format_double(report.std_error) << " (" << report.n_paths
                  << " paths, " << format_double(report.diagnostics.runtime_seconds) << "s)";
        } else if constexpr (std::is_same_v<P, GapCurveParams>) {
          std::vector<double> t_list;
          for (double rem : p.T_minus_t_list)
            t_list.push_back(p.sim_template.horizon.T - rem);
          std::vector<GapPoint> curve =
              value_gap_curve(p.sim_template, t_list, p.options, threads);
          CsvWriter csv("t,T_minus_t,mc_mean,mc_stderr,u_det,gap");
          for (const GapPoint& point : curve)
            csv.row({format_double(point.t),
                     format_double(p.sim_template.horizon.T - point.t),
                     format_double(point.mc_mean), format_double(point.mc_stderr),
                     format_double(point.u_det_value), format_double(point.gap)});
          write_text_file(out_path, csv.finish(meta));
          summary << "gap-curve: " << curve.size() << " points, last gap = "
                  << format_double(curve.empty() ? 0.0 : curve.back().gap);
        } else if constexpr (std::is_same_v<P, BlowupProbeParams>) {
          auto probe = blowup_probe(p.lambda_const, p.mu, p.nu, JumpOperator::translation(p.shift),
                                    p.t, p.horizon, p.epsilons);
          CsvWriter csv("t,epsilon,lower_bound");
          for (const auto& [eps, value] : probe)
            csv.row({format_double(p.t), format_double(eps), format_double(value)});
          write_text_file(out_path, csv.finish(meta));
          summary << "blowup-probe: bound grows " << format_double(probe.front().second) << " -> "
                  << format_double(probe.back().second);
        } else if constexpr (std::is_same_v<P, SteeringCheckParams>) {
          SteeringCheck check =
              steering_identity_check(p.sigma, p.t0, p.horizon, p.n_paths, p.x0_offset,
                                      p.base_seed, p.dt_coarse, p.dt_min, p.refine_ratio, threads);
          json j{{"experiment", "steering-check"},
                 {"lhs_mc", check.lhs_mc},
                 {"lhs_stderr", check.lhs_stderr},
                 {"rhs_analytic", check.rhs_analytic},
                 {"z_score", check.z_score},
                 {"config_hash", hex64(fnv1a_hash(serialize_run_config(cfg, -1)))},
                 {"seed", seed}};
          write_text_file(out_path, j.dump(2) + "\n");
          summary << "steering-check: lhs = " << format_double(check.lhs_mc)
                  << ", rhs = " << format_double(check.rhs_analytic)
                  << ", z = " << format_double(check.z_score);
        } else if constexpr (std::is_same_v<P, HjbResidualParams>) {
          TorusGrid grid(p.dim, p.n);
          Horizon horizon(1.0 + *std::max_element(p.T_minus_t_list.begin(),
                                                  p.T_minus_t_list.end()));
          CsvWriter csv("instance,T_minus_t,monge,residual,dt_u");
          double worst = 0.0;
          int monge_count = 0;
          for (int i = 0; i < p.instances; ++i) {
            Rng rng(derive_stream(p.base_seed, i));
            GridMeasure mu = random_equal_weight_support(grid, p.atoms, rng);
            GridMeasure nu = random_equal_weight_support(grid, p.atoms, rng);
            for (double rem : p.T_minus_t_list) {
              HjbResidual r = hjb_residual_quadratic(horizon.T - rem, mu, nu, horizon);
              if (r.monge) {
                ++monge_count;
                worst = std::max(worst, std::abs(r.residual) / std::max(1.0, std::abs(r.dt_u)));
              }
              csv.row({std::to_string(i), format_double(rem), r.monge ? "1" : "0",
                       format_double(r.residual), format_double(r.dt_u)});
            }
          }
          write_text_file(out_path, csv.finish(meta));
          summary << "hjb-residual: " << monge_count << " Monge rows, worst scaled residual = "
                  << format_double(worst);
        } else {
          const SuperdiffTestParams& sp = p;
          long long checked = 0, violations = 0;
          double max_excess = -1e300;
          for (int n : sp.n_list) {
            TorusGrid grid(sp.dim, n);
            for (int i = 0; i < sp.instances; ++i) {
              Rng rng(derive_stream(sp.base_seed, (static_cast<std::uint64_t>(n) << 32) | i));
              GridMeasure mu = random_measure(grid, rng, true);
              GridMeasure nu_ref = random_measure(grid, rng, true);
              GridMeasure mu_prime = random_measure(grid, rng, true);
              SuperDiffCandidate cand = candidate_from_optimal_plan(exact_ot(mu, nu_ref, 2.0));
              for (int mode = 0; mode < 2; ++mode) {
                Coupling gamma = mode == 0 ? Coupling::product(mu, mu_prime)
                                           : Coupling::from_plan(exact_ot(mu, mu_prime, 2.0));
                SuperDiffCheck check = check_superdiff_inequality(cand, nu_ref, mu_prime, gamma);
                ++checked;
                if (!check.holds) ++violations;
                max_excess = std::max(max_excess, check.lhs - check.rhs);
              }
            }
          }
          json j{{"experiment", "superdiff-test"},
                 {"instances_checked", checked},
                 {"violations", violations},
                 {"max_excess", max_excess},
                 {"config_hash", hex64(fnv1a_hash(serialize_run_config(cfg, -1)))},
                 {"seed", seed}};
          write_text_file(out_path, j.dump(2) + "\n");
          summary << "superdiff-test: " << violations << " violations in " << checked
                  << " checks, max excess = " << format_double(max_excess);
        }
      },
      cfg.params);

  outcome.summary = summary.str();
  return outcome;
}

}  // namespace

RunOutcome run_experiment(const RunConfig& cfg, const RunOverrides& overrides) {
  RunConfig effective = cfg;
  if (overrides.seed) {
    effective.seed = overrides.seed;
    override_seed(effective.params, *overrides.seed);
  }
  std::string out_path = overrides.output ? *overrides.output
                                          : effective.output.value_or(effective.experiment + "_out");
  try {
    return execute(effective, out_path, overrides.threads);
  } catch (const ConfigError& e) {
    return RunOutcome{1, std::string("config error: ") + e.what(), out_path};
  } catch (const std::invalid_argument& e) {
    return RunOutcome{1, std::string("validation error: ") + e.what(), out_path};
  } catch (const std::exception& e) {
    return RunOutcome{2, std::string("runtime error: ") + e.what(), out_path};
  }
}

}  // namespace sotlab
