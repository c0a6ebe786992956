// Command-line front end: synthesize certified set families, simulate
// filtered episodes, sweep coverage, compare the explicit and per-step
// filters, and dump partitions. Driven by a JSON config plus a few
// overriding flags; see README.md for the schema.

#include "safenet/benchmarks.hpp"
#include "safenet/harness.hpp"
#include "safenet/synthesis.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using nlohmann::json;
using namespace safenet;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  json j;
  in >> j;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

NetworkModel model_from_config(const json& config) {
  const json& m = config.at("model");
  if (m.contains("file")) return NetworkModel::from_json(load_json(m.at("file").get<std::string>()));
  const std::string builder = m.at("builder").get<std::string>();
  const json params = m.value("params", json::object());
  if (builder == "mass_spring_damper_chain") {
    ChainParams p;
    p.num_agents = params.value("num_agents", p.num_agents);
    p.mass = params.value("mass", p.mass);
    p.stiffness = params.value("stiffness", p.stiffness);
    p.damping = params.value("damping", p.damping);
    p.dt = params.value("dt", p.dt);
    p.gamma = params.value("gamma", p.gamma);
    p.pos_max = params.value("pos_max", p.pos_max);
    p.vel_max = params.value("vel_max", p.vel_max);
    p.input_max = params.value("input_max", p.input_max);
    return build_mass_spring_damper_chain(p);
  }
  if (builder == "planar_coupled_masses") {
    PlanarParams p;
    p.num_agents = params.value("num_agents", p.num_agents);
    p.mass = params.value("mass", p.mass);
    p.drag = params.value("drag", p.drag);
    p.coupling = params.value("coupling", p.coupling);
    p.dt = params.value("dt", p.dt);
    p.gamma = params.value("gamma", p.gamma);
    p.pos_max = params.value("pos_max", p.pos_max);
    p.input_max = params.value("input_max", p.input_max);
    return build_planar_coupled_masses(p);
  }
  throw std::invalid_argument("unknown model builder: " + builder +
                              " (expected mass_spring_damper_chain or planar_coupled_masses)");
}

SolverOptions solver_from_config(const json& config, const std::string& backend_override) {
  SolverOptions opts;
  if (config.contains("solver")) {
    const json& s = config.at("solver");
    opts.backend = s.value("backend", opts.backend);
    opts.tol_psd = s.value("tol_psd", opts.tol_psd);
    opts.tol_linear = s.value("tol_linear", opts.tol_linear);
    opts.feas_tol = s.value("feas_tol", opts.feas_tol);
    opts.gap_tol = s.value("gap_tol", opts.gap_tol);
    opts.max_iter = s.value("max_iter", opts.max_iter);
    opts.timeout_seconds = s.value("timeout_seconds", opts.timeout_seconds);
    opts.verbose = s.value("verbose", opts.verbose);
  }
  if (!backend_override.empty()) opts.backend = backend_override;
  return opts;
}

SynthesisOptions synthesis_from_config(const json& config, const std::string& objective_override,
                                       int workers_override, const std::string& backend_override) {
  SynthesisOptions opts;
  if (config.contains("synthesis")) {
    const json& s = config.at("synthesis");
    opts.objective = objective_mode_from_string(s.value("objective", std::string(to_string(opts.objective))));
    opts.anchor = anchor_mode_from_string(s.value("anchor", std::string(to_string(opts.anchor))));
    opts.shape_floor = s.value("shape_floor", opts.shape_floor);
    opts.global_coupling = s.value("global_coupling", opts.global_coupling);
    opts.workers = s.value("workers", opts.workers);
    opts.validation_samples = s.value("validation_samples", opts.validation_samples);
  }
  opts.solver = solver_from_config(config, backend_override);
  if (!objective_override.empty()) opts.objective = objective_mode_from_string(objective_override);
  if (workers_override > 0) opts.workers = workers_override;
  return opts;
}

json family_summary(const CertifiedSetFamily& family) {
  json sets = json::array();
  for (const CertifiedRegion& c : family.sets) {
    json entry{{"region_index", c.region_index},
               {"objective", c.objective},
               {"backend", c.backend},
               {"solve_seconds", c.solve_seconds}};
    if (c.validation.has_value()) {
      entry["validation"] = {{"samples", c.validation->samples},
                             {"max_successor_value", c.validation->max_successor_value},
                             {"max_state_residual", c.validation->max_state_residual},
                             {"max_input_residual", c.validation->max_input_residual}};
    }
    sets.push_back(std::move(entry));
  }
  json failures = json::array();
  for (const RegionFailure& f : family.failures) {
    failures.push_back(json{{"region_index", f.region_index},
                            {"status", to_string(f.status)},
                            {"message", f.message}});
  }
  return json{{"certified", family.size()},
              {"failed", family.failures.size()},
              {"sets", std::move(sets)},
              {"failures", std::move(failures)}};
}

int cmd_partition(const json& config, const std::string& out_dir, std::uint64_t seed_override,
                  bool has_seed_override) {
  const NetworkModel model = model_from_config(config);
  const json& p = config.at("partition");
  const int count = p.at("count").get<int>();
  const std::uint64_t seed = has_seed_override ? seed_override : p.value("seed", std::uint64_t{0});
  const Partition partition = make_partition(model, count, seed);
  std::filesystem::create_directories(out_dir);
  write_json(std::filesystem::path(out_dir) / "model.json", model.to_json());
  write_json(std::filesystem::path(out_dir) / "partition.json", partition.to_json());
  std::cout << "partition: " << partition.size() << " regions written to " << out_dir << "\n";
  return 0;
}

int cmd_synthesize(const json& config, const std::string& out_dir, const std::string& objective_override,
                   int workers_override, const std::string& backend_override, std::uint64_t seed_override,
                   bool has_seed_override) {
  const NetworkModel model = model_from_config(config);
  const json& p = config.at("partition");
  const int count = p.at("count").get<int>();
  const std::uint64_t seed = has_seed_override ? seed_override : p.value("seed", std::uint64_t{0});
  const Partition partition = make_partition(model, count, seed);
  const SynthesisOptions options =
      synthesis_from_config(config, objective_override, workers_override, backend_override);

  const auto t0 = std::chrono::steady_clock::now();
  const CertifiedSetFamily family = synthesize_family(model, partition, options);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::filesystem::create_directories(out_dir);
  write_json(std::filesystem::path(out_dir) / "model.json", model.to_json());
  write_json(std::filesystem::path(out_dir) / "partition.json", partition.to_json());
  write_json(std::filesystem::path(out_dir) / "family.json", family.to_json());
  json summary = family_summary(family);
  summary["wall_seconds"] = seconds;
  summary["objective_mode"] = family.objective_mode;
  write_json(std::filesystem::path(out_dir) / "synthesis_summary.json", summary);

  std::cout << "synthesize: " << family.size() << "/" << partition.size() << " regions certified in "
            << seconds << " s; artifacts in " << out_dir << "\n";
  for (const RegionFailure& f : family.failures) {
    std::cout << "  region " << f.region_index << ": " << to_string(f.status) << " (" << f.message << ")\n";
  }
  return family.size() > 0 ? 0 : 1;
}

int cmd_simulate(const json& config, const std::string& family_path, const std::string& out_dir,
                 const std::string& filter_override, const std::string& membership_override,
                 const std::string& backend_override, std::uint64_t seed_override, bool has_seed_override) {
  const NetworkModel model = model_from_config(config);
  const json sim = config.value("simulate", json::object());

  CertifiedSetFamily family;
  const FilterKind filter = filter_kind_from_string(
      !filter_override.empty() ? filter_override : sim.value("filter", std::string("explicit")));
  if (filter == FilterKind::Explicit) {
    if (family_path.empty()) throw std::invalid_argument("simulate with the explicit filter needs --family");
    family = CertifiedSetFamily::from_json(load_json(family_path));
    family.require_matches(model);
  }

  EpisodeConfig episode;
  episode.filter = filter;
  episode.membership = membership_mode_from_string(
      !membership_override.empty() ? membership_override : sim.value("membership", std::string("global-sum")));
  episode.horizon = sim.value("horizon", 1000);
  episode.start_inside_family = sim.value("start_inside_family", true);
  const int episodes = sim.value("episodes", 1);
  const std::uint64_t base_seed = has_seed_override ? seed_override : sim.value("seed", std::uint64_t{0});

  PolicyStub policy;
  if (sim.contains("policy")) {
    const json& pj = sim.at("policy");
    policy.kind = policy_kind_from_string(pj.value("kind", std::string(to_string(policy.kind))));
    policy.scale = pj.value("scale", policy.scale);
    policy.noise = pj.value("noise", policy.noise);
  }

  ImplicitFilterOptions implicit_options;
  implicit_options.solver = solver_from_config(config, backend_override);
  std::optional<SdpSolver> solver;
  if (filter == FilterKind::Implicit) solver.emplace(implicit_options.solver);

  std::filesystem::create_directories(out_dir);
  json episode_rows = json::array();
  int total_violations = 0;
  int faulted = 0;
  for (int e = 0; e < episodes; ++e) {
    episode.seed = base_seed * 7919ull + static_cast<std::uint64_t>(e);
    const EpisodeTrace trace =
        run_episode(model, filter == FilterKind::Explicit ? &family : nullptr,
                    solver.has_value() ? &*solver : nullptr, episode, policy, implicit_options);
    std::ofstream csv(std::filesystem::path(out_dir) / ("episode_" + std::to_string(e) + ".csv"));
    trace.write_csv(csv);
    total_violations += trace.violations;
    if (trace.filter_fault) ++faulted;
    episode_rows.push_back(json{{"episode", e},
                                {"seed", trace.seed},
                                {"violations", trace.violations},
                                {"interventions", trace.interventions},
                                {"filter_fault", trace.filter_fault},
                                {"fault_message", trace.fault_message}});
  }
  write_json(std::filesystem::path(out_dir) / "simulation_summary.json",
             json{{"episodes", episodes},
                  {"horizon", episode.horizon},
                  {"filter", to_string(filter)},
                  {"membership", to_string(episode.membership)},
                  {"policy", to_string(policy.kind)},
                  {"total_violations", total_violations},
                  {"episodes_with_fault", faulted},
                  {"episode_results", std::move(episode_rows)}});
  std::cout << "simulate: " << episodes << " episodes, " << total_violations << " violation steps, "
            << faulted << " filter faults; artifacts in " << out_dir << "\n";
  return 0;
}

int cmd_coverage(const json& config, const std::string& out_dir, int workers_override,
                 const std::string& backend_override, std::uint64_t seed_override, bool has_seed_override) {
  const json& cov = config.at("coverage");
  const json model_cfg = config.at("model");
  if (!model_cfg.contains("builder"))
    throw std::invalid_argument("coverage sweeps need a model builder (gamma varies per cell)");
  const std::string builder = model_cfg.at("builder").get<std::string>();

  const std::vector<int> set_counts = cov.at("set_counts").get<std::vector<int>>();
  const std::vector<double> gammas = cov.at("gammas").get<std::vector<double>>();
  const int partitions_per_cell = cov.value("partitions_per_cell", 3);
  const int samples = cov.value("samples", 10000);
  const std::uint64_t seed = has_seed_override ? seed_override : cov.value("seed", std::uint64_t{0});

  const ModelFactory factory = [&](double gamma) {
    json patched = config;
    patched["model"]["params"]["gamma"] = gamma;
    return model_from_config(patched);
  };
  (void)builder;

  const SynthesisOptions synthesis = synthesis_from_config(config, "", workers_override, backend_override);
  const std::vector<CoverageCell> cells =
      coverage_sweep(factory, set_counts, gammas, partitions_per_cell, samples, seed, synthesis);

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(std::filesystem::path(out_dir) / "coverage.csv");
  csv << "set_count,gamma,partition,fraction,certified_regions\n";
  json cells_json = json::array();
  for (const CoverageCell& cell : cells) {
    for (std::size_t p = 0; p < cell.fractions.size(); ++p) {
      csv << cell.set_count << "," << cell.gamma << "," << p << "," << cell.fractions[p] << ","
          << cell.certified_counts[p] << "\n";
    }
    cells_json.push_back(json{{"set_count", cell.set_count},
                              {"gamma", cell.gamma},
                              {"fractions", cell.fractions},
                              {"certified_counts", cell.certified_counts},
                              {"mean", cell.mean},
                              {"std_error", cell.std_error}});
    std::cout << "coverage: sets=" << cell.set_count << " gamma=" << cell.gamma << " mean=" << cell.mean
              << " se=" << cell.std_error << "\n";
  }
  write_json(std::filesystem::path(out_dir) / "coverage_summary.json",
             json{{"samples_per_partition", samples},
                  {"partitions_per_cell", partitions_per_cell},
                  {"cells", std::move(cells_json)}});
  return 0;
}

int cmd_compare(const json& config, const std::string& family_path, const std::string& out_dir,
                const std::string& membership_override, const std::string& backend_override,
                std::uint64_t seed_override, bool has_seed_override) {
  const NetworkModel model = model_from_config(config);
  if (family_path.empty()) throw std::invalid_argument("compare needs --family");
  const CertifiedSetFamily family = CertifiedSetFamily::from_json(load_json(family_path));
  family.require_matches(model);

  const json cmp = config.value("compare", json::object());
  const int pairs = cmp.value("pairs", 200);
  const MembershipMode mode = membership_mode_from_string(
      !membership_override.empty() ? membership_override
                                   : cmp.value("membership", std::string("local-conservative")));
  const std::uint64_t seed = has_seed_override ? seed_override : cmp.value("seed", std::uint64_t{0});

  ImplicitFilterOptions implicit_options;
  implicit_options.solver = solver_from_config(config, backend_override);
  implicit_options.shape_floor = family.shape_floor;
  implicit_options.global_coupling = family.global_coupling;
  const SdpSolver solver(implicit_options.solver);

  const FilterAgreementReport report =
      compare_filters(model, family, pairs, mode, seed, implicit_options, solver);

  std::filesystem::create_directories(out_dir);
  write_json(std::filesystem::path(out_dir) / "filter_agreement.json",
             json{{"certified_pairs", report.certified_pairs},
                  {"attempts", report.attempts},
                  {"implicit_failures", report.implicit_failures},
                  {"max_correction_norm", report.max_correction_norm},
                  {"mean_correction_norm", report.mean_correction_norm},
                  {"membership", to_string(mode)}});
  std::cout << "compare: " << report.certified_pairs << " certified pairs, max correction "
            << report.max_correction_norm << ", per-step failures " << report.implicit_failures << "\n";
  return report.implicit_failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured invariant-set synthesis and distributed safety filtering"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", family_path;
  std::string objective_override, membership_override, filter_override, backend_override;
  int workers_override = 0;
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;

  auto add_common = [&](CLI::App* cmd, bool needs_family) {
    cmd->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--workers", workers_override, "parallel solver workers");
    cmd->add_option("--backend", backend_override, "conic backend (auto|clarabel|cvxopt)");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { seed_override = v; has_seed_override = true; },
        "override the config seed");
    if (needs_family) cmd->add_option("--family", family_path, "certified set family JSON");
  };

  CLI::App* synthesize = app.add_subcommand("synthesize", "build a certified set family over a partition");
  add_common(synthesize, false);
  synthesize->add_option("--objective", objective_override, "max-trace | min-trace");

  CLI::App* simulate = app.add_subcommand("simulate", "run filtered episodes");
  add_common(simulate, true);
  simulate->add_option("--filter", filter_override, "none | explicit | implicit");
  simulate->add_option("--membership", membership_override, "global-sum | local-conservative");

  CLI::App* coverage = app.add_subcommand("coverage", "sweep coverage over set counts and gamma levels");
  add_common(coverage, false);

  CLI::App* compare = app.add_subcommand("compare", "check the per-step filter against explicit certificates");
  add_common(compare, true);
  compare->add_option("--membership", membership_override, "global-sum | local-conservative");

  CLI::App* partition = app.add_subcommand("partition", "sample seeds and dump the cell decomposition");
  add_common(partition, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const nlohmann::json config = load_json(config_path);
    if (synthesize->parsed()) {
      return cmd_synthesize(config, out_dir, objective_override, workers_override, backend_override,
                            seed_override, has_seed_override);
    }
    if (simulate->parsed()) {
      return cmd_simulate(config, family_path, out_dir, filter_override, membership_override,
                          backend_override, seed_override, has_seed_override);
    }
    if (coverage->parsed()) {
      return cmd_coverage(config, out_dir, workers_override, backend_override, seed_override,
                          has_seed_override);
    }
    if (compare->parsed()) {
      return cmd_compare(config, family_path, out_dir, membership_override, backend_override, seed_override,
                         has_seed_override);
    }
    if (partition->parsed()) {
      return cmd_partition(config, out_dir, seed_override, has_seed_override);
    }
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
