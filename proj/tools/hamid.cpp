// Command-line pipeline for simulated coherent-oscillation experiments and
// Hamiltonian/decoherence characterization.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hamid/fit.hpp"
#include "hamid/measurement.hpp"
#include "hamid/pipeline.hpp"
#include "hamid/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hamid;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitStatistical = 2;

struct RunConfig {
  ExperimentConfig experiment;
  HamiltonianParams truth_h;
  DecoherenceRates truth_rates;
  bool has_truth = false;
  ModelKind model = ModelKind::dephasing;
  FitConstraints constraints;
  std::string outputs = ".";
  std::vector<std::uint64_t> replicate_seeds;
  std::vector<std::size_t> n_e_list;
  std::size_t seeds_per_cell = 10;
};

ModelKind parse_model(const std::string& name) {
  if (name == "delta") return ModelKind::delta;
  if (name == "dephasing") return ModelKind::dephasing;
  if (name == "general") return ModelKind::general;
  throw config_error("unknown model: " + name);
}

FitConstraints parse_constraints(const json& j) {
  FitConstraints c;
  if (j.contains("fixed"))
    for (const auto& [k, v] : j.at("fixed").items())
      c.fixed[k] = v.get<double>();
  if (j.contains("ratio_gamma")) c.ratio_gamma = j.at("ratio_gamma").get<double>();
  if (j.contains("sum_gamma")) c.sum_gamma = j.at("sum_gamma").get<double>();
  // aux-experiment output is accepted directly
  if (j.contains("gamma_sum")) c.sum_gamma = j.at("gamma_sum").get<double>();
  if (!c.ratio_gamma && j.contains("gamma_plus") && j.contains("gamma_minus")) {
    const double gp = j.at("gamma_plus").get<double>();
    const double gm = j.at("gamma_minus").get<double>();
    if (gp > 0.0) c.ratio_gamma = gm / gp;
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  json j;
  is >> j;

  RunConfig cfg;
  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    if (e.contains("dt")) cfg.experiment.dt = e.at("dt").get<double>();
    if (e.contains("n_t")) cfg.experiment.n_t = e.at("n_t").get<std::size_t>();
    if (e.contains("n_e")) cfg.experiment.n_e = e.at("n_e").get<std::size_t>();
    if (e.contains("eta")) cfg.experiment.eta = e.at("eta").get<double>();
    if (e.contains("init_z")) cfg.experiment.init_z = e.at("init_z").get<int>();
    if (e.contains("seed")) cfg.experiment.seed = e.at("seed").get<std::uint64_t>();
  }
  if (j.contains("truth")) {
    const auto& t = j.at("truth");
    cfg.has_truth = true;
    if (t.contains("d")) cfg.truth_h.d = t.at("d").get<double>();
    if (t.contains("theta")) cfg.truth_h.theta = t.at("theta").get<double>();
    if (t.contains("gamma_z")) cfg.truth_rates.gamma_z = t.at("gamma_z").get<double>();
    if (t.contains("gamma_plus"))
      cfg.truth_rates.gamma_plus = t.at("gamma_plus").get<double>();
    if (t.contains("gamma_minus"))
      cfg.truth_rates.gamma_minus = t.at("gamma_minus").get<double>();
  }
  if (j.contains("model")) cfg.model = parse_model(j.at("model").get<std::string>());
  if (j.contains("constraints")) cfg.constraints = parse_constraints(j.at("constraints"));
  if (j.contains("outputs")) cfg.outputs = j.at("outputs").get<std::string>();
  if (j.contains("replicate_seeds"))
    cfg.replicate_seeds = j.at("replicate_seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("n_e_list"))
    cfg.n_e_list = j.at("n_e_list").get<std::vector<std::size_t>>();
  if (j.contains("seeds_per_cell"))
    cfg.seeds_per_cell = j.at("seeds_per_cell").get<std::size_t>();
  return cfg;
}

// temp + rename so readers never observe a partial file
void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw std::runtime_error("cannot open for writing: " + tmp.string());
    os << content;
  }
  fs::rename(tmp, path);
}

std::uint64_t env_seed_fallback(std::optional<std::uint64_t> flag_seed,
                                std::uint64_t config_seed) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("HAMID_SEED"))
    return std::strtoull(env, nullptr, 10);
  return config_seed;
}

int cmd_simulate(const RunConfig& cfg) {
  if (!cfg.has_truth) {
    std::cerr << "simulate: config must provide truth parameters\n";
    return kExitUsage;
  }
  cfg.experiment.validate();
  fs::create_directories(cfg.outputs);

  std::vector<std::uint64_t> seeds = cfg.replicate_seeds;
  if (seeds.empty()) seeds.push_back(cfg.experiment.seed);

  std::vector<fs::path> written;
  try {
    for (const std::uint64_t seed : seeds) {
      ExperimentConfig e = cfg.experiment;
      e.seed = seed;
      const TimeSeries ts = sample_experiment(cfg.truth_h, cfg.truth_rates, e);
      std::ostringstream os;
      write_series_csv(ts, os);
      const fs::path path =
          fs::path(cfg.outputs) / ("series_" + std::to_string(seed) + ".csv");
      atomic_write(path, os.str());
      written.push_back(path);
    }
  } catch (const std::exception& ex) {
    for (const auto& p : written) fs::remove(p);
    std::cerr << "simulate: " << ex.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

int cmd_characterize(const RunConfig& cfg, const std::vector<std::string>& files) {
  if (files.empty()) {
    std::cerr << "characterize: at least one series file required\n";
    return kExitUsage;
  }
  fs::create_directories(cfg.outputs);

  CharacterizationOptions opts;
  opts.kind = cfg.model;
  opts.constraints = cfg.constraints;

  int exit_code = kExitOk;
  for (const auto& file : files) {
    TimeSeries series;
    try {
      series = read_series_csv(file);
    } catch (const std::exception& ex) {
      std::cerr << "characterize: " << ex.what() << "\n";
      return kExitUsage;
    }
    const CharacterizationResult res = characterize_series(series, opts);

    const fs::path stem = fs::path(file).stem();
    const std::string suffix = files.size() > 1 ? "_" + stem.string() : "";
    atomic_write(fs::path(cfg.outputs) / ("fit" + suffix + ".json"),
                 fit_result_to_json(res.fit, 3.0, res.eta.eta));
    std::ostringstream os;
    write_spectrum_csv(res.spectrum, os);
    atomic_write(fs::path(cfg.outputs) / ("spectrum" + suffix + ".csv"), os.str());

    if (res.padding_skipped_unsettled)
      std::cerr << "characterize: warning: tail not settled, padding disabled; "
                   "residual spectral leakage expected\n";
    if (!res.fit.converged || res.model_mismatch) {
      std::cerr << "characterize: "
                << (res.model_mismatch ? "model mismatch (residual above noise "
                                         "prediction)"
                                       : "fit did not converge")
                << " for " << file << "\n";
      exit_code = kExitStatistical;
    }
  }
  return exit_code;
}

int cmd_aux(const RunConfig& cfg) {
  if (cfg.has_truth && cfg.truth_h.d != 0.0 && cfg.truth_h.theta != 0.0) {
    std::cerr << "aux: requires d = 0 or theta = 0\n";
    return kExitUsage;
  }
  fs::create_directories(cfg.outputs);
  const auto [z1, zm1] = sample_aux_experiment(cfg.truth_rates, cfg.experiment);
  AuxDecayFit aux;
  try {
    aux = fit_aux_decay(z1, zm1);
  } catch (const tail_not_settled_error& ex) {
    std::cerr << "aux: " << ex.what() << "\n";
    return kExitStatistical;
  } catch (const degenerate_steady_state_error& ex) {
    std::cerr << "aux: " << ex.what() << "\n";
    return kExitStatistical;
  }

  json out{{"gamma_sum", aux.gamma_sum},
           {"z_inf", aux.z_inf},
           {"gamma_plus", aux.gamma_plus},
           {"gamma_minus", aux.gamma_minus}};
  atomic_write(fs::path(cfg.outputs) / "constraints.json", out.dump(2) + "\n");
  return kExitOk;
}

int cmd_scaling_study(const RunConfig& cfg, unsigned workers) {
  if (!cfg.has_truth) {
    std::cerr << "scaling-study: config must provide truth parameters\n";
    return kExitUsage;
  }
  std::vector<std::size_t> distinct = cfg.n_e_list;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3 || cfg.seeds_per_cell < 10) {
    std::cerr << "scaling-study: need >= 3 distinct n_e values and >= 10 seeds\n";
    return kExitUsage;
  }
  fs::create_directories(cfg.outputs);

  CharacterizationOptions opts;
  opts.kind = cfg.model;
  opts.constraints = cfg.constraints;
  const ScalingStudy study =
      scaling_study(cfg.truth_h, cfg.truth_rates, cfg.experiment, cfg.n_e_list,
                    cfg.seeds_per_cell, opts, workers);
  write_scaling_csv(study, (fs::path(cfg.outputs) / "scaling.csv").string());
  for (const auto& [name, slope] : study.loglog_slope)
    std::cout << "slope " << name << " " << slope << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-state Hamiltonian and decoherence characterization"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::string> model_flag;
  std::optional<std::string> constraints_path;
  std::optional<std::string> out_dir;
  unsigned workers = 0;

  app.add_option("--config", config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed_flag, "master seed (fallback: HAMID_SEED env)");
  app.add_option("--model", model_flag, "delta|dephasing|general");
  app.add_option("--constraints", constraints_path,
                 "constraints JSON (e.g. aux-experiment output)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads (0 = hardware)");

  auto* sim = app.add_subcommand("simulate", "write simulated series CSVs");
  auto* chr = app.add_subcommand("characterize", "fit series files");
  std::vector<std::string> series_files;
  chr->add_option("files", series_files, "series CSV files");
  auto* aux = app.add_subcommand("aux", "relaxation-only auxiliary experiment");
  auto* scal = app.add_subcommand("scaling-study", "uncertainty vs N_T study");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help/error text
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    cfg.experiment.seed = env_seed_fallback(seed_flag, cfg.experiment.seed);
    if (model_flag) cfg.model = parse_model(*model_flag);
    if (out_dir) cfg.outputs = *out_dir;
    if (constraints_path) {
      std::ifstream is(*constraints_path);
      if (!is) throw std::runtime_error("cannot open: " + *constraints_path);
      json j;
      is >> j;
      cfg.constraints = parse_constraints(j);
    }

    if (sim->parsed()) return cmd_simulate(cfg);
    if (chr->parsed()) return cmd_characterize(cfg, series_files);
    if (aux->parsed()) return cmd_aux(cfg);
    if (scal->parsed()) return cmd_scaling_study(cfg, workers);
  } catch (const config_error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
