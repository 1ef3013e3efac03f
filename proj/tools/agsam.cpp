// Command-line front end: run / compare / verify-theory / slice / spectrum.
#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "agsam/config.hpp"
#include "agsam/metrics.hpp"
#include "agsam/rng.hpp"
#include "agsam/runner.hpp"
#include "agsam/theory.hpp"

namespace fs = std::filesystem;

namespace {

void apply_overrides(agsam::KvConfig& kv,
                     const std::vector<std::string>& sets) {
  for (const std::string& kvpair : sets) {
    const auto eq = kvpair.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got '" + kvpair +
                               "'");
    kv.set(kvpair.substr(0, eq), kvpair.substr(eq + 1));
  }
}

agsam::RunConfig load_run_config(const std::string& config_path,
                                 const std::vector<std::string>& sets,
                                 const std::string& out_dir,
                                 std::int64_t seed) {
  agsam::KvConfig kv = config_path.empty()
                           ? agsam::KvConfig::from_text("", "<defaults>")
                           : agsam::KvConfig::from_file(config_path);
  apply_overrides(kv, sets);
  if (!out_dir.empty()) kv.set("run.out", out_dir);
  if (seed >= 0) kv.set("run.seed", std::to_string(seed));
  const std::string label =
      config_path.empty() ? "run" : fs::path(config_path).stem().string();
  return agsam::RunConfig::from_kv(kv, label);
}

int cmd_run(const std::string& config_path,
            const std::vector<std::string>& sets, const std::string& out_dir,
            std::int64_t seed) {
  const agsam::RunConfig cfg =
      load_run_config(config_path, sets, out_dir, seed);
  const agsam::RunResult result = agsam::run(cfg);
  if (!result.ok) {
    std::cerr << "run failed: " << result.error << "\n";
    return 1;
  }
  std::cout << "run complete: " << result.steps << " steps, final test acc "
            << result.final_test_acc << ", output in "
            << result.out_dir.string() << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& config_paths,
                const std::vector<std::string>& sets,
                const std::string& sweep, const std::string& out_dir,
                std::vector<std::uint64_t> seeds) {
  if (seeds.empty()) seeds = {1, 2, 3};
  std::vector<agsam::CompareEntry> entries;
  std::map<std::string, int> label_uses;
  for (const std::string& path : config_paths) {
    const std::string stem = fs::path(path).stem().string();
    std::vector<std::pair<std::string, std::string>> variants;  // label, set
    if (sweep.empty()) {
      variants.emplace_back(stem, "");
    } else {
      const auto eq = sweep.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("--sweep expects key=v1,v2,..., got '" +
                                 sweep + "'");
      const std::string key = sweep.substr(0, eq);
      std::string rest = sweep.substr(eq + 1);
      std::size_t pos = 0;
      while (pos <= rest.size()) {
        const auto comma = rest.find(',', pos);
        const std::string value =
            rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                        : comma - pos);
        variants.emplace_back(stem + "_" + key + "=" + value,
                              key + "=" + value);
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    }
    for (const auto& [label, extra] : variants) {
      agsam::KvConfig kv = agsam::KvConfig::from_file(path);
      apply_overrides(kv, sets);
      if (!extra.empty()) apply_overrides(kv, {extra});
      std::string unique = label;
      const int uses = ++label_uses[label];
      if (uses > 1) unique += "_" + std::to_string(uses);
      entries.push_back({unique, agsam::RunConfig::from_kv(kv, unique)});
    }
  }
  const agsam::CompareResult result =
      agsam::compare(entries, seeds, out_dir.empty() ? "compare_out" : out_dir);
  std::cout << "summary written to " << result.summary_path.string() << "\n";
  if (!result.ok) {
    std::cerr << "compare: at least one run failed\n";
    return 1;
  }
  return 0;
}

int cmd_verify_theory(std::uint64_t instances, std::uint64_t seed) {
  const agsam::theory::CongruenceSuiteReport congruence =
      agsam::theory::run_congruence_suite(instances, seed);
  std::cout << congruence.satisfied << "/" << congruence.total
            << " congruence instances satisfied\n";
  for (const auto& violation : congruence.violations)
    std::cerr << "violated: " << violation.describe() << "\n";

  const agsam::theory::MonotonicityReport grid =
      agsam::theory::run_monotonicity_grid();
  std::cout << grid.comparisons - grid.failures << "/" << grid.comparisons
            << " bound monotonicity comparisons passed\n";
  for (const auto& note : grid.failure_notes)
    std::cerr << "violated: " << note << "\n";

  return congruence.all_satisfied() && grid.all_pass() ? 0 : 1;
}

int cmd_slice(const std::string& config_path,
              const std::vector<std::string>& sets,
              const std::string& checkpoint, const std::string& out_dir,
              std::int64_t seed) {
  agsam::RunConfig cfg = load_run_config(config_path, sets, out_dir, seed);
  fs::create_directories(cfg.out_dir);
  agsam::MlpSpec spec = cfg.model;
  spec.init_seed = cfg.seed;
  agsam::ParamVector theta = checkpoint.empty()
                                 ? agsam::init_model(spec)
                                 : agsam::ParamVector::load(checkpoint);
  const agsam::Dataset train = agsam::build_train_dataset(cfg);
  const agsam::Batch probe =
      agsam::eval_subsample(train, cfg.eval_batch, cfg.seed);
  const agsam::metrics::LandscapeSlice slice = agsam::metrics::landscape_slice(
      agsam::make_value_fn(spec, probe), theta, cfg.slice_extent,
      cfg.slice_resolution, cfg.seed);
  const fs::path out = cfg.out_dir / "slice.csv";
  agsam::metrics::write_slice_csv(out, slice);
  std::cout << "slice written to " << out.string() << "\n";
  return 0;
}

int cmd_spectrum(const std::string& config_path,
                 const std::vector<std::string>& sets,
                 const std::string& checkpoint, const std::string& out_dir,
                 std::int64_t seed) {
  agsam::RunConfig cfg = load_run_config(config_path, sets, out_dir, seed);
  fs::create_directories(cfg.out_dir);
  agsam::MlpSpec spec = cfg.model;
  spec.init_seed = cfg.seed;
  agsam::ParamVector theta = checkpoint.empty()
                                 ? agsam::init_model(spec)
                                 : agsam::ParamVector::load(checkpoint);
  const agsam::Dataset train = agsam::build_train_dataset(cfg);
  const agsam::Batch probe =
      agsam::eval_subsample(train, cfg.eval_batch, cfg.seed);
  const agsam::metrics::SpectrumRecord rec = agsam::metrics::top_eigenvalues(
      agsam::make_grad_fn(spec, probe), theta, cfg.spectrum_k,
      agsam::SplitMix64::derive(cfg.seed, agsam::Stream::kSpectrum));
  const fs::path out = cfg.out_dir / "spectrum.csv";
  agsam::metrics::write_spectrum_csv(out, rec);
  std::cout << "spectrum written to " << out.string() << "\n";
  for (std::size_t r = 0; r < rec.eigenvalues.size(); ++r)
    std::cout << "  lambda_" << (r + 1) << " = " << rec.eigenvalues[r] << " ("
              << rec.iterations_used[r] << " iterations)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agnostic-SAM optimization workbench"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint, sweep;
  std::vector<std::string> config_paths, sets;
  std::vector<std::uint64_t> seeds;
  std::int64_t seed = -1;
  std::uint64_t instances = 100;
  std::uint64_t theory_seed = 20240;

  CLI::App* run_cmd = app.add_subcommand("run", "train one configuration");
  run_cmd->add_option("--config", config_path, "config file (key = value)");
  run_cmd->add_option("--set", sets, "override, key=value (repeatable)");
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--seed", seed, "override run.seed");

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "run configs across seeds, summarize");
  compare_cmd->add_option("--config", config_paths, "config file (repeatable)")
      ->required();
  compare_cmd->add_option("--set", sets, "override, key=value (repeatable)");
  compare_cmd->add_option("--sweep", sweep,
                          "expand one key over values: key=v1,v2,...");
  compare_cmd->add_option("--out", out_dir, "output directory");
  compare_cmd->add_option("--seeds", seeds, "seed list (default 1 2 3)");

  CLI::App* verify_cmd = app.add_subcommand(
      "verify-theory", "congruence suite + bound monotonicity grid");
  verify_cmd->add_option("--instances", instances,
                         "number of quadratic instances");
  verify_cmd->add_option("--seed", theory_seed, "suite seed");

  CLI::App* slice_cmd =
      app.add_subcommand("slice", "loss-landscape slice around a checkpoint");
  slice_cmd->add_option("--config", config_path, "config file");
  slice_cmd->add_option("--set", sets, "override, key=value (repeatable)");
  slice_cmd->add_option("--checkpoint", checkpoint, "parameter checkpoint");
  slice_cmd->add_option("--out", out_dir, "output directory");
  slice_cmd->add_option("--seed", seed, "override run.seed");

  CLI::App* spectrum_cmd = app.add_subcommand(
      "spectrum", "top Hessian eigenvalues at a checkpoint");
  spectrum_cmd->add_option("--config", config_path, "config file");
  spectrum_cmd->add_option("--set", sets, "override, key=value (repeatable)");
  spectrum_cmd->add_option("--checkpoint", checkpoint, "parameter checkpoint");
  spectrum_cmd->add_option("--out", out_dir, "output directory");
  spectrum_cmd->add_option("--seed", seed, "override run.seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, sets, out_dir, seed);
    if (compare_cmd->parsed())
      return cmd_compare(config_paths, sets, sweep, out_dir, seeds);
    if (verify_cmd->parsed()) return cmd_verify_theory(instances, theory_seed);
    if (slice_cmd->parsed())
      return cmd_slice(config_path, sets, checkpoint, out_dir, seed);
    if (spectrum_cmd->parsed())
      return cmd_spectrum(config_path, sets, checkpoint, out_dir, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
