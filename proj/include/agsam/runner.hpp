#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agsam/config.hpp"
#include "agsam/dataset.hpp"
#include "agsam/mlp.hpp"
#include "agsam/optim.hpp"

namespace agsam {

enum class OptimizerKind { kSgd, kSam, kAsam, kAgnosticSam, kAgnosticAsam };

OptimizerKind optimizer_kind_from_string(const std::string& s);
std::string to_string(OptimizerKind kind);

// One fully resolved experiment. Built from a KvConfig; every default that
// binding filled in ends up in `resolved` so the run directory carries a
// complete echo.
struct RunConfig {
  std::string label = "run";

  DatasetKind data_kind = DatasetKind::kTwoMoons;
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  double noise_std = 0.1;
  DatasetOptions data_options;
  double label_noise = 0.0;
  bool export_data = false;

  MlpSpec model;

  OptimizerKind optimizer = OptimizerKind::kSgd;
  optim::SgdConfig base;          // lr is the peak rate of the cosine schedule
  double rho = 0.05;              // sam/asam radius
  double rho1 = 0.1;              // agnostic radii
  double rho2 = 0.05;
  double beta = 0.9;
  optim::AgnosticVariant variant = optim::AgnosticVariant::kFull;

  SplitStrategy split{SplitMode::kDuplicated, 0.7};
  std::uint64_t epochs = 10;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;

  bool cosine_enabled = false;
  double cosine_rho = 0.05;       // measurement radius for the probe
  std::uint64_t spectrum_every = 0;
  int spectrum_k = 5;
  std::size_t eval_batch = 256;   // fixed subsample for spectrum/slice probes
  bool landscape_at_end = false;
  double slice_extent = 1.0;
  int slice_resolution = 20;
  bool record_wall_time = false;  // keep metrics.csv byte-reproducible

  std::filesystem::path out_dir = "out";

  std::map<std::string, std::string> resolved;

  // Binds, validates and echoes defaults. Throws with a file:line/key
  // diagnostic on any invalid field.
  static RunConfig from_kv(KvConfig& kv, std::string label);
  void write_resolved(const std::filesystem::path& path) const;
};

// one metrics.csv row; cosine diagnostics go to cosine.csv instead
struct MetricRecord {
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_loss = 0.0;
  double test_acc = 0.0;
  double lr = 0.0;
  double wall_time_ms = 0.0;
};

struct RunResult {
  bool ok = false;
  std::string error;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  double final_test_acc = 0.0;
  std::uint64_t steps = 0;
  std::filesystem::path out_dir;
};

// End-to-end training with the cosine schedule; writes metrics.csv plus the
// requested diagnostics into cfg.out_dir. A non-finite loss aborts the run
// after appending the offending row and a diagnostic file.
RunResult run(const RunConfig& cfg);

struct CompareEntry {
  std::string label;
  RunConfig config;  // seed/out_dir are overwritten per (config, seed)
};

struct CompareResult {
  bool ok = false;
  std::filesystem::path summary_path;
};

// Runs every (config, seed) pair, in parallel up to the AGSAM_THREADS cap,
// and writes summary.csv with per-run accuracies and per-config mean and
// sample standard deviation.
CompareResult compare(const std::vector<CompareEntry>& entries,
                      const std::vector<std::uint64_t>& seeds,
                      const std::filesystem::path& out_dir);

// Deterministic eval subsample used by the spectrum/slice probes.
Batch eval_subsample(const Dataset& ds, std::size_t max_rows,
                     std::uint64_t seed);

// summary statistics used by compare
double mean_of(std::span<const double> xs);
double sample_std_of(std::span<const double> xs, double mean);

// train-set loader shared by run() and the slice/spectrum subcommands
Dataset build_train_dataset(const RunConfig& cfg);
Dataset build_test_dataset(const RunConfig& cfg);

}  // namespace agsam
