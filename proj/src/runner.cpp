#include "agsam/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "agsam/csv.hpp"
#include "agsam/metrics.hpp"
#include "agsam/rng.hpp"

namespace agsam {

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "sam") return OptimizerKind::kSam;
  if (s == "asam") return OptimizerKind::kAsam;
  if (s == "agnostic_sam") return OptimizerKind::kAgnosticSam;
  if (s == "agnostic_asam") return OptimizerKind::kAgnosticAsam;
  throw std::invalid_argument("unknown optimizer '" + s + "'");
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kSam: return "sam";
    case OptimizerKind::kAsam: return "asam";
    case OptimizerKind::kAgnosticSam: return "agnostic_sam";
    case OptimizerKind::kAgnosticAsam: return "agnostic_asam";
  }
  return "?";
}

// ------------------------------------------------------------- binding ----

RunConfig RunConfig::from_kv(KvConfig& kv, std::string label) {
  RunConfig cfg;
  cfg.label = std::move(label);

  cfg.data_kind = dataset_kind_from_string(kv.get_string("data.kind", "two_moons"));
  cfg.n_train = kv.get_uint("data.n_train", 1000);
  cfg.n_test = kv.get_uint("data.n_test", 1000);
  cfg.noise_std = kv.get_double("data.noise_std", 0.1);
  cfg.data_options.blob_classes =
      static_cast<int>(kv.get_uint("data.classes", 3));
  cfg.data_options.blob_distance = kv.get_double("data.blob_distance", 4.0);
  cfg.label_noise = kv.get_double("data.label_noise", 0.0);
  cfg.export_data = kv.get_bool("data.export", false);
  if (cfg.n_train < 2) kv.fail("data.n_train", "need at least 2 rows");
  if (cfg.n_test < 1) kv.fail("data.n_test", "need at least 1 row");
  if (cfg.noise_std < 0.0) kv.fail("data.noise_std", "must be >= 0");
  if (cfg.label_noise < 0.0 || cfg.label_noise > 1.0)
    kv.fail("data.label_noise", "must be in [0,1]");

  cfg.model.layer_widths = kv.get_size_list("model.widths", {2, 16, 16, 2});
  const std::string act = kv.get_string("model.activation", "relu");
  if (act == "relu")
    cfg.model.activation = Activation::kRelu;
  else if (act == "tanh")
    cfg.model.activation = Activation::kTanh;
  else
    kv.fail("model.activation", "expected relu or tanh, got '" + act + "'");
  try {
    cfg.model.validate();
  } catch (const std::exception& e) {
    kv.fail("model.widths", e.what());
  }

  cfg.optimizer =
      optimizer_kind_from_string(kv.get_string("optim.kind", "sgd"));
  cfg.base.lr = kv.get_double("optim.lr", 0.1);
  cfg.base.momentum = kv.get_double("optim.momentum", 0.9);
  cfg.base.weight_decay = kv.get_double("optim.weight_decay", 0.0);
  if (cfg.base.lr <= 0.0) kv.fail("optim.lr", "must be > 0");
  if (cfg.base.momentum < 0.0 || cfg.base.momentum >= 1.0)
    kv.fail("optim.momentum", "must be in [0,1)");
  if (cfg.base.weight_decay < 0.0)
    kv.fail("optim.weight_decay", "must be >= 0");

  // headline radius convention: rho1 = 2*rho2 = 2*rho
  cfg.rho = kv.get_double("optim.rho", 0.05);
  if (cfg.rho <= 0.0) kv.fail("optim.rho", "must be > 0");
  const double rho1_default = 2.0 * cfg.rho;
  cfg.rho1 = kv.get_double("optim.rho1", rho1_default);
  cfg.rho2 = kv.get_double("optim.rho2", cfg.rho1 / 2.0);
  if (cfg.rho1 <= 0.0) kv.fail("optim.rho1", "must be > 0");
  if (cfg.rho2 < 0.0) kv.fail("optim.rho2", "must be >= 0");
  cfg.beta = kv.get_double("optim.beta", 0.9);
  if (cfg.beta < 0.0 || cfg.beta > 1.0)
    kv.fail("optim.beta", "must be in [0,1]");
  const std::string variant = kv.get_string("optim.variant", "full");
  if (variant == "full")
    cfg.variant = optim::AgnosticVariant::kFull;
  else if (variant == "simpler")
    cfg.variant = optim::AgnosticVariant::kSimpler;
  else
    kv.fail("optim.variant", "expected full or simpler, got '" + variant + "'");

  cfg.split.mode =
      split_mode_from_string(kv.get_string("split.mode", "duplicated"));
  cfg.split.ratio = kv.get_double("split.ratio", 0.7);
  if (cfg.split.mode != SplitMode::kDuplicated &&
      (cfg.split.ratio <= 0.0 || cfg.split.ratio >= 1.0))
    kv.fail("split.ratio", "must be in (0,1)");

  cfg.epochs = kv.get_uint("run.epochs", 10);
  cfg.batch_size = kv.get_uint("run.batch_size", 64);
  cfg.seed = kv.get_uint("run.seed", 1);
  cfg.record_wall_time = kv.get_bool("run.wall_time", false);
  cfg.out_dir = kv.get_string("run.out", "out");
  if (cfg.epochs < 1) kv.fail("run.epochs", "must be >= 1");
  if (cfg.batch_size < 1) kv.fail("run.batch_size", "must be >= 1");

  cfg.cosine_enabled = kv.get_bool("metrics.cosine", false);
  const bool agnostic = cfg.optimizer == OptimizerKind::kAgnosticSam ||
                        cfg.optimizer == OptimizerKind::kAgnosticAsam;
  const double cosine_rho_default = agnostic ? cfg.rho2 : cfg.rho;
  cfg.cosine_rho = kv.get_double("metrics.cosine_rho", cosine_rho_default);
  if (cfg.cosine_rho < 0.0) kv.fail("metrics.cosine_rho", "must be >= 0");
  cfg.spectrum_every = kv.get_uint("metrics.spectrum_every", 0);
  cfg.spectrum_k = static_cast<int>(kv.get_uint("metrics.spectrum_k", 5));
  cfg.eval_batch = kv.get_uint("metrics.eval_batch", 256);
  cfg.landscape_at_end = kv.get_bool("metrics.landscape_at_end", false);
  cfg.slice_extent = kv.get_double("metrics.slice_extent", 1.0);
  cfg.slice_resolution =
      static_cast<int>(kv.get_uint("metrics.slice_resolution", 20));
  if (cfg.slice_extent <= 0.0) kv.fail("metrics.slice_extent", "must be > 0");
  if (cfg.slice_resolution < 1)
    kv.fail("metrics.slice_resolution", "must be >= 1");
  if (cfg.spectrum_k < 1) kv.fail("metrics.spectrum_k", "must be >= 1");

  const auto unknown = kv.unconsumed();
  if (!unknown.empty()) throw std::runtime_error(unknown.front());

  cfg.resolved = kv.resolved();
  return cfg;
}

void RunConfig::write_resolved(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("run: cannot write " + path.string());
  for (const auto& [key, value] : resolved) out << key << " = " << value << "\n";
}

// ------------------------------------------------------------ datasets ----

Dataset build_train_dataset(const RunConfig& cfg) {
  return make_dataset(cfg.data_kind, cfg.n_train, cfg.noise_std, cfg.seed,
                      cfg.data_options);
}

Dataset build_test_dataset(const RunConfig& cfg) {
  return make_dataset(cfg.data_kind, cfg.n_test, cfg.noise_std,
                      SplitMix64::derive(cfg.seed, Stream::kTestData),
                      cfg.data_options);
}

Batch eval_subsample(const Dataset& ds, std::size_t max_rows,
                     std::uint64_t seed) {
  if (ds.rows <= max_rows) return ds.all();
  std::vector<std::size_t> perm = shuffled_indices(
      ds.rows, SplitMix64::derive(seed, Stream::kEvalBatch));
  perm.resize(max_rows);
  return ds.take(perm);
}

// ----------------------------------------------------------------- run ----

namespace {

struct CosineProbe {
  ParamVector grad_t;
  ParamVector grad_v_tilde;
};

CosineProbe probe_cosine(const MlpSpec& spec, const ParamVector& theta,
                         const Batch& bt, const Batch& bv, double rho) {
  CosineProbe p;
  p.grad_t = batch_loss(spec, theta, bt).grad;
  ParamVector g_v0 = batch_loss(spec, theta, bv).grad;
  ParamVector tilted = optim::sam_perturb(theta, g_v0, rho, false);
  p.grad_v_tilde = batch_loss(spec, tilted, bv).grad;
  return p;
}

std::string optional_cell(const std::optional<double>& v) {
  return v ? csv::format(*v) : std::string();
}

}  // namespace

RunResult run(const RunConfig& cfg) {
  RunResult result;
  result.out_dir = cfg.out_dir;
  try {
    std::filesystem::create_directories(cfg.out_dir);
    cfg.write_resolved(cfg.out_dir / "resolved.cfg");

    Dataset train = build_train_dataset(cfg);
    std::vector<NoiseFlip> manifest;
    if (cfg.label_noise > 0.0) {
      NoisyDataset noisy = inject_label_noise(train, cfg.label_noise, cfg.seed);
      train = std::move(noisy.data);
      manifest = std::move(noisy.manifest);
      write_noise_manifest(cfg.out_dir / "noise_manifest.csv", manifest);
    }
    const Dataset test = build_test_dataset(cfg);
    if (cfg.export_data) {
      train.to_csv(cfg.out_dir / "train.csv");
      test.to_csv(cfg.out_dir / "test.csv");
    }

    MlpSpec spec = cfg.model;
    spec.init_seed = cfg.seed;
    if (spec.layer_widths.front() != train.dim)
      throw std::invalid_argument(
          "model.widths: input width " +
          std::to_string(spec.layer_widths.front()) +
          " does not match dataset dimension " + std::to_string(train.dim));
    if (spec.layer_widths.back() < static_cast<std::size_t>(train.num_classes))
      throw std::invalid_argument(
          "model.widths: output width smaller than class count " +
          std::to_string(train.num_classes));
    ParamVector theta = init_model(spec);

    BatchSampler sampler(train, cfg.split, cfg.batch_size, cfg.seed);
    const std::uint64_t total_steps = cfg.epochs * sampler.steps_per_epoch();
    const Batch test_all = test.all();

    const optim::LossFn loss_fn = [&spec](const ParamVector& t,
                                          const Batch& b) {
      return batch_loss(spec, t, b);
    };

    std::ofstream metrics_csv(cfg.out_dir / "metrics.csv");
    metrics_csv
        << "step,epoch,train_loss,train_acc,test_loss,test_acc,lr,wall_time_ms\n";
    std::ofstream cosine_csv;
    if (cfg.cosine_enabled) {
      cosine_csv.open(cfg.out_dir / "cosine.csv");
      cosine_csv << "step,cosine_b,cosine_a,change\n";
    }

    optim::OptimizerState state;
    std::optional<CosineProbe> prev_probe;
    const auto t0 = std::chrono::steady_clock::now();

    for (std::uint64_t step = 0; step < total_steps; ++step) {
      const std::uint64_t epoch = step / sampler.steps_per_epoch();
      const double lr = optim::cosine_lr(cfg.base.lr, step, total_steps);
      auto [bt, bv] = sampler.next();

      if (cfg.cosine_enabled) {
        CosineProbe probe =
            probe_cosine(spec, theta, bt, bv, cfg.cosine_rho);
        if (prev_probe) {
          optim::StepTrace a, b;
          a.theta = theta;  // layouts only; cosine uses the gradient fields
          a.theta_tilde_v = theta;
          a.grad_t_theta = prev_probe->grad_t;
          a.grad_v_tilde_v = prev_probe->grad_v_tilde;
          b.theta = theta;
          b.theta_tilde_v = theta;
          b.grad_t_theta = probe.grad_t;
          b.grad_v_tilde_v = probe.grad_v_tilde;
          const metrics::CosineRecord rec =
              metrics::cosine_metrics(a, b, step - 1);
          cosine_csv << rec.step << "," << optional_cell(rec.cosine_b) << ","
                     << optional_cell(rec.cosine_a) << ","
                     << optional_cell(rec.change) << "\n";
        }
        prev_probe = std::move(probe);
      }

      optim::StepStats stats;
      switch (cfg.optimizer) {
        case OptimizerKind::kSgd: {
          BatchGradEval eval = loss_fn(theta, bt);
          stats = {eval.loss, eval.accuracy};
          optim::SgdConfig sgd = cfg.base;
          sgd.lr = lr;
          theta = optim::sgd_step(state, sgd, theta, eval.grad);
          break;
        }
        case OptimizerKind::kSam:
        case OptimizerKind::kAsam: {
          optim::SamConfig sam{cfg.rho, cfg.base,
                               cfg.optimizer == OptimizerKind::kAsam};
          sam.base.lr = lr;
          auto [next, s] = optim::sam_step(state, sam, theta, bt, loss_fn);
          theta = std::move(next);
          stats = s;
          break;
        }
        case OptimizerKind::kAgnosticSam:
        case OptimizerKind::kAgnosticAsam: {
          optim::AgnosticSamConfig ag{
              cfg.rho1, cfg.rho2, cfg.beta, cfg.base,
              cfg.optimizer == OptimizerKind::kAgnosticAsam, cfg.variant};
          ag.base.lr = lr;
          auto [next, s] =
              optim::agnostic_sam_step(state, ag, theta, bt, bv, loss_fn);
          theta = std::move(next);
          stats = s;
          break;
        }
      }

      const BatchEval test_eval = batch_eval(spec, theta, test_all);
      MetricRecord record{step,           epoch,
                          stats.loss,     stats.accuracy,
                          test_eval.loss, test_eval.accuracy,
                          lr,             0.0};
      if (cfg.record_wall_time)
        record.wall_time_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
      metrics_csv << record.step << "," << record.epoch << ","
                  << csv::format(record.train_loss) << ","
                  << csv::format(record.train_acc) << ","
                  << csv::format(record.test_loss) << ","
                  << csv::format(record.test_acc) << ","
                  << csv::format(record.lr) << ","
                  << csv::format(record.wall_time_ms) << "\n";

      if (!std::isfinite(record.train_loss) ||
          !std::isfinite(record.test_loss)) {
        std::ofstream diag(cfg.out_dir / "diagnostic.txt");
        diag << "non-finite loss at step " << step << ": train "
             << csv::format(record.train_loss) << ", test "
             << csv::format(record.test_loss) << "\n";
        throw std::runtime_error("run aborted: non-finite loss at step " +
                                 std::to_string(step));
      }

      if (cfg.spectrum_every > 0 && (step + 1) % cfg.spectrum_every == 0) {
        const Batch probe_batch = eval_subsample(train, cfg.eval_batch, cfg.seed);
        const metrics::SpectrumRecord rec = metrics::top_eigenvalues(
            make_grad_fn(spec, probe_batch), theta, cfg.spectrum_k,
            SplitMix64::derive(cfg.seed, Stream::kSpectrum));
        metrics::write_spectrum_csv(
            cfg.out_dir / ("spectrum_step" + std::to_string(step + 1) + ".csv"),
            rec);
      }

      result.final_train_loss = stats.loss;
      result.final_test_loss = test_eval.loss;
      result.final_test_acc = test_eval.accuracy;
      result.steps = step + 1;
    }

    const Batch probe_batch = eval_subsample(train, cfg.eval_batch, cfg.seed);
    if (cfg.spectrum_every > 0) {
      const metrics::SpectrumRecord rec = metrics::top_eigenvalues(
          make_grad_fn(spec, probe_batch), theta, cfg.spectrum_k,
          SplitMix64::derive(cfg.seed, Stream::kSpectrum));
      metrics::write_spectrum_csv(cfg.out_dir / "spectrum.csv", rec);
    }
    if (cfg.landscape_at_end) {
      const metrics::LandscapeSlice slice = metrics::landscape_slice(
          make_value_fn(spec, probe_batch), theta, cfg.slice_extent,
          cfg.slice_resolution, cfg.seed);
      metrics::write_slice_csv(cfg.out_dir / "slice.csv", slice);
    }
    theta.save(cfg.out_dir / "checkpoint.pv");

    result.ok = true;
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
  }
  return result;
}

// ------------------------------------------------------------- compare ----

namespace {

std::size_t worker_cap() {
  if (const char* env = std::getenv("AGSAM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace

double mean_of(std::span<const double> xs) {
  double acc = 0.0;
  for (const double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double sample_std_of(std::span<const double> xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (const double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

CompareResult compare(const std::vector<CompareEntry>& entries,
                      const std::vector<std::uint64_t>& seeds,
                      const std::filesystem::path& out_dir) {
  if (entries.empty()) throw std::invalid_argument("compare: no configs");
  if (seeds.empty()) throw std::invalid_argument("compare: no seeds");
  std::filesystem::create_directories(out_dir);

  struct Job {
    std::size_t entry;
    std::uint64_t seed;
    RunResult result;
  };
  std::vector<Job> jobs;
  for (std::size_t e = 0; e < entries.size(); ++e)
    for (const std::uint64_t s : seeds) jobs.push_back({e, s, {}});

  std::atomic<std::size_t> next_job{0};
  const std::size_t workers = std::min(worker_cap(), jobs.size());
  auto work = [&] {
    for (;;) {
      const std::size_t j = next_job.fetch_add(1);
      if (j >= jobs.size()) return;
      Job& job = jobs[j];
      RunConfig cfg = entries[job.entry].config;
      cfg.seed = job.seed;
      auto echo = cfg.resolved.find("run.seed");
      if (echo != cfg.resolved.end()) echo->second = std::to_string(job.seed);
      cfg.out_dir = out_dir / (entries[job.entry].label + "_seed" +
                               std::to_string(job.seed));
      echo = cfg.resolved.find("run.out");
      if (echo != cfg.resolved.end()) echo->second = cfg.out_dir.string();
      job.result = run(cfg);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  const std::filesystem::path summary_path = out_dir / "summary.csv";
  std::ofstream summary(summary_path);
  summary << "config,seed,final_test_acc,status\n";
  bool all_ok = true;
  std::size_t j = 0;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    std::vector<double> accs;
    for (std::size_t s = 0; s < seeds.size(); ++s, ++j) {
      const Job& job = jobs[j];
      const bool ok = job.result.ok;
      all_ok = all_ok && ok;
      summary << entries[e].label << "," << job.seed << ","
              << (ok ? csv::format(job.result.final_test_acc)
                     : std::string("nan"))
              << "," << (ok ? "ok" : "failed") << "\n";
      if (ok) accs.push_back(job.result.final_test_acc);
    }
    if (!accs.empty()) {
      const double mean = mean_of(accs);
      summary << entries[e].label << ",mean," << csv::format(mean) << ",ok\n";
      summary << entries[e].label << ",std,"
              << csv::format(sample_std_of(accs, mean)) << ",ok\n";
    }
  }
  return {all_ok, summary_path};
}

}  // namespace agsam
