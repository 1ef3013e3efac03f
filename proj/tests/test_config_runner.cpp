#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "agsam/config.hpp"
#include "agsam/runner.hpp"

using namespace agsam;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

// small fast config: 16-point blobs, tiny model
KvConfig small_blobs_config(const std::string& out) {
  KvConfig kv = KvConfig::from_text(
      "data.kind = blobs\n"
      "data.n_train = 16\n"
      "data.n_test = 16\n"
      "model.widths = 2,8,3\n"
      "run.epochs = 1\n"
      "run.batch_size = 8\n",
      "<test>");
  kv.set("run.out", out);
  return kv;
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

// column extraction by header name
std::vector<std::string> csv_column(const std::string& text,
                                    const std::string& column) {
  const auto lines = csv_lines(text);
  REQUIRE(!lines.empty());
  std::vector<std::string> header;
  std::stringstream hs(lines[0]);
  std::string cell;
  while (std::getline(hs, cell, ',')) header.push_back(cell);
  std::size_t index = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) index = i;
  REQUIRE(index < header.size());
  std::vector<std::string> out;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    std::stringstream ls(lines[l]);
    std::size_t c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c == index) out.push_back(cell);
      ++c;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("config parsing: comments, trimming, diagnostics") {
  KvConfig kv = KvConfig::from_text(
      "# leading comment\n"
      "optim.lr = 0.25   # trailing comment\n"
      "\n"
      "model.widths = 2, 4, 2\n",
      "test.cfg");
  CHECK(kv.get_double("optim.lr", 0.1) == 0.25);
  CHECK(kv.get_size_list("model.widths", {}) ==
        std::vector<std::size_t>{2, 4, 2});

  CHECK_THROWS_WITH_AS(KvConfig::from_text("optim.lr 0.25\n", "bad.cfg"),
                       "bad.cfg:1: expected 'key = value', got 'optim.lr 0.25'",
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(
      KvConfig::from_text("optim.lr = 1\noptim.lr = 2\n", "dup.cfg"),
      "dup.cfg:2: duplicate key 'optim.lr'", std::runtime_error);
  KvConfig bad = KvConfig::from_text("optim.lr = fast\n", "bad.cfg");
  CHECK_THROWS_WITH_AS(bad.get_double("optim.lr", 0.1),
                       "bad.cfg:1: optim.lr: expected a number, got 'fast'",
                       std::runtime_error);
}

TEST_CASE("run config binding: default radius convention") {
  KvConfig kv = KvConfig::from_text(
      "optim.kind = agnostic_sam\n"
      "optim.rho = 0.1\n",
      "<test>");
  const RunConfig cfg = RunConfig::from_kv(kv, "t");
  CHECK(cfg.beta == 0.9);
  CHECK(cfg.rho1 == doctest::Approx(0.2));   // 2*rho
  CHECK(cfg.rho2 == doctest::Approx(0.1));   // rho1/2
  CHECK(cfg.split.ratio == 0.7);
  CHECK(cfg.base.momentum == 0.9);
  // cosine probe radius defaults to rho2 for the agnostic kinds
  CHECK(cfg.cosine_rho == doctest::Approx(0.1));
  // every default is echoed
  CHECK(cfg.resolved.count("optim.beta") == 1);
  CHECK(cfg.resolved.at("optim.beta") == "0.9");
  CHECK(cfg.resolved.count("run.batch_size") == 1);
}

TEST_CASE("run config binding: unknown keys and invalid fields fail loudly") {
  KvConfig typo = KvConfig::from_text("optim.rho3 = 1\n", "typo.cfg");
  CHECK_THROWS_WITH_AS(RunConfig::from_kv(typo, "t"),
                       "typo.cfg:1: optim.rho3: unknown key",
                       std::runtime_error);

  KvConfig bad_lr = KvConfig::from_text("optim.lr = -1\n", "bad.cfg");
  CHECK_THROWS_AS(RunConfig::from_kv(bad_lr, "t"), std::runtime_error);
  KvConfig bad_beta = KvConfig::from_text("optim.beta = 1.5\n", "bad.cfg");
  CHECK_THROWS_AS(RunConfig::from_kv(bad_beta, "t"), std::runtime_error);
  KvConfig bad_act = KvConfig::from_text("model.activation = gelu\n", "b.cfg");
  CHECK_THROWS_AS(RunConfig::from_kv(bad_act, "t"), std::runtime_error);
}

TEST_CASE("run emits exactly steps_per_epoch rows for one epoch") {
  const fs::path out = fresh_dir("agsam_run_rows");
  KvConfig kv = small_blobs_config(out.string());
  const RunConfig cfg = RunConfig::from_kv(kv, "rows");
  const RunResult result = run(cfg);
  REQUIRE(result.ok);
  CHECK(result.steps == 2);  // 16 rows / batch 8

  const auto lines = csv_lines(read_file(out / "metrics.csv"));
  REQUIRE(lines.size() == 3);  // header + 2 rows
  CHECK(lines[0] ==
        "step,epoch,train_loss,train_acc,test_loss,test_acc,lr,wall_time_ms");
  CHECK(fs::exists(out / "checkpoint.pv"));
  CHECK(fs::exists(out / "resolved.cfg"));
  fs::remove_all(out);
}

TEST_CASE("same config and seed reproduce metrics.csv byte-identically") {
  const fs::path out1 = fresh_dir("agsam_det_1");
  const fs::path out2 = fresh_dir("agsam_det_2");
  for (const fs::path& out : {out1, out2}) {
    KvConfig kv = small_blobs_config(out.string());
    kv.set("optim.kind", "agnostic_sam");
    kv.set("run.epochs", "3");
    kv.set("metrics.cosine", "true");
    const RunConfig cfg = RunConfig::from_kv(kv, "det");
    REQUIRE(run(cfg).ok);
  }
  CHECK(read_file(out1 / "metrics.csv") == read_file(out2 / "metrics.csv"));
  CHECK(read_file(out1 / "cosine.csv") == read_file(out2 / "cosine.csv"));
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("rerunning from the resolved-config echo reproduces the run") {
  const fs::path out1 = fresh_dir("agsam_echo_1");
  const fs::path out2 = fresh_dir("agsam_echo_2");
  KvConfig kv = small_blobs_config(out1.string());
  kv.set("optim.kind", "sam");
  kv.set("run.epochs", "2");
  const RunConfig cfg = RunConfig::from_kv(kv, "echo");
  REQUIRE(run(cfg).ok);

  KvConfig echoed = KvConfig::from_file(out1 / "resolved.cfg");
  echoed.set("run.out", out2.string());
  const RunConfig cfg2 = RunConfig::from_kv(echoed, "echo2");
  REQUIRE(run(cfg2).ok);
  CHECK(read_file(out1 / "metrics.csv") == read_file(out2 / "metrics.csv"));
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("cosine.csv holds steps-1 records") {
  const fs::path out = fresh_dir("agsam_cosine_rows");
  KvConfig kv = small_blobs_config(out.string());
  kv.set("run.epochs", "4");
  kv.set("metrics.cosine", "true");
  const RunConfig cfg = RunConfig::from_kv(kv, "cos");
  REQUIRE(run(cfg).ok);
  const auto lines = csv_lines(read_file(out / "cosine.csv"));
  CHECK(lines[0] == "step,cosine_b,cosine_a,change");
  CHECK(lines.size() == 8);  // header + (8 steps - 1)
  fs::remove_all(out);
}

TEST_CASE("agnostic-sam with rho2=0 matches sam with rho=rho1 end to end") {
  const fs::path out_ag = fresh_dir("agsam_red_ag");
  const fs::path out_sam = fresh_dir("agsam_red_sam");

  KvConfig kv_ag = KvConfig::from_text(
      "data.kind = two_moons\n"
      "data.n_train = 64\n"
      "data.n_test = 32\n"
      "model.widths = 2,8,2\n"
      "run.epochs = 5\n"
      "run.batch_size = 16\n"
      "optim.kind = agnostic_sam\n"
      "optim.rho1 = 0.1\n"
      "optim.rho2 = 0\n",
      "<ag>");
  kv_ag.set("run.out", out_ag.string());
  REQUIRE(run(RunConfig::from_kv(kv_ag, "ag")).ok);

  KvConfig kv_sam = KvConfig::from_text(
      "data.kind = two_moons\n"
      "data.n_train = 64\n"
      "data.n_test = 32\n"
      "model.widths = 2,8,2\n"
      "run.epochs = 5\n"
      "run.batch_size = 16\n"
      "optim.kind = sam\n"
      "optim.rho = 0.1\n",
      "<sam>");
  kv_sam.set("run.out", out_sam.string());
  REQUIRE(run(RunConfig::from_kv(kv_sam, "sam")).ok);

  const auto ag_loss = csv_column(read_file(out_ag / "metrics.csv"), "train_loss");
  const auto sam_loss =
      csv_column(read_file(out_sam / "metrics.csv"), "train_loss");
  REQUIRE(ag_loss.size() == sam_loss.size());
  CHECK(ag_loss == sam_loss);  // shortest round-trip strings, so bitwise
  fs::remove_all(out_ag);
  fs::remove_all(out_sam);
}

TEST_CASE("diverging run aborts with a diagnostic") {
  const fs::path out = fresh_dir("agsam_diverge");
  // features at 1e200 overflow the forward pass after one full-rate update
  KvConfig kv = KvConfig::from_text(
      "data.kind = spirals\n"
      "data.n_train = 32\n"
      "data.n_test = 16\n"
      "data.noise_std = 1e200\n"
      "model.widths = 2,16,2\n"
      "run.epochs = 4\n"
      "run.batch_size = 16\n"
      "optim.lr = 1\n",
      "<div>");
  kv.set("run.out", out.string());
  const RunResult result = run(RunConfig::from_kv(kv, "div"));
  CHECK_FALSE(result.ok);
  CHECK(result.error.find("non-finite") != std::string::npos);
  CHECK(fs::exists(out / "diagnostic.txt"));
  fs::remove_all(out);
}

TEST_CASE("compare: deterministic easy task gives zero std") {
  const fs::path out = fresh_dir("agsam_cmp_std0");
  KvConfig kv = KvConfig::from_text(
      "data.kind = blobs\n"
      "data.n_train = 60\n"
      "data.n_test = 30\n"
      "data.blob_distance = 100\n"
      "model.widths = 2,8,3\n"
      "run.epochs = 8\n"
      "run.batch_size = 10\n",
      "<cmp>");
  const RunConfig cfg = RunConfig::from_kv(kv, "easy");
  const CompareResult result = compare({{"easy", cfg}}, {1, 2, 3}, out);
  REQUIRE(result.ok);

  const std::string summary = read_file(result.summary_path);
  const auto lines = csv_lines(summary);
  CHECK(lines[0] == "config,seed,final_test_acc,status");
  REQUIRE(lines.size() == 6);  // 3 runs + mean + std
  // far-apart blobs are learned to accuracy 1 by every seed
  const auto accs = csv_column(summary, "final_test_acc");
  CHECK(accs[0] == "1");
  CHECK(accs[1] == "1");
  CHECK(accs[2] == "1");
  CHECK(lines[4] == "easy,mean,1,ok");
  CHECK(lines[5] == "easy,std,0,ok");
  fs::remove_all(out);
}

TEST_CASE("compare statistics match an independent recomputation") {
  const fs::path out = fresh_dir("agsam_cmp_stats");
  KvConfig kv = small_blobs_config((out / "unused").string());
  kv.set("run.epochs", "2");
  const RunConfig cfg = RunConfig::from_kv(kv, "stats");
  const CompareResult result = compare({{"stats", cfg}}, {5, 6, 7, 8}, out);
  REQUIRE(result.ok);

  const std::string summary = read_file(result.summary_path);
  const auto lines = csv_lines(summary);
  std::vector<double> accs;
  double mean = 0.0, stddev = 0.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::stringstream ss(lines[i]);
    std::string label, seed, value;
    std::getline(ss, label, ',');
    std::getline(ss, seed, ',');
    std::getline(ss, value, ',');
    if (seed == "mean")
      mean = std::stod(value);
    else if (seed == "std")
      stddev = std::stod(value);
    else
      accs.push_back(std::stod(value));
  }
  REQUIRE(accs.size() == 4);
  double m = 0.0;
  for (const double a : accs) m += a;
  m /= 4.0;
  double var = 0.0;
  for (const double a : accs) var += (a - m) * (a - m);
  const double s = std::sqrt(var / 3.0);
  CHECK(mean == doctest::Approx(m).epsilon(1e-12));
  CHECK(stddev == doctest::Approx(s).epsilon(1e-12));
  fs::remove_all(out);
}

TEST_CASE("mean and sample std arithmetic") {
  const std::vector<double> xs{0.9, 0.8, 1.0};
  const double m = mean_of(xs);
  CHECK(m == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(sample_std_of(xs, m) == doctest::Approx(0.1).epsilon(1e-12));
  const std::vector<double> one{0.5};
  CHECK(sample_std_of(one, 0.5) == 0.0);
}

TEST_CASE("label noise flows into the run directory") {
  const fs::path out = fresh_dir("agsam_noise_run");
  KvConfig kv = small_blobs_config(out.string());
  kv.set("data.label_noise", "0.4");
  kv.set("data.export", "true");
  const RunConfig cfg = RunConfig::from_kv(kv, "noise");
  REQUIRE(run(cfg).ok);
  CHECK(fs::exists(out / "noise_manifest.csv"));
  CHECK(fs::exists(out / "train.csv"));
  CHECK(fs::exists(out / "test.csv"));
  const auto lines = csv_lines(read_file(out / "noise_manifest.csv"));
  CHECK(lines[0] == "index,old_label,new_label");
  CHECK(lines.size() == 1 + 6);  // round(0.4 * 16) = 6 flips
  fs::remove_all(out);
}

TEST_CASE("spectrum and slice files are produced on request") {
  const fs::path out = fresh_dir("agsam_diag_files");
  KvConfig kv = small_blobs_config(out.string());
  kv.set("metrics.spectrum_every", "2");
  kv.set("metrics.spectrum_k", "3");
  kv.set("metrics.landscape_at_end", "true");
  kv.set("metrics.slice_resolution", "2");
  const RunConfig cfg = RunConfig::from_kv(kv, "diag");
  REQUIRE(run(cfg).ok);
  CHECK(fs::exists(out / "spectrum.csv"));
  CHECK(fs::exists(out / "spectrum_step2.csv"));
  CHECK(fs::exists(out / "slice.csv"));
  const auto spec_lines = csv_lines(read_file(out / "spectrum.csv"));
  CHECK(spec_lines[0] == "rank,eigenvalue,iterations");
  CHECK(spec_lines.size() == 4);  // header + k
  const auto slice_lines = csv_lines(read_file(out / "slice.csv"));
  CHECK(slice_lines[0] == "i,j,u,v,loss");
  CHECK(slice_lines.size() == 1 + 25);
  fs::remove_all(out);
}
