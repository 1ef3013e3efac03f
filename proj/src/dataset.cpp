#include "agsam/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "agsam/csv.hpp"
#include "agsam/rng.hpp"

namespace agsam {

Batch Dataset::take(std::span<const std::size_t> indices) const {
  Batch b;
  b.rows = indices.size();
  b.dim = dim;
  b.features.resize(b.rows * dim);
  b.labels.resize(b.rows);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t r = indices[i];
    std::copy_n(features.data() + r * dim, dim, b.features.data() + i * dim);
    b.labels[i] = labels[r];
  }
  return b;
}

Batch Dataset::all() const {
  Batch b;
  b.rows = rows;
  b.dim = dim;
  b.features = features;
  b.labels = labels;
  return b;
}

// ---------------------------------------------------------- generators ----

namespace {

void gaussian_noise(std::vector<double>& features, double std_dev,
                    SplitMix64& rng) {
  if (std_dev == 0.0) return;
  for (double& v : features) v += std_dev * rng.next_gaussian();
}

Dataset two_moons(std::size_t n, double noise_std, std::uint64_t seed) {
  Dataset ds;
  ds.name = "two_moons";
  ds.dim = 2;
  ds.num_classes = 2;
  ds.rows = n;
  ds.features.resize(n * 2);
  ds.labels.resize(n);
  const std::size_t n0 = n / 2;
  SplitMix64 rng(SplitMix64::derive(seed, Stream::kTrainData));
  for (std::size_t i = 0; i < n; ++i) {
    const bool upper = i < n0;
    const std::size_t k = upper ? i : i - n0;
    const std::size_t m = upper ? n0 : n - n0;
    const double t =
        std::numbers::pi * static_cast<double>(k) /
        static_cast<double>(m > 1 ? m - 1 : 1);
    if (upper) {
      ds.features[i * 2] = std::cos(t);
      ds.features[i * 2 + 1] = std::sin(t);
      ds.labels[i] = 0;
    } else {
      ds.features[i * 2] = 1.0 - std::cos(t);
      ds.features[i * 2 + 1] = 0.5 - std::sin(t);
      ds.labels[i] = 1;
    }
  }
  gaussian_noise(ds.features, noise_std, rng);
  return ds;
}

Dataset blobs(std::size_t n, double noise_std, std::uint64_t seed,
              const DatasetOptions& opt) {
  if (opt.blob_classes < 2)
    throw std::invalid_argument("make_dataset: blobs need >= 2 classes");
  Dataset ds;
  ds.name = "blobs";
  ds.dim = 2;
  ds.num_classes = opt.blob_classes;
  ds.rows = n;
  ds.features.resize(n * 2);
  ds.labels.resize(n);
  const int c_count = opt.blob_classes;
  // centers evenly spaced on a circle with adjacent-center distance
  // opt.blob_distance
  const double radius =
      opt.blob_distance /
      (2.0 * std::sin(std::numbers::pi / static_cast<double>(c_count)));
  SplitMix64 rng(SplitMix64::derive(seed, Stream::kTrainData));
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(c_count));
    const double ang =
        2.0 * std::numbers::pi * static_cast<double>(c) /
        static_cast<double>(c_count);
    ds.features[i * 2] = radius * std::cos(ang);
    ds.features[i * 2 + 1] = radius * std::sin(ang);
    ds.labels[i] = c;
  }
  gaussian_noise(ds.features, noise_std, rng);
  return ds;
}

Dataset spirals(std::size_t n, double noise_std, std::uint64_t seed,
                const DatasetOptions& opt) {
  Dataset ds;
  ds.name = "spirals";
  ds.dim = 2;
  ds.num_classes = 2;
  ds.rows = n;
  ds.features.resize(n * 2);
  ds.labels.resize(n);
  const std::size_t n0 = n / 2;
  SplitMix64 rng(SplitMix64::derive(seed, Stream::kTrainData));
  for (std::size_t i = 0; i < n; ++i) {
    const bool first = i < n0;
    const std::size_t k = first ? i : i - n0;
    const std::size_t m = first ? n0 : n - n0;
    const double u = static_cast<double>(k) /
                     static_cast<double>(m > 1 ? m - 1 : 1);
    const double t = 2.0 * std::numbers::pi * opt.spiral_turns * u;
    const double r = 0.2 + u;
    const double phase = first ? 0.0 : std::numbers::pi;
    ds.features[i * 2] = r * std::cos(t + phase);
    ds.features[i * 2 + 1] = r * std::sin(t + phase);
    ds.labels[i] = first ? 0 : 1;
  }
  gaussian_noise(ds.features, noise_std, rng);
  return ds;
}

}  // namespace

Dataset make_dataset(DatasetKind kind, std::size_t n, double noise_std,
                     std::uint64_t seed, const DatasetOptions& opt) {
  if (n < 2) throw std::invalid_argument("make_dataset: need n >= 2");
  if (noise_std < 0.0)
    throw std::invalid_argument("make_dataset: negative noise_std");
  Dataset ds;
  switch (kind) {
    case DatasetKind::kTwoMoons:
      ds = two_moons(n, noise_std, seed);
      break;
    case DatasetKind::kBlobs:
      ds = blobs(n, noise_std, seed, opt);
      break;
    case DatasetKind::kSpirals:
      ds = spirals(n, noise_std, seed, opt);
      break;
  }
  ds.seed = seed;
  return ds;
}

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "two_moons") return DatasetKind::kTwoMoons;
  if (s == "blobs") return DatasetKind::kBlobs;
  if (s == "spirals") return DatasetKind::kSpirals;
  throw std::invalid_argument("unknown dataset kind '" + s + "'");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kTwoMoons: return "two_moons";
    case DatasetKind::kBlobs: return "blobs";
    case DatasetKind::kSpirals: return "spirals";
  }
  return "?";
}

// --------------------------------------------------------- label noise ----

NoisyDataset inject_label_noise(const Dataset& ds, double fraction,
                                std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0)
    throw std::invalid_argument("inject_label_noise: fraction outside [0,1]");
  NoisyDataset out{ds, {}};
  const std::size_t n_flip = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(ds.rows) + 0.5));
  if (n_flip == 0) return out;
  if (ds.num_classes < 2)
    throw std::invalid_argument(
        "inject_label_noise: need >= 2 classes to flip labels");

  SplitMix64 rng(SplitMix64::derive(seed, Stream::kLabelNoise));
  // partial Fisher-Yates: first n_flip entries are a uniform sample
  std::vector<std::size_t> idx(ds.rows);
  for (std::size_t i = 0; i < ds.rows; ++i) idx[i] = i;
  for (std::size_t i = 0; i < n_flip; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.next_below(ds.rows - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<std::size_t> chosen(idx.begin(), idx.begin() + n_flip);
  std::sort(chosen.begin(), chosen.end());
  for (const std::size_t row : chosen) {
    const int old_label = ds.labels[row];
    const int draw = static_cast<int>(
        rng.next_below(static_cast<std::uint64_t>(ds.num_classes - 1)));
    const int new_label = draw >= old_label ? draw + 1 : draw;
    out.data.labels[row] = new_label;
    out.manifest.push_back({row, old_label, new_label});
  }
  return out;
}

void write_noise_manifest(const std::filesystem::path& path,
                          std::span<const NoiseFlip> manifest) {
  std::ofstream f(path);
  if (!f)
    throw std::runtime_error("write_noise_manifest: cannot open " +
                             path.string());
  f << "index,old_label,new_label\n";
  for (const NoiseFlip& flip : manifest)
    f << flip.index << "," << flip.old_label << "," << flip.new_label << "\n";
}

// ----------------------------------------------------------------- csv ----

void Dataset::to_csv(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f)
    throw std::runtime_error("Dataset::to_csv: cannot open " + path.string());
  for (std::size_t c = 0; c < dim; ++c) f << "f" << c << ",";
  f << "label\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < dim; ++c)
      f << csv::format(features[r * dim + c]) << ",";
    f << labels[r] << "\n";
  }
}

Dataset Dataset::from_csv(const std::filesystem::path& path, std::string name,
                          std::uint64_t seed) {
  std::ifstream f(path);
  if (!f)
    throw std::runtime_error("Dataset::from_csv: cannot open " +
                             path.string());
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("Dataset::from_csv: empty file " + path.string());
  const std::size_t dim =
      static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  Dataset ds;
  ds.name = std::move(name);
  ds.seed = seed;
  ds.dim = dim;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t c = 0; c < dim; ++c) {
      if (!std::getline(ss, cell, ','))
        throw std::runtime_error("Dataset::from_csv: line " +
                                 std::to_string(line_no) + ": missing field " +
                                 std::to_string(c));
      ds.features.push_back(std::stod(cell));
    }
    if (!std::getline(ss, cell, ','))
      throw std::runtime_error("Dataset::from_csv: line " +
                               std::to_string(line_no) + ": missing label");
    ds.labels.push_back(std::stoi(cell));
  }
  ds.rows = ds.labels.size();
  int max_label = 0;
  for (const int l : ds.labels) {
    if (l < 0)
      throw std::runtime_error("Dataset::from_csv: negative label");
    max_label = std::max(max_label, l);
  }
  ds.num_classes = max_label + 1;
  return ds;
}

// --------------------------------------------------------------- split ----

SplitMode split_mode_from_string(const std::string& s) {
  if (s == "batch_split") return SplitMode::kBatchSplit;
  if (s == "non_overlap") return SplitMode::kNonOverlap;
  if (s == "duplicated") return SplitMode::kDuplicated;
  throw std::invalid_argument("unknown split mode '" + s + "'");
}

std::string to_string(SplitMode mode) {
  switch (mode) {
    case SplitMode::kBatchSplit: return "batch_split";
    case SplitMode::kNonOverlap: return "non_overlap";
    case SplitMode::kDuplicated: return "duplicated";
  }
  return "?";
}

BatchSampler::BatchSampler(const Dataset& ds, SplitStrategy strategy,
                           std::size_t batch_size, std::uint64_t seed)
    : ds_(&ds), strategy_(strategy), batch_size_(batch_size), seed_(seed) {
  if (batch_size == 0) throw std::invalid_argument("BatchSampler: batch_size 0");
  const bool ratio_used = strategy.mode != SplitMode::kDuplicated;
  if (ratio_used && (strategy.ratio <= 0.0 || strategy.ratio >= 1.0))
    throw std::invalid_argument("BatchSampler: split ratio outside (0,1)");

  switch (strategy_.mode) {
    case SplitMode::kBatchSplit: {
      if (batch_size > ds.rows)
        throw std::invalid_argument("BatchSampler: batch_size exceeds dataset");
      bt_rows_ = static_cast<std::size_t>(std::ceil(
          strategy.ratio * static_cast<double>(batch_size)));
      bv_rows_ = batch_size - bt_rows_;
      if (bt_rows_ == 0 || bv_rows_ == 0)
        throw std::invalid_argument(
            "BatchSampler: batch split produces an empty part (batch " +
            std::to_string(batch_size) + ", ratio " +
            std::to_string(strategy.ratio) + ")");
      train_pool_.resize(ds.rows);
      for (std::size_t i = 0; i < ds.rows; ++i) train_pool_[i] = i;
      steps_per_epoch_ = ds.rows / batch_size;
      break;
    }
    case SplitMode::kNonOverlap: {
      const std::size_t n_train = static_cast<std::size_t>(
          std::ceil(strategy.ratio * static_cast<double>(ds.rows)));
      if (n_train == 0 || n_train >= ds.rows)
        throw std::invalid_argument(
            "BatchSampler: non_overlap partition leaves an empty side");
      std::vector<std::size_t> perm = shuffled_indices(
          ds.rows, SplitMix64::derive(seed_, Stream::kPartition));
      train_pool_.assign(perm.begin(), perm.begin() + n_train);
      valid_pool_.assign(perm.begin() + n_train, perm.end());
      bt_rows_ = batch_size;
      bv_rows_ = (batch_size + 3) / 4;
      if (bt_rows_ > train_pool_.size())
        throw std::invalid_argument(
            "BatchSampler: batch_size exceeds the training partition");
      steps_per_epoch_ = train_pool_.size() / bt_rows_;
      break;
    }
    case SplitMode::kDuplicated: {
      if (batch_size > ds.rows)
        throw std::invalid_argument("BatchSampler: batch_size exceeds dataset");
      train_pool_.resize(ds.rows);
      for (std::size_t i = 0; i < ds.rows; ++i) train_pool_[i] = i;
      valid_pool_ = train_pool_;
      bt_rows_ = batch_size;
      bv_rows_ = (batch_size + 3) / 4;
      steps_per_epoch_ = ds.rows / bt_rows_;
      break;
    }
  }
  if (steps_per_epoch_ == 0)
    throw std::invalid_argument("BatchSampler: zero steps per epoch");
  start_epoch();
}

void BatchSampler::start_epoch() {
  const std::uint64_t epoch_seed = SplitMix64::derive(
      SplitMix64::derive(seed_, Stream::kEpochShuffle), epoch_);
  std::vector<std::size_t> perm =
      shuffled_indices(train_pool_.size(), epoch_seed);
  epoch_order_.resize(train_pool_.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    epoch_order_[i] = train_pool_[perm[i]];
  step_in_epoch_ = 0;
}

std::pair<Batch, Batch> BatchSampler::next() {
  if (step_in_epoch_ >= steps_per_epoch_) {
    ++epoch_;
    start_epoch();
  }

  Batch bt, bv;
  if (strategy_.mode == SplitMode::kBatchSplit) {
    const std::size_t base = step_in_epoch_ * batch_size_;
    std::span<const std::size_t> block(epoch_order_.data() + base,
                                       batch_size_);
    bt = ds_->take(block.subspan(0, bt_rows_));
    bv = ds_->take(block.subspan(bt_rows_));
  } else {
    const std::size_t base = step_in_epoch_ * bt_rows_;
    bt = ds_->take(
        std::span<const std::size_t>(epoch_order_.data() + base, bt_rows_));
    // B^v: independent with-replacement draws from S^v on a dedicated stream
    SplitMix64 vrng(SplitMix64::derive(
        SplitMix64::derive(seed_, Stream::kValidBatch), valid_stream_pos_));
    ++valid_stream_pos_;
    std::vector<std::size_t> vidx(bv_rows_);
    for (std::size_t i = 0; i < bv_rows_; ++i)
      vidx[i] = valid_pool_[vrng.next_below(valid_pool_.size())];
    bv = ds_->take(vidx);
  }
  ++step_in_epoch_;
  return {std::move(bt), std::move(bv)};
}

}  // namespace agsam
