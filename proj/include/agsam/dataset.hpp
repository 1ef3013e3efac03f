#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "agsam/batch.hpp"

namespace agsam {

struct Dataset {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t rows = 0;
  std::size_t dim = 0;
  int num_classes = 0;
  std::vector<double> features;  // rows x dim
  std::vector<int> labels;

  Batch take(std::span<const std::size_t> indices) const;
  Batch all() const;

  // header "f0,...,f{d-1},label"
  void to_csv(const std::filesystem::path& path) const;
  static Dataset from_csv(const std::filesystem::path& path,
                          std::string name = "csv", std::uint64_t seed = 0);
};

enum class DatasetKind { kTwoMoons, kBlobs, kSpirals };

struct DatasetOptions {
  int blob_classes = 3;
  double blob_distance = 4.0;  // distance between adjacent blob centers
  double spiral_turns = 1.75;
};

// Deterministic synthetic classification sets. two_moons: two interleaving
// half-circles; blobs: isotropic Gaussians on a circle; spirals: two
// Archimedean arms.
Dataset make_dataset(DatasetKind kind, std::size_t n, double noise_std,
                     std::uint64_t seed, const DatasetOptions& opt = {});

DatasetKind dataset_kind_from_string(const std::string& s);
std::string to_string(DatasetKind kind);

struct NoiseFlip {
  std::size_t index;
  int old_label;
  int new_label;
};

struct NoisyDataset {
  Dataset data;
  std::vector<NoiseFlip> manifest;
};

// Symmetric label noise: exactly round(fraction * N) rows chosen uniformly
// without replacement, each label replaced by a uniform draw over the other
// C-1 classes. Never apply this to a test set.
NoisyDataset inject_label_noise(const Dataset& ds, double fraction,
                                std::uint64_t seed);

// header "index,old_label,new_label"
void write_noise_manifest(const std::filesystem::path& path,
                          std::span<const NoiseFlip> manifest);

enum class SplitMode { kBatchSplit, kNonOverlap, kDuplicated };

struct SplitStrategy {
  SplitMode mode = SplitMode::kBatchSplit;
  double ratio = 0.7;  // |B^t| = ceil(r |B|) resp. |S^t| = ceil(r N)
};

SplitMode split_mode_from_string(const std::string& s);
std::string to_string(SplitMode mode);

// Draws (B^t, B^v) pairs.
//
//   batch_split: one batch of batch_size rows per step, drawn without
//     replacement within an epoch, split into the first ceil(r*|B|) rows
//     (B^t) and the rest (B^v).
//   non_overlap: the dataset is partitioned once into disjoint S^t
//     (ceil(r*N) rows) and S^v. B^t traverses S^t without replacement per
//     epoch; B^v is |B^t|/4 (rounded up) independent with-replacement draws
//     from S^v.
//   duplicated: S^t = S^v = S, otherwise as non_overlap.
//
// Partial trailing batches are dropped: steps_per_epoch = floor(N_t / b).
// Stream derivation: sampler seed -> kPartition for the one-time split,
// -> kEpochShuffle -> epoch index for B^t order, -> kValidBatch for B^v.
class BatchSampler {
 public:
  BatchSampler(const Dataset& ds, SplitStrategy strategy,
               std::size_t batch_size, std::uint64_t seed);

  std::pair<Batch, Batch> next();
  std::size_t steps_per_epoch() const { return steps_per_epoch_; }
  std::size_t train_batch_rows() const { return bt_rows_; }
  std::size_t valid_batch_rows() const { return bv_rows_; }

 private:
  void start_epoch();

  const Dataset* ds_;
  SplitStrategy strategy_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::vector<std::size_t> train_pool_;  // S^t row indices
  std::vector<std::size_t> valid_pool_;  // S^v row indices
  std::vector<std::size_t> epoch_order_;
  std::size_t bt_rows_ = 0;
  std::size_t bv_rows_ = 0;
  std::size_t steps_per_epoch_ = 0;
  std::size_t epoch_ = 0;
  std::size_t step_in_epoch_ = 0;
  std::uint64_t valid_stream_pos_ = 0;
};

}  // namespace agsam
