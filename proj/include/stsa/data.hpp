#pragma once

#include "stsa/statistics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace stsa {

// Ordered, pairwise disjoint class sets, one per task.
struct TaskSchedule {
  std::vector<std::vector<ClassId>> tasks;
  std::uint32_t class_count = 0;

  int size() const noexcept { return static_cast<int>(tasks.size()); }
  const std::vector<ClassId>& classes(int t) const { return tasks.at(static_cast<std::size_t>(t - 1)); }
  // Classes of tasks 1..t in schedule order.
  std::vector<ClassId> classes_through(int t) const;
};

// Contiguous blocks of class ids. With first_task_classes, task 1 takes that
// many and the rest split evenly. A shuffle seed permutes class ids first.
TaskSchedule split_tasks(std::uint32_t class_count, int tasks,
                         std::optional<std::uint32_t> first_task_classes = std::nullopt,
                         std::optional<std::uint64_t> shuffle_seed = std::nullopt);

// Label-skew partition: for every class, p ~ Dir(β·1_K), then each sample of
// that class goes to client j with probability p_j. Returns K disjoint,
// exhaustive, ascending index lists.
std::vector<std::vector<std::size_t>> dirichlet_partition(std::span<const ClassId> labels,
                                                          int clients, double beta,
                                                          std::uint64_t seed);

enum class DataRole : std::uint8_t { train = 0, test = 1 };

struct FeatureDataset {
  Matrix features;  // n × d raw
  std::vector<ClassId> labels;
  std::uint32_t class_count = 0;
  DataRole role = DataRole::train;

  std::size_t size() const noexcept { return labels.size(); }
  int dim() const noexcept { return static_cast<int>(features.cols()); }
  // Rows whose label is in `classes`, in original order.
  FeatureDataset select_classes(std::span<const ClassId> classes) const;
  FeatureDataset select_rows(std::span<const std::size_t> rows) const;
};

// Class-conditional Gaussian model with diagonal covariance.
struct SynthSpec {
  std::uint32_t class_count = 0;
  int dim = 0;
  std::vector<Vector> means;      // class_count vectors of length dim
  std::vector<Vector> variances;  // diagonal of Σ⁽ⁱ⁾, entries ≥ 0
  std::uint32_t train_per_class = 0;
  std::uint32_t test_per_class = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Means drawn i.i.d. N(0, separation²) per coordinate from `seed`, shared
// isotropic variance noise_std².
SynthSpec make_cluster_spec(std::uint32_t class_count, int dim, double separation,
                            double noise_std, std::uint32_t train_per_class,
                            std::uint32_t test_per_class, std::uint64_t seed);

struct SyntheticSplit {
  FeatureDataset train;
  FeatureDataset test;
};

SyntheticSplit generate_synthetic(const SynthSpec& spec);

// Little-endian "STSAFEAT" v1 files: 36-byte header, n·d float32 row-major
// features, n uint32 labels.
void save_features(const FeatureDataset& ds, const std::filesystem::path& path);
FeatureDataset load_features(const std::filesystem::path& path);

// Byte-level codec used by the file functions.
std::vector<std::uint8_t> encode_features(const FeatureDataset& ds);
FeatureDataset decode_features(std::span<const std::uint8_t> bytes);

}  // namespace stsa
