#pragma once

#include "stsa/statistics.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace stsa {

// One client's private data for one task.
struct ClientShard {
  ClientId client_id = 0;
  int task_id = 0;
  Matrix features;  // n × d raw features
  std::vector<ClassId> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

enum class UploadMode { full, efficient };
enum class DummySplit { uniform, stratified };

// full: one record with Gram. efficient: K_D records without Gram.
struct UploadPayload {
  UploadMode mode = UploadMode::full;
  std::vector<SpatialStatistics> records;
  std::uint64_t byte_size = 0;
};

// Seeded shuffle then round-robin into K_D disjoint sub-shards whose sizes
// differ by at most one. The stratified variant shuffles within each class
// and deals classes in turn, continuing the round-robin cursor.
std::vector<ClientShard> split_dummy(const ClientShard& shard, int dummy_count,
                                     std::uint64_t seed,
                                     DummySplit split = DummySplit::uniform);

struct ExtractOptions {
  UploadMode mode = UploadMode::full;
  int dummy_count = 1;
  std::uint64_t seed = 0;
  DummySplit split = DummySplit::uniform;
  int elem_bytes = 4;
};

UploadPayload extract_payload(const ClientShard& shard, const RandomMap& map,
                              std::span<const ClassId> task_classes,
                              const ExtractOptions& options);

// Adds q·N(0, s²) to every transmitted array: G and C in full mode, C and the
// counts in efficient mode. q == 0 or s == 0 returns the payload untouched.
UploadPayload add_noise(UploadPayload payload, double q, double s, std::uint64_t seed);

}  // namespace stsa
