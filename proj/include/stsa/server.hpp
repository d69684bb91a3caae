#pragma once

#include "stsa/client.hpp"
#include "stsa/statistics.hpp"

#include <optional>
#include <span>
#include <vector>

namespace stsa {

// Result of summing one task's uploads across clients.
struct SpatialAggregate {
  UploadMode mode = UploadMode::full;
  std::optional<Matrix> gram;              // Σ_k G_{t,k}; full mode only
  Matrix corr;                             // Σ over records of C
  Vector label_freq;                       // Σ over records of counts
  std::vector<SpatialStatistics> records;  // efficient mode, canonical order
};

// Records are folded in (client_id, dummy_index) order, so the result does
// not depend on arrival order.
SpatialAggregate spatial_aggregate(std::span<const UploadPayload> payloads,
                                   std::span<const ClassId> task_classes);

// A transmitted count at or below this value means "no samples of the class".
// Exact counts are integers, so this only matters for noised uploads.
inline constexpr double kPresenceThreshold = 0.5;

// Unbiased Gram estimate from first-order uploads. For every class i,
//   Ĝ += (n−1)/(K_i−1) Σ_k c_k c_kᵀ / n_k  −  (n−K_i)/(n(K_i−1)) (Σ_k c_k)(Σ_k c_k)ᵀ
// where the sums run over the K_i records holding class i and n = Σ_k n_k.
// Classes present in fewer than two records raise EstimationError.
Matrix estimate_gram(std::span<const SpatialStatistics> records,
                     std::span<const ClassId> task_classes);

enum class GramMode { exact, estimated };

// Server-side running statistics across stages.
struct TemporalState {
  Matrix gram;  // G_{1:t} or Ĝ_{1:t}
  Matrix corr;  // [C_1, …, C_t]
  std::vector<ClassId> class_ids;
  int stage = 0;
  GramMode mode = GramMode::exact;

  static TemporalState empty(int M, GramMode mode);
  bool is_empty() const noexcept { return stage == 0; }
};

TemporalState temporal_aggregate(TemporalState state, const Matrix& gram_new,
                                 const Matrix& corr_new,
                                 std::span<const ClassId> task_classes);

struct GlobalModel {
  MapDescriptor map;
  ClassifierWeights weights;
  int stage = 0;
};

GlobalModel update_classifier(const TemporalState& state, double gamma,
                              const MapDescriptor& map);

}  // namespace stsa
