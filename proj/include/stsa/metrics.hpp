#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace stsa {

enum class UploadMode;

// A[t][τ]: accuracy on task τ after stage t, 1 ≤ τ ≤ t ≤ T (1-based).
class AccuracyMatrix {
 public:
  explicit AccuracyMatrix(int tasks);

  int tasks() const noexcept { return tasks_; }
  void set(int t, int tau, double accuracy);
  std::optional<double> get(int t, int tau) const;
  // Throws MetricError when the entry is missing.
  double at(int t, int tau) const;

 private:
  std::size_t index(int t, int tau) const;

  int tasks_;
  std::vector<std::optional<double>> entries_;
};

// Σ_t (1/t) Σ_{τ≤t} A[t][τ], taken literally: lies in [0, T].
double avg_incremental_accuracy(const AccuracyMatrix& a);
// The same sum divided by T, the scale reported in result tables.
double avg_incremental_accuracy_normalized(const AccuracyMatrix& a);
// Mean of the last row.
double final_average_accuracy(const AccuracyMatrix& a);
// (1/(T−1)) Σ_{τ<T} [max_{τ≤τ'≤T−1} A[τ'][τ] − A[T][τ]]. Needs T ≥ 2.
double average_forgetting(const AccuracyMatrix& a);

// Bytes one client uploads for one stage: (M + c_t)·M elements in full mode,
// (M + 1)·c_t·K_D in efficient mode.
std::uint64_t comm_bytes(std::uint64_t M, std::uint64_t c_t, std::uint64_t dummy_count,
                         UploadMode mode, std::uint64_t elem_bytes = 4);

constexpr double kBytesPerMiB = 1024.0 * 1024.0;

class CommLedger {
 public:
  void record(int stage, std::uint32_t client, std::uint64_t bytes);

  std::uint64_t total() const;
  std::uint64_t stage_total(int stage) const;
  std::uint64_t client_total(std::uint32_t client) const;
  const std::map<std::pair<int, std::uint32_t>, std::uint64_t>& entries() const noexcept {
    return entries_;
  }

 private:
  std::map<std::pair<int, std::uint32_t>, std::uint64_t> entries_;
};

}  // namespace stsa
