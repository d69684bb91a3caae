#include "stsa/metrics.hpp"

#include "stsa/client.hpp"
#include "stsa/error.hpp"

#include <algorithm>

namespace stsa {

AccuracyMatrix::AccuracyMatrix(int tasks) : tasks_(tasks) {
  if (tasks < 1) throw MetricError("accuracy matrix needs at least one task");
  entries_.resize(static_cast<std::size_t>(tasks) * static_cast<std::size_t>(tasks + 1) / 2);
}

std::size_t AccuracyMatrix::index(int t, int tau) const {
  if (t < 1 || t > tasks_ || tau < 1 || tau > t) {
    throw MetricError("accuracy entry (" + std::to_string(t) + ", " + std::to_string(tau) +
                      ") is outside the lower triangle of a T=" + std::to_string(tasks_) +
                      " matrix");
  }
  return static_cast<std::size_t>(t - 1) * static_cast<std::size_t>(t) / 2 +
         static_cast<std::size_t>(tau - 1);
}

void AccuracyMatrix::set(int t, int tau, double accuracy) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw MetricError("accuracy must lie in [0, 1]");
  }
  entries_[index(t, tau)] = accuracy;
}

std::optional<double> AccuracyMatrix::get(int t, int tau) const {
  return entries_[index(t, tau)];
}

double AccuracyMatrix::at(int t, int tau) const {
  const auto v = entries_[index(t, tau)];
  if (!v) {
    throw MetricError("accuracy matrix is incomplete: A[" + std::to_string(t) + "][" +
                      std::to_string(tau) + "] missing");
  }
  return *v;
}

double avg_incremental_accuracy(const AccuracyMatrix& a) {
  double total = 0.0;
  for (int t = 1; t <= a.tasks(); ++t) {
    double row = 0.0;
    for (int tau = 1; tau <= t; ++tau) row += a.at(t, tau);
    total += row / t;
  }
  return total;
}

double avg_incremental_accuracy_normalized(const AccuracyMatrix& a) {
  return avg_incremental_accuracy(a) / a.tasks();
}

double final_average_accuracy(const AccuracyMatrix& a) {
  const int T = a.tasks();
  double row = 0.0;
  for (int tau = 1; tau <= T; ++tau) row += a.at(T, tau);
  return row / T;
}

double average_forgetting(const AccuracyMatrix& a) {
  const int T = a.tasks();
  if (T < 2) throw MetricError("average forgetting is undefined for a single task");
  double total = 0.0;
  for (int tau = 1; tau <= T - 1; ++tau) {
    double best = a.at(tau, tau);
    for (int later = tau + 1; later <= T - 1; ++later) best = std::max(best, a.at(later, tau));
    total += best - a.at(T, tau);
  }
  return total / (T - 1);
}

std::uint64_t comm_bytes(std::uint64_t M, std::uint64_t c_t, std::uint64_t dummy_count,
                         UploadMode mode, std::uint64_t elem_bytes) {
  if (mode == UploadMode::full) return (M + c_t) * M * elem_bytes;
  return (M + 1) * c_t * dummy_count * elem_bytes;
}

void CommLedger::record(int stage, std::uint32_t client, std::uint64_t bytes) {
  entries_[{stage, client}] += bytes;
}

std::uint64_t CommLedger::total() const {
  std::uint64_t sum = 0;
  for (const auto& [key, bytes] : entries_) sum += bytes;
  return sum;
}

std::uint64_t CommLedger::stage_total(int stage) const {
  std::uint64_t sum = 0;
  for (const auto& [key, bytes] : entries_)
    if (key.first == stage) sum += bytes;
  return sum;
}

std::uint64_t CommLedger::client_total(std::uint32_t client) const {
  std::uint64_t sum = 0;
  for (const auto& [key, bytes] : entries_)
    if (key.second == client) sum += bytes;
  return sum;
}

}  // namespace stsa
