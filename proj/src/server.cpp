#include "stsa/server.hpp"

#include "stsa/error.hpp"
#include "stsa/kernels.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace stsa {
namespace {

std::vector<std::size_t> canonical_order(std::span<const SpatialStatistics> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(records[a].client_id, records[a].dummy_index) <
           std::pair(records[b].client_id, records[b].dummy_index);
  });
  return order;
}

}  // namespace

SpatialAggregate spatial_aggregate(std::span<const UploadPayload> payloads,
                                   std::span<const ClassId> task_classes) {
  if (payloads.empty()) throw ProtocolError("spatial aggregation needs at least one payload");
  const UploadMode mode = payloads.front().mode;
  std::vector<SpatialStatistics> records;
  for (const auto& p : payloads) {
    if (p.mode != mode) throw ProtocolError("payloads mix full and efficient mode");
    records.insert(records.end(), p.records.begin(), p.records.end());
  }
  if (records.empty()) throw ProtocolError("payloads carry no statistics records");

  const Eigen::Index M = records.front().dim();
  const Eigen::Index c_t = static_cast<Eigen::Index>(task_classes.size());
  const int task_id = records.front().task_id;
  for (const auto& r : records) {
    if (r.dim() != M) throw ProtocolError("payloads disagree on the mapped dimension");
    if (r.corr.cols() != c_t || r.label_freq.size() != c_t) {
      throw ProtocolError("payload class count does not match the task");
    }
    if (r.task_id != task_id) throw ProtocolError("payloads belong to different tasks");
    if (mode == UploadMode::full && (!r.gram || r.gram->rows() != M || r.gram->cols() != M)) {
      throw ProtocolError("full-mode record without a Gram matrix of matching size");
    }
    if (mode == UploadMode::efficient && r.gram) {
      throw ProtocolError("efficient-mode record carries a Gram matrix");
    }
  }

  SpatialAggregate agg;
  agg.mode = mode;
  agg.corr = Matrix::Zero(M, c_t);
  agg.label_freq = Vector::Zero(c_t);
  if (mode == UploadMode::full) agg.gram = Matrix::Zero(M, M);

  const auto order = canonical_order(records);
  for (std::size_t idx : order) {
    const auto& r = records[idx];
    if (agg.gram) *agg.gram += *r.gram;
    agg.corr += r.corr;
    agg.label_freq += r.label_freq;
  }
  if (agg.gram) *agg.gram = (0.5 * (*agg.gram + agg.gram->transpose())).eval();

  if (mode == UploadMode::efficient) {
    agg.records.reserve(records.size());
    for (std::size_t idx : order) agg.records.push_back(std::move(records[idx]));
  }
  return agg;
}

Matrix estimate_gram(std::span<const SpatialStatistics> records,
                     std::span<const ClassId> task_classes) {
  if (records.empty()) throw EstimationError("no records to estimate the Gram matrix from");
  const Eigen::Index M = records.front().dim();
  const auto order = canonical_order(records);

  Matrix estimate = Matrix::Zero(M, M);
  for (std::size_t i = 0; i < task_classes.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    std::vector<std::size_t> holders;
    for (std::size_t idx : order) {
      const auto& r = records[idx];
      if (r.dim() != M || r.corr.cols() != static_cast<Eigen::Index>(task_classes.size())) {
        throw ProtocolError("records disagree on shape");
      }
      if (r.label_freq[col] > kPresenceThreshold) holders.push_back(idx);
    }
    if (holders.empty()) continue;
    if (holders.size() < 2) {
      throw EstimationError("class " + std::to_string(task_classes[i]) +
                            " is held by a single record; at least two are needed "
                            "(use dummy clients)");
    }

    const auto k = static_cast<Eigen::Index>(holders.size());
    Matrix columns(k, M);
    std::vector<double> inv_counts(holders.size());
    Vector sum = Vector::Zero(M);
    double n = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto& r = records[holders[static_cast<std::size_t>(j)]];
      columns.row(j) = r.corr.col(col).transpose();
      inv_counts[static_cast<std::size_t>(j)] = 1.0 / r.label_freq[col];
      n += r.label_freq[col];
      sum += r.corr.col(col);
    }
    const double kd = static_cast<double>(k);
    const double local_weight = (n - 1.0) / (kd - 1.0);
    const double global_weight = (n - kd) / (n * (kd - 1.0));

    const Matrix local = kernels::weighted_gram_parallel(columns, inv_counts);
    estimate += local_weight * local - global_weight * (sum * sum.transpose());
  }
  return 0.5 * (estimate + estimate.transpose());
}

TemporalState TemporalState::empty(int M, GramMode mode) {
  TemporalState s;
  s.gram = Matrix::Zero(M, M);
  s.corr = Matrix::Zero(M, 0);
  s.mode = mode;
  return s;
}

TemporalState temporal_aggregate(TemporalState state, const Matrix& gram_new,
                                 const Matrix& corr_new,
                                 std::span<const ClassId> task_classes) {
  const Eigen::Index M = state.gram.rows();
  if (gram_new.rows() != M || gram_new.cols() != M) {
    throw DimensionError("stage Gram is " + std::to_string(gram_new.rows()) + "x" +
                         std::to_string(gram_new.cols()) + ", state holds M=" +
                         std::to_string(M));
  }
  if (corr_new.rows() != M || corr_new.cols() != static_cast<Eigen::Index>(task_classes.size())) {
    throw DimensionError("stage correlation matrix does not match M x c_t");
  }
  const std::unordered_set<ClassId> seen(state.class_ids.begin(), state.class_ids.end());
  for (ClassId c : task_classes) {
    if (seen.contains(c)) {
      throw ProtocolError("class " + std::to_string(c) + " already appeared in an earlier task");
    }
  }

  state.gram += gram_new;
  Matrix corr(M, state.corr.cols() + corr_new.cols());
  corr << state.corr, corr_new;
  state.corr = std::move(corr);
  state.class_ids.insert(state.class_ids.end(), task_classes.begin(), task_classes.end());
  ++state.stage;
  return state;
}

GlobalModel update_classifier(const TemporalState& state, double gamma,
                              const MapDescriptor& map) {
  if (state.is_empty()) throw ProtocolError("cannot update the classifier before any stage");
  return GlobalModel{map, ridge_solve(state.gram, state.corr, gamma, state.class_ids),
                     state.stage};
}

}  // namespace stsa
