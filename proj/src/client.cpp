#include "stsa/client.hpp"

#include "stsa/error.hpp"
#include "stsa/metrics.hpp"
#include "stsa/rng.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace stsa {
namespace {

void shuffle(std::vector<std::size_t>& v, ChaChaRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(v[i - 1], v[j]);
  }
}

ClientShard subset(const ClientShard& shard, const std::vector<std::size_t>& rows) {
  ClientShard out;
  out.client_id = shard.client_id;
  out.task_id = shard.task_id;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), shard.features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        shard.features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(shard.labels[rows[i]]);
  }
  return out;
}

void perturb(Matrix& m, double sigma, ChaChaRng& rng) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) += sigma * rng.normal();
}

}  // namespace

std::vector<ClientShard> split_dummy(const ClientShard& shard, int dummy_count,
                                     std::uint64_t seed, DummySplit split) {
  if (dummy_count < 1) throw ConfigError("dummy client count must be >= 1");
  const std::size_t n = shard.size();
  if (n >= 1 && static_cast<std::size_t>(dummy_count) > n) {
    throw ConfigError("dummy client count " + std::to_string(dummy_count) +
                      " exceeds shard size " + std::to_string(n));
  }
  if (dummy_count == 1) return {shard};

  ChaChaRng rng(seed, /*stream=*/0x44554d4d59ULL);
  std::vector<std::size_t> order;
  if (split == DummySplit::uniform) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
  } else {
    std::map<ClassId, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[shard.labels[i]].push_back(i);
    for (auto& [cls, rows] : by_class) {
      shuffle(rows, rng);
      order.insert(order.end(), rows.begin(), rows.end());
    }
  }

  std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(dummy_count));
  for (std::size_t i = 0; i < order.size(); ++i) rows[i % rows.size()].push_back(order[i]);
  // Keep each sub-shard in original row order.
  std::vector<ClientShard> out;
  out.reserve(rows.size());
  for (auto& r : rows) {
    std::sort(r.begin(), r.end());
    out.push_back(subset(shard, r));
  }
  return out;
}

UploadPayload extract_payload(const ClientShard& shard, const RandomMap& map,
                              std::span<const ClassId> task_classes,
                              const ExtractOptions& options) {
  UploadPayload payload;
  payload.mode = options.mode;
  const int M = map.output_dim();
  const int c_t = static_cast<int>(task_classes.size());

  auto tag = [&](SpatialStatistics s, int dummy_index) {
    s.task_id = shard.task_id;
    s.client_id = shard.client_id;
    s.dummy_index = dummy_index;
    return s;
  };

  if (options.mode == UploadMode::full) {
    const FeatureMatrix feat = apply_map(map, shard.features);
    payload.records.push_back(tag(local_statistics(feat, shard.labels, task_classes, true), 0));
    payload.byte_size = comm_bytes(M, c_t, 1, UploadMode::full, options.elem_bytes);
    return payload;
  }

  const auto parts = split_dummy(shard, options.dummy_count, options.seed, options.split);
  payload.records.reserve(parts.size());
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const FeatureMatrix feat = apply_map(map, parts[j].features);
    payload.records.push_back(
        tag(local_statistics(feat, parts[j].labels, task_classes, false), static_cast<int>(j)));
  }
  payload.byte_size = comm_bytes(M, c_t, static_cast<int>(parts.size()), UploadMode::efficient,
                                 options.elem_bytes);
  return payload;
}

UploadPayload add_noise(UploadPayload payload, double q, double s, std::uint64_t seed) {
  if (q < 0.0 || s < 0.0) throw DomainError("noise parameters must be non-negative");
  const double sigma = q * s;
  if (sigma == 0.0) return payload;
  ChaChaRng rng(seed, /*stream=*/0x4e4f495345ULL);
  for (auto& rec : payload.records) {
    if (rec.gram) perturb(*rec.gram, sigma, rng);
    perturb(rec.corr, sigma, rng);
    if (payload.mode == UploadMode::efficient) {
      for (Eigen::Index i = 0; i < rec.label_freq.size(); ++i)
        rec.label_freq[i] += sigma * rng.normal();
    }
  }
  return payload;
}

}  // namespace stsa
