#include "stsa/statistics.hpp"

#include "stsa/error.hpp"
#include "stsa/kernels.hpp"
#include "stsa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace stsa {

RandomMap make_random_map(std::uint64_t seed, int d, int M, bool enabled,
                          MapScaling scaling) {
  if (d < 1 || M < 1) {
    throw DimensionError("random map needs d >= 1 and M >= 1 (got d=" +
                         std::to_string(d) + ", M=" + std::to_string(M) + ")");
  }
  if (!enabled) {
    return RandomMap(MapDescriptor{seed, d, d, false, scaling},
                     Matrix::Identity(d, d));
  }
  if (M < d) {
    throw DimensionError("random map must not reduce dimension (d=" +
                         std::to_string(d) + ", M=" + std::to_string(M) + ")");
  }
  const double scale =
      scaling == MapScaling::inv_sqrt_d ? 1.0 / std::sqrt(static_cast<double>(d)) : 1.0;
  ChaChaRng rng(seed, /*stream=*/0x52414e444d4150ULL);
  Matrix matrix(d, M);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < M; ++c) matrix(r, c) = scale * rng.normal();
  return RandomMap(MapDescriptor{seed, d, M, true, scaling}, std::move(matrix));
}

RandomMap make_random_map(const MapDescriptor& desc) {
  return make_random_map(desc.seed, desc.input_dim, desc.output_dim, desc.enabled,
                         desc.scaling);
}

FeatureMatrix apply_map(const RandomMap& map, const Matrix& raw) {
  if (raw.cols() != map.input_dim()) {
    throw DimensionError("raw features have " + std::to_string(raw.cols()) +
                         " columns, map expects " + std::to_string(map.input_dim()));
  }
  if (!map.enabled()) return FeatureMatrix{raw.cwiseMax(0.0)};
  return FeatureMatrix{kernels::relu_project_parallel(raw, map.matrix())};
}

SpatialStatistics local_statistics(const FeatureMatrix& feat,
                                   std::span<const ClassId> labels,
                                   std::span<const ClassId> task_classes,
                                   bool with_gram) {
  if (static_cast<Eigen::Index>(labels.size()) != feat.rows()) {
    throw DimensionError("label count " + std::to_string(labels.size()) +
                         " does not match feature rows " + std::to_string(feat.rows()));
  }
  std::unordered_map<ClassId, int> column;
  for (std::size_t i = 0; i < task_classes.size(); ++i)
    column.emplace(task_classes[i], static_cast<int>(i));

  const int c_t = static_cast<int>(task_classes.size());
  std::vector<int> column_of_row(labels.size());
  SpatialStatistics stats;
  stats.label_freq = Vector::Zero(c_t);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto it = column.find(labels[r]);
    if (it == column.end()) {
      throw DomainError("label " + std::to_string(labels[r]) +
                        " is not among the task's classes");
    }
    column_of_row[r] = it->second;
    stats.label_freq[it->second] += 1.0;
  }
  stats.corr = kernels::class_sums_parallel(feat.values, column_of_row, c_t);
  if (with_gram) stats.gram = kernels::gram_parallel(feat.values);
  return stats;
}

namespace {

bool try_cholesky(const Matrix& gram, double gamma, const Matrix& corr, Matrix& out) {
  Matrix a = gram;
  a.diagonal().array() += gamma;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  out = llt.solve(corr);
  return out.allFinite();
}

}  // namespace

ClassifierWeights ridge_solve(const Matrix& gram, const Matrix& corr, double gamma,
                              std::vector<ClassId> class_ids) {
  if (gram.rows() != gram.cols() || gram.rows() != corr.rows()) {
    throw DimensionError("ridge_solve: G is " + std::to_string(gram.rows()) + "x" +
                         std::to_string(gram.cols()) + ", C has " +
                         std::to_string(corr.rows()) + " rows");
  }
  if (!(gamma >= 0.0)) throw DomainError("ridge coefficient must be non-negative");
  if (class_ids.empty()) {
    class_ids.resize(static_cast<std::size_t>(corr.cols()));
    for (std::size_t j = 0; j < class_ids.size(); ++j) class_ids[j] = static_cast<ClassId>(j);
  }
  if (static_cast<Eigen::Index>(class_ids.size()) != corr.cols()) {
    throw DimensionError("class id list does not match the columns of C");
  }
  const double max_abs = gram.cwiseAbs().maxCoeff();
  if (gram.size() > 0 && (gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-9 * max_abs) {
    throw DomainError("ridge_solve: Gram matrix is not symmetric");
  }

  Matrix w;
  if (try_cholesky(gram, gamma, corr, w)) return {std::move(w), std::move(class_ids)};

  const double spread = gram.norm() / static_cast<double>(std::max<Eigen::Index>(1, gram.rows()));
  std::ostringstream tried;
  tried << "gamma=" << gamma;
  for (int k : {6, 4, 2}) {
    const double delta = std::pow(10.0, -k) * spread;
    const double jittered = gamma > 0.0 ? gamma * (1.0 + delta) : delta;
    tried << ", " << jittered;
    if (try_cholesky(gram, jittered, corr, w)) return {std::move(w), std::move(class_ids)};
  }
  throw NumericalError("Cholesky factorisation of G + gamma*I failed; tried " + tried.str());
}

std::vector<ClassId> predict(const ClassifierWeights& w, const FeatureMatrix& feat) {
  if (feat.cols() != w.weights.rows()) {
    throw DimensionError("features have " + std::to_string(feat.cols()) +
                         " columns, classifier expects " + std::to_string(w.weights.rows()));
  }
  std::vector<ClassId> out(static_cast<std::size_t>(feat.rows()));
  if (w.weights.cols() == 0) {
    if (!out.empty()) throw DimensionError("classifier has no classes");
    return out;
  }
  const Matrix scores = feat.values * w.weights;
  const Eigen::Index n = scores.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < scores.cols(); ++j)
      if (scores(r, j) > scores(r, best)) best = j;
    out[static_cast<std::size_t>(r)] = w.class_ids[static_cast<std::size_t>(best)];
  }
  return out;
}

}  // namespace stsa
