#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace stsa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ClassId = std::uint32_t;
using ClientId = std::uint32_t;

enum class MapScaling { unit, inv_sqrt_d };

// Seed, shape and scaling of a random map; enough for any party to rebuild it.
struct MapDescriptor {
  std::uint64_t seed = 0;
  int input_dim = 0;
  int output_dim = 0;
  bool enabled = true;
  MapScaling scaling = MapScaling::unit;

  bool operator==(const MapDescriptor&) const = default;
};

// Fixed d × M matrix shared by every client through its seed. Immutable.
class RandomMap {
 public:
  const MapDescriptor& descriptor() const noexcept { return desc_; }
  std::uint64_t seed() const noexcept { return desc_.seed; }
  int input_dim() const noexcept { return desc_.input_dim; }
  int output_dim() const noexcept { return desc_.output_dim; }
  bool enabled() const noexcept { return desc_.enabled; }
  const Matrix& matrix() const noexcept { return matrix_; }

 private:
  friend RandomMap make_random_map(std::uint64_t, int, int, bool, MapScaling);
  RandomMap(MapDescriptor desc, Matrix matrix)
      : desc_(desc), matrix_(std::move(matrix)) {}

  MapDescriptor desc_;
  Matrix matrix_;
};

// Entries i.i.d. N(0, 1) (or N(0, 1/d)) drawn row-major from a ChaCha20
// stream keyed by `seed`. Disabled maps are the d × d identity.
RandomMap make_random_map(std::uint64_t seed, int d, int M, bool enabled,
                          MapScaling scaling = MapScaling::unit);
RandomMap make_random_map(const MapDescriptor& desc);

// Mapped features of one shard, rows are samples.
struct FeatureMatrix {
  Matrix values;

  Eigen::Index rows() const noexcept { return values.rows(); }
  Eigen::Index cols() const noexcept { return values.cols(); }
};

FeatureMatrix apply_map(const RandomMap& map, const Matrix& raw);

// One upload record: Gram G = XᵀX (absent in efficient mode), correlation
// C = XᵀY over the task's classes, and per-class sample counts. Counts are
// whole numbers unless privacy noise was added.
struct SpatialStatistics {
  std::optional<Matrix> gram;
  Matrix corr;
  Vector label_freq;
  int task_id = 0;
  ClientId client_id = 0;
  int dummy_index = 0;

  Eigen::Index dim() const noexcept { return corr.rows(); }
  double sample_count() const { return label_freq.sum(); }
};

SpatialStatistics local_statistics(const FeatureMatrix& feat,
                                   std::span<const ClassId> labels,
                                   std::span<const ClassId> task_classes,
                                   bool with_gram = true);

struct ClassifierWeights {
  Matrix weights;                // M × c_joint
  std::vector<ClassId> class_ids;  // column j predicts class_ids[j]
};

// W = (G + γI)⁻¹C through a Cholesky factorisation. On failure the
// regulariser is escalated three times before a NumericalError is raised.
// When class_ids is empty the columns are labelled 0..c-1.
ClassifierWeights ridge_solve(const Matrix& gram, const Matrix& corr, double gamma,
                              std::vector<ClassId> class_ids = {});

// Top-1 class per row; ties go to the lowest column.
std::vector<ClassId> predict(const ClassifierWeights& w, const FeatureMatrix& feat);

}  // namespace stsa
