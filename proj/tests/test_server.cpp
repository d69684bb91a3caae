#include "stsa/data.hpp"
#include "stsa/error.hpp"
#include "stsa/kernels.hpp"
#include "stsa/server.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace stsa;

namespace {

UploadPayload full_payload(const Matrix& x, const std::vector<ClassId>& labels,
                           const std::vector<ClassId>& classes, ClientId client) {
  UploadPayload p;
  p.mode = UploadMode::full;
  auto s = local_statistics(FeatureMatrix{x}, labels, classes, true);
  s.client_id = client;
  s.task_id = 1;
  p.records.push_back(std::move(s));
  return p;
}

SpatialStatistics first_order(const Matrix& x, const std::vector<ClassId>& labels,
                              const std::vector<ClassId>& classes, ClientId client,
                              int dummy = 0) {
  auto s = local_statistics(FeatureMatrix{x}, labels, classes, false);
  s.client_id = client;
  s.dummy_index = dummy;
  return s;
}

Matrix rows_of(const Matrix& x, std::size_t begin, std::size_t end) {
  return x.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
}

// Direct scalar evaluation of the estimator for a single class whose
// records are given as lists of sample vectors.
Matrix scalar_estimate(const std::vector<std::vector<std::vector<double>>>& records) {
  const std::size_t dim = records[0][0].size();
  const double k = static_cast<double>(records.size());
  double n = 0;
  std::vector<std::vector<double>> sums;
  for (const auto& rec : records) {
    std::vector<double> c(dim, 0.0);
    for (const auto& v : rec)
      for (std::size_t a = 0; a < dim; ++a) c[a] += v[a];
    sums.push_back(c);
    n += static_cast<double>(rec.size());
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = 0; b < dim; ++b) {
      double local = 0, total_a = 0, total_b = 0;
      for (std::size_t r = 0; r < records.size(); ++r) {
        local += sums[r][a] * sums[r][b] / static_cast<double>(records[r].size());
        total_a += sums[r][a];
        total_b += sums[r][b];
      }
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          (n - 1) / (k - 1) * local - (n - k) / (n * (k - 1)) * total_a * total_b;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("spatial aggregation of a single payload") {
  const Matrix x = test::random_matrix(20, 6, 1).cwiseAbs();
  const auto labels = test::random_labels(20, 3, 2);
  const std::vector<ClassId> classes{0, 1, 2};
  const std::vector<UploadPayload> ps{full_payload(x, labels, classes, 0)};
  const auto agg = spatial_aggregate(ps, classes);
  CHECK(*agg.gram == *ps[0].records[0].gram);
  CHECK(agg.corr == ps[0].records[0].corr);
  CHECK(agg.label_freq == ps[0].records[0].label_freq);
}

TEST_CASE("spatial aggregation over a partition equals pooled statistics") {
  const Matrix x = test::random_matrix(300, 10, 3).cwiseAbs();
  const auto labels = test::random_labels(300, 4, 4);
  const std::vector<ClassId> classes{0, 1, 2, 3};
  const auto pooled = local_statistics(FeatureMatrix{x}, labels, classes, true);

  for (int k : {2, 3, 7}) {
    std::vector<UploadPayload> ps;
    const std::size_t step = 300 / static_cast<std::size_t>(k);
    for (int c = 0; c < k; ++c) {
      const std::size_t b = static_cast<std::size_t>(c) * step;
      const std::size_t e = c + 1 == k ? 300 : b + step;
      ps.push_back(full_payload(rows_of(x, b, e),
                                std::vector<ClassId>(labels.begin() + static_cast<std::ptrdiff_t>(b),
                                                     labels.begin() + static_cast<std::ptrdiff_t>(e)),
                                classes, static_cast<ClientId>(c)));
    }
    const auto agg = spatial_aggregate(ps, classes);
    CHECK(test::rel(*agg.gram, *pooled.gram) <= 1e-12);
    CHECK(test::rel(agg.corr, pooled.corr) <= 1e-12);
    CHECK(agg.label_freq == pooled.label_freq);

    std::vector<UploadPayload> reversed(ps.rbegin(), ps.rend());
    const auto agg2 = spatial_aggregate(reversed, classes);
    CHECK((agg2.gram->array() == agg.gram->array()).all());
    CHECK((agg2.corr.array() == agg.corr.array()).all());
  }
}

TEST_CASE("spatial aggregation protocol errors") {
  const std::vector<ClassId> classes{0, 1};
  const Matrix x = Matrix::Ones(3, 4);
  const std::vector<ClassId> labels{0, 1, 1};
  auto full = full_payload(x, labels, classes, 0);
  UploadPayload eff;
  eff.mode = UploadMode::efficient;
  eff.records.push_back(first_order(x, labels, classes, 1));
  eff.records[0].task_id = 1;

  CHECK_THROWS_AS(spatial_aggregate(std::vector<UploadPayload>{full, eff}, classes), ProtocolError);
  CHECK_THROWS_AS(spatial_aggregate(std::vector<UploadPayload>{}, classes), ProtocolError);
  auto other_dim = full_payload(Matrix::Ones(3, 5), labels, classes, 1);
  CHECK_THROWS_AS(spatial_aggregate(std::vector<UploadPayload>{full, other_dim}, classes),
                  ProtocolError);
}

TEST_CASE("estimator is exact when every record holds one sample") {
  Vector v(3);
  v << 0.5, 2.0, 1.5;
  const std::vector<ClassId> classes{7};
  std::vector<SpatialStatistics> records;
  const int k = 6;
  for (int i = 0; i < k; ++i)
    records.push_back(first_order(v.transpose(), {7}, classes, static_cast<ClientId>(i)));
  const Matrix est = estimate_gram(records, classes);
  CHECK(test::rel(est, k * v * v.transpose()) <= 1e-15);
}

TEST_CASE("estimator matches a hand evaluation") {
  // Record 1 holds (1,2) and (3,1); record 2 holds (0,1) and (2,2).
  const std::vector<std::vector<std::vector<double>>> samples{{{1, 2}, {3, 1}}, {{0, 1}, {2, 2}}};
  Matrix expected(2, 2);
  expected << 12, 9, 9, 9;
  CHECK(test::rel(scalar_estimate(samples), expected) <= 1e-15);

  const std::vector<ClassId> classes{0};
  Matrix r1(2, 2), r2(2, 2);
  r1 << 1, 2, 3, 1;
  r2 << 0, 1, 2, 2;
  const std::vector<SpatialStatistics> records{first_order(r1, {0, 0}, classes, 0),
                                               first_order(r2, {0, 0}, classes, 1)};
  CHECK(test::rel(estimate_gram(records, classes), expected) <= 1e-15);
}

TEST_CASE("estimator matches the scalar oracle on random multi-class records") {
  const std::vector<ClassId> classes{0, 1, 2};
  std::vector<SpatialStatistics> records;
  Matrix expected = Matrix::Zero(4, 4);
  std::vector<std::vector<std::vector<std::vector<double>>>> per_class(3);
  for (int r = 0; r < 5; ++r) {
    const Matrix x = test::random_matrix(9, 4, 30 + static_cast<std::uint64_t>(r));
    auto labels = test::random_labels(9, 3, 60 + static_cast<std::uint64_t>(r));
    labels[0] = 0;
    labels[1] = 1;
    labels[2] = 2;
    records.push_back(first_order(x, labels, classes, static_cast<ClientId>(r)));
    for (ClassId c = 0; c < 3; ++c) {
      std::vector<std::vector<double>> rec;
      for (int i = 0; i < 9; ++i)
        if (labels[static_cast<std::size_t>(i)] == c)
          rec.push_back({x(i, 0), x(i, 1), x(i, 2), x(i, 3)});
      per_class[c].push_back(rec);
    }
  }
  for (const auto& c : per_class) expected += scalar_estimate(c);
  const Matrix est = estimate_gram(records, classes);
  CHECK(test::rel(est, expected) <= 1e-12);
  CHECK((est - est.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("estimator skips absent records and rejects single holders") {
  const std::vector<ClassId> classes{0, 1};
  Matrix a(2, 2), b(1, 2), c(1, 2);
  a << 1, 2, 3, 4;
  b << 5, 6;
  c << 7, 8;
  // Class 1 appears only in record 0.
  std::vector<SpatialStatistics> records{first_order(a, {0, 1}, classes, 0),
                                         first_order(b, {0}, classes, 1),
                                         first_order(c, {0}, classes, 2)};
  try {
    estimate_gram(records, classes);
    FAIL("expected EstimationError");
  } catch (const EstimationError& e) {
    CHECK(std::string(e.what()).find("class 1") != std::string::npos);
  }

  // Records without class 0 do not count towards K for class 0.
  std::vector<SpatialStatistics> ok{first_order(b, {0}, classes, 0), first_order(c, {0}, classes, 1),
                                    first_order(Matrix(0, 2), {}, classes, 2)};
  Matrix bc(2, 2);
  bc << 5, 6, 7, 8;
  const std::vector<std::vector<std::vector<double>>> samples{{{5, 6}}, {{7, 8}}};
  CHECK(test::rel(estimate_gram(ok, classes), scalar_estimate(samples)) <= 1e-15);
}

TEST_CASE("estimator is unbiased (Monte-Carlo)") {
  SynthSpec spec;
  spec.class_count = 2;
  spec.dim = 4;
  spec.train_per_class = 100;
  Vector mu0(4), mu1(4), var0(4), var1(4);
  mu0 << 1.0, -0.5, 0.2, 0.0;
  mu1 << -0.3, 0.8, 1.0, 0.5;
  var0 << 0.5, 1.0, 0.2, 0.8;
  var1 << 1.2, 0.3, 0.6, 0.4;
  spec.means = {mu0, mu1};
  spec.variances = {var0, var1};
  const Matrix expected = 100.0 * (mu0 * mu0.transpose() + Matrix(var0.asDiagonal())) +
                          100.0 * (mu1 * mu1.transpose() + Matrix(var1.asDiagonal()));

  const std::vector<ClassId> classes{0, 1};
  const int trials = 3000, k = 10;
  Matrix sum = Matrix::Zero(4, 4), sq = Matrix::Zero(4, 4);
  for (int t = 0; t < trials; ++t) {
    spec.seed = 1000 + static_cast<std::uint64_t>(t);
    const auto data = generate_synthetic(spec).train;
    std::vector<SpatialStatistics> records;
    for (int c = 0; c < k; ++c) {
      std::vector<std::size_t> rows;
      for (std::size_t i = static_cast<std::size_t>(c); i < data.size(); i += k) rows.push_back(i);
      const auto part = data.select_rows(rows);
      records.push_back(first_order(part.features, part.labels, classes, static_cast<ClientId>(c)));
    }
    const Matrix est = estimate_gram(records, classes);
    sum += est;
    sq += est.cwiseProduct(est);
  }
  const Matrix mean = sum / trials;
  const Matrix se = ((sq / trials - mean.cwiseProduct(mean)) * trials / (trials - 1.0) / trials).cwiseSqrt();
  int inside = 0;
  for (Eigen::Index i = 0; i < 16; ++i)
    if (std::abs(mean(i) - expected(i)) <= 3.0 * se(i)) ++inside;
  CHECK(inside >= 15);
}

TEST_CASE("temporal aggregation") {
  const int M = 5;
  auto state = TemporalState::empty(M, GramMode::exact);
  CHECK(state.is_empty());
  const Matrix x1 = test::random_matrix(30, M, 1).cwiseAbs();
  const Matrix x2 = test::random_matrix(20, M, 2).cwiseAbs();
  const Matrix g1 = x1.transpose() * x1, g2 = x2.transpose() * x2;
  const Matrix c1 = test::random_matrix(M, 3, 3), c2 = test::random_matrix(M, 2, 4);

  state = temporal_aggregate(std::move(state), g1, c1, std::vector<ClassId>{0, 1, 2});
  CHECK(state.stage == 1);
  CHECK(state.gram == g1);
  CHECK(state.corr == c1);

  state = temporal_aggregate(std::move(state), g2, c2, std::vector<ClassId>{3, 4});
  CHECK(state.stage == 2);
  CHECK(state.corr.cols() == 5);
  CHECK(state.corr.leftCols(3) == c1);
  CHECK(state.corr.rightCols(2) == c2);
  CHECK(state.class_ids == std::vector<ClassId>{0, 1, 2, 3, 4});
  CHECK(test::rel(state.gram, g1 + g2) <= 1e-12);

  CHECK_THROWS_AS(temporal_aggregate(state, g1, c2, std::vector<ClassId>{4, 5}), ProtocolError);
  CHECK_THROWS_AS(temporal_aggregate(state, Matrix::Zero(4, 4), c2, std::vector<ClassId>{8, 9}),
                  DimensionError);
}

TEST_CASE("temporal accumulation over any task split equals joint statistics") {
  const Matrix x = test::random_matrix(240, 8, 11).cwiseAbs();
  auto labels = test::random_labels(240, 6, 12);
  const std::vector<ClassId> all{0, 1, 2, 3, 4, 5};
  const auto joint = local_statistics(FeatureMatrix{x}, labels, all, true);

  for (const auto& split : {std::vector<std::vector<ClassId>>{{0, 1, 2}, {3, 4, 5}},
                            std::vector<std::vector<ClassId>>{{0}, {1, 2, 3, 4}, {5}}}) {
    auto state = TemporalState::empty(8, GramMode::exact);
    for (const auto& classes : split) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (std::find(classes.begin(), classes.end(), labels[i]) != classes.end()) rows.push_back(i);
      Matrix xs(static_cast<Eigen::Index>(rows.size()), 8);
      std::vector<ClassId> ls;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        xs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
        ls.push_back(labels[rows[i]]);
      }
      const auto s = local_statistics(FeatureMatrix{xs}, ls, classes, true);
      state = temporal_aggregate(std::move(state), *s.gram, s.corr, classes);
    }
    CHECK(test::rel(state.gram, *joint.gram) <= 1e-12);
    CHECK(test::rel(state.corr, joint.corr) <= 1e-12);
  }
}

TEST_CASE("classifier update") {
  auto empty = TemporalState::empty(3, GramMode::exact);
  CHECK_THROWS_AS(update_classifier(empty, 1.0, {}), ProtocolError);

  // Single sample e1 of a single class with gamma 1: W = e1 / 2.
  auto state = TemporalState::empty(3, GramMode::exact);
  Vector e1 = Vector::Unit(3, 0);
  state = temporal_aggregate(std::move(state), e1 * e1.transpose(), e1, std::vector<ClassId>{5});
  MapDescriptor desc{9, 3, 3, false};
  const auto model = update_classifier(state, 1.0, desc);
  CHECK(model.stage == 1);
  CHECK(model.map == desc);
  CHECK(model.weights.class_ids == std::vector<ClassId>{5});
  CHECK(test::rel(model.weights.weights, 0.5 * e1) <= 1e-15);
}

TEST_CASE("aggregated noisy Gram is exactly symmetric") {
  const std::vector<ClassId> classes{0, 1};
  const Matrix x = test::random_matrix(40, 30, 8).cwiseAbs();
  const auto labels = test::random_labels(40, 2, 9);
  std::vector<UploadPayload> ps;
  for (ClientId c = 0; c < 2; ++c)
    ps.push_back(add_noise(full_payload(x, labels, classes, c), 0.2, 0.05, 100 + c));
  const auto agg = spatial_aggregate(ps, classes);
  CHECK((*agg.gram - agg.gram->transpose()).cwiseAbs().maxCoeff() == 0.0);
}
