#include "stsa/error.hpp"
#include "stsa/statistics.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace stsa;

TEST_CASE("random map is a deterministic function of its arguments") {
  const auto a = make_random_map(7, 4, 8, true);
  const auto b = make_random_map(7, 4, 8, true);
  CHECK((a.matrix().array() == b.matrix().array()).all());
  CHECK(a.matrix().rows() == 4);
  CHECK(a.matrix().cols() == 8);
  CHECK_FALSE((make_random_map(8, 4, 8, true).matrix().array() == a.matrix().array()).all());
  CHECK(make_random_map(a.descriptor()).matrix() == a.matrix());
}

TEST_CASE("disabled map is the identity") {
  const auto map = make_random_map(7, 4, 4, false);
  CHECK(map.output_dim() == 4);
  CHECK(map.matrix() == Matrix::Identity(4, 4));

  Matrix raw(1, 4);
  raw << 1.5, -2.0, 0.0, 3.0;
  const auto feat = apply_map(map, raw);
  Matrix expected(1, 4);
  expected << 1.5, 0.0, 0.0, 3.0;
  CHECK(feat.values == expected);
}

TEST_CASE("random map entries are standard normal") {
  const auto map = make_random_map(7, 512, 5000, true);
  const auto& m = map.matrix();
  const double n = static_cast<double>(m.size());
  const double mean = m.mean();
  const double var = (m.array() - mean).square().sum() / (n - 1);
  CHECK(std::abs(mean) <= 3.0 / std::sqrt(n));
  CHECK(std::abs(var - 1.0) <= 0.02);

  const auto scaled = make_random_map(7, 512, 600, true, MapScaling::inv_sqrt_d);
  const double sv = scaled.matrix().array().square().mean();
  CHECK(std::abs(sv * 512 - 1.0) < 0.02);
}

TEST_CASE("random map dimension errors") {
  CHECK_THROWS_AS(make_random_map(1, 0, 4, true), DimensionError);
  CHECK_THROWS_AS(make_random_map(1, 4, 0, true), DimensionError);
  CHECK_THROWS_AS(make_random_map(1, 8, 4, true), DimensionError);
  const auto map = make_random_map(1, 3, 6, true);
  CHECK_THROWS_AS(apply_map(map, Matrix::Zero(2, 4)), DimensionError);
}

TEST_CASE("apply_map output is non-negative and zero input maps to zero") {
  const auto map = make_random_map(3, 5, 20, true);
  const auto zero = apply_map(map, Matrix::Zero(3, 5));
  CHECK(zero.rows() == 3);
  CHECK(zero.cols() == 20);
  CHECK(zero.values.isZero(0.0));
  const auto feat = apply_map(map, test::random_matrix(50, 5, 4));
  CHECK((feat.values.array() >= 0.0).all());
}

TEST_CASE("local statistics of the identity example") {
  FeatureMatrix x{Matrix::Identity(2, 2)};
  const std::vector<ClassId> labels{0, 1}, classes{0, 1};
  const auto s = local_statistics(x, labels, classes);
  REQUIRE(s.gram);
  CHECK(*s.gram == Matrix::Identity(2, 2));
  CHECK(s.corr == Matrix::Identity(2, 2));
  CHECK(s.label_freq == Vector::Ones(2));
}

TEST_CASE("local statistics of an empty shard") {
  FeatureMatrix x{Matrix(0, 3)};
  const std::vector<ClassId> labels, classes{4, 5};
  const auto s = local_statistics(x, labels, classes);
  CHECK(s.gram->isZero(0.0));
  CHECK(s.gram->rows() == 3);
  CHECK(s.corr.isZero(0.0));
  CHECK(s.corr.cols() == 2);
  CHECK(s.label_freq.isZero(0.0));
}

TEST_CASE("local statistics invariants and linearity") {
  const std::vector<ClassId> classes{10, 11, 12, 13};
  const Matrix a = test::random_matrix(60, 9, 1).cwiseAbs();
  const Matrix b = test::random_matrix(45, 9, 2).cwiseAbs();
  auto la = test::random_labels(60, 3, 3);  // class 13 never appears
  auto lb = test::random_labels(45, 3, 4);
  for (auto& l : la) l += 10;
  for (auto& l : lb) l += 10;

  const auto sa = local_statistics(FeatureMatrix{a}, la, classes);
  const auto sb = local_statistics(FeatureMatrix{b}, lb, classes);
  Matrix ab(105, 9);
  ab << a, b;
  std::vector<ClassId> lab = la;
  lab.insert(lab.end(), lb.begin(), lb.end());
  const auto sab = local_statistics(FeatureMatrix{ab}, lab, classes);

  CHECK(test::rel(*sa.gram + *sb.gram, *sab.gram) <= 1e-12);
  CHECK(test::rel(sa.corr + sb.corr, sab.corr) <= 1e-12);
  CHECK(sa.label_freq + sb.label_freq == sab.label_freq);
  CHECK(sab.sample_count() == 105.0);
  CHECK(sab.corr.col(3).isZero(0.0));
  CHECK(sab.label_freq[3] == 0.0);

  const Matrix& g = *sab.gram;
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * g.cwiseAbs().maxCoeff());
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(g).eigenvalues().minCoeff() >= -1e-9 * g.norm());

  // Duplicating every sample doubles everything exactly.
  Matrix aa(120, 9);
  aa << a, a;
  std::vector<ClassId> laa = la;
  laa.insert(laa.end(), la.begin(), la.end());
  const auto saa = local_statistics(FeatureMatrix{aa}, laa, classes);
  CHECK(test::rel(*saa.gram, 2.0 * *sa.gram) <= 1e-15);
  CHECK(test::rel(saa.corr, 2.0 * sa.corr) <= 1e-15);
  CHECK(saa.label_freq == 2.0 * sa.label_freq);
}

TEST_CASE("local statistics rejects foreign labels and length mismatch") {
  FeatureMatrix x{Matrix::Ones(2, 2)};
  const std::vector<ClassId> classes{0, 1};
  CHECK_THROWS_AS(local_statistics(x, std::vector<ClassId>{0, 7}, classes), DomainError);
  CHECK_THROWS_AS(local_statistics(x, std::vector<ClassId>{0}, classes), DimensionError);
}

namespace {

// Normal-equations oracle for a 2 × 2 system by Cramer's rule.
Matrix cramer_solve(const Matrix& a, const Matrix& b) {
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  Matrix out(2, b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    out(0, j) = (b(0, j) * a(1, 1) - a(0, 1) * b(1, j)) / det;
    out(1, j) = (a(0, 0) * b(1, j) - b(0, j) * a(1, 0)) / det;
  }
  return out;
}

}  // namespace

TEST_CASE("ridge solve examples") {
  SUBCASE("diagonal case") {
    const auto w = ridge_solve(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1.0);
    CHECK(test::rel(w.weights, 0.5 * Matrix::Identity(2, 2)) < 1e-15);
    CHECK(w.class_ids == std::vector<ClassId>{0, 1});
  }
  SUBCASE("unregularised 2x2 system") {
    Matrix g(2, 2), c(2, 2), expected(2, 2);
    g << 2, 1, 1, 1;
    c << 1, 1, 0, 1;
    expected << 1, 0, -1, 1;
    CHECK(test::rel(cramer_solve(g, c), expected) < 1e-15);
    const auto w = ridge_solve(g, c, 0.0, {0, 1});
    CHECK(test::rel(w.weights, expected) < 1e-12);

    // X = [[1,0],[1,1]] has XᵀX = G and XᵀI = C; X·W reproduces Y = I.
    Matrix x(2, 2);
    x << 1, 0, 1, 1;
    CHECK(test::rel(x * w.weights, Matrix::Identity(2, 2)) < 1e-12);
    CHECK(predict(w, FeatureMatrix{x}) == std::vector<ClassId>{0, 1});
  }
  SUBCASE("dominant regulariser") {
    const Matrix g = Matrix::Identity(3, 3);
    const Matrix c = Matrix::Identity(3, 2) / std::sqrt(2.0);
    const auto w = ridge_solve(g, c, 1e12);
    CHECK(w.weights.norm() <= 2.0 * c.norm() / 1e12);
  }
}

TEST_CASE("ridge solve residual bound on random systems") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = test::random_matrix(80, 30, seed);
    const Matrix g = x.transpose() * x;
    const Matrix c = test::random_matrix(30, 6, seed + 100);
    const double gamma = 0.1 * (1 + static_cast<double>(seed));
    const auto w = ridge_solve(g, c, gamma);
    const Matrix residual = g * w.weights + gamma * w.weights - c;
    CHECK(residual.norm() / c.norm() <= 1e-8);
  }
}

TEST_CASE("ridge solve escalates jitter, then reports the levels") {
  // Slightly indefinite matrix: the first jitter level repairs it.
  Matrix g(2, 2);
  g << 1.0, 0.0, 0.0, -1e-7;
  const auto w = ridge_solve(g, Matrix::Identity(2, 2), 1e-7);
  CHECK(w.weights.allFinite());

  Matrix bad(2, 2);
  bad << 1.0, 0.0, 0.0, -100.0;
  try {
    ridge_solve(bad, Matrix::Identity(2, 2), 1.0);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("tried gamma=1") != std::string::npos);
  }

  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(ridge_solve(asym, Matrix::Identity(2, 2), 1.0), DomainError);
  CHECK_THROWS_AS(ridge_solve(Matrix::Identity(2, 2), Matrix::Identity(3, 2), 1.0), DimensionError);
}

TEST_CASE("predict examples") {
  ClassifierWeights w{Matrix::Identity(2, 2), {4, 9}};
  Matrix e1(1, 2);
  e1 << 1, 0;
  CHECK(predict(w, FeatureMatrix{e1}) == std::vector<ClassId>{4});

  ClassifierWeights tie{Matrix::Constant(1, 2, 0.3), {4, 9}};
  CHECK(predict(tie, FeatureMatrix{Matrix::Ones(1, 1)}) == std::vector<ClassId>{4});

  CHECK_THROWS_AS(predict(w, FeatureMatrix{Matrix::Ones(1, 3)}), DimensionError);
}

TEST_CASE("predict is invariant to positive rescaling") {
  const Matrix x = test::random_matrix(200, 12, 8).cwiseAbs();
  ClassifierWeights w{test::random_matrix(12, 7, 9), {0, 1, 2, 3, 4, 5, 6}};
  const auto base = predict(w, FeatureMatrix{x});
  for (double s : {1e-6, 0.5, 3.0, 1e8}) {
    ClassifierWeights scaled{s * w.weights, w.class_ids};
    CHECK(predict(scaled, FeatureMatrix{x}) == base);
  }
}
