#pragma once

#include "stsa/config.hpp"
#include "stsa/data.hpp"
#include "stsa/metrics.hpp"
#include "stsa/server.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stsa {

inline constexpr const char* kReportSchema = "stsa-report/1";
inline constexpr const char* kStudySchema = "stsa-estimator-study/1";

// Federated state compared against pooled, centralised computation after
// one stage. All values are relative Frobenius errors.
struct StageOracle {
  int stage = 0;
  double weight_error = 0.0;  // ‖W_t − W*‖ / ‖W*‖
  double gram_error = 0.0;    // ‖G_acc − G_joint‖ / ‖G_joint‖
  double corr_error = 0.0;    // ‖C_acc − C_joint‖ / ‖C_joint‖
};

struct ExperimentReport {
  ExperimentConfig config;
  AccuracyMatrix accuracy{1};
  double avg_incremental_literal = 0.0;
  double avg_incremental_normalized = 0.0;
  double final_average = 0.0;
  std::optional<double> forgetting;  // absent when T = 1
  std::vector<StageOracle> oracle;
  CommLedger comm;
  std::vector<ClassifierWeights> stage_weights;  // not serialised

  std::string to_json() const;
};

// Runs every stage of the federated class-incremental protocol and evaluates
// the classifier after each one. Errors carry stage and client context.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Ridge regression on the pooled mapped data of tasks 1..stages, solved as
// the stacked least-squares problem [X; √γ I] W ≈ [Y; 0] with a QR
// factorisation, independent of the Gram route.
ClassifierWeights centralized_oracle(const FeatureDataset& all_train,
                                     const TaskSchedule& schedule, const RandomMap& map,
                                     double gamma, std::optional<int> stages = std::nullopt);

struct EstimatorStudyRow {
  int clients = 0;
  double mean_sq_error = 0.0;  // mean of ‖Ĝ − G‖²_F
  double std_error = 0.0;      // Monte-Carlo standard error of that mean
  double reference = 0.0;      // ((K+1)/(K−1))²
};

struct EstimatorStudy {
  int trials = 0;
  std::vector<EstimatorStudyRow> rows;

  std::string to_json() const;
};

// For each K, draws `trials` fresh datasets from `spec` (features used as-is),
// splits every class evenly over K clients and measures the estimator error.
// Trial t uses the same data for every K.
EstimatorStudy run_estimator_study(const SynthSpec& spec, std::span<const int> clients,
                                   int trials, std::uint64_t seed);

// Synthetic spec described by a config's synth_* keys and seed.
SynthSpec synth_spec_from_config(const ExperimentConfig& config);

}  // namespace stsa
