#include "stsa/runner.hpp"

#include "stsa/error.hpp"
#include "stsa/kernels.hpp"
#include "stsa/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace stsa {
namespace {

using json = nlohmann::ordered_json;

double relative_error(const Matrix& value, const Matrix& reference) {
  const double denom = reference.norm();
  const double diff = (value - reference).norm();
  return denom > 0.0 ? diff / denom : diff;
}

// Runs body(i) for i in [0, n) in parallel and rethrows the first failure
// (lowest index) after the loop, so errors are deterministic.
template <typename Body>
void parallel_for_each(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<std::size_t> rows_with_classes(std::span<const ClassId> labels,
                                           std::span<const ClassId> classes) {
  const std::unordered_set<ClassId> keep(classes.begin(), classes.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (keep.contains(labels[i])) rows.push_back(i);
  return rows;
}

struct Datasets {
  FeatureDataset train;
  FeatureDataset test;
};

Datasets load_data(const ExperimentConfig& cfg) {
  if (cfg.source == DataSource::synthetic) {
    auto split = generate_synthetic(synth_spec_from_config(cfg));
    return {std::move(split.train), std::move(split.test)};
  }
  Datasets d{load_features(cfg.train_path), load_features(cfg.test_path)};
  if (d.train.dim() != d.test.dim() && d.test.size() > 0) {
    throw ConfigError("train and test feature files disagree on dimension");
  }
  if (d.train.class_count != d.test.class_count) {
    throw ConfigError("train and test feature files disagree on class_count");
  }
  return d;
}

std::uint64_t client_index(int stage, int client) {
  return (static_cast<std::uint64_t>(stage) << 32) | static_cast<std::uint32_t>(client);
}

}  // namespace

SynthSpec synth_spec_from_config(const ExperimentConfig& cfg) {
  return make_cluster_spec(cfg.synth_classes, cfg.synth_dim, cfg.synth_separation,
                           cfg.synth_noise_std, cfg.synth_train_per_class,
                           cfg.synth_test_per_class, derive_seed(cfg.seed, "synthesis"));
}

ClassifierWeights centralized_oracle(const FeatureDataset& all_train,
                                     const TaskSchedule& schedule, const RandomMap& map,
                                     double gamma, std::optional<int> stages) {
  const int t = stages.value_or(schedule.size());
  if (t < 1 || t > schedule.size()) throw ConfigError("oracle stage out of range");
  const std::vector<ClassId> classes = schedule.classes_through(t);
  const auto rows = rows_with_classes(all_train.labels, classes);
  if (rows.empty()) throw ConfigError("centralised oracle has no training data");
  if (all_train.dim() != map.input_dim()) {
    throw DimensionError("oracle data dimension does not match the random map");
  }

  std::unordered_map<ClassId, Eigen::Index> column;
  for (std::size_t j = 0; j < classes.size(); ++j) column[classes[j]] = static_cast<Eigen::Index>(j);

  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index M = map.output_dim();
  const auto c = static_cast<Eigen::Index>(classes.size());
  Matrix raw(n, all_train.dim());
  Matrix stacked_y = Matrix::Zero(n + M, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    raw.row(i) = all_train.features.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
    stacked_y(i, column.at(all_train.labels[rows[static_cast<std::size_t>(i)]])) = 1.0;
  }
  Matrix stacked_x(n + M, M);
  stacked_x.topRows(n) = (raw * map.matrix()).cwiseMax(0.0);
  stacked_x.bottomRows(M) = std::sqrt(gamma) * Matrix::Identity(M, M);

  Matrix w = stacked_x.colPivHouseholderQr().solve(stacked_y);
  return {std::move(w), classes};
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Datasets data = load_data(cfg);
  const TaskSchedule schedule =
      split_tasks(data.train.class_count, cfg.tasks, cfg.first_task_classes, cfg.class_order_seed);
  const RandomMap map = make_random_map(derive_seed(cfg.seed, "map"), data.train.dim(),
                                        cfg.map_enabled ? cfg.map_dim : data.train.dim(),
                                        cfg.map_enabled, cfg.map_scaling);
  const int M = map.output_dim();

  std::vector<std::vector<std::size_t>> global_parts;
  if (cfg.partition == PartitionScope::global) {
    global_parts = dirichlet_partition(data.train.labels, cfg.clients, cfg.beta,
                                       derive_seed(cfg.seed, "partition"));
  }

  // Test features are mapped once; each task evaluates its own rows.
  const FeatureMatrix test_mapped = apply_map(map, data.test.features);
  std::vector<std::vector<std::size_t>> test_rows(static_cast<std::size_t>(schedule.size()));
  for (int tau = 1; tau <= schedule.size(); ++tau) {
    test_rows[static_cast<std::size_t>(tau - 1)] =
        rows_with_classes(data.test.labels, schedule.classes(tau));
    if (test_rows[static_cast<std::size_t>(tau - 1)].empty()) {
      throw ConfigError("test split has no samples for task " + std::to_string(tau));
    }
  }

  ExperimentReport report;
  report.config = cfg;
  report.accuracy = AccuracyMatrix(schedule.size());
  TemporalState state = TemporalState::empty(
      M, cfg.mode == UploadMode::full ? GramMode::exact : GramMode::estimated);

  for (int t = 1; t <= schedule.size(); ++t) {
    const std::string stage_ctx = "stage " + std::to_string(t);
    const auto& classes = schedule.classes(t);
    const auto task_rows = rows_with_classes(data.train.labels, classes);

    // Client shards for this task.
    std::vector<std::vector<std::size_t>> parts(static_cast<std::size_t>(cfg.clients));
    if (cfg.partition == PartitionScope::global) {
      const std::unordered_set<ClassId> keep(classes.begin(), classes.end());
      for (std::size_t k = 0; k < parts.size(); ++k)
        for (std::size_t row : global_parts[k])
          if (keep.contains(data.train.labels[row])) parts[k].push_back(row);
    } else {
      std::vector<ClassId> task_labels;
      task_labels.reserve(task_rows.size());
      for (std::size_t r : task_rows) task_labels.push_back(data.train.labels[r]);
      const auto local = dirichlet_partition(task_labels, cfg.clients, cfg.beta,
                                             derive_seed(cfg.seed, "partition", static_cast<std::uint64_t>(t)));
      for (std::size_t k = 0; k < parts.size(); ++k)
        for (std::size_t i : local[k]) parts[k].push_back(task_rows[i]);
    }

    std::vector<UploadPayload> payloads(parts.size());
    try {
      parallel_for_each(parts.size(), [&](std::size_t k) {
        try {
          const FeatureDataset subset = data.train.select_rows(parts[k]);
          ClientShard shard{static_cast<ClientId>(k), t, subset.features, subset.labels};
          ExtractOptions opts;
          opts.mode = cfg.mode;
          const int n = static_cast<int>(shard.size());
          opts.dummy_count = n == 0 ? 1 : std::min(cfg.dummy_clients, n);
          opts.seed = derive_seed(cfg.seed, "dummy", client_index(t, static_cast<int>(k)));
          opts.split = cfg.dummy_split;
          opts.elem_bytes = cfg.elem_bytes;
          UploadPayload payload = extract_payload(shard, map, classes, opts);
          payloads[k] = add_noise(std::move(payload), cfg.noise_q, cfg.noise_s,
                                  derive_seed(cfg.seed, "noise", client_index(t, static_cast<int>(k))));
        } catch (const Error& e) {
          rethrow_with_context(e, "client " + std::to_string(k));
        }
      });
      for (std::size_t k = 0; k < payloads.size(); ++k)
        report.comm.record(t, static_cast<std::uint32_t>(k), payloads[k].byte_size);

      SpatialAggregate agg = spatial_aggregate(payloads, classes);
      const Matrix stage_gram =
          cfg.mode == UploadMode::full ? *agg.gram : estimate_gram(agg.records, classes);
      state = temporal_aggregate(std::move(state), stage_gram, agg.corr, classes);
    } catch (const Error& e) {
      rethrow_with_context(e, stage_ctx);
    }

    GlobalModel model;
    try {
      model = update_classifier(state, cfg.gamma, map.descriptor());
    } catch (const Error& e) {
      rethrow_with_context(e, stage_ctx);
    }

    if (cfg.oracle_check) {
      const ClassifierWeights oracle = centralized_oracle(data.train, schedule, map, cfg.gamma, t);
      const auto joint_classes = schedule.classes_through(t);
      const FeatureDataset pooled = data.train.select_classes(joint_classes);
      // Pooled statistics through Eigen products rather than the fold kernels.
      const Matrix mapped = (pooled.features * map.matrix()).cwiseMax(0.0);
      const Matrix joint_gram = mapped.transpose() * mapped;
      const SpatialStatistics joint =
          local_statistics(FeatureMatrix{mapped}, pooled.labels, joint_classes, false);
      report.oracle.push_back(StageOracle{t, relative_error(model.weights.weights, oracle.weights),
                                          relative_error(state.gram, joint_gram),
                                          relative_error(state.corr, joint.corr)});
    }

    std::vector<double> acc(static_cast<std::size_t>(t));
    parallel_for_each(acc.size(), [&](std::size_t tau0) {
      const auto& rows = test_rows[tau0];
      Matrix feats(static_cast<Eigen::Index>(rows.size()), M);
      for (std::size_t i = 0; i < rows.size(); ++i)
        feats.row(static_cast<Eigen::Index>(i)) = test_mapped.values.row(static_cast<Eigen::Index>(rows[i]));
      const auto predicted = predict(model.weights, FeatureMatrix{std::move(feats)});
      std::size_t correct = 0;
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (predicted[i] == data.test.labels[rows[i]]) ++correct;
      acc[tau0] = static_cast<double>(correct) / static_cast<double>(rows.size());
    });
    for (int tau = 1; tau <= t; ++tau) report.accuracy.set(t, tau, acc[static_cast<std::size_t>(tau - 1)]);
    report.stage_weights.push_back(std::move(model.weights));
  }

  report.avg_incremental_literal = avg_incremental_accuracy(report.accuracy);
  report.avg_incremental_normalized = avg_incremental_accuracy_normalized(report.accuracy);
  report.final_average = final_average_accuracy(report.accuracy);
  if (schedule.size() >= 2) report.forgetting = average_forgetting(report.accuracy);
  return report;
}

std::string ExperimentReport::to_json() const {
  json doc;
  doc["schema"] = kReportSchema;
  json cfg_json = json::object();
  for (const auto& [k, v] : config_entries(config)) cfg_json[k] = v;
  doc["config"] = std::move(cfg_json);

  json rows = json::array();
  for (int t = 1; t <= accuracy.tasks(); ++t) {
    json row = json::array();
    for (int tau = 1; tau <= t; ++tau) row.push_back(accuracy.at(t, tau));
    rows.push_back(std::move(row));
  }
  doc["accuracy_matrix"] = std::move(rows);

  json metrics;
  metrics["A_avg_literal"] = avg_incremental_literal;
  metrics["A_avg_normalized"] = avg_incremental_normalized;
  metrics["A_T"] = final_average;
  metrics["F_T"] = forgetting ? json(*forgetting) : json(nullptr);
  doc["metrics"] = std::move(metrics);

  json oracle_json = json::array();
  for (const auto& o : oracle) {
    oracle_json.push_back({{"stage", o.stage},
                           {"weight_rel_error", o.weight_error},
                           {"gram_rel_error", o.gram_error},
                           {"corr_rel_error", o.corr_error}});
  }
  doc["oracle"] = std::move(oracle_json);

  json ledger;
  ledger["mode"] = to_string(config.mode);
  ledger["elem_bytes"] = config.elem_bytes;
  json entries = json::array();
  for (const auto& [key, bytes] : comm.entries()) {
    entries.push_back({{"stage", key.first}, {"client", key.second}, {"bytes", bytes}});
  }
  ledger["entries"] = std::move(entries);
  ledger["total_bytes"] = comm.total();
  const double clients = static_cast<double>(std::max(1, config.clients));
  ledger["mean_bytes_per_client"] = static_cast<double>(comm.total()) / clients;
  ledger["mean_mib_per_client"] = static_cast<double>(comm.total()) / clients / kBytesPerMiB;
  doc["comm"] = std::move(ledger);
  return doc.dump(2) + "\n";
}

EstimatorStudy run_estimator_study(const SynthSpec& spec, std::span<const int> clients,
                                   int trials, std::uint64_t seed) {
  spec.validate();
  if (trials < 1) throw ConfigError("estimator study needs at least one trial");
  for (int k : clients) {
    if (k < 2) throw ConfigError("estimator study needs K >= 2");
    if (static_cast<std::uint32_t>(k) > spec.train_per_class) {
      throw ConfigError("K=" + std::to_string(k) + " exceeds the samples per class");
    }
  }
  std::vector<ClassId> task_classes(spec.class_count);
  std::iota(task_classes.begin(), task_classes.end(), ClassId{0});

  EstimatorStudy study;
  study.trials = trials;
  std::vector<std::vector<double>> errors(clients.size(), std::vector<double>(static_cast<std::size_t>(trials)));

  parallel_for_each(static_cast<std::size_t>(trials), [&](std::size_t trial) {
    SynthSpec trial_spec = spec;
    trial_spec.test_per_class = 0;
    trial_spec.seed = derive_seed(seed, "study-trial", trial);
    const FeatureDataset data = generate_synthetic(trial_spec).train;
    const Matrix truth = kernels::gram_serial(data.features);

    for (std::size_t ki = 0; ki < clients.size(); ++ki) {
      const int k = clients[ki];
      // Even split of every class: shuffled, then dealt round-robin.
      ChaChaRng rng(derive_seed(seed, "study-split", trial), static_cast<std::uint64_t>(k));
      std::vector<std::vector<std::size_t>> shards(static_cast<std::size_t>(k));
      for (ClassId cls : task_classes) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < data.labels.size(); ++i)
          if (data.labels[i] == cls) rows.push_back(i);
        for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.below(i)]);
        for (std::size_t i = 0; i < rows.size(); ++i) shards[i % shards.size()].push_back(rows[i]);
      }
      std::vector<SpatialStatistics> records;
      records.reserve(shards.size());
      for (std::size_t s = 0; s < shards.size(); ++s) {
        const FeatureDataset part = data.select_rows(shards[s]);
        SpatialStatistics rec = local_statistics(FeatureMatrix{part.features}, part.labels,
                                                 task_classes, false);
        rec.client_id = static_cast<ClientId>(s);
        records.push_back(std::move(rec));
      }
      const Matrix estimate = estimate_gram(records, task_classes);
      errors[ki][trial] = (estimate - truth).squaredNorm();
    }
  });

  for (std::size_t ki = 0; ki < clients.size(); ++ki) {
    const auto& e = errors[ki];
    const double mean = std::accumulate(e.begin(), e.end(), 0.0) / trials;
    double var = 0.0;
    for (double v : e) var += (v - mean) * (v - mean);
    var = trials > 1 ? var / (trials - 1) : 0.0;
    const double k = clients[ki];
    study.rows.push_back(EstimatorStudyRow{clients[ki], mean, std::sqrt(var / trials),
                                           ((k + 1.0) / (k - 1.0)) * ((k + 1.0) / (k - 1.0))});
  }
  return study;
}

std::string EstimatorStudy::to_json() const {
  json doc;
  doc["schema"] = kStudySchema;
  doc["trials"] = trials;
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"K", r.clients},
                         {"mean_sq_error", r.mean_sq_error},
                         {"std_error", r.std_error},
                         {"reference", r.reference}});
  }
  doc["rows"] = std::move(rows_json);
  return doc.dump(2) + "\n";
}

}  // namespace stsa
