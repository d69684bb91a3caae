#include "stsa/data.hpp"

#include "stsa/error.hpp"
#include "stsa/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <unordered_set>

namespace stsa {

std::vector<ClassId> TaskSchedule::classes_through(int t) const {
  std::vector<ClassId> out;
  for (int i = 1; i <= t; ++i) {
    const auto& c = classes(i);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

TaskSchedule split_tasks(std::uint32_t class_count, int tasks,
                         std::optional<std::uint32_t> first_task_classes,
                         std::optional<std::uint64_t> shuffle_seed) {
  if (tasks < 1) throw ConfigError("task count must be >= 1");
  if (class_count < 1) throw ConfigError("class count must be >= 1");

  std::vector<std::uint32_t> sizes;
  if (first_task_classes) {
    const std::uint32_t first = *first_task_classes;
    if (first < 1 || first > class_count) {
      throw ConfigError("first task size " + std::to_string(first) + " is out of range");
    }
    const std::uint32_t rest = class_count - first;
    if (tasks == 1) {
      if (rest != 0) throw ConfigError("a single task must hold every class");
    } else if (rest == 0 || rest % static_cast<std::uint32_t>(tasks - 1) != 0) {
      throw ConfigError(std::to_string(rest) + " remaining classes do not split evenly into " +
                        std::to_string(tasks - 1) + " tasks");
    }
    sizes.push_back(first);
    for (int t = 1; t < tasks; ++t) sizes.push_back(rest / static_cast<std::uint32_t>(tasks - 1));
  } else {
    if (class_count % static_cast<std::uint32_t>(tasks) != 0) {
      throw ConfigError(std::to_string(class_count) + " classes do not split evenly into " +
                        std::to_string(tasks) + " tasks");
    }
    sizes.assign(static_cast<std::size_t>(tasks), class_count / static_cast<std::uint32_t>(tasks));
  }

  std::vector<ClassId> order(class_count);
  std::iota(order.begin(), order.end(), ClassId{0});
  if (shuffle_seed) {
    ChaChaRng rng(*shuffle_seed, /*stream=*/0x5441534b53ULL);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }

  TaskSchedule schedule;
  schedule.class_count = class_count;
  std::size_t pos = 0;
  for (std::uint32_t size : sizes) {
    schedule.tasks.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return schedule;
}

std::vector<std::vector<std::size_t>> dirichlet_partition(std::span<const ClassId> labels,
                                                          int clients, double beta,
                                                          std::uint64_t seed) {
  if (clients < 1) throw ConfigError("client count must be >= 1");
  if (!(beta > 0.0)) throw ConfigError("Dirichlet concentration must be positive");
  std::vector<std::vector<std::size_t>> parts(static_cast<std::size_t>(clients));
  if (clients == 1) {
    parts[0].resize(labels.size());
    std::iota(parts[0].begin(), parts[0].end(), std::size_t{0});
    return parts;
  }

  std::vector<ClassId> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  for (ClassId cls : classes) {
    // One independent stream per class keeps the draw for a class stable no
    // matter which other classes are present.
    ChaChaRng rng(derive_seed(seed, "dirichlet", cls), /*stream=*/0x444952ULL);
    std::vector<double> cdf(static_cast<std::size_t>(clients));
    double total = 0.0;
    for (auto& g : cdf) {
      g = rng.gamma(beta);
      total += g;
    }
    double running = 0.0;
    for (auto& g : cdf) {
      running += g / total;
      g = running;
    }
    cdf.back() = 1.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != cls) continue;
      const double u = rng.uniform();
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      const auto client = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                                                cdf.size() - 1);
      parts[client].push_back(i);
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

FeatureDataset FeatureDataset::select_rows(std::span<const std::size_t> rows) const {
  FeatureDataset out;
  out.class_count = class_count;
  out.role = role;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

FeatureDataset FeatureDataset::select_classes(std::span<const ClassId> classes) const {
  const std::unordered_set<ClassId> keep(classes.begin(), classes.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (keep.contains(labels[i])) rows.push_back(i);
  return select_rows(rows);
}

void SynthSpec::validate() const {
  if (class_count < 1 || dim < 1) throw ConfigError("synthetic spec needs classes >= 1 and dim >= 1");
  if (means.size() != class_count || variances.size() != class_count) {
    throw ConfigError("synthetic spec needs one mean and one variance vector per class");
  }
  for (std::uint32_t i = 0; i < class_count; ++i) {
    if (means[i].size() != dim || variances[i].size() != dim) {
      throw ConfigError("synthetic class " + std::to_string(i) + " has wrong dimension");
    }
    if ((variances[i].array() < 0.0).any()) {
      throw ConfigError("synthetic class " + std::to_string(i) + " has a negative variance");
    }
  }
}

SynthSpec make_cluster_spec(std::uint32_t class_count, int dim, double separation,
                            double noise_std, std::uint32_t train_per_class,
                            std::uint32_t test_per_class, std::uint64_t seed) {
  SynthSpec spec;
  spec.class_count = class_count;
  spec.dim = dim;
  spec.train_per_class = train_per_class;
  spec.test_per_class = test_per_class;
  spec.seed = seed;
  ChaChaRng rng(seed, /*stream=*/0x4d45414e53ULL);
  for (std::uint32_t i = 0; i < class_count; ++i) {
    Vector mu(dim);
    for (int j = 0; j < dim; ++j) mu[j] = separation * rng.normal();
    spec.means.push_back(std::move(mu));
    spec.variances.push_back(Vector::Constant(dim, noise_std * noise_std));
  }
  return spec;
}

namespace {

FeatureDataset sample_split(const SynthSpec& spec, std::uint32_t per_class, DataRole role,
                            std::uint64_t stream) {
  ChaChaRng rng(spec.seed, stream);
  FeatureDataset ds;
  ds.class_count = spec.class_count;
  ds.role = role;
  const auto n = static_cast<Eigen::Index>(per_class) * spec.class_count;
  ds.features.resize(n, spec.dim);
  ds.labels.reserve(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (std::uint32_t cls = 0; cls < spec.class_count; ++cls) {
    const Vector sd = spec.variances[cls].cwiseSqrt();
    for (std::uint32_t s = 0; s < per_class; ++s, ++row) {
      for (int j = 0; j < spec.dim; ++j) ds.features(row, j) = spec.means[cls][j] + sd[j] * rng.normal();
      ds.labels.push_back(cls);
    }
  }
  return ds;
}

constexpr char kMagic[8] = {'S', 'T', 'S', 'A', 'F', 'E', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 36;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::make_unsigned_t<T>;
  const U bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(T{bytes[offset + i]} << (8 * i));
  return value;
}

}  // namespace

SyntheticSplit generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  return {sample_split(spec, spec.train_per_class, DataRole::train, 0x545241494eULL),
          sample_split(spec, spec.test_per_class, DataRole::test, 0x54455354ULL)};
}

std::vector<std::uint8_t> encode_features(const FeatureDataset& ds) {
  const auto n = static_cast<std::uint64_t>(ds.labels.size());
  const auto d = static_cast<std::uint32_t>(ds.features.cols());
  if (static_cast<std::uint64_t>(ds.features.rows()) != n) {
    throw DimensionError("feature rows do not match label count");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + n * d * 4 + n * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le(out, kVersion);
  put_le(out, n);
  put_le(out, d);
  put_le(out, ds.class_count);
  out.push_back(static_cast<std::uint8_t>(ds.role));
  out.insert(out.end(), 7, std::uint8_t{0});
  for (std::uint64_t r = 0; r < n; ++r)
    for (std::uint32_t c = 0; c < d; ++c)
      put_le(out, std::bit_cast<std::uint32_t>(
                      static_cast<float>(ds.features(static_cast<Eigen::Index>(r), c))));
  for (ClassId label : ds.labels) put_le(out, static_cast<std::uint32_t>(label));
  return out;
}

FeatureDataset decode_features(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw FormatError("feature file truncated in header at byte offset " +
                      std::to_string(bytes.size()) + ": expected " +
                      std::to_string(kHeaderBytes) + " header bytes");
  }
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin(),
                  [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
    throw FormatError("bad magic at byte offset 0: expected \"STSAFEAT\"");
  }
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kVersion) {
    throw FormatError("unsupported version " + std::to_string(version) + " at byte offset 8");
  }
  const auto n = get_le<std::uint64_t>(bytes, 12);
  const auto d = get_le<std::uint32_t>(bytes, 20);
  const auto class_count = get_le<std::uint32_t>(bytes, 24);
  const auto role = bytes[28];
  if (role > 1) throw FormatError("invalid role byte " + std::to_string(role) + " at byte offset 28");

  // Guard the size arithmetic against absurd headers before multiplying.
  const std::uint64_t limit = std::uint64_t{1} << 40;
  if (n > limit || d > (std::uint64_t{1} << 24) || n * (std::uint64_t{d} + 1) > limit) {
    throw FormatError("header at byte offset 12 declares an implausible size");
  }
  const std::uint64_t expected = kHeaderBytes + n * d * 4 + n * 4;
  if (bytes.size() != expected) {
    throw FormatError("feature file length mismatch at byte offset " +
                      std::to_string(std::min<std::uint64_t>(bytes.size(), expected)) +
                      ": expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()));
  }

  FeatureDataset ds;
  ds.class_count = class_count;
  ds.role = static_cast<DataRole>(role);
  ds.features.resize(static_cast<Eigen::Index>(n), d);
  std::size_t offset = kHeaderBytes;
  for (std::uint64_t r = 0; r < n; ++r) {
    for (std::uint32_t c = 0; c < d; ++c, offset += 4) {
      ds.features(static_cast<Eigen::Index>(r), c) =
          static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset)));
    }
  }
  ds.labels.reserve(n);
  for (std::uint64_t r = 0; r < n; ++r, offset += 4) {
    const auto label = get_le<std::uint32_t>(bytes, offset);
    if (label >= class_count) {
      throw FormatError("label " + std::to_string(label) + " at byte offset " +
                        std::to_string(offset) + " is not below class_count " +
                        std::to_string(class_count));
    }
    ds.labels.push_back(label);
  }
  if (ds.role == DataRole::train && n == 0) {
    throw FormatError("train feature file declares zero samples at byte offset 12");
  }
  return ds;
}

void save_features(const FeatureDataset& ds, const std::filesystem::path& path) {
  const auto bytes = encode_features(ds);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

FeatureDataset load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  try {
    return decode_features(bytes);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

}  // namespace stsa
