#include "stsa/config.hpp"

#include "stsa/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace stsa {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("invalid boolean '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<int> parse_int_list(std::string_view key, std::string_view value) {
  std::vector<int> out;
  while (!value.empty()) {
    const auto comma = value.find(',');
    out.push_back(parse_number<int>(key, trim(value.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("empty list for key '" + std::string(key) + "'");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    t["source"] = [](ExperimentConfig& c, auto k, auto v) {
      if (v == "synthetic") c.source = DataSource::synthetic;
      else if (v == "files") c.source = DataSource::files;
      else throw ConfigError("source must be 'synthetic' or 'files', got '" + std::string(v) + "'");
      (void)k;
    };
    t["train_path"] = [](ExperimentConfig& c, auto, auto v) { c.train_path = v; };
    t["test_path"] = [](ExperimentConfig& c, auto, auto v) { c.test_path = v; };
    t["synth_classes"] = [](ExperimentConfig& c, auto k, auto v) { c.synth_classes = parse_number<std::uint32_t>(k, v); };
    t["synth_dim"] = [](ExperimentConfig& c, auto k, auto v) { c.synth_dim = parse_number<int>(k, v); };
    t["synth_separation"] = [](ExperimentConfig& c, auto k, auto v) { c.synth_separation = parse_number<double>(k, v); };
    t["synth_noise_std"] = [](ExperimentConfig& c, auto k, auto v) { c.synth_noise_std = parse_number<double>(k, v); };
    t["synth_train_per_class"] = [](ExperimentConfig& c, auto k, auto v) { c.synth_train_per_class = parse_number<std::uint32_t>(k, v); };
    t["synth_test_per_class"] = [](ExperimentConfig& c, auto k, auto v) { c.synth_test_per_class = parse_number<std::uint32_t>(k, v); };
    t["tasks"] = [](ExperimentConfig& c, auto k, auto v) { c.tasks = parse_number<int>(k, v); };
    t["first_task_classes"] = [](ExperimentConfig& c, auto k, auto v) {
      if (v == "none") c.first_task_classes.reset();
      else c.first_task_classes = parse_number<std::uint32_t>(k, v);
    };
    t["class_order_seed"] = [](ExperimentConfig& c, auto k, auto v) {
      if (v == "none") c.class_order_seed.reset();
      else c.class_order_seed = parse_number<std::uint64_t>(k, v);
    };
    t["clients"] = [](ExperimentConfig& c, auto k, auto v) { c.clients = parse_number<int>(k, v); };
    t["beta"] = [](ExperimentConfig& c, auto k, auto v) { c.beta = parse_number<double>(k, v); };
    t["partition"] = [](ExperimentConfig& c, auto, auto v) {
      if (v == "per_task") c.partition = PartitionScope::per_task;
      else if (v == "global") c.partition = PartitionScope::global;
      else throw ConfigError("partition must be 'per_task' or 'global'");
    };
    t["seed"] = [](ExperimentConfig& c, auto k, auto v) { c.seed = parse_number<std::uint64_t>(k, v); };
    t["map_dim"] = [](ExperimentConfig& c, auto k, auto v) { c.map_dim = parse_number<int>(k, v); };
    t["map_enabled"] = [](ExperimentConfig& c, auto k, auto v) { c.map_enabled = parse_bool(k, v); };
    t["map_scaling"] = [](ExperimentConfig& c, auto, auto v) {
      if (v == "unit") c.map_scaling = MapScaling::unit;
      else if (v == "inv_sqrt_d") c.map_scaling = MapScaling::inv_sqrt_d;
      else throw ConfigError("map_scaling must be 'unit' or 'inv_sqrt_d'");
    };
    t["gamma"] = [](ExperimentConfig& c, auto k, auto v) { c.gamma = parse_number<double>(k, v); };
    t["mode"] = [](ExperimentConfig& c, auto, auto v) { c.mode = parse_mode(v); };
    t["dummy_clients"] = [](ExperimentConfig& c, auto k, auto v) { c.dummy_clients = parse_number<int>(k, v); };
    t["dummy_split"] = [](ExperimentConfig& c, auto, auto v) {
      if (v == "uniform") c.dummy_split = DummySplit::uniform;
      else if (v == "stratified") c.dummy_split = DummySplit::stratified;
      else throw ConfigError("dummy_split must be 'uniform' or 'stratified'");
    };
    t["noise_q"] = [](ExperimentConfig& c, auto k, auto v) { c.noise_q = parse_number<double>(k, v); };
    t["noise_s"] = [](ExperimentConfig& c, auto k, auto v) { c.noise_s = parse_number<double>(k, v); };
    t["elem_bytes"] = [](ExperimentConfig& c, auto k, auto v) { c.elem_bytes = parse_number<int>(k, v); };
    t["oracle_check"] = [](ExperimentConfig& c, auto k, auto v) { c.oracle_check = parse_bool(k, v); };
    t["study_clients"] = [](ExperimentConfig& c, auto k, auto v) { c.study_clients = parse_int_list(k, v); };
    t["study_trials"] = [](ExperimentConfig& c, auto k, auto v) { c.study_trials = parse_number<int>(k, v); };
    // Short names matching the usual notation.
    t["T"] = t["tasks"];
    t["K"] = t["clients"];
    t["M"] = t["map_dim"];
    t["K_D"] = t["dummy_clients"];
    return t;
  }();
  return table;
}

}  // namespace

const char* to_string(UploadMode mode) {
  return mode == UploadMode::full ? "full" : "efficient";
}

UploadMode parse_mode(std::string_view text) {
  if (text == "full") return UploadMode::full;
  if (text == "efficient") return UploadMode::efficient;
  throw ConfigError("mode must be 'full' or 'efficient', got '" + std::string(text) + "'");
}

void apply_preset(ExperimentConfig& cfg, std::string_view name) {
  if (name == "scratch") {
    cfg.map_dim = 5000;
    cfg.gamma = 1e4;
    cfg.dummy_clients = 50;
  } else if (name == "pretrained") {
    cfg.map_dim = 1250;
    cfg.gamma = 1e6;
    cfg.dummy_clients = 10;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  cfg.preset = name;
}

void ExperimentConfig::validate() const {
  if (tasks < 1) throw ConfigError("tasks must be >= 1");
  if (clients < 1) throw ConfigError("clients must be >= 1");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (map_dim < 1) throw ConfigError("map_dim must be >= 1");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
  if (dummy_clients < 1) throw ConfigError("dummy_clients must be >= 1");
  if (noise_q < 0.0 || noise_s < 0.0) throw ConfigError("noise parameters must be non-negative");
  if (elem_bytes < 1) throw ConfigError("elem_bytes must be >= 1");
  if (source == DataSource::files && (train_path.empty() || test_path.empty())) {
    throw ConfigError("source = files needs train_path and test_path");
  }
  if (source == DataSource::synthetic) {
    if (synth_classes < 1 || synth_dim < 1 || synth_train_per_class < 1) {
      throw ConfigError("synthetic source needs classes, dim and train samples >= 1");
    }
    if (!(synth_noise_std >= 0.0)) throw ConfigError("synth_noise_std must be non-negative");
    if (map_enabled && map_dim < synth_dim) {
      throw ConfigError("map_dim must be >= synth_dim when the random map is enabled");
    }
  }
  if (study_trials < 1) throw ConfigError("study_trials must be >= 1");
  for (int k : study_clients)
    if (k < 2) throw ConfigError("study_clients entries must be >= 2");
}

ExperimentConfig parse_config(std::string_view text) {
  std::vector<std::tuple<std::size_t, std::string, std::string>> entries;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    entries.emplace_back(line_no, std::string(trim(view.substr(0, eq))),
                         std::string(trim(view.substr(eq + 1))));
  }

  ExperimentConfig cfg;
  for (const auto& [no, key, value] : entries)
    if (key == "preset") apply_preset(cfg, value);

  const auto& table = setters();
  for (const auto& [no, key, value] : entries) {
    if (key == "preset") continue;
    const auto it = table.find(key);
    if (it == table.end()) {
      throw ConfigError("line " + std::to_string(no) + ": unknown key '" + key + "'");
    }
    try {
      it->second(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(no) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c) {
  auto opt = [](const auto& o) { return o ? std::to_string(*o) : std::string("none"); };
  std::string study;
  for (std::size_t i = 0; i < c.study_clients.size(); ++i)
    study += (i ? "," : "") + std::to_string(c.study_clients[i]);
  return {
      {"preset", c.preset},
      {"source", c.source == DataSource::synthetic ? "synthetic" : "files"},
      {"train_path", c.train_path},
      {"test_path", c.test_path},
      {"synth_classes", std::to_string(c.synth_classes)},
      {"synth_dim", std::to_string(c.synth_dim)},
      {"synth_separation", format_double(c.synth_separation)},
      {"synth_noise_std", format_double(c.synth_noise_std)},
      {"synth_train_per_class", std::to_string(c.synth_train_per_class)},
      {"synth_test_per_class", std::to_string(c.synth_test_per_class)},
      {"tasks", std::to_string(c.tasks)},
      {"first_task_classes", opt(c.first_task_classes)},
      {"class_order_seed", opt(c.class_order_seed)},
      {"clients", std::to_string(c.clients)},
      {"beta", format_double(c.beta)},
      {"partition", c.partition == PartitionScope::per_task ? "per_task" : "global"},
      {"seed", std::to_string(c.seed)},
      {"map_dim", std::to_string(c.map_dim)},
      {"map_enabled", c.map_enabled ? "true" : "false"},
      {"map_scaling", c.map_scaling == MapScaling::unit ? "unit" : "inv_sqrt_d"},
      {"gamma", format_double(c.gamma)},
      {"mode", to_string(c.mode)},
      {"dummy_clients", std::to_string(c.dummy_clients)},
      {"dummy_split", c.dummy_split == DummySplit::uniform ? "uniform" : "stratified"},
      {"noise_q", format_double(c.noise_q)},
      {"noise_s", format_double(c.noise_s)},
      {"elem_bytes", std::to_string(c.elem_bytes)},
      {"oracle_check", c.oracle_check ? "true" : "false"},
      {"study_clients", study},
      {"study_trials", std::to_string(c.study_trials)},
  };
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) {
    if (v.empty()) continue;
    out += k + " = " + v + "\n";
  }
  return out;
}

}  // namespace stsa
