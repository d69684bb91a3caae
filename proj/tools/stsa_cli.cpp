#include "stsa/error.hpp"
#include "stsa/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

void write_output(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw stsa::FormatError("cannot open " + path + " for writing");
  out << text;
}

// Weight agreement required of full-mode runs by `oracle`.
constexpr double kExactnessTolerance = 1e-8;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated class-incremental learning by spatial-temporal statistics aggregation"};
  app.require_subcommand(1);

  std::string config_path, out_path, mode, spec_path;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run an experiment and emit its report");
  run->add_option("--config", config_path, "Key-value config file")->required();
  run->add_option("--mode", mode, "Upload mode: full or efficient")
      ->check(CLI::IsMember({"full", "efficient"}));
  run->add_option("--seed", seed, "Master seed override");
  run->add_option("--out", out_path, "Report path (default: stdout)");

  auto* oracle = app.add_subcommand("oracle", "Compare every stage against the centralised oracle");
  oracle->add_option("--config", config_path, "Key-value config file")->required();

  auto* study = app.add_subcommand("estimator-study", "Monte-Carlo error of the Gram estimator versus K");
  study->add_option("--config", config_path, "Key-value config file")->required();

  auto* gen = app.add_subcommand("gen-features", "Write synthetic train/test feature files");
  gen->add_option("--spec", spec_path, "Key-value file with synth_* keys and seed")->required();
  gen->add_option("--out", out_path, "Output prefix; writes <prefix>.train.bin and <prefix>.test.bin")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = stsa::load_config(config_path);
      if (!mode.empty()) cfg.mode = stsa::parse_mode(mode);
      if (seed) cfg.seed = *seed;
      write_output(stsa::run_experiment(cfg).to_json(), out_path);
    } else if (*oracle) {
      auto cfg = stsa::load_config(config_path);
      cfg.oracle_check = true;
      const auto report = stsa::run_experiment(cfg);
      std::cout << report.to_json();
      if (cfg.mode == stsa::UploadMode::full) {
        for (const auto& o : report.oracle) {
          if (!(o.weight_error <= kExactnessTolerance)) {
            std::cerr << "stage " << o.stage << ": weight error " << o.weight_error
                      << " exceeds " << kExactnessTolerance << "\n";
            return 3;
          }
        }
      }
    } else if (*study) {
      const auto cfg = stsa::load_config(config_path);
      cfg.validate();
      const auto result = stsa::run_estimator_study(stsa::synth_spec_from_config(cfg),
                                                    cfg.study_clients, cfg.study_trials, cfg.seed);
      std::cout << result.to_json();
    } else if (*gen) {
      const auto cfg = stsa::load_config(spec_path);
      cfg.validate();
      const auto split = stsa::generate_synthetic(stsa::synth_spec_from_config(cfg));
      stsa::save_features(split.train, out_path + ".train.bin");
      stsa::save_features(split.test, out_path + ".test.bin");
      std::cerr << "wrote " << out_path << ".train.bin (" << split.train.size() << " rows), "
                << out_path << ".test.bin (" << split.test.size() << " rows)\n";
    }
  } catch (const stsa::Error& e) {
    std::cerr << stsa::to_string(e.kind()) << ": " << e.what() << "\n";
    return stsa::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
