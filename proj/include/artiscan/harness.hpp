#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "artiscan/controller.hpp"
#include "artiscan/model.hpp"

namespace artiscan {

/// Template names accepted by the generator.
const std::vector<std::string>& template_names();

/// One randomized object of the given template. Throws UnknownTemplate.
ArticulatedObject make_template(const std::string& name, std::uint64_t seed);

struct DatasetSpec {
  std::vector<std::string> templates;  // empty: all templates
  int count = 1;                       // objects per template
};

struct DatasetEntry {
  std::string file;
  std::string category;
};

/// Writes <template>_<k>.json objects and a dataset.json index.
std::vector<DatasetEntry> gen_dataset(const DatasetSpec& spec, std::uint64_t seed,
                                      const std::filesystem::path& dir);

std::vector<DatasetEntry> read_dataset_index(const std::filesystem::path& dir);

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::filesystem::path output;
  std::uint64_t seed = 0;
  ControllerConfig controller;
  int threads = 0;  // 0: hardware concurrency
};

/// Applies the seed to every seeded component of the controller config.
ControllerConfig seeded(const ControllerConfig& cfg, std::uint64_t seed);

std::string config_to_json(const ExperimentConfig& cfg);
/// Reads a JSON config; absent fields keep their defaults.
ExperimentConfig config_from_json(const std::string& text);
void validate(const ExperimentConfig& cfg);

struct BatchReport {
  std::vector<std::string> objects;
  std::vector<EpisodeMetrics> metrics;
  std::vector<bool> incomplete;
  std::string csv;
};

/// Runs one episode per dataset object and writes per-object outputs,
/// metrics.csv and manifest.json under cfg.output.
BatchReport run_batch(const ExperimentConfig& cfg);

/// Default output directory: $ARTISCAN_OUT or ./artiscan_out.
std::filesystem::path default_output_dir();

}  // namespace artiscan
