#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "freedeconv/json_io.hpp"
#include "freedeconv/pipeline.hpp"

namespace fdc {

// One simulated (or loaded) deconvolution experiment. The spectrum is sampled
// from the family at true_parameters unless spectrum_file is given; with
// noiseless set the observation is the large-N limit instead.
struct ExperimentConfig {
  std::string name = "custom";
  Mode mode = Mode::additive;
  ParametricFamily family = ParametricFamily::builtin(3);
  std::vector<double> true_parameters;
  std::optional<std::string> spectrum_file;
  int N = 2048;
  std::uint64_t seed = 0;
  bool noiseless = false;
  int n = 0;  // 0 selects the spike count automatically
  std::optional<double> tolerance;
  int bins = 100;
  std::string output_dir = "out";
  SolverConfig solver;

  // Throws InvalidArgument (or the library's own code) with the offending
  // field path leading the message.
  void validate() const;
};

json to_json(const ExperimentConfig& c);
// `base_dir` resolves a relative spectrum_file.
ExperimentConfig config_from_json(const json& j, const std::string& base_dir = "");
// Reads, parses and validates; errors carry "path:line: field: ...".
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_text(const std::string& text, const std::string& source, const std::string& base_dir = "");

// Built-in setups for the six reference examples; `full` uses N = 8192 for
// the matrix examples and the tighter additive tolerance.
ExperimentConfig example_config(int id, bool full = false);

struct ExperimentResult {
  ExperimentConfig config;
  std::optional<EmpiricalSpectrum> spectrum;
  DeconvReport report;
  // Sorted truth paired with sorted recovered locations.
  std::vector<double> truth;
  std::vector<double> abs_errors;
  double max_error = 0.0;
  double median_error = 0.0;
  std::optional<bool> passed;  // set when a tolerance and truth are known
};

EmpiricalSpectrum simulate_spectrum(const ExperimentConfig& c);
ExperimentResult run_experiment(const ExperimentConfig& c);

json report_json(const ExperimentResult& r);
std::string recovered_csv(const ExperimentResult& r);
std::string result_histogram_csv(const ExperimentResult& r);

// Writes report.json, histogram.csv and recovered.csv into dir, each through
// a temporary file and rename.
void write_outputs(const ExperimentResult& r, const std::string& dir);
void write_file_atomic(const std::string& path, const std::string& content);

double median(std::vector<double> v);

}  // namespace fdc
