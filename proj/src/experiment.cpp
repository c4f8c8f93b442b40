#include "freedeconv/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "freedeconv/rmt.hpp"

namespace fdc {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, field + ": " + what);
}

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ParseError, field + ": " + what);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Leading "field: " of a message produced by the JSON readers or validate().
std::string field_of(const std::string& detail) {
  const std::size_t p = detail.find(": ");
  if (p == std::string::npos) return {};
  const std::string f = detail.substr(0, p);
  if (f.find(' ') != std::string::npos) return {};
  return f;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (N < 64) invalid("N", "must be >= 64");
  if (bins < 1) invalid("bins", "must be >= 1");
  if (n < 0) invalid("n", "must be positive or auto");
  if (tolerance && !(*tolerance > 0.0)) invalid("tolerance", "must be > 0");
  if (output_dir.empty()) invalid("output_dir", "must not be empty");
  const Interval X = family.domain();
  for (std::size_t i = 0; i < true_parameters.size(); ++i) {
    const double x = true_parameters[i];
    if (!std::isfinite(x) || !X.contains(x)) {
      std::ostringstream os;
      os << x << " lies outside the family domain [" << X.lo << ", " << X.hi << "]";
      invalid("true_parameters[" + std::to_string(i) + "]", os.str());
    }
  }
  if (!spectrum_file && true_parameters.empty())
    invalid("true_parameters", "required unless spectrum_file is given");
  if (noiseless && true_parameters.empty()) invalid("noiseless", "requires true_parameters");
  if (noiseless && spectrum_file) invalid("noiseless", "cannot be combined with spectrum_file");
  try {
    solver.validate();
  } catch (const Error& e) {
    throw Error(e.code(), "solver: " + e.detail());
  }
  try {
    check_normalization(family, mode);
  } catch (const Error& e) {
    throw Error(e.code(), "family: " + e.detail());
  }
}

json to_json(const ExperimentConfig& c) {
  json j = {{"name", c.name},
            {"mode", mode_name(c.mode)},
            {"family", to_json(c.family)},
            {"true_parameters", c.true_parameters},
            {"N", c.N},
            {"seed", c.seed},
            {"noiseless", c.noiseless},
            {"n", c.n > 0 ? json(c.n) : json("auto")},
            {"tolerance", c.tolerance ? json(*c.tolerance) : json(nullptr)},
            {"bins", c.bins},
            {"output_dir", c.output_dir},
            {"solver", to_json(c.solver)}};
  if (c.spectrum_file) j["spectrum_file"] = *c.spectrum_file;
  return j;
}

ExperimentConfig config_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) bad_field("config", "expected an object");
  static const char* const keys[] = {"name", "mode",      "family",    "true_parameters", "spectrum_file",
                                     "N",    "seed",      "noiseless", "n",               "tolerance",
                                     "bins", "output_dir", "solver"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(std::begin(keys), std::end(keys), it.key()) == std::end(keys)) bad_field(it.key(), "unknown field");

  ExperimentConfig c;
  if (j.contains("name")) {
    if (!j["name"].is_string()) bad_field("name", "expected a string");
    c.name = j["name"].get<std::string>();
  }
  if (!j.contains("family")) bad_field("family", "missing");
  c.family = family_from_json(j["family"], "family");
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) bad_field("mode", "expected a string");
    try {
      c.mode = mode_from_name(j["mode"].get<std::string>());
    } catch (const Error& e) {
      bad_field("mode", e.detail());
    }
  } else if (c.family.builtin_id() > 0) {
    c.mode = builtin_mode(c.family.builtin_id());
  } else {
    bad_field("mode", "missing (required for a custom family)");
  }
  if (j.contains("true_parameters")) {
    const json& t = j["true_parameters"];
    if (!t.is_array()) bad_field("true_parameters", "expected an array");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!t[i].is_number()) bad_field("true_parameters[" + std::to_string(i) + "]", "expected a number");
      c.true_parameters.push_back(t[i].get<double>());
    }
  }
  if (j.contains("spectrum_file")) {
    if (!j["spectrum_file"].is_string()) bad_field("spectrum_file", "expected a string");
    fs::path p = j["spectrum_file"].get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
    c.spectrum_file = p.lexically_normal().string();
  }
  if (j.contains("N")) {
    if (!j["N"].is_number_integer()) bad_field("N", "expected an integer");
    c.N = j["N"].get<int>();
  } else if (c.mode == Mode::classical) {
    c.N = 102400;
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) bad_field("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("noiseless")) {
    if (!j["noiseless"].is_boolean()) bad_field("noiseless", "expected true or false");
    c.noiseless = j["noiseless"].get<bool>();
  }
  if (j.contains("n")) {
    const json& n = j["n"];
    if (n.is_string() && n.get<std::string>() == "auto") {
      c.n = 0;
    } else {
      if (!n.is_number_integer() || n.get<int>() < 1) bad_field("n", "expected a positive integer or \"auto\"");
      c.n = n.get<int>();
    }
  } else if (!c.true_parameters.empty()) {
    c.n = static_cast<int>(c.true_parameters.size());
  } else {
    bad_field("n", "missing (required without true_parameters)");
  }
  if (j.contains("tolerance") && !j["tolerance"].is_null()) {
    if (!j["tolerance"].is_number()) bad_field("tolerance", "expected a number");
    c.tolerance = j["tolerance"].get<double>();
  }
  if (j.contains("bins")) {
    if (!j["bins"].is_number_integer()) bad_field("bins", "expected an integer");
    c.bins = j["bins"].get<int>();
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) bad_field("output_dir", "expected a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("solver")) c.solver = solver_from_json(j["solver"], "solver");
  c.validate();
  return c;
}

ExperimentConfig config_from_text(const std::string& text, const std::string& source, const std::string& base_dir) {
  const json j = parse_json(text, source);
  try {
    return config_from_json(j, base_dir);
  } catch (const Error& e) {
    const std::string field = field_of(e.detail());
    const int line = field.empty() ? 0 : line_of_path(text, field);
    throw Error(e.code(), source + ":" + (line > 0 ? std::to_string(line) + ":" : std::string()) + " " + e.detail());
  }
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_text(read_file(path), path, fs::path(path).parent_path().string());
}

ExperimentConfig example_config(int id, bool full) {
  if (id < 1 || id > 6) throw Error(ErrorCode::InvalidArgument, "example id must be in 1..6");
  ExperimentConfig c;
  c.name = "example" + std::to_string(id);
  c.family = ParametricFamily::builtin(id);
  c.mode = builtin_mode(id);
  switch (id) {
    case 1:
    case 2: c.true_parameters = {0.2, 0.6, 1.0}; break;
    case 3: c.true_parameters = {0.5, 0.9}; break;
    case 4: c.true_parameters = {0.4, 0.7, 1.0}; break;
    case 5: c.true_parameters = {1.7, 2.5}; break;
    case 6: c.true_parameters = {1.4, 2.2, 3.0}; break;
  }
  c.n = static_cast<int>(c.true_parameters.size());
  if (c.mode == Mode::classical) {
    c.N = 102400;
    c.tolerance = 0.02;
  } else {
    c.N = full ? 8192 : 2048;
    if (c.mode == Mode::additive)
      c.tolerance = full ? 0.03 : 0.05;
    else
      c.tolerance = 0.08;
  }
  c.output_dir = "out/" + c.name;
  return c;
}

EmpiricalSpectrum simulate_spectrum(const ExperimentConfig& c) {
  std::vector<AtomicMeasure> measures;
  for (double x : c.true_parameters) measures.push_back(c.family(x));
  if (c.mode == Mode::classical) return sample_classical(measures, c.N, c.seed);
  EnsembleSpec spec;
  spec.kind = c.mode == Mode::additive ? EnsembleKind::additive : EnsembleKind::multiplicative;
  spec.measures = std::move(measures);
  spec.N = c.N;
  spec.seed = c.seed;
  return sample(spec);
}

double median(std::vector<double> v) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
  c.validate();
  ExperimentResult r;
  r.config = c;
  std::variant<EmpiricalSpectrum, CVec> observed = CVec();
  if (c.noiseless) {
    const Contour contour = default_contour(c.mode, c.family, c.solver);
    observed = forward_oracle(c.mode, c.family, c.true_parameters, contour, c.solver.newton);
  } else {
    if (c.spectrum_file)
      r.spectrum = spectrum_from_json(parse_json(read_file(*c.spectrum_file), *c.spectrum_file));
    else
      r.spectrum = simulate_spectrum(c);
    observed = *r.spectrum;
  }
  r.report = deconvolve(DeconvProblem{c.mode, c.family, std::move(observed), c.n, c.solver});

  r.truth = c.true_parameters;
  std::sort(r.truth.begin(), r.truth.end());
  const std::vector<double>& rec = r.report.solution.locations;
  const std::size_t m = std::min(r.truth.size(), rec.size());
  for (std::size_t i = 0; i < m; ++i) r.abs_errors.push_back(std::abs(rec[i] - r.truth[i]));
  if (!r.abs_errors.empty()) {
    r.max_error = *std::max_element(r.abs_errors.begin(), r.abs_errors.end());
    r.median_error = median(r.abs_errors);
  }
  if (c.tolerance && !r.truth.empty())
    r.passed = rec.size() == r.truth.size() && r.max_error <= *c.tolerance;
  return r;
}

json report_json(const ExperimentResult& r) {
  json j = {{"config", to_json(r.config)},
            {"result", to_json(r.report)},
            {"truth", r.truth},
            {"abs_errors", r.abs_errors},
            {"max_error", r.abs_errors.empty() ? json(nullptr) : json(r.max_error)},
            {"median_error", r.abs_errors.empty() ? json(nullptr) : json(r.median_error)},
            {"passed", r.passed ? json(*r.passed) : json(nullptr)}};
  if (r.spectrum) {
    const auto& v = r.spectrum->values();
    double mean = 0.0;
    for (double x : v) mean += x;
    j["spectrum"] = {{"dimension", v.size()}, {"min", v.front()}, {"max", v.back()}, {"mean", mean / v.size()}};
  }
  return j;
}

std::string recovered_csv(const ExperimentResult& r) {
  const auto& sol = r.report.solution;
  std::string out = "true_x,recovered_x,abs_error,weight\r\n";
  const std::size_t rows = std::max(r.truth.size(), sol.locations.size());
  for (std::size_t i = 0; i < rows; ++i) {
    out += i < r.truth.size() ? fmt(r.truth[i]) : "";
    out += ",";
    out += i < sol.locations.size() ? fmt(sol.locations[i]) : "";
    out += ",";
    out += i < r.abs_errors.size() ? fmt(r.abs_errors[i]) : "";
    out += ",";
    out += i < sol.weights.size() ? fmt(sol.weights[i]) : "";
    out += "\r\n";
  }
  return out;
}

std::string result_histogram_csv(const ExperimentResult& r) {
  if (!r.spectrum) return histogram_csv({});
  return histogram_csv(histogram(*r.spectrum, r.config.bins));
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename to '" + path + "': " + ec.message());
}

void write_outputs(const ExperimentResult& r, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir + "': " + ec.message());
  const fs::path d(dir);
  write_file_atomic((d / "report.json").string(), report_json(r).dump(2) + "\n");
  write_file_atomic((d / "histogram.csv").string(), result_histogram_csv(r));
  write_file_atomic((d / "recovered.csv").string(), recovered_csv(r));
}

}  // namespace fdc
