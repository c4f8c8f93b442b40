// Command-line front end. Talks to the library only through the C interface.

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "freedeconv/freedeconv.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitTolerance = 1;
constexpr int kExitError = 2;

struct ExperimentDeleter {
  void operator()(fd_experiment* e) const { fd_experiment_free(e); }
};
struct ResultDeleter {
  void operator()(fd_result* r) const { fd_result_free(r); }
};
using ExperimentPtr = std::unique_ptr<fd_experiment, ExperimentDeleter>;
using ResultPtr = std::unique_ptr<fd_result, ResultDeleter>;

struct Failure {
  std::string message;
};

void check(fd_status s) {
  if (s != FD_OK) throw Failure{fd_last_error()};
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  fd_string_free(s);
  return out;
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int jobs = 1;
  bool full = false;
};

void apply_globals(fd_experiment* e, const Globals& g) {
  if (g.seed) check(fd_experiment_set_seed(e, *g.seed));
  if (g.out) check(fd_experiment_set_output_dir(e, g.out->c_str()));
}

std::string output_dir(const fd_experiment* e) {
  char* s = nullptr;
  check(fd_experiment_output_dir(e, &s));
  return take_string(s);
}

void print_summary(const fd_result* r, const std::string& dir) {
  const size_t n = fd_result_count(r);
  size_t ne = 0;
  check(fd_result_errors(r, nullptr, 0, &ne));
  std::vector<double> err(ne);
  check(fd_result_errors(r, err.data(), err.size(), &ne));
  std::printf("%-4s %-14s %-12s %-12s\n", "k", "recovered_x", "weight", "abs_error");
  for (size_t i = 0; i < n; ++i) {
    double x = 0.0, w = 0.0;
    check(fd_result_spike(r, i, &x, &w));
    if (i < err.size())
      std::printf("%-4zu %-14.8f %-12.6f %-12.3e\n", i + 1, x, w, err[i]);
    else
      std::printf("%-4zu %-14.8f %-12.6f %-12s\n", i + 1, x, w, "-");
  }
  std::printf("solve time %.3f s, outputs in %s\n", fd_result_seconds(r), dir.c_str());
}

// Runs one experiment, writes its outputs and returns the pass flag.
int run_and_write(const fd_experiment* e) {
  fd_result* raw = nullptr;
  check(fd_run(e, &raw));
  ResultPtr r(raw);
  const std::string dir = output_dir(e);
  check(fd_result_write(r.get(), dir.c_str()));
  print_summary(r.get(), dir);
  return fd_result_passed(r.get());
}

int cmd_reproduce(int id, const Globals& g) {
  fd_experiment* raw = nullptr;
  check(fd_experiment_example(id, g.full ? 1 : 0, &raw));
  ExperimentPtr e(raw);
  apply_globals(e.get(), g);
  const int passed = run_and_write(e.get());
  std::printf("example %d: %s\n", id, passed == 1 ? "PASS" : "FAIL");
  return passed == 1 ? kExitPass : kExitTolerance;
}

ExperimentPtr load(const std::string& path) {
  fd_experiment* raw = nullptr;
  check(fd_experiment_load(path.c_str(), &raw));
  return ExperimentPtr(raw);
}

int cmd_run(const std::string& config, const Globals& g) {
  ExperimentPtr e = load(config);
  apply_globals(e.get(), g);
  const int passed = run_and_write(e.get());
  if (passed >= 0) std::printf("tolerance check: %s\n", passed == 1 ? "pass" : "fail");
  return kExitPass;
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out.flush()) throw Failure{"cannot write " + tmp.string()};
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Failure{"cannot rename " + tmp.string() + ": " + ec.message()};
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// FNV-1a over the configuration with the swept field blanked, so rows that
// differ only in the swept value share a digest.
std::string config_digest(const fd_experiment* e, const std::string& vary) {
  char* s = nullptr;
  check(fd_experiment_to_json(e, &s));
  nlohmann::json j = nlohmann::json::parse(take_string(s));
  j[vary] = nullptr;
  j.erase("output_dir");
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct SweepRow {
  bool done = false;
  std::string line;
  std::optional<std::string> error;
};

int cmd_sweep(const std::string& config, const std::string& vary, const std::vector<std::string>& values,
              const Globals& g) {
  ExperimentPtr base = load(config);
  apply_globals(base.get(), g);
  const std::string dir = output_dir(base.get());
  fs::create_directories(dir);
  const fs::path csv_path = fs::path(dir) / "sweep.csv";
  const std::string digest = config_digest(base.get(), vary);

  const size_t m = fd_experiment_truth_count(base.get());
  std::string csv = "value";
  for (size_t k = 1; k <= m; ++k) csv += ",err_" + std::to_string(k);
  csv += ",median_error,config_digest\r\n";
  write_atomic(csv_path, csv);

  // Each row gets its own configuration; invalid values fail before any run.
  std::vector<ExperimentPtr> runs;
  for (const std::string& v : values) {
    fd_experiment* raw = nullptr;
    check(fd_experiment_clone(base.get(), &raw));
    ExperimentPtr e(raw);
    std::size_t used = 0;
    try {
      if (vary == "N") {
        const int N = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        check(fd_experiment_set_dimension(e.get(), N));
      } else {
        const unsigned long long s = std::stoull(v, &used);
        if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
        check(fd_experiment_set_seed(e.get(), s));
      }
    } catch (const std::logic_error&) {
      throw Failure{"--values: '" + v + "' is not a valid " + vary};
    }
    runs.push_back(std::move(e));
  }

  std::vector<SweepRow> rows(values.size());
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<size_t> next{0};
  std::atomic<bool> stop{false};

  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= runs.size() || stop) return;
      SweepRow row;
      fd_result* raw = nullptr;
      if (fd_run(runs[i].get(), &raw) != FD_OK) {
        row.error = fd_last_error();
      } else {
        ResultPtr r(raw);
        std::vector<double> err(m, NAN);
        size_t ne = 0;
        fd_result_errors(r.get(), err.data(), err.size(), &ne);
        row.line = values[i];
        for (size_t k = 0; k < m; ++k) row.line += "," + fmt(err[k]);
        row.line += "," + fmt(fd_result_median_error(r.get())) + "," + digest + "\r\n";
        std::fprintf(stderr, "%s=%s median error %.3e (%.2f s)\n", vary.c_str(), values[i].c_str(),
                     fd_result_median_error(r.get()), fd_result_seconds(r.get()));
      }
      row.done = true;
      {
        std::lock_guard<std::mutex> lock(mu);
        rows[i] = std::move(row);
      }
      cv.notify_all();
    }
  };

  const int jobs = std::max(1, std::min<int>(g.jobs, static_cast<int>(runs.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);

  std::optional<std::string> failure;
  for (size_t i = 0; i < rows.size(); ++i) {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait(lock, [&] { return rows[i].done; });
    if (rows[i].error) {
      failure = vary + "=" + values[i] + ": " + *rows[i].error;
      stop = true;
      break;
    }
    csv += rows[i].line;
    lock.unlock();
    write_atomic(csv_path, csv);
  }
  for (auto& t : pool) t.join();
  std::printf("sweep written to %s\n", csv_path.string().c_str());
  if (failure) throw Failure{*failure};
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind spectral deconvolution with the eigenmatrix method"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed for the simulated spectrum");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--jobs", g.jobs, "Parallel runs for sweep")->check(CLI::PositiveNumber);
  app.add_flag("--full", g.full, "Use N = 8192 for the matrix examples");

  int example = 0;
  auto* reproduce = app.add_subcommand("reproduce", "Run one of the six reference examples");
  reproduce->add_option("id", example, "Example number")->required()->check(CLI::Range(1, 6));

  std::string config;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("-c,--config", config, "Config file")->required();

  std::string sweep_config;
  std::string vary;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Repeat an experiment over N or seed");
  sweep->add_option("-c,--config", sweep_config, "Config file")->required();
  sweep->add_option("--vary", vary, "Field to vary")->required()->check(CLI::IsMember({"N", "seed"}));
  sweep->add_option("--values", values, "Values, space or comma separated")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (*reproduce) return cmd_reproduce(example, g);
    if (*run) return cmd_run(config, g);
    if (*sweep) return cmd_sweep(sweep_config, vary, values, g);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
