#include "freedeconv/freedeconv.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "freedeconv/experiment.hpp"

struct fd_experiment {
  fdc::ExperimentConfig config;
};

struct fd_result {
  fdc::ExperimentResult result;
};

struct fd_measure {
  fdc::AtomicMeasure measure;
};

namespace {

thread_local std::string last_error;

fd_status set_error(fd_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
fd_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return FD_OK;
  } catch (const fdc::Error& e) {
    return set_error(static_cast<fd_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(FD_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return set_error(FD_INTERNAL_ERROR, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

void need(const void* p, const char* name) {
  if (!p) throw fdc::Error(fdc::ErrorCode::InvalidArgument, std::string(name) + " is null");
}

}  // namespace

extern "C" {

const char* fd_version(void) { return "1.0.0"; }

const char* fd_status_name(fd_status status) {
  if (status == FD_OK) return "Ok";
  if (status == FD_INTERNAL_ERROR) return "InternalError";
  if (status < FD_INVALID_ARGUMENT || status > FD_IO_ERROR) return "Unknown";
  return fdc::error_name(static_cast<fdc::ErrorCode>(status));
}

const char* fd_last_error(void) { return last_error.c_str(); }

void fd_string_free(char* s) { std::free(s); }

fd_status fd_experiment_load(const char* path, fd_experiment** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new fd_experiment{fdc::load_config(path)};
  });
}

fd_status fd_experiment_from_json(const char* json_text, fd_experiment** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = new fd_experiment{fdc::config_from_text(json_text, "<config>")};
  });
}

fd_status fd_experiment_example(int id, int full, fd_experiment** out) {
  return guarded([&] {
    need(out, "out");
    *out = new fd_experiment{fdc::example_config(id, full != 0)};
  });
}

fd_status fd_experiment_clone(const fd_experiment* e, fd_experiment** out) {
  return guarded([&] {
    need(e, "experiment");
    need(out, "out");
    *out = new fd_experiment{e->config};
  });
}

void fd_experiment_free(fd_experiment* e) { delete e; }

fd_status fd_experiment_set_seed(fd_experiment* e, uint64_t seed) {
  return guarded([&] {
    need(e, "experiment");
    e->config.seed = seed;
  });
}

fd_status fd_experiment_set_dimension(fd_experiment* e, int N) {
  return guarded([&] {
    need(e, "experiment");
    fdc::ExperimentConfig c = e->config;
    c.N = N;
    c.validate();
    e->config = std::move(c);
  });
}

fd_status fd_experiment_set_output_dir(fd_experiment* e, const char* dir) {
  return guarded([&] {
    need(e, "experiment");
    need(dir, "dir");
    if (!*dir) throw fdc::Error(fdc::ErrorCode::InvalidArgument, "output_dir must not be empty");
    e->config.output_dir = dir;
  });
}

fd_status fd_experiment_output_dir(const fd_experiment* e, char** out) {
  return guarded([&] {
    need(e, "experiment");
    need(out, "out");
    *out = dup_string(e->config.output_dir);
  });
}

fd_status fd_experiment_to_json(const fd_experiment* e, char** out) {
  return guarded([&] {
    need(e, "experiment");
    need(out, "out");
    *out = dup_string(fdc::to_json(e->config).dump(2));
  });
}

size_t fd_experiment_truth_count(const fd_experiment* e) { return e ? e->config.true_parameters.size() : 0; }

fd_status fd_run(const fd_experiment* e, fd_result** out) {
  return guarded([&] {
    need(e, "experiment");
    need(out, "out");
    *out = new fd_result{fdc::run_experiment(e->config)};
  });
}

void fd_result_free(fd_result* r) { delete r; }

size_t fd_result_count(const fd_result* r) { return r ? r->result.report.solution.locations.size() : 0; }

fd_status fd_result_spike(const fd_result* r, size_t i, double* location, double* weight) {
  return guarded([&] {
    need(r, "result");
    const auto& s = r->result.report.solution;
    if (i >= s.locations.size()) throw fdc::Error(fdc::ErrorCode::InvalidArgument, "spike index out of range");
    if (location) *location = s.locations[i];
    if (weight) *weight = s.weights[i];
  });
}

fd_status fd_result_errors(const fd_result* r, double* errors, size_t cap, size_t* count) {
  return guarded([&] {
    need(r, "result");
    const auto& e = r->result.abs_errors;
    if (count) *count = e.size();
    if (errors)
      for (size_t i = 0; i < e.size() && i < cap; ++i) errors[i] = e[i];
  });
}

double fd_result_max_error(const fd_result* r) {
  return r && !r->result.abs_errors.empty() ? r->result.max_error : NAN;
}

double fd_result_median_error(const fd_result* r) {
  return r && !r->result.abs_errors.empty() ? r->result.median_error : NAN;
}

int fd_result_passed(const fd_result* r) {
  if (!r || !r->result.passed) return -1;
  return *r->result.passed ? 1 : 0;
}

double fd_result_seconds(const fd_result* r) { return r ? r->result.report.seconds : NAN; }

fd_status fd_result_report_json(const fd_result* r, char** out) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    *out = dup_string(fdc::report_json(r->result).dump(2));
  });
}

fd_status fd_result_write(const fd_result* r, const char* dir) {
  return guarded([&] {
    need(r, "result");
    need(dir, "dir");
    fdc::write_outputs(r->result, dir);
  });
}

fd_status fd_deconvolve_json(const char* problem_json, char** report_json) {
  return guarded([&] {
    need(problem_json, "problem_json");
    need(report_json, "report_json");
    const fdc::DeconvProblem p = fdc::problem_from_json(fdc::parse_json(problem_json, "<problem>"));
    *report_json = dup_string(fdc::to_json(fdc::deconvolve(p)).dump());
  });
}

fd_status fd_measure_create(const double* locations, const double* weights, size_t n, fd_measure** out) {
  return guarded([&] {
    need(out, "out");
    if (n == 0) throw fdc::Error(fdc::ErrorCode::InvalidArgument, "a measure needs at least one atom");
    need(locations, "locations");
    need(weights, "weights");
    std::vector<fdc::Atom> atoms;
    for (size_t i = 0; i < n; ++i) atoms.push_back({locations[i], weights[i]});
    *out = new fd_measure{fdc::AtomicMeasure(std::move(atoms))};
  });
}

void fd_measure_free(fd_measure* m) { delete m; }

fd_status fd_stieltjes(const fd_measure* m, double z_re, double z_im, double* g_re, double* g_im) {
  return guarded([&] {
    need(m, "measure");
    const fdc::cplx g = fdc::stieltjes(m->measure, {z_re, z_im});
    if (g_re) *g_re = g.real();
    if (g_im) *g_im = g.imag();
  });
}

fd_status fd_r_transform(const fd_measure* m, double g_re, double g_im, double* r_re, double* r_im) {
  return guarded([&] {
    need(m, "measure");
    const fdc::cplx r = fdc::r_transform(m->measure, {g_re, g_im});
    if (r_re) *r_re = r.real();
    if (r_im) *r_im = r.imag();
  });
}

fd_status fd_s_transform(const fd_measure* m, double t_re, double t_im, double* s_re, double* s_im) {
  return guarded([&] {
    need(m, "measure");
    const fdc::cplx s = fdc::s_transform(m->measure, {t_re, t_im});
    if (s_re) *s_re = s.real();
    if (s_im) *s_im = s.imag();
  });
}

}  // extern "C"
