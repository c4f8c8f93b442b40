/* C interface to the freedeconv library.
 *
 * Every function returning fd_status sets a thread-local message readable
 * through fd_last_error() on failure. Strings handed out by the library are
 * released with fd_string_free(); handles with their matching *_free(). */
#ifndef FREEDECONV_H
#define FREEDECONV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(FD_BUILDING_LIBRARY)
#define FD_API __declspec(dllexport)
#else
#define FD_API __declspec(dllimport)
#endif
#else
#define FD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fd_status {
  FD_OK = 0,
  FD_INVALID_ARGUMENT = 1,
  FD_DIVISION_NEAR_POLE = 2,
  FD_EMPTY_SPECTRUM = 3,
  FD_NEWTON_DIVERGED = 4,
  FD_POLE_COLLISION = 5,
  FD_ZERO_FIRST_MOMENT = 6,
  FD_ZERO_VALUE = 7,
  FD_BRANCH_JUMP = 8,
  FD_DEGENERATE_INTERVAL = 9,
  FD_KERNEL_EVALUATION_FAILED = 10,
  FD_NORM_BOUND_UNREACHABLE = 11,
  FD_RANK_DEFICIENT = 12,
  FD_TOO_FEW_VALID = 13,
  FD_ILL_CONDITIONED_LS = 14,
  FD_NO_CLEAR_GAP = 15,
  FD_EIGENSOLVE_FAILED = 16,
  FD_NON_POSITIVE_MEASURE = 17,
  FD_NORMALIZATION_VIOLATION = 18,
  FD_INVALID_FAMILY = 19,
  FD_PARSE_ERROR = 20,
  FD_IO_ERROR = 21,
  FD_INTERNAL_ERROR = 99
} fd_status;

typedef struct fd_experiment fd_experiment;
typedef struct fd_result fd_result;
typedef struct fd_measure fd_measure;

FD_API const char* fd_version(void);
FD_API const char* fd_status_name(fd_status status);
/* Message of the last failure on this thread; empty after a success. */
FD_API const char* fd_last_error(void);
FD_API void fd_string_free(char* s);

/* Experiments */
FD_API fd_status fd_experiment_load(const char* path, fd_experiment** out);
FD_API fd_status fd_experiment_from_json(const char* json_text, fd_experiment** out);
/* id in 1..6; full != 0 selects N = 8192 for the matrix examples. */
FD_API fd_status fd_experiment_example(int id, int full, fd_experiment** out);
FD_API fd_status fd_experiment_clone(const fd_experiment* e, fd_experiment** out);
FD_API void fd_experiment_free(fd_experiment* e);
FD_API fd_status fd_experiment_set_seed(fd_experiment* e, uint64_t seed);
FD_API fd_status fd_experiment_set_dimension(fd_experiment* e, int N);
FD_API fd_status fd_experiment_set_output_dir(fd_experiment* e, const char* dir);
FD_API fd_status fd_experiment_output_dir(const fd_experiment* e, char** out);
FD_API fd_status fd_experiment_to_json(const fd_experiment* e, char** out);
FD_API size_t fd_experiment_truth_count(const fd_experiment* e);

FD_API fd_status fd_run(const fd_experiment* e, fd_result** out);
FD_API void fd_result_free(fd_result* r);
FD_API size_t fd_result_count(const fd_result* r);
FD_API fd_status fd_result_spike(const fd_result* r, size_t i, double* location, double* weight);
/* Per-spike absolute errors against the sorted truth; *count receives the
 * number available even when cap is smaller. */
FD_API fd_status fd_result_errors(const fd_result* r, double* errors, size_t cap, size_t* count);
FD_API double fd_result_max_error(const fd_result* r);
FD_API double fd_result_median_error(const fd_result* r);
/* 1 pass, 0 fail, -1 when no tolerance or truth is available. */
FD_API int fd_result_passed(const fd_result* r);
FD_API double fd_result_seconds(const fd_result* r);
FD_API fd_status fd_result_report_json(const fd_result* r, char** out);
FD_API fd_status fd_result_write(const fd_result* r, const char* dir);

/* Stand-alone solve: problem JSON in, report JSON out. */
FD_API fd_status fd_deconvolve_json(const char* problem_json, char** report_json);

/* Atomic measures and their transforms */
FD_API fd_status fd_measure_create(const double* locations, const double* weights, size_t n, fd_measure** out);
FD_API void fd_measure_free(fd_measure* m);
FD_API fd_status fd_stieltjes(const fd_measure* m, double z_re, double z_im, double* g_re, double* g_im);
FD_API fd_status fd_r_transform(const fd_measure* m, double g_re, double g_im, double* r_re, double* r_im);
FD_API fd_status fd_s_transform(const fd_measure* m, double t_re, double t_im, double* s_re, double* s_im);

#ifdef __cplusplus
}
#endif

#endif /* FREEDECONV_H */
