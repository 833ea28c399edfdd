#ifndef HYPERBEND_HYPERBEND_H_
#define HYPERBEND_HYPERBEND_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(HB_BUILDING_LIBRARY)
#    define HB_API __declspec(dllexport)
#  else
#    define HB_API __declspec(dllimport)
#  endif
#else
#  define HB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values 1..20 mirror the library's error kinds. */
typedef enum hb_status {
  HB_OK = 0,
  HB_ERR_OUT_OF_DOMAIN = 1,
  HB_ERR_RANK_DEFICIENT = 2,
  HB_ERR_NULLITY_JUMP = 3,
  HB_ERR_STEP_FAILURE = 4,
  HB_ERR_SINGULAR_POINT = 5,
  HB_ERR_SINGULAR_RESOLVENT = 6,
  HB_ERR_BLOW_UP = 7,
  HB_ERR_KERNEL_JUMP = 8,
  HB_ERR_DEGENERATE_SAMPLES = 9,
  HB_ERR_SINGULAR_S = 10,
  HB_ERR_FRAME_DEGENERATE = 11,
  HB_ERR_COMPATIBILITY_FAILURE = 12,
  HB_ERR_PATH_DEPENDENCE = 13,
  HB_ERR_ILL_CONDITIONED = 14,
  HB_ERR_NO_GAP = 15,
  HB_ERR_PARSE = 16,
  HB_ERR_VALIDATION = 17,
  HB_ERR_PIPELINE = 18,
  HB_ERR_UNKNOWN_SCENARIO = 19,
  HB_ERR_INVALID_ARGUMENT = 20,
  HB_ERR_NULL_ARGUMENT = 100,
  HB_ERR_BUFFER_TOO_SMALL = 101,
  HB_ERR_INTERNAL = 102
} hb_status;

typedef struct hb_chart hb_chart;
typedef struct hb_bending hb_bending;

typedef struct hb_run_options {
  const char* out_dir; /* NULL means "." */
  int jobs;            /* values below 1 mean 1 */
  uint64_t seed;
} hb_run_options;

HB_API const char* hb_version(void);
HB_API const char* hb_status_name(hb_status status);
/* Message of the last failed call on this thread; empty when none. */
HB_API const char* hb_last_error(void);

/* Built-in scenario registry, in stable order. */
HB_API int hb_scenario_count(void);
HB_API hb_status hb_scenario_name(int index, const char** name);
/* Copies the scenario JSON into buf. *needed receives the size including the terminator. */
HB_API hb_status hb_scenario_describe(const char* name, char* buf, size_t capacity, size_t* needed);

/* Runs a scenario file or built-in name and writes report.json and CSVs.
   *exit_code is 0 when every tolerance is met, 2 on a tolerance failure, 1 on error. */
HB_API hb_status hb_run_scenario(const char* path_or_name, const hb_run_options* options, int* exit_code);

/* Charts. Points have hb_chart_dim entries; ambient vectors have dim + 1. */
HB_API hb_status hb_chart_from_scenario(const char* path_or_name, hb_chart** out);
HB_API void hb_chart_free(hb_chart* chart);
HB_API int hb_chart_dim(const hb_chart* chart);
HB_API hb_status hb_chart_eval(const hb_chart* chart, const double* p, double* value);
/* shape: dim*dim row-major shape operator; principal: dim ascending eigenvalues. Either may be NULL. */
HB_API hb_status hb_chart_geometry(const hb_chart* chart, const double* p, double* shape, double* principal,
                                   int* nullity);

/* Bendings. D is (dim+1)^2 row-major and skew; w has dim + 1 entries. */
HB_API hb_status hb_bending_trivial(const hb_chart* chart, const double* D, const double* w, hb_bending** out);
/* theta0 as JSON, e.g. "1" or "{\"poly\":[0,1]}". Needs a ruled chart. */
HB_API hb_status hb_bending_constructed(const hb_chart* chart, const char* theta0_json, hb_bending** out);
HB_API void hb_bending_free(hb_bending* bending);
HB_API hb_status hb_bending_eval(const hb_bending* bending, const double* p, double* tau);
/* points: count * dim values. */
HB_API hb_status hb_bending_residual(const hb_bending* bending, const double* points, size_t count,
                                     double* residual);
/* dim*dim row-major associated tensor B at p. */
HB_API hb_status hb_bending_B(const hb_bending* bending, const double* p, double* B);

#ifdef __cplusplus
}
#endif

#endif /* HYPERBEND_HYPERBEND_H_ */
