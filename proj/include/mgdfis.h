/* C interface to the MGDFIS kernel library. Every handle is opaque; every
 * function returning mgdfis_status leaves a message in mgdfis_last_error()
 * on failure (thread-local, valid until the next failing call). */
#ifndef MGDFIS_H
#define MGDFIS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define MGDFIS_API __declspec(dllexport)
#else
#define MGDFIS_API __attribute__((visibility("default")))
#endif

typedef enum {
  MGDFIS_OK = 0,
  MGDFIS_ERR_USAGE = 1,    /* bad argument, configuration or key */
  MGDFIS_ERR_IO = 2,       /* unreadable file or malformed MGDT data */
  MGDFIS_ERR_CONTRACT = 3, /* shape contract violation */
  MGDFIS_ERR_INTERNAL = 4
} mgdfis_status;

typedef struct mgdfis_tensor mgdfis_tensor;
typedef struct mgdfis_config mgdfis_config;
typedef struct mgdfis_model mgdfis_model;
typedef struct mgdfis_report mgdfis_report;

MGDFIS_API const char* mgdfis_last_error(void);

/* Tensors: 4-D NCHW float64. */
MGDFIS_API mgdfis_status mgdfis_tensor_create(const uint64_t dims[4], mgdfis_tensor** out);
MGDFIS_API mgdfis_status mgdfis_tensor_read(const char* path, mgdfis_tensor** out);
MGDFIS_API mgdfis_status mgdfis_tensor_write(const mgdfis_tensor* t, const char* path);
MGDFIS_API mgdfis_status mgdfis_tensor_dims(const mgdfis_tensor* t, uint64_t dims[4]);
MGDFIS_API double* mgdfis_tensor_data(mgdfis_tensor* t);
MGDFIS_API size_t mgdfis_tensor_size(const mgdfis_tensor* t);
MGDFIS_API void mgdfis_tensor_destroy(mgdfis_tensor* t);

/* Run configuration. A NULL path yields the defaults. */
MGDFIS_API mgdfis_status mgdfis_config_load(const char* path, mgdfis_config** out);
MGDFIS_API mgdfis_status mgdfis_config_set(mgdfis_config* cfg, const char* key, const char* value);
MGDFIS_API void mgdfis_config_destroy(mgdfis_config* cfg);

/* Parameters initialized from the config's seed. */
MGDFIS_API mgdfis_status mgdfis_model_create(const mgdfis_config* cfg, mgdfis_model** out);
MGDFIS_API mgdfis_status mgdfis_model_dump(const mgdfis_model* model, const char* dir);
/* stage: ftssa | gmm | dmm | gdim | dpam | full */
MGDFIS_API mgdfis_status mgdfis_model_forward(const mgdfis_model* model, const mgdfis_tensor* f1,
                                              const mgdfis_tensor* f2, const char* stage,
                                              mgdfis_tensor** out);
MGDFIS_API void mgdfis_model_destroy(mgdfis_model* model);

/* Subcommands. Each produces a text report. */
MGDFIS_API mgdfis_status mgdfis_run(const mgdfis_config* cfg, mgdfis_report** out);
MGDFIS_API mgdfis_status mgdfis_bench_tssa(const mgdfis_config* cfg, const uint64_t* tokens,
                                           size_t count, mgdfis_report** out);
MGDFIS_API mgdfis_status mgdfis_flops(const mgdfis_config* cfg, mgdfis_report** out);
MGDFIS_API mgdfis_status mgdfis_gradcheck(const mgdfis_config* cfg, uint32_t seeds,
                                          mgdfis_report** out);

MGDFIS_API const char* mgdfis_report_text(const mgdfis_report* report);
/* 1 when every check in the report passed (always 1 for run/bench/flops). */
MGDFIS_API int mgdfis_report_passed(const mgdfis_report* report);
MGDFIS_API void mgdfis_report_destroy(mgdfis_report* report);

#ifdef __cplusplus
}
#endif

#endif
