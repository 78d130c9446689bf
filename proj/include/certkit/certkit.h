#ifndef CERTKIT_H
#define CERTKIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CERTKIT_BUILDING)
#    define CERTKIT_API __declspec(dllexport)
#  else
#    define CERTKIT_API __declspec(dllimport)
#  endif
#else
#  define CERTKIT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum certkit_status {
    CERTKIT_OK = 0,
    CERTKIT_ERR_INVALID_ARGUMENT = 1,
    CERTKIT_ERR_PARSE = 2,
    CERTKIT_ERR_DIMENSION = 3,
    CERTKIT_ERR_NON_FINITE = 4,
    CERTKIT_ERR_IO = 5,
    CERTKIT_ERR_DOMAIN = 6,
    CERTKIT_ERR_NON_MONOTONE = 7,
    CERTKIT_ERR_NOT_CENTERED = 8,
    CERTKIT_ERR_INTERNAL = 99
} certkit_status;

typedef enum certkit_verdict {
    CERTKIT_SAFE = 0,
    CERTKIT_UNSAFE = 1,
    CERTKIT_UNKNOWN = 2, /* also "budget exhausted" for the complete verifier */
} certkit_verdict;

typedef enum certkit_norm { CERTKIT_NORM_L1 = 0, CERTKIT_NORM_L2 = 1, CERTKIT_NORM_LINF = 2 } certkit_norm;

typedef struct certkit_network certkit_network;
typedef struct certkit_job certkit_job;
typedef struct certkit_report certkit_report;

/* Bounds for a^T f(x) - beta over the box [lo, hi]. */
typedef struct certkit_bound_result {
    double upper;
    double lower;
    int passes;
    certkit_verdict verdict;
    uint64_t wall_ops;
} certkit_bound_result;

typedef struct certkit_bab_result {
    certkit_verdict verdict;
    double lower;
    double upper;
    uint64_t nodes_expanded;
    int has_witness;
} certkit_bab_result;

CERTKIT_API const char* certkit_version(void);
/* Message of the last failed call on this thread ("" if none). */
CERTKIT_API const char* certkit_last_error(void);

CERTKIT_API certkit_status certkit_network_load(const char* path, certkit_network** out);
CERTKIT_API certkit_status certkit_network_sawtooth(int k, certkit_network** out);
CERTKIT_API void certkit_network_free(certkit_network* net);
CERTKIT_API certkit_status certkit_network_dims(const certkit_network* net, size_t* inputs, size_t* outputs,
                                                size_t* depth);
CERTKIT_API certkit_status certkit_network_param_count(const certkit_network* net, uint64_t* out);
CERTKIT_API certkit_status certkit_network_evaluate(const certkit_network* net, const double* x, size_t n_in,
                                                    double* y, size_t n_out);
CERTKIT_API certkit_status certkit_network_lipschitz(const certkit_network* net, certkit_norm norm, double* out);

/* `interval` != 0 selects plain interval propagation. */
CERTKIT_API certkit_status certkit_linear_bounds(const certkit_network* net, const double* lo, const double* hi,
                                                 size_t dim, const double* a, size_t outputs, double beta,
                                                 int interval, certkit_bound_result* out);

/* witness may be NULL; otherwise it receives `dim` values when a violation is found. */
CERTKIT_API certkit_status certkit_verify_complete(const certkit_network* net, const double* lo, const double* hi,
                                                   size_t dim, const double* a, size_t outputs, double beta,
                                                   uint64_t node_budget, double gap_tol, unsigned threads,
                                                   certkit_bab_result* out, double* witness);

CERTKIT_API certkit_status certkit_w1(const double* a, size_t na, const double* b, size_t nb, double* out);

/* Jobs mirror the command line: a command plus --key value options. */
CERTKIT_API certkit_status certkit_job_create(const char* command, certkit_job** out);
CERTKIT_API certkit_status certkit_job_set(certkit_job* job, const char* key, const char* value);
CERTKIT_API void certkit_job_free(certkit_job* job);
/* On failure *out is NULL and the return value names the error. */
CERTKIT_API certkit_status certkit_job_run(const certkit_job* job, certkit_report** out);

CERTKIT_API const char* certkit_report_text(const certkit_report* report);
CERTKIT_API const char* certkit_report_json(const certkit_report* report);
CERTKIT_API int certkit_report_exit_code(const certkit_report* report);
CERTKIT_API void certkit_report_free(certkit_report* report);

/* Process exit code for a failed job with this status (> 2), and the matching
   single-line error record for the last error. */
CERTKIT_API int certkit_exit_code_for_status(certkit_status status);
CERTKIT_API const char* certkit_last_error_record(void);

#ifdef __cplusplus
}
#endif

#endif
