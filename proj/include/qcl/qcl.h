#ifndef QCL_QCL_H
#define QCL_QCL_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(QCL_BUILDING_LIBRARY)
#define QCL_API __attribute__((visibility("default")))
#else
#define QCL_API
#endif

typedef enum qcl_status {
  QCL_OK = 0,
  QCL_ERR_CONFIG = 1,    /* invalid configuration or request */
  QCL_ERR_DOMAIN = 2,    /* parameters outside the supported range */
  QCL_ERR_NUMERIC = 3,   /* a numerical method failed to converge */
  QCL_ERR_INTERNAL = 4,  /* unexpected failure */
  QCL_ERR_ARGUMENT = 5   /* null handle or pointer */
} qcl_status;

typedef struct qcl_session qcl_session;

QCL_API const char* qcl_version(void);

/* Parses a JSON configuration ("{}" or NULL for defaults). On failure *out is NULL and
   qcl_last_error() describes the problem. */
QCL_API qcl_status qcl_session_create(const char* config_json, qcl_session** out);
QCL_API void qcl_session_destroy(qcl_session* s);

/* Message of the most recent failure on the calling thread (empty if none). */
QCL_API const char* qcl_last_error(void);

/* Each run function writes a JSON report to *report_json (release with qcl_free_string).
   timing != 0 adds per-check runtimes. *all_passed (may be NULL) is 1 when no asserted check failed. */
QCL_API qcl_status qcl_verify(qcl_session* s, const char* suite, const char* fault, int timing, char** report_json,
                              int* all_passed);
QCL_API qcl_status qcl_scan(qcl_session* s, const char* scan, int assert_targets, int timing, char** report_json,
                            int* all_passed);
QCL_API qcl_status qcl_curvature(qcl_session* s, char** report_json);
QCL_API qcl_status qcl_solve_z(qcl_session* s, char** report_json, int* all_passed);
QCL_API qcl_status qcl_reduced_energy(qcl_session* s, char** report_json);

/* Converts a JSON report to "json", "csv" or "text". */
QCL_API qcl_status qcl_format_report(const char* report_json, const char* format, char** out);

QCL_API void qcl_free_string(char* s);

#ifdef __cplusplus
}
#endif

#endif
