/* C interface to the federated-optimization laboratory.
 *
 * Every entry point returns a fednag_status; on failure the thread-local
 * message from fednag_last_error() describes what went wrong. Objects are
 * opaque handles released with their _free function. */

#ifndef FEDNAG_H
#define FEDNAG_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define FEDNAG_API __attribute__((visibility("default")))

typedef enum fednag_status {
    FEDNAG_OK = 0,
    FEDNAG_ERR_INVALID_ARGUMENT = 1,
    FEDNAG_ERR_IO = 2,
    FEDNAG_ERR_UNDETERMINED = 3, /* estimator had nothing to work with */
    FEDNAG_ERR_INTERNAL = 4
} fednag_status;

/* Message for the most recent failure on this thread. */
FEDNAG_API const char* fednag_last_error(void);

/* ---- problems ---- */

typedef struct fednag_problem fednag_problem;

FEDNAG_API fednag_status fednag_problem_quadratic(int dimension, int workers,
                                                  uint64_t seed, double heterogeneity,
                                                  fednag_problem** out);

/* Loads an IDX pair, shards it evenly (label-sorted when label_sorted != 0),
 * and builds the named model: "linear" or "logistic". limit < 0 loads all
 * samples. */
FEDNAG_API fednag_status fednag_problem_from_idx(const char* model, const char* images,
                                                 const char* labels, int64_t limit,
                                                 int workers, uint64_t partition_seed,
                                                 int label_sorted, double l2,
                                                 fednag_problem** out);

FEDNAG_API void fednag_problem_free(fednag_problem* p);
FEDNAG_API int fednag_problem_dimension(const fednag_problem* p);
FEDNAG_API int fednag_problem_workers(const fednag_problem* p);

/* Global loss / gradient-norm at w (length must match the dimension). */
FEDNAG_API fednag_status fednag_problem_loss(const fednag_problem* p, const double* w,
                                             int len, double* out);
FEDNAG_API fednag_status fednag_problem_grad_norm(const fednag_problem* p, const double* w,
                                                  int len, double* out);

/* ---- runs ---- */

typedef struct fednag_trace fednag_trace;

typedef struct fednag_run_config {
    double eta;
    double gamma;
    int tau;
    int iterations;
    int algorithm;   /* 0 = fednag, 1 = fedavg */
    int batch_size;  /* 0 = full batch */
    uint64_t seed;
    int record_full; /* nonzero: keep averages, worker states, virtual series */
    int eval_every;  /* loss cadence; 0 = sync points only, -1 = default */
} fednag_run_config;

FEDNAG_API fednag_status fednag_run_federated(const fednag_problem* p,
                                              const fednag_run_config* cfg,
                                              fednag_trace** out);

/* rule: 0 = accelerated, 1 = plain gradient descent. */
FEDNAG_API fednag_status fednag_run_centralized(const fednag_problem* p, double eta,
                                                double gamma, int iterations, int rule,
                                                fednag_trace** out);

FEDNAG_API void fednag_trace_free(fednag_trace* t);
FEDNAG_API int fednag_trace_iterations(const fednag_trace* t); /* last recorded t */
FEDNAG_API int fednag_trace_diverged(const fednag_trace* t);
FEDNAG_API fednag_status fednag_trace_loss_at(const fednag_trace* t, int iteration,
                                              double* out); /* NaN where skipped */
FEDNAG_API fednag_status fednag_trace_final_loss(const fednag_trace* t, double* out);
FEDNAG_API fednag_status fednag_trace_final_w(const fednag_trace* t, double* out,
                                              int len);
FEDNAG_API fednag_status fednag_trace_write_csv(const fednag_trace* t, const char* path);

/* ---- closed-form convergence quantities ---- */

typedef struct fednag_bound_inputs {
    double eta, gamma, beta, rho, delta, omega;
    int tau;
    double p, q, cos_theta;
    double epsilon;
} fednag_bound_inputs;

FEDNAG_API fednag_status fednag_weight_gap_bound(int x, double eta, double beta,
                                                 double gamma, double delta, double* out);
FEDNAG_API fednag_status fednag_weight_gap_bound_gd(int tau, double eta, double beta,
                                                    double delta, double* out);
FEDNAG_API fednag_status fednag_descent_coefficient(const fednag_bound_inputs* in,
                                                    double* out);
FEDNAG_API fednag_status fednag_convergence_bound_nag(double horizon,
                                                      const fednag_bound_inputs* in,
                                                      double* out);
FEDNAG_API fednag_status fednag_convergence_bound_gd(double horizon,
                                                     const fednag_bound_inputs* in,
                                                     double* out);
FEDNAG_API fednag_status fednag_step_size_threshold(const fednag_bound_inputs* tmpl,
                                                    double lo, double hi, double* out);

/* ---- experiment orchestration ---- */

typedef struct fednag_cli_options {
    const char* out_dir;  /* NULL = spec value */
    int64_t seed;         /* honored when seed_set != 0 */
    int seed_set;
    int threads;
    int full_dataset;     /* ignore the spec's subset cap */
} fednag_cli_options;

/* Runs the sweep matrix described by a spec file; artifacts land in the
 * output directory. */
FEDNAG_API fednag_status fednag_experiment_run(const char* spec_path,
                                               const fednag_cli_options* opts);

/* Theory-only pass: bound report CSV for the spec's base configuration. */
FEDNAG_API fednag_status fednag_bounds_run(const char* spec_path,
                                           const fednag_cli_options* opts);

/* Full acceptance battery. Prints one line per criterion; *failed receives
 * the number of failing criteria. data_dir may be NULL. */
FEDNAG_API fednag_status fednag_acceptance_run(const char* data_dir, const char* out_dir,
                                               int* failed);

#ifdef __cplusplus
}
#endif

#endif /* FEDNAG_H */
