/*
 * C interface to the reno engine: reward-driven gradient ascent on the input
 * noise of frozen one-step toy image generators.
 *
 * All functions return RENO_OK on success; on failure they return a status
 * code and leave a human-readable message retrievable (per thread) with
 * reno_last_error(). Objects are opaque handles released with the matching
 * *_free function. Handles are not thread-safe; use one handle per thread or
 * hand a handle off whole.
 */
#ifndef RENO_H
#define RENO_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RENO_API __declspec(dllexport)
#else
#define RENO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum reno_status {
  RENO_OK = 0,
  RENO_STATUS_INVALID_ARGUMENT = 1,
  RENO_STATUS_CONFIG = 2,  /* config schema violation */
  RENO_STATUS_NUMERIC = 3, /* non-finite objective during a run */
  RENO_STATUS_IO = 4,
  RENO_STATUS_INTERNAL = 5,
} reno_status;

RENO_API const char* reno_status_name(reno_status status);
RENO_API const char* reno_last_error(void);
RENO_API const char* reno_version(void);

typedef struct reno_generator reno_generator;
typedef struct reno_criterion reno_criterion;
typedef struct reno_run_result reno_run_result;
typedef struct reno_experiment reno_experiment;

typedef struct reno_opt_config {
  int32_t steps;        /* the loop evaluates t = 0..steps inclusive */
  double learning_rate;
  double momentum;
  double clip_norm;
  uint64_t seed;
  int32_t nesterov;     /* 0: the default heavy-ball recurrence */
} reno_opt_config;

/* steps 50, learning_rate 5.0, momentum 0.9, clip_norm 0.1, seed 0. */
RENO_API void reno_opt_config_defaults(reno_opt_config* out);

/* -------- generators -------- */

/* kind: "linear" | "mlp" | "colorfield" | "latent_decoder". */
RENO_API reno_status reno_generator_create(const char* kind, int32_t noise_dim, int32_t height,
                                           int32_t width, uint64_t weight_seed,
                                           reno_generator** out);
RENO_API reno_status reno_generator_save(const reno_generator* g, const char* path);
RENO_API reno_status reno_generator_load(const char* path, reno_generator** out);
RENO_API void reno_generator_free(reno_generator* g);

/* -------- criteria -------- */

RENO_API reno_status reno_criterion_create(double lambda_reg, reno_criterion** out);
/* The shipped four-term suite with its calibrated ranges and weights. */
RENO_API reno_status reno_criterion_create_default(double lambda_reg, reno_criterion** out);
/* kind: "proto_align" | "brightness_taste" | "edge_smooth" | "prompt_match". */
RENO_API reno_status reno_criterion_add_term(reno_criterion* c, const char* kind, double lo,
                                             double hi, double weight, uint64_t seed);
RENO_API reno_status reno_criterion_add_color_term(reno_criterion* c, char channel,
                                                   double weight, int32_t height, int32_t width);
RENO_API void reno_criterion_free(reno_criterion* c);

/* -------- optimization runs -------- */

RENO_API reno_status reno_optimize(const reno_generator* g, const reno_criterion* c,
                                   const char* prompt, const reno_opt_config* config,
                                   reno_run_result** out);
RENO_API reno_status reno_result_best_reward(const reno_run_result* r, double* out);
RENO_API reno_status reno_result_best_iteration(const reno_run_result* r, int32_t* out);
RENO_API reno_status reno_result_row_count(const reno_run_result* r, size_t* out);
RENO_API reno_status reno_result_reward_at(const reno_run_result* r, size_t t, double* out);
/* Borrowed pointer into the result; valid until reno_result_free. */
RENO_API reno_status reno_result_image(const reno_run_result* r, const double** data,
                                       int32_t* height, int32_t* width, int32_t* channels);
RENO_API reno_status reno_result_write_ppm(const reno_run_result* r, const char* path);
RENO_API void reno_result_free(reno_run_result* r);

/* -------- config-file driven experiments -------- */

/* overrides: "section.key=value" strings applied on top of the file. */
RENO_API reno_status reno_experiment_load(const char* path, const char* const* overrides,
                                          size_t n_overrides, reno_experiment** out);
/* out_dir NULL uses the config's output.directory; emit_every < 0 uses the
 * config's output.emit_every. */
RENO_API reno_status reno_experiment_run(const reno_experiment* e, const char* out_dir,
                                         int32_t emit_every);
RENO_API reno_status reno_experiment_sweep(const reno_experiment* e, const char* out_dir,
                                           int32_t emit_every, int32_t jobs);
/* held_out_term NULL or "" holds out every term in turn. */
RENO_API reno_status reno_experiment_loo(const reno_experiment* e, const char* held_out_term,
                                         int32_t n_seeds, int32_t jobs, const char* out_dir);
RENO_API reno_status reno_experiment_ablate(const reno_experiment* e, int32_t n_seeds,
                                            int32_t jobs, const char* out_dir);
RENO_API void reno_experiment_free(reno_experiment* e);

#ifdef __cplusplus
}
#endif

#endif /* RENO_H */
