/* C interface of the bregman-crf engine.
 *
 * All tensors are flat double buffers over the arc index space
 * (slice, from-tag, to-tag) with (n-1)*num_tags*num_tags entries,
 * slice-major. Weight entries may be -inf (forbidden transition) but never
 * +inf or NaN. Tag buffers hold n int32 entries.
 *
 * Every function returns a status code; on failure a thread-local message is
 * available through bcrf_last_error().
 */
#ifndef BCRF_H
#define BCRF_H

#include <stdint.h>

#if defined(_WIN32)
#define BCRF_API __declspec(dllexport)
#else
#define BCRF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bcrf_status {
  BCRF_OK = 0,
  BCRF_ERR_INVALID_ARG = 1,
  BCRF_ERR_FORMAT = 2,     /* malformed file or text tensor */
  BCRF_ERR_INFEASIBLE = 3, /* no complete finite/allowed path */
  BCRF_ERR_CONFIG = 4,     /* invalid combination, e.g. mean field + mask */
  BCRF_ERR_GUARD = 5,      /* desk-scale enumeration guard exceeded */
  BCRF_ERR_NUMERIC = 6,    /* non-finite intermediate / non-convergence */
  BCRF_ERR_IO = 7
} bcrf_status;

typedef struct bcrf_weights bcrf_weights; /* opaque weight tensor */
typedef struct bcrf_mask bcrf_mask;       /* opaque transition mask */

typedef enum bcrf_ibp_mode {
  BCRF_IBP_DECODE = 0,  /* approximate MAP; default temperature 1/10 */
  BCRF_IBP_MARGINAL = 1 /* training marginals; default temperature 1 */
} bcrf_ibp_mode;

typedef struct bcrf_ibp_config {
  double tau_inverse; /* > 0; weights are scaled by it at initialization */
  int32_t max_iters;  /* >= 1 projection sweeps */
  double tol;         /* 0: fixed sweep count; > 0: stop on residual */
  int32_t mode;       /* bcrf_ibp_mode */
} bcrf_ibp_config;

BCRF_API const char* bcrf_version(void);

/* Message of the most recent failure on this thread ("" if none). */
BCRF_API const char* bcrf_last_error(void);

/* Fills defaults for the given mode. */
BCRF_API void bcrf_ibp_config_init(bcrf_ibp_config* cfg, int32_t mode);

/* ---- weight tensors ---- */
BCRF_API bcrf_status bcrf_weights_create(int32_t n, int32_t num_tags,
                                         const double* values,
                                         bcrf_weights** out);
BCRF_API void bcrf_weights_free(bcrf_weights* w);
BCRF_API int32_t bcrf_weights_length(const bcrf_weights* w);
BCRF_API int32_t bcrf_weights_num_tags(const bcrf_weights* w);
BCRF_API bcrf_status bcrf_weights_values(const bcrf_weights* w, double* out);
/* BCRF_OK iff a complete finite-weight path exists. */
BCRF_API bcrf_status bcrf_weights_validate(const bcrf_weights* w);
/* "wtensor v1" text format; read rejects malformed input with
   BCRF_ERR_FORMAT and names the line in bcrf_last_error(). */
BCRF_API bcrf_status bcrf_weights_write_file(const bcrf_weights* w,
                                             const char* path);
BCRF_API bcrf_status bcrf_weights_read_file(const char* path,
                                            bcrf_weights** out);
/* One "wtensor v1" text block; release with bcrf_string_free. */
BCRF_API bcrf_status bcrf_weights_format(const bcrf_weights* w, char** out);
BCRF_API void bcrf_string_free(char* s);

/* ---- transition masks (partial-label sets) ---- */
BCRF_API bcrf_status bcrf_mask_create(int32_t n, int32_t num_tags,
                                      const uint8_t* allowed, bcrf_mask** out);
BCRF_API void bcrf_mask_free(bcrf_mask* m);
BCRF_API bcrf_status bcrf_apply_mask(const bcrf_weights* w, const bcrf_mask* m,
                                     bcrf_weights** out);

/* ---- exact dynamic programming ---- */
BCRF_API bcrf_status bcrf_viterbi(const bcrf_weights* w, int32_t* tags,
                                  double* score);
BCRF_API bcrf_status bcrf_forward_logz(const bcrf_weights* w, double* logz);
BCRF_API bcrf_status bcrf_crf_marginals(const bcrf_weights* w,
                                        double* marginals);
BCRF_API bcrf_status bcrf_path_score(const bcrf_weights* w,
                                     const int32_t* tags, double* score);

/* ---- bregman-crf inference ---- */
/* residuals (optional, length >= max_iters) receives the per-sweep
   constraint residual of the parity not just projected; sweeps (optional)
   the number of executed sweeps. */
BCRF_API bcrf_status bcrf_ibp_infer(const bcrf_weights* w,
                                    const bcrf_ibp_config* cfg,
                                    double* marginals, double* residuals,
                                    int32_t* sweeps);
/* <q, w> + H(q); q must satisfy the polytope constraints within 1e-8. */
BCRF_API bcrf_status bcrf_mean_reg_value(const bcrf_weights* w,
                                         const double* marginals,
                                         double* value);
/* repair != 0 replaces an output that violates forbidden transitions by the
   Viterbi path of log q. */
BCRF_API bcrf_status bcrf_mbr_decode(const bcrf_weights* w,
                                     const bcrf_ibp_config* cfg,
                                     int32_t repair, int32_t* tags);
/* tau * B_Y(tau^-1 w) - viterbi score. */
BCRF_API bcrf_status bcrf_map_gap(const bcrf_weights* w,
                                  const bcrf_ibp_config* cfg, double* gap);

/* ---- mean field (rejects -inf weights with BCRF_ERR_CONFIG) ---- */
/* probs: n * num_tags doubles, one distribution row per position. */
BCRF_API bcrf_status bcrf_mf_infer(const bcrf_weights* w, int32_t iters,
                                   double* probs);
BCRF_API bcrf_status bcrf_mf_decode(const bcrf_weights* w, int32_t iters,
                                    int32_t* tags);

/* ---- losses: value + gradient w.r.t. the weights ---- */
BCRF_API bcrf_status bcrf_nll_loss(const bcrf_weights* w, const int32_t* gold,
                                   double* value, double* grad);
BCRF_API bcrf_status bcrf_fy_loss(const bcrf_weights* w, const int32_t* gold,
                                  const bcrf_ibp_config* cfg, double* value,
                                  double* grad);
BCRF_API bcrf_status bcrf_partial_nll_loss(const bcrf_weights* w,
                                           const bcrf_mask* m, double* value,
                                           double* grad);
BCRF_API bcrf_status bcrf_partial_fy_loss(const bcrf_weights* w,
                                          const bcrf_mask* m,
                                          const bcrf_ibp_config* cfg,
                                          double* value, double* grad);

/* ---- batched execution (wavefront over stages) ----
   item_status may be NULL; with it, per-item codes are reported. The call
   returns BCRF_OK when every item succeeded, otherwise the first failing
   item's code. Output slots of failed items are left untouched. */
BCRF_API bcrf_status bcrf_forward_logz_batch(const bcrf_weights* const* ws,
                                             int32_t count, int32_t threads,
                                             double* logz,
                                             bcrf_status* item_status);
BCRF_API bcrf_status bcrf_viterbi_batch(const bcrf_weights* const* ws,
                                        int32_t count, int32_t threads,
                                        int32_t* const* tags, double* scores,
                                        bcrf_status* item_status);
BCRF_API bcrf_status bcrf_crf_marginals_batch(const bcrf_weights* const* ws,
                                              int32_t count, int32_t threads,
                                              double* const* marginals,
                                              bcrf_status* item_status);
BCRF_API bcrf_status bcrf_ibp_infer_batch(const bcrf_weights* const* ws,
                                          int32_t count,
                                          const bcrf_ibp_config* cfg,
                                          int32_t threads,
                                          double* const* marginals,
                                          bcrf_status* item_status);
BCRF_API bcrf_status bcrf_mf_infer_batch(const bcrf_weights* const* ws,
                                         int32_t count, int32_t iters,
                                         int32_t threads, double* const* probs,
                                         bcrf_status* item_status);

/* ---- desk-scale oracles (exhaustive enumeration / convex solver) ---- */
BCRF_API bcrf_status bcrf_oracle_logz(const bcrf_weights* w, double* logz);
BCRF_API bcrf_status bcrf_oracle_crf_marginals(const bcrf_weights* w,
                                               double* marginals);
BCRF_API bcrf_status bcrf_oracle_mean_reg(const bcrf_weights* w, double tol,
                                          double* marginals, double* value);

#ifdef __cplusplus
}
#endif

#endif /* BCRF_H */
