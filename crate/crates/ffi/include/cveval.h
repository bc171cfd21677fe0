#ifndef CVEVAL_H
#define CVEVAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CvStatus {
  CvStatus_Ok = 0,
  CvStatus_NullPointer = 1,
  CvStatus_InvalidArgument = 2,
  CvStatus_Numerical = 3,
  CvStatus_Config = 4,
  CvStatus_Io = 5,
  CvStatus_MissingUnits = 6,
  CvStatus_Panic = 7,
} CvStatus;

typedef enum CvFamily {
  CvFamily_Mixture = 0,
  CvFamily_Car = 1,
  CvFamily_Seeds = 2,
} CvFamily;

typedef enum CvCommand {
  CvCommand_Simulate = 0,
  CvCommand_Fit = 1,
  CvCommand_Criteria = 2,
  CvCommand_Loocv = 3,
  CvCommand_Pvalues = 4,
  CvCommand_Study = 5,
} CvCommand;

typedef enum CvQuantity {
  CvQuantity_LogPpd = 0,
  CvQuantity_MidP = 1,
  CvQuantity_Dic = 2,
} CvQuantity;

typedef enum CvMethod {
  CvMethod_Actual = 0,
  CvMethod_Nis = 1,
  CvMethod_Iis = 2,
  CvMethod_Nwaic = 3,
  CvMethod_Iwaic = 4,
  CvMethod_Dic = 5,
  CvMethod_PosteriorCheck = 6,
  CvMethod_Ghosting = 7,
} CvMethod;

/**
 * Opaque run configuration.
 */
typedef struct CvConfig CvConfig;

/**
 * Opaque outputs of one run, together with the configuration that produced them.
 */
typedef struct CvResults CvResults;

/**
 * Opaque sample store read from a spill file.
 */
typedef struct CvStore CvStore;

/**
 * One per-unit result. `unit` is 1-based, 0 for whole-model quantities.
 */
typedef struct CvRecord {
  size_t replication;
  enum CvQuantity quantity;
  enum CvMethod method;
  size_t unit;
  double value;
  double mc_se;
} CvRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` and returns its
 * length; 0 when there is none. Pass a null `buf` to query the length.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t cveval_last_error(char *buf, size_t cap);

/**
 * `log(mean(exp(values)))`.
 *
 * # Safety
 * `values` must point to `len` readable doubles and `out` to a writable double.
 */
enum CvStatus cveval_log_mean_exp(const double *values_ptr, size_t len, double *out);

/**
 * Importance-sampling log predictive density from per-draw log densities
 * (harmonic mean of the densities).
 *
 * # Safety
 * `log_density` must point to `len` readable doubles and `out` to a writable double.
 */
enum CvStatus cveval_is_log_ppd(const double *log_density, size_t len, double *out);

/**
 * WAIC log predictive density from per-draw log densities.
 *
 * # Safety
 * `log_density` must point to `len` readable doubles and `out` to a writable double.
 */
enum CvStatus cveval_waic_log_ppd(const double *log_density, size_t len, double *out);

/**
 * Information criterion `-2 * sum(log_ppd)`.
 *
 * # Safety
 * `log_ppd` must point to `len` readable doubles and `out` to a writable double.
 */
enum CvStatus cveval_ic(const double *log_ppd, size_t len, double *out);

/**
 * Mid-p upper tail `P(Y > r) + P(Y = r) / 2` for `Y ~ Binomial(n, p)`.
 *
 * # Safety
 * `out` must point to a writable double.
 */
enum CvStatus cveval_binomial_midp(uint64_t r, uint64_t n, double p, double *out);

/**
 * Mid-p upper tail for `Y ~ Poisson(rate)`.
 *
 * # Safety
 * `out` must point to a writable double.
 */
enum CvStatus cveval_poisson_midp(uint64_t r, double rate, double *out);

/**
 * Default configuration for `family` with bundled data.
 *
 * # Safety
 * `out` must point to a writable handle slot.
 */
enum CvStatus cveval_config_new(enum CvFamily family, struct CvConfig **out);

/**
 * Parses a TOML configuration.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a writable handle slot.
 */
enum CvStatus cveval_config_from_toml(const char *toml, struct CvConfig **out);

/**
 * Sets the master seed.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum CvStatus cveval_config_set_seed(struct CvConfig *config, uint64_t seed);

/**
 * # Safety
 * `config` must be null or a handle from this library, not used afterwards.
 */
void cveval_config_free(struct CvConfig *config);

/**
 * Runs `command` under `config`. This can take minutes for the refitting commands.
 *
 * # Safety
 * `config` must be a live handle and `out` a writable handle slot.
 */
enum CvStatus cveval_run(const struct CvConfig *config,
                         enum CvCommand command,
                         struct CvResults **out);

/**
 * Number of records held by `results`; 0 for a null handle.
 *
 * # Safety
 * `results` must be null or a live handle.
 */
size_t cveval_results_len(const struct CvResults *results);

/**
 * Copies record `index` into `out`.
 *
 * # Safety
 * `results` must be a live handle and `out` a writable record.
 */
enum CvStatus cveval_results_record(const struct CvResults *results,
                                    size_t index,
                                    struct CvRecord *out);

/**
 * Copies the model tag of record `index` into `buf` and stores its full
 * length in `len`.
 *
 * # Safety
 * `results` must be a live handle, `buf` null or `cap` writable bytes, `len` writable.
 */
enum CvStatus cveval_results_model(const struct CvResults *results,
                                   size_t index,
                                   char *buf,
                                   size_t cap,
                                   size_t *len);

/**
 * Writes the CSV tables and manifest into directory `dir`.
 *
 * # Safety
 * `results` must be a live handle and `dir` a NUL-terminated path.
 */
enum CvStatus cveval_results_write(const struct CvResults *results, const char *dir);

/**
 * # Safety
 * `results` must be null or a handle from this library, not used afterwards.
 */
void cveval_results_free(struct CvResults *results);

/**
 * Reads a binary sample spill.
 *
 * # Safety
 * `path` must be a NUL-terminated path and `out` a writable handle slot.
 */
enum CvStatus cveval_store_open(const char *path, struct CvStore **out);

/**
 * Retained draws, hyperparameters and units of a store.
 *
 * # Safety
 * `store` must be a live handle; each output must be writable.
 */
enum CvStatus cveval_store_shape(const struct CvStore *store,
                                 size_t *draws,
                                 size_t *n_theta,
                                 size_t *n_units);

/**
 * Copies hyperparameter column `j` (one value per draw) into `buf`, which
 * must hold at least as many doubles as the store has draws.
 *
 * # Safety
 * `store` must be a live handle and `buf` point to `cap` writable doubles.
 */
enum CvStatus cveval_store_theta_column(const struct CvStore *store,
                                        size_t j,
                                        double *buf,
                                        size_t cap);

/**
 * # Safety
 * `store` must be null or a handle from this library, not used afterwards.
 */
void cveval_store_free(struct CvStore *store);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CVEVAL_H */
