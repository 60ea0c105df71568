#ifndef CAVCOND_H
#define CAVCOND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CavcondStatus {
  CAVCOND_STATUS_OK = 0,
  CAVCOND_STATUS_NULL_POINTER = 1,
  CAVCOND_STATUS_INVALID_ARGUMENT = 2,
  CAVCOND_STATUS_CONFIG = 3,
  CAVCOND_STATUS_NUMERICAL = 4,
  CAVCOND_STATUS_IO = 5,
  CAVCOND_STATUS_BUFFER_TOO_SMALL = 6,
  CAVCOND_STATUS_PANIC = 7,
} CavcondStatus;

/**
 * A built structure: basis, populations, transition catalog and Hopfield model.
 */
typedef struct CavcondModel CavcondModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the next failure.
 */
const char *cavcond_last_error(void);

/**
 * Library version, static string.
 */
const char *cavcond_version(void);

/**
 * Build a model from a JSON run configuration (same schema as the CLI).
 *
 * # Safety
 * `config_json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum CavcondStatus cavcond_model_new(const char *config_json, struct CavcondModel **out);

/**
 * # Safety
 * `model` must come from [`cavcond_model_new`] and not be used afterwards. NULL is ignored.
 */
void cavcond_model_free(struct CavcondModel *model);

/**
 * Number of subbands in the basis.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CavcondStatus cavcond_model_subband_count(const struct CavcondModel *model, size_t *out);

/**
 * Number of allowed transitions, so the spectrum has this plus one branches.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CavcondStatus cavcond_model_transition_count(const struct CavcondModel *model, size_t *out);

/**
 * Energy of the reference transition in meV, the unit of the cavity axis.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CavcondStatus cavcond_model_reference_energy(const struct CavcondModel *model, double *out);

/**
 * Fermi level in meV, measured from the potential minimum.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CavcondStatus cavcond_model_fermi_level(const struct CavcondModel *model, double *out);

/**
 * Scattering times from the configuration, in ps.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CavcondStatus cavcond_model_scattering_times(const struct CavcondModel *model,
                                                  double *tau0_ps,
                                                  double *taup_ps);

/**
 * Conductance in S with the cavity at `hw_c_mev`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CavcondStatus cavcond_model_conductance(const struct CavcondModel *model,
                                             double hw_c_mev,
                                             double tau0_ps,
                                             double taup_ps,
                                             double *out);

/**
 * Conductance in S with the cavity frequency at zero.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CavcondStatus cavcond_model_g0(const struct CavcondModel *model,
                                    double tau0_ps,
                                    double taup_ps,
                                    double *out);

/**
 * Conductance in S without any light-matter or Coulomb coupling.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CavcondStatus cavcond_model_noninteracting(const struct CavcondModel *model,
                                                double tau0_ps,
                                                double *out);

/**
 * Polariton energies (meV, ascending) and electronic weights at `hw_c_mev`.
 *
 * `*len` always receives the branch count. If `capacity` is smaller, nothing else is
 * written and `CAVCOND_STATUS_BUFFER_TOO_SMALL` is returned. `weights` may be NULL.
 *
 * # Safety
 * `energies` and `weights` must hold `capacity` doubles.
 */
enum CavcondStatus cavcond_model_spectrum(const struct CavcondModel *model,
                                          double hw_c_mev,
                                          double *energies,
                                          double *weights,
                                          size_t capacity,
                                          size_t *len);

/**
 * Run a CLI verb (`spectrum`, `sweep-cavity`, `sweep-tau`, `multiwell`, `converge`) on a JSON
 * configuration. The report JSON and the CSV table are returned as strings owned by the
 * caller and released with [`cavcond_string_free`]. `csv` may be NULL.
 *
 * # Safety
 * String arguments must be NUL-terminated; `report_json` must be valid.
 */
enum CavcondStatus cavcond_run(const char *verb,
                               const char *config_json,
                               char **report_json,
                               char **csv);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. NULL is ignored.
 */
void cavcond_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAVCOND_H */
