/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef WGQED_H
#define WGQED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum WgqedStatus {
  WGQED_STATUS_OK = 0,
  WGQED_STATUS_NULL_POINTER = 1,
  WGQED_STATUS_INVALID_ARGUMENT = 2,
  WGQED_STATUS_BUFFER_TOO_SMALL = 3,
  // Time step or Volterra step outside its stability limit.
  WGQED_STATUS_UNSTABLE = 4,
  // Norm left its tolerance during propagation.
  WGQED_STATUS_NORM_DRIFT = 5,
  // Requested duration reaches the lattice boundary.
  WGQED_STATUS_EDGE_HORIZON = 6,
  // A fit or comparison could not be carried out on the data.
  WGQED_STATUS_ANALYSIS = 7,
  WGQED_STATUS_IO = 8,
  WGQED_STATUS_PARSE = 9,
  WGQED_STATUS_PANIC = 10,
} WgqedStatus;

// Opaque lattice model.
typedef struct WgqedModel WgqedModel;

// Opaque joint emitter-photon state.
typedef struct WgqedState WgqedState;

// Opaque sampled emitter trajectory.
typedef struct WgqedTrace WgqedTrace;

// Golden-rule constants of a model.
typedef struct WgqedMarkov {
  double gamma_r;
  double gamma_i;
  double v_g;
  double k0;
} WgqedMarkov;

typedef struct WgqedComplex {
  double re;
  double im;
} WgqedComplex;

// Propagation settings. Obtain defaults from
// [`wgqed_evolution_config_default`].
typedef struct WgqedEvolutionConfig {
  double dt;
  double t_max;
  size_t sample_every;
  double norm_tolerance;
  bool edge_guard;
} WgqedEvolutionConfig;

typedef struct WgqedRateFit {
  double rate_probability;
  double rate_amplitude;
  double intercept;
  double residual_rms;
  size_t n_samples;
} WgqedRateFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null if none occurred.
// The pointer stays valid until the next failing call on this thread.
const char *wgqed_last_error(void);

// Library version as a static NUL-terminated string.
const char *wgqed_version(void);

// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum WgqedStatus wgqed_model_new(double omega0,
                                 double omega_c,
                                 double hop_j,
                                 double g0_coupling,
                                 size_t n_half,
                                 struct WgqedModel **out);

// # Safety
// `model` must be null or a handle from [`wgqed_model_new`] not yet freed.
void wgqed_model_free(struct WgqedModel *model);

// # Safety
// `model` must be a live handle and `out` writable.
enum WgqedStatus wgqed_model_golden_rule(const struct WgqedModel *model, struct WgqedMarkov *out);

// Memory kernel `G(tau)` of the model.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum WgqedStatus wgqed_model_memory_kernel(const struct WgqedModel *model,
                                           double tau,
                                           struct WgqedComplex *out);

// Excited emitter with an empty waveguide.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum WgqedStatus wgqed_state_bare(const struct WgqedModel *model, struct WgqedState **out);

// Symmetric flat packet of half-width `half_width` sites.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum WgqedStatus wgqed_state_virtual_bound(const struct WgqedModel *model,
                                           size_t half_width,
                                           struct WgqedState **out);

// Exponential incoming packet that slows the decay to `epsilon`.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum WgqedStatus wgqed_state_slow_decay(const struct WgqedModel *model,
                                        double epsilon,
                                        struct WgqedState **out);

// State from explicit amplitudes; `photon` holds `2N+1` site amplitudes
// ordered from `l = -N` to `l = N`.
//
// # Safety
// `photon` must point to `len` readable values and `out` be writable.
enum WgqedStatus wgqed_state_from_parts(struct WgqedComplex c_a,
                                        const struct WgqedComplex *photon,
                                        size_t len,
                                        struct WgqedState **out);

// # Safety
// `state` must be null or a live handle.
void wgqed_state_free(struct WgqedState *state);

// # Safety
// `state` must be a live handle and `out` writable.
enum WgqedStatus wgqed_state_emitter(const struct WgqedState *state, struct WgqedComplex *out);

// Number of photon amplitudes, `2N+1`; 0 for a null handle.
//
// # Safety
// `state` must be null or a live handle.
size_t wgqed_state_photon_len(const struct WgqedState *state);

// # Safety
// `state` must be a live handle and `buf` writable for `cap` values.
enum WgqedStatus wgqed_state_photon(const struct WgqedState *state,
                                    struct WgqedComplex *buf,
                                    size_t cap);

// Forcing term `F(t)` generated by the photon part of `state`.
//
// # Safety
// `state` and `model` must be live handles and `out` writable.
enum WgqedStatus wgqed_forcing(const struct WgqedState *state,
                               const struct WgqedModel *model,
                               double t,
                               struct WgqedComplex *out);

struct WgqedEvolutionConfig wgqed_evolution_config_default(void);

// Exact propagation of `state` under `model`.
//
// # Safety
// `state`, `model` and `config` must be valid and `out` writable.
enum WgqedStatus wgqed_evolve(const struct WgqedState *state,
                              const struct WgqedModel *model,
                              const struct WgqedEvolutionConfig *config,
                              struct WgqedTrace **out);

// Runs a scenario described by a JSON or `key = value` configuration text,
// the same format the command-line tool reads.
//
// # Safety
// `config_text` must be a NUL-terminated string and `out` writable.
enum WgqedStatus wgqed_run_config(const char *config_text, struct WgqedTrace **out);

// Closed-form two-exponential emitter amplitude of the slow-decay state.
struct WgqedComplex wgqed_analytic_slow_decay(struct WgqedComplex c_a0,
                                              struct WgqedComplex gamma,
                                              double epsilon,
                                              double t);

// # Safety
// `trace` must be null or a live handle.
void wgqed_trace_free(struct WgqedTrace *trace);

// Number of samples; 0 for a null handle.
//
// # Safety
// `trace` must be null or a live handle.
size_t wgqed_trace_len(const struct WgqedTrace *trace);

// # Safety
// `trace` must be a live handle and `buf` writable for `cap` values.
enum WgqedStatus wgqed_trace_times(const struct WgqedTrace *trace, double *buf, size_t cap);

// # Safety
// `trace` must be a live handle and `buf` writable for `cap` values.
enum WgqedStatus wgqed_trace_survival(const struct WgqedTrace *trace, double *buf, size_t cap);

// # Safety
// `trace` must be a live handle and `buf` writable for `cap` values.
enum WgqedStatus wgqed_trace_amplitudes(const struct WgqedTrace *trace,
                                        struct WgqedComplex *buf,
                                        size_t cap);

// Total norm per sample; NaN for reduced-description traces.
//
// # Safety
// `trace` must be a live handle and `buf` writable for `cap` values.
enum WgqedStatus wgqed_trace_norm(const struct WgqedTrace *trace, double *buf, size_t cap);

// # Safety
// `trace` must be a live handle and `path` a NUL-terminated string.
enum WgqedStatus wgqed_trace_write_csv(const struct WgqedTrace *trace, const char *path);

// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum WgqedStatus wgqed_trace_read_csv(const char *path, struct WgqedTrace **out);

// Log-linear fit of the survival over `[t_lo, t_hi]`.
//
// # Safety
// `trace` must be a live handle and `out` writable.
enum WgqedStatus wgqed_trace_fit_rate(const struct WgqedTrace *trace,
                                      double t_lo,
                                      double t_hi,
                                      struct WgqedRateFit *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WGQED_H */
