#ifndef CQSIM_CQSIM_H
#define CQSIM_CQSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(CQSIM_BUILDING_LIBRARY)
#define CQSIM_API __attribute__((visibility("default")))
#else
#define CQSIM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cqsim_status {
    CQSIM_OK = 0,
    CQSIM_ERR_INVALID_ARGUMENT,
    CQSIM_ERR_CONFIG,
    CQSIM_ERR_PARSE,
    CQSIM_ERR_IO,
    CQSIM_ERR_DIMENSION,
    CQSIM_ERR_PRECONDITION,
    CQSIM_ERR_WEIGHT_MISMATCH,
    CQSIM_ERR_SINGULAR_PENCIL,
    CQSIM_ERR_SINGULAR_PORT,
    CQSIM_ERR_SINGULAR_SYMBOL,
    CQSIM_ERR_ILL_CONDITIONED,
    CQSIM_ERR_IMAGINARY_RESIDUE,
    CQSIM_ERR_NEWTON_DIVERGED,
    CQSIM_ERR_RANK_DEFICIENT,
    CQSIM_ERR_DEGENERATE,
    CQSIM_ERR_OVERFLOW,
    CQSIM_ERR_INTERNAL
} cqsim_status;

/* Message of the last failed call on the calling thread ("" if none). */
CQSIM_API const char* cqsim_last_error(void);
CQSIM_API const char* cqsim_status_name(cqsim_status status);
/* Non-zero for failures of the numerics rather than of the input. */
CQSIM_API int cqsim_status_is_numerical(cqsim_status status);

typedef enum cqsim_method {
    CQSIM_EULER = 0,
    CQSIM_BDF1,
    CQSIM_BDF2,
    CQSIM_RADAU1,
    CQSIM_RADAU2,
    CQSIM_RADAU3
} cqsim_method;

typedef enum cqsim_solver { CQSIM_COUPLED = 0, CQSIM_REDUCED } cqsim_solver;
typedef enum cqsim_contour { CQSIM_CONTOUR_EXPERIMENT = 0, CQSIM_CONTOUR_CONSERVATIVE } cqsim_contour;
typedef enum cqsim_conv { CQSIM_CONV_FFT = 0, CQSIM_CONV_NAIVE } cqsim_conv;

/* Parses "euler", "bdf2", "radau3", ... */
CQSIM_API cqsim_status cqsim_method_from_name(const char* name, cqsim_method* out);
CQSIM_API int cqsim_method_convergence_order(cqsim_method method);

typedef struct cqsim_run_config {
    cqsim_method method;
    cqsim_solver solver;
    double horizon;
    int32_t steps;
    cqsim_contour contour;
    double eps;
    cqsim_conv conv;
    int32_t cache_factorization;
} cqsim_run_config;

/* euler, reduced, T = 1, N = 100, experiment contour, eps 1e-16, fft. */
CQSIM_API void cqsim_run_config_init(cqsim_run_config* cfg);

/* ---- circuits ---------------------------------------------------------- */

typedef struct cqsim_circuit cqsim_circuit;

typedef enum cqsim_preset { CQSIM_PRESET_MODEL_PROBLEM = 0, CQSIM_PRESET_RECTIFIER } cqsim_preset;

/* Diode offsets: pass 0 to keep the netlist values (default +1). */
CQSIM_API cqsim_status cqsim_circuit_load(const char* path, double diode_offset,
                                          cqsim_circuit** out);
CQSIM_API cqsim_status cqsim_circuit_parse(const char* text, const char* base_dir,
                                           double diode_offset, cqsim_circuit** out);
/* device_model may be NULL for the preset default. */
CQSIM_API cqsim_status cqsim_circuit_preset(cqsim_preset preset, const char* device_model,
                                            double diode_offset, cqsim_circuit** out);
/* Writes the preset netlist text into buf (NUL terminated); *needed receives
 * the required size including the terminator. */
CQSIM_API cqsim_status cqsim_preset_netlist(cqsim_preset preset, const char* device_model,
                                            char* buf, size_t len, size_t* needed);
CQSIM_API void cqsim_circuit_free(cqsim_circuit* circuit);

CQSIM_API int64_t cqsim_circuit_dim(const cqsim_circuit* circuit);
CQSIM_API int64_t cqsim_circuit_ports(const cqsim_circuit* circuit);
CQSIM_API int64_t cqsim_circuit_device_states(const cqsim_circuit* circuit);
CQSIM_API int64_t cqsim_circuit_nodes(const cqsim_circuit* circuit);
/* Name of unknown i (u_<node>, j_<element>); NULL when out of range. */
CQSIM_API const char* cqsim_circuit_unknown_name(const cqsim_circuit* circuit, int64_t i);

/* ---- weights ----------------------------------------------------------- */

typedef struct cqsim_weights cqsim_weights;

CQSIM_API cqsim_status cqsim_weights_compute(const cqsim_circuit* circuit,
                                             const cqsim_run_config* cfg, cqsim_weights** out);
CQSIM_API cqsim_status cqsim_weights_save(const cqsim_weights* w, const char* path);
CQSIM_API cqsim_status cqsim_weights_load(const char* path, cqsim_weights** out);
CQSIM_API void cqsim_weights_free(cqsim_weights* w);

typedef struct cqsim_weights_info {
    int32_t is_rk;
    int32_t order;
    int64_t rows;
    int64_t cols;
    int32_t count;
    int32_t steps;
    double tau;
    double rho;
    int32_t contour_points;
    double max_imag_residue;
    int64_t transfer_evaluations;
} cqsim_weights_info;

CQSIM_API cqsim_status cqsim_weights_get_info(const cqsim_weights* w, cqsim_weights_info* info);
/* Entry (i, j) of the n-th weight. */
CQSIM_API cqsim_status cqsim_weights_entry(const cqsim_weights* w, int32_t n, int64_t i,
                                           int64_t j, double* out);

/* ---- simulation -------------------------------------------------------- */

typedef struct cqsim_trajectory cqsim_trajectory;

/* Reduced runs use `weights` when non-NULL and compute them first otherwise. */
CQSIM_API cqsim_status cqsim_simulate(const cqsim_circuit* circuit, const cqsim_run_config* cfg,
                                      const cqsim_weights* weights, cqsim_trajectory** out);
CQSIM_API void cqsim_trajectory_free(cqsim_trajectory* traj);

CQSIM_API int32_t cqsim_trajectory_steps(const cqsim_trajectory* traj);
CQSIM_API int64_t cqsim_trajectory_dim(const cqsim_trajectory* traj);
CQSIM_API double cqsim_trajectory_tau(const cqsim_trajectory* traj);
CQSIM_API double cqsim_trajectory_time(const cqsim_trajectory* traj, int32_t n);
CQSIM_API double cqsim_trajectory_value(const cqsim_trajectory* traj, int32_t n, int64_t i);
CQSIM_API int32_t cqsim_trajectory_newton_iters(const cqsim_trajectory* traj, int32_t n);
CQSIM_API double cqsim_trajectory_seconds(const cqsim_trajectory* traj);
/* Transfer evaluations performed while stepping. */
CQSIM_API int64_t cqsim_trajectory_transfer_evaluations(const cqsim_trajectory* traj);
CQSIM_API int32_t cqsim_trajectory_fd_jacobian(const cqsim_trajectory* traj);
CQSIM_API cqsim_status cqsim_trajectory_write_csv(const cqsim_trajectory* traj, const char* path);

typedef struct cqsim_diff {
    double sup_abs;
    double sup_rel;
    double final_abs;
    int32_t worst_step;
} cqsim_diff;

/* `other` is compared on its own grid, which `ref` must refine. */
CQSIM_API cqsim_status cqsim_compare(const cqsim_trajectory* ref, const cqsim_trajectory* other,
                                     cqsim_diff* out);

/* ---- frequency domain -------------------------------------------------- */

/* Bode data of a one-port device on n log-spaced points of [lo, hi]. */
CQSIM_API cqsim_status cqsim_bode(const cqsim_circuit* circuit, double omega_lo, double omega_hi,
                                  int32_t n, double* omega, double* mag_db, double* phase_deg);

typedef struct cqsim_fit_result {
    double a;
    double c;
    double d;
    double residual;
    double relative_residual;
    double R1;
    double R2;
    double L1;
} cqsim_fit_result;

/* (1,1) fit of k(i omega_j) = re_j + i im_j. */
CQSIM_API cqsim_status cqsim_fit_samples(const double* omega, const double* re, const double* im,
                                         int32_t n, cqsim_fit_result* out);
/* Fit of a one-port device sampled on n log-spaced points of [lo, hi]. */
CQSIM_API cqsim_status cqsim_fit_device(const cqsim_circuit* circuit, double omega_lo,
                                        double omega_hi, int32_t n, cqsim_fit_result* out);
/* Same netlist with every device replaced by the fitted R-R-L circuit. */
CQSIM_API cqsim_status cqsim_circuit_with_equivalent_device(const cqsim_circuit* circuit,
                                                            const cqsim_fit_result* fit,
                                                            cqsim_circuit** out);

/* Transfer evaluations performed so far on the calling thread. */
CQSIM_API int64_t cqsim_transfer_evaluations(void);

#ifdef __cplusplus
}
#endif

#endif
