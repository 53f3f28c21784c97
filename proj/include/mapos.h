/*
 * mapos — movable-antenna secure-link simulation, per-slot position
 * optimization, and position forecasting.
 *
 * C API over the C++ core: opaque handles, integer status codes, and a
 * per-thread error message. Status codes coincide with the CLI exit codes.
 */
#ifndef MAPOS_H
#define MAPOS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mapos_status {
    MAPOS_OK = 0,
    MAPOS_ERR_CONFIG = 2,     /* bad configuration file, key, or value */
    MAPOS_ERR_IO = 3,         /* missing/corrupt/unwritable files */
    MAPOS_ERR_NUMERIC = 4,    /* NaN, divergence, invalid numeric input */
    MAPOS_ERR_INFEASIBLE = 5  /* constraint set admits no solution */
} mapos_status;

typedef struct mapos_config mapos_config;
typedef struct mapos_dataset mapos_dataset;
typedef struct mapos_model mapos_model;

/* Message for the calling thread's most recent failure; never NULL. */
const char* mapos_last_error(void);

/* ---- configuration ---------------------------------------------------- */

/* Built-in defaults (9 movable antennas at 28 GHz, 600-slot scenario). */
mapos_status mapos_config_default(mapos_config** out);
/* Parse a config file / config text (INI-style sections, key = value). */
mapos_status mapos_config_load(const char* path, mapos_config** out);
mapos_status mapos_config_parse(const char* text, mapos_config** out);
mapos_status mapos_config_override_seed(mapos_config* cfg, uint64_t seed);
/* threads = 0 selects the hardware concurrency; never changes results. */
mapos_status mapos_config_override_threads(mapos_config* cfg, int threads);
/* kind: proposed | lstm | transformer | narx */
mapos_status mapos_config_override_model_kind(mapos_config* cfg, const char* kind);
void mapos_config_free(mapos_config* cfg);

/* ---- pipeline commands ------------------------------------------------ */

/* Optimize antenna positions for every scenario slot; write the dataset. */
mapos_status mapos_gen_data(const mapos_config* cfg, const char* out_path, int verbose);

/* Convergence history (CSV: iteration,gbest_fit,mean_fit,repairs) of one
 * slot's swarm run. dataset_path may be NULL: the slot chain is then
 * re-simulated from slot 0. */
mapos_status mapos_optimize_slot(const mapos_config* cfg, int slot,
                                 const char* dataset_path, const char* out_csv);

/* Train the configured model kind; writes the weight file and, when log_csv
 * is non-NULL, a training log (epoch,train_nmse,val_nmse,wall_ms). */
mapos_status mapos_train(const mapos_config* cfg, const char* dataset_path,
                         const char* model_out, const char* log_csv, int verbose);

/* Evaluate trained models on the dataset's test split; writes the metric CSV
 * tables into out_dir. */
mapos_status mapos_eval(const mapos_config* cfg, const char* dataset_path,
                        const char* const* model_paths, size_t n_models,
                        const char* out_dir);

/* Azimuth gain sweep (fixed grid / optimized / optimized+MRT) at one slot. */
mapos_status mapos_gain_pattern(const mapos_config* cfg, const char* dataset_path,
                                int slot, const char* out_csv);

/* Render an evaluation directory into CSV + SVG charts + manifest. */
mapos_status mapos_report(const char* eval_dir, const char* out_dir);

/* ---- dataset inspection ------------------------------------------------ */

mapos_status mapos_dataset_load(const char* path, mapos_dataset** out);
void mapos_dataset_free(mapos_dataset* ds);
mapos_status mapos_dataset_slots(const mapos_dataset* ds, int* out);
mapos_status mapos_dataset_antennas(const mapos_dataset* ds, size_t* out);
/* Achieved secrecy rate (bits/s/Hz) of one record. */
mapos_status mapos_dataset_secrecy(const mapos_dataset* ds, int slot, double* out);
/* Antenna coordinates of one record: xyz must hold 3*antennas doubles. */
mapos_status mapos_dataset_layout(const mapos_dataset* ds, int slot, double* xyz,
                                  size_t len);

/* ---- model inspection and prediction ----------------------------------- */

mapos_status mapos_model_load(const char* path, mapos_model** out);
void mapos_model_free(mapos_model* m);
/* Writes the kind name (proposed/lstm/transformer/narx) into buf. */
mapos_status mapos_model_kind(const mapos_model* m, char* buf, size_t buf_len);
mapos_status mapos_model_geometry(const mapos_model* m, int* t_hist, int* t_pre,
                                  size_t* antennas);
/* history: t_hist*antennas*3 coordinates in meters (row-major by slot);
 * out: t_pre*antennas*3 predicted coordinates in meters, snapped to the
 * feasible box. */
mapos_status mapos_model_predict(const mapos_model* m, const double* history,
                                 size_t history_len, double* out, size_t out_len);

#ifdef __cplusplus
}
#endif

#endif /* MAPOS_H */
