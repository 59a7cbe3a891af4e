/* SPDX-License-Identifier: Apache-2.0 */
#ifndef PERTURBDAG_PERTURBDAG_H
#define PERTURBDAG_PERTURBDAG_H

#include <stddef.h>
#include <stdint.h>

#if defined(PDAG_BUILDING_LIBRARY)
#define PDAG_API __attribute__((visibility("default")))
#else
#define PDAG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pdag_status {
  PDAG_OK = 0,
  PDAG_ERR_INVALID_ARGUMENT = 1,
  PDAG_ERR_VALIDATION = 2,
  PDAG_ERR_IO = 3,
  PDAG_ERR_PARSE = 4,
  PDAG_ERR_NUMERICAL = 5,
  PDAG_ERR_CYCLE = 6,
  PDAG_ERR_INTERNAL = 7
} pdag_status;

typedef struct pdag_config pdag_config;
typedef struct pdag_dataset pdag_dataset;
typedef struct pdag_truth pdag_truth;
typedef struct pdag_fit pdag_fit;

typedef struct pdag_edge {
  size_t parent;
  size_t child;
  double theta;
  double se_mt;
  double se_sandwich;
  double z;
  double p;
  double alpha_used;
  int called;
} pdag_edge;

PDAG_API const char* pdag_version(void);

/* Message of the last failed call on this thread; empty after success. */
PDAG_API const char* pdag_last_error(void);

/* Frees strings returned through char** out-parameters. */
PDAG_API void pdag_string_free(char* s);

/* Run configuration: flat key=value settings (alpha, ancestry_mode,
 * pvalue_convention, min_cells, spending, seed, threads,
 * untargeted_as_covariates, exclude_genes and input/output paths). */
PDAG_API pdag_status pdag_config_create(pdag_config** out);
PDAG_API void pdag_config_destroy(pdag_config* config);
PDAG_API pdag_status pdag_config_set(pdag_config* config, const char* key, const char* value);
PDAG_API pdag_status pdag_config_load_file(pdag_config* config, const char* path);
PDAG_API pdag_status pdag_config_get(const pdag_config* config, const char* key, char** value);

/* Loads the files named by the config's counts/guides/covariates/
 * size_factors/genes/cells keys. Without size_factors, total-count size
 * factors are used. */
PDAG_API pdag_status pdag_dataset_load(const pdag_config* config, pdag_dataset** out);
/* counts.tsv, guides.tsv and, when present, covariates.tsv and
 * size_factors.tsv from one directory. */
PDAG_API pdag_status pdag_dataset_load_dir(const char* dir, pdag_dataset** out);
PDAG_API void pdag_dataset_destroy(pdag_dataset* dataset);
PDAG_API pdag_status pdag_dataset_shape(const pdag_dataset* dataset, size_t* cells, size_t* genes,
                                        size_t* covariates);
/* PDAG_OK when valid; PDAG_ERR_VALIDATION with one violation per line in
 * *report otherwise. *report may be NULL on success. */
PDAG_API pdag_status pdag_dataset_validate(const pdag_dataset* dataset, char** report);
PDAG_API pdag_status pdag_dataset_save(const pdag_dataset* dataset, const char* dir);

/* Presets: "eight-gene", "three-chain". */
PDAG_API pdag_status pdag_truth_preset(const char* name, pdag_truth** out);
PDAG_API pdag_status pdag_truth_load(const char* path, pdag_truth** out);
PDAG_API pdag_status pdag_truth_save(const pdag_truth* truth, const char* path);
PDAG_API pdag_status pdag_truth_set_seed(pdag_truth* truth, uint64_t seed);
PDAG_API pdag_status pdag_truth_set_cells(pdag_truth* truth, size_t n_cells);
PDAG_API void pdag_truth_destroy(pdag_truth* truth);

PDAG_API pdag_status pdag_simulate(const pdag_truth* truth, unsigned threads, pdag_dataset** out);

PDAG_API pdag_status pdag_fit_run(const pdag_dataset* dataset, const pdag_config* config,
                                  pdag_fit** out);
PDAG_API void pdag_fit_destroy(pdag_fit* fit);
/* dag.json, edges.tsv, graph.dot and audit tables. */
PDAG_API pdag_status pdag_fit_write(const pdag_fit* fit, const char* dir);
PDAG_API pdag_status pdag_fit_counts(const pdag_fit* fit, size_t* genes, size_t* called_edges,
                                     size_t* tested_edges);
/* Tested edges in search order; gene indices refer to pdag_fit_gene_name. */
PDAG_API pdag_status pdag_fit_edge(const pdag_fit* fit, size_t index, pdag_edge* edge);
/* Borrowed pointer, valid until the fit is destroyed. */
PDAG_API pdag_status pdag_fit_gene_name(const pdag_fit* fit, size_t index, const char** name);
/* Gene indices, root-most first; `capacity` must be at least the gene count. */
PDAG_API pdag_status pdag_fit_ordering(const pdag_fit* fit, size_t* ordering, size_t capacity);

/* Metrics JSON for dag.json against truth.json. `restrict_genes` is a
 * comma-separated gene list or NULL. */
PDAG_API pdag_status pdag_evaluate_files(const char* dag_json, const char* truth_json,
                                         const char* restrict_genes, char** metrics_json);

#ifdef __cplusplus
}
#endif

#endif
