/* SPDX-License-Identifier: Apache-2.0 */
/* Exercises the C API from plain C. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include <perturbdag/perturbdag.h>

static int failures = 0;

#define EXPECT(cond)                                               \
  do {                                                             \
    if (!(cond)) {                                                 \
      fprintf(stderr, "%s:%d: failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                  \
    }                                                              \
  } while (0)

int main(void) {
  pdag_config* config = NULL;
  pdag_truth* truth = NULL;
  pdag_dataset* data = NULL;
  pdag_fit* fit = NULL;
  char* value = NULL;
  size_t cells = 0, genes = 0, covariates = 0, called = 0, tested = 0, i;
  size_t ordering[8];
  pdag_edge edge;
  const char* name = NULL;

  EXPECT(strlen(pdag_version()) > 0);

  EXPECT(pdag_truth_preset("no-such-preset", &truth) == PDAG_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(pdag_last_error()) > 0);
  EXPECT(pdag_truth_preset("three-chain", &truth) == PDAG_OK);
  EXPECT(pdag_truth_set_cells(truth, 3000) == PDAG_OK);
  EXPECT(pdag_truth_set_seed(truth, 17) == PDAG_OK);
  EXPECT(pdag_simulate(truth, 1, &data) == PDAG_OK);
  EXPECT(pdag_dataset_shape(data, &cells, &genes, &covariates) == PDAG_OK);
  EXPECT(cells == 3000 && genes == 3 && covariates == 1);
  EXPECT(pdag_dataset_validate(data, &value) == PDAG_OK);
  pdag_string_free(value);
  value = NULL;

  EXPECT(pdag_config_create(&config) == PDAG_OK);
  EXPECT(pdag_config_set(config, "alpha", "0.1") == PDAG_OK);
  EXPECT(pdag_config_set(config, "no_such_key", "1") == PDAG_ERR_INVALID_ARGUMENT);
  EXPECT(pdag_config_get(config, "alpha", &value) == PDAG_OK);
  EXPECT(value != NULL && atof(value) == 0.1);
  pdag_string_free(value);

  EXPECT(pdag_fit_run(data, config, &fit) == PDAG_OK);
  EXPECT(pdag_fit_counts(fit, &genes, &called, &tested) == PDAG_OK);
  EXPECT(genes == 3);
  EXPECT(tested >= called);
  EXPECT(pdag_fit_ordering(fit, ordering, 1) == PDAG_ERR_INVALID_ARGUMENT);
  EXPECT(pdag_fit_ordering(fit, ordering, 8) == PDAG_OK);
  for (i = 0; i < tested; ++i) {
    EXPECT(pdag_fit_edge(fit, i, &edge) == PDAG_OK);
    EXPECT(edge.parent < genes && edge.child < genes);
    EXPECT(edge.p >= 0.0 && edge.p <= 1.0);
  }
  EXPECT(pdag_fit_edge(fit, tested, &edge) == PDAG_ERR_INVALID_ARGUMENT);
  EXPECT(pdag_fit_gene_name(fit, 0, &name) == PDAG_OK);
  EXPECT(name != NULL && strcmp(name, "G1") == 0);

  {
    pdag_fit* none = NULL;
    pdag_dataset* missing = NULL;
    pdag_truth* absent = NULL;
    EXPECT(pdag_fit_run(NULL, config, &none) == PDAG_ERR_INVALID_ARGUMENT);
    EXPECT(pdag_dataset_load_dir("/nonexistent/perturbdag", &missing) != PDAG_OK);
    EXPECT(pdag_truth_load("/nonexistent/truth.json", &absent) != PDAG_OK);
  }

  pdag_fit_destroy(fit);
  pdag_dataset_destroy(data);
  pdag_truth_destroy(truth);
  pdag_config_destroy(config);
  pdag_fit_destroy(NULL);

  if (failures) fprintf(stderr, "%d failures\n", failures);
  else printf("c api: all checks passed\n");
  return failures ? 1 : 0;
}
