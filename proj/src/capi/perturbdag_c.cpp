// SPDX-License-Identifier: Apache-2.0
#include "perturbdag/perturbdag.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <optional>
#include <string>

#include "core/config.hpp"
#include "core/dataset_io.hpp"
#include "core/evaluate.hpp"
#include "core/pipeline.hpp"
#include "core/results_io.hpp"
#include "core/simulator.hpp"
#include "core/truth_io.hpp"

struct pdag_config {
  perturbdag::RunConfig value;
};
struct pdag_dataset {
  perturbdag::PerturbDataset value;
};
struct pdag_truth {
  perturbdag::GroundTruth value;
};
struct pdag_fit {
  perturbdag::FitResult value;
};

namespace {

constexpr const char* kVersion = "0.1.0";

thread_local std::string last_error;

pdag_status status_of(perturbdag::ErrorCode code) {
  using perturbdag::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return PDAG_ERR_INVALID_ARGUMENT;
    case ErrorCode::kValidation: return PDAG_ERR_VALIDATION;
    case ErrorCode::kIo: return PDAG_ERR_IO;
    case ErrorCode::kParse: return PDAG_ERR_PARSE;
    case ErrorCode::kNumerical: return PDAG_ERR_NUMERICAL;
    case ErrorCode::kCycle: return PDAG_ERR_CYCLE;
    case ErrorCode::kInternal: return PDAG_ERR_INTERNAL;
  }
  return PDAG_ERR_INTERNAL;
}

template <typename Body>
pdag_status guarded(Body&& body) {
  try {
    last_error.clear();
    body();
    return PDAG_OK;
  } catch (const perturbdag::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return PDAG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return PDAG_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw perturbdag::Error(perturbdag::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* pdag_version(void) { return kVersion; }

const char* pdag_last_error(void) { return last_error.c_str(); }

void pdag_string_free(char* s) { std::free(s); }

pdag_status pdag_config_create(pdag_config** out) {
  return guarded([&] {
    need(out, "out");
    auto* c = new pdag_config;
    c->value.threads = perturbdag::default_thread_budget();
    *out = c;
  });
}

void pdag_config_destroy(pdag_config* config) { delete config; }

pdag_status pdag_config_set(pdag_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    perturbdag::set_config_value(config->value, key, value);
  });
}

pdag_status pdag_config_load_file(pdag_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    perturbdag::apply_config_file(config->value, path);
  });
}

pdag_status pdag_config_get(const pdag_config* config, const char* key, char** value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    for (const auto& [k, v] : perturbdag::config_entries(config->value)) {
      if (k == key) {
        *value = copy_string(v);
        return;
      }
    }
    throw perturbdag::Error(perturbdag::ErrorCode::kInvalidArgument,
                            std::string("unknown config key '") + key + "'");
  });
}

pdag_status pdag_dataset_load(const pdag_config* config, pdag_dataset** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    const auto& c = config->value;
    perturbdag::require(!c.counts.empty() && !c.guides.empty(), perturbdag::ErrorCode::kInvalidArgument,
                        "counts and guides paths are required");
    perturbdag::DatasetPaths paths;
    paths.counts = c.counts;
    paths.guides = c.guides;
    if (!c.covariates.empty()) paths.covariates = c.covariates;
    if (!c.size_factors.empty()) paths.size_factors = c.size_factors;
    if (!c.genes.empty()) paths.genes = c.genes;
    if (!c.cells.empty()) paths.cells = c.cells;
    auto* d = new pdag_dataset{perturbdag::load_dataset(paths)};
    *out = d;
  });
}

pdag_status pdag_dataset_load_dir(const char* dir, pdag_dataset** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new pdag_dataset{perturbdag::load_dataset(perturbdag::default_paths(dir))};
  });
}

void pdag_dataset_destroy(pdag_dataset* dataset) { delete dataset; }

pdag_status pdag_dataset_shape(const pdag_dataset* dataset, size_t* cells, size_t* genes,
                               size_t* covariates) {
  return guarded([&] {
    need(dataset, "dataset");
    if (cells) *cells = dataset->value.num_cells();
    if (genes) *genes = dataset->value.num_genes();
    if (covariates) *covariates = dataset->value.num_covariates();
  });
}

pdag_status pdag_dataset_validate(const pdag_dataset* dataset, char** report) {
  const auto status = guarded([&] {
    need(dataset, "dataset");
    const auto problems = perturbdag::validate(dataset->value);
    if (report) *report = nullptr;
    if (problems.empty()) return;
    std::string text;
    for (const auto& p : problems) text += p + "\n";
    if (report) *report = copy_string(text);
    throw perturbdag::Error(perturbdag::ErrorCode::kValidation, text);
  });
  return status;
}

pdag_status pdag_dataset_save(const pdag_dataset* dataset, const char* dir) {
  return guarded([&] {
    need(dataset, "dataset");
    need(dir, "dir");
    perturbdag::save_dataset(dataset->value, dir);
  });
}

pdag_status pdag_truth_preset(const char* name, pdag_truth** out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    const std::string n = name;
    if (n == "eight-gene") {
      *out = new pdag_truth{perturbdag::eight_gene_preset()};
    } else if (n == "three-chain") {
      *out = new pdag_truth{perturbdag::three_chain_preset()};
    } else {
      throw perturbdag::Error(perturbdag::ErrorCode::kInvalidArgument,
                              "unknown preset '" + n + "' (expected eight-gene or three-chain)");
    }
  });
}

pdag_status pdag_truth_load(const char* path, pdag_truth** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new pdag_truth{perturbdag::load_truth(path)};
  });
}

pdag_status pdag_truth_save(const pdag_truth* truth, const char* path) {
  return guarded([&] {
    need(truth, "truth");
    need(path, "path");
    perturbdag::save_truth(truth->value, path);
  });
}

pdag_status pdag_truth_set_seed(pdag_truth* truth, uint64_t seed) {
  return guarded([&] {
    need(truth, "truth");
    truth->value.seed = seed;
  });
}

pdag_status pdag_truth_set_cells(pdag_truth* truth, size_t n_cells) {
  return guarded([&] {
    need(truth, "truth");
    truth->value.n_cells = n_cells;
  });
}

void pdag_truth_destroy(pdag_truth* truth) { delete truth; }

pdag_status pdag_simulate(const pdag_truth* truth, unsigned threads, pdag_dataset** out) {
  return guarded([&] {
    need(truth, "truth");
    need(out, "out");
    auto sim = perturbdag::simulate(truth->value, threads == 0 ? 1 : threads);
    *out = new pdag_dataset{std::move(sim.dataset)};
  });
}

pdag_status pdag_fit_run(const pdag_dataset* dataset, const pdag_config* config, pdag_fit** out) {
  return guarded([&] {
    need(dataset, "dataset");
    need(config, "config");
    need(out, "out");
    *out = new pdag_fit{perturbdag::run_fit(dataset->value, config->value)};
  });
}

void pdag_fit_destroy(pdag_fit* fit) { delete fit; }

pdag_status pdag_fit_write(const pdag_fit* fit, const char* dir) {
  return guarded([&] {
    need(fit, "fit");
    need(dir, "dir");
    perturbdag::write_fit_outputs(fit->value, dir, kVersion, perturbdag::utc_timestamp());
  });
}

pdag_status pdag_fit_counts(const pdag_fit* fit, size_t* genes, size_t* called_edges,
                            size_t* tested_edges) {
  return guarded([&] {
    need(fit, "fit");
    const auto& dag = fit->value.dag;
    if (genes) *genes = dag.gene_names.size();
    if (called_edges) *called_edges = dag.edges.size();
    if (tested_edges) *tested_edges = dag.tested_edges.size();
  });
}

pdag_status pdag_fit_edge(const pdag_fit* fit, size_t index, pdag_edge* edge) {
  return guarded([&] {
    need(fit, "fit");
    need(edge, "edge");
    const auto& edges = fit->value.dag.tested_edges;
    perturbdag::require(index < edges.size(), perturbdag::ErrorCode::kInvalidArgument,
                        "edge index out of range");
    const auto& e = edges[index];
    *edge = pdag_edge{e.parent, e.child, e.theta, e.se_mt, e.se_sandwich,
                      e.z,      e.p,     e.alpha_used, e.called ? 1 : 0};
  });
}

pdag_status pdag_fit_gene_name(const pdag_fit* fit, size_t index, const char** name) {
  return guarded([&] {
    need(fit, "fit");
    need(name, "name");
    const auto& genes = fit->value.dag.gene_names;
    perturbdag::require(index < genes.size(), perturbdag::ErrorCode::kInvalidArgument,
                        "gene index out of range");
    *name = genes[index].c_str();
  });
}

pdag_status pdag_fit_ordering(const pdag_fit* fit, size_t* ordering, size_t capacity) {
  return guarded([&] {
    need(fit, "fit");
    need(ordering, "ordering");
    const auto& order = fit->value.dag.ordering;
    perturbdag::require(capacity >= order.size(), perturbdag::ErrorCode::kInvalidArgument,
                        "ordering buffer too small");
    for (std::size_t r = 0; r < order.size(); ++r) ordering[r] = order[r];
  });
}

pdag_status pdag_evaluate_files(const char* dag_json, const char* truth_json,
                                const char* restrict_genes, char** metrics_json) {
  return guarded([&] {
    need(dag_json, "dag_json");
    need(truth_json, "truth_json");
    need(metrics_json, "metrics_json");
    const auto dag = perturbdag::load_dag_summary(dag_json);
    const auto truth = perturbdag::load_truth(truth_json);
    std::optional<std::vector<std::string>> restriction;
    if (restrict_genes && *restrict_genes) {
      restriction.emplace();
      std::string item;
      for (const char* c = restrict_genes;; ++c) {
        if (*c == ',' || *c == '\0') {
          if (!item.empty()) restriction->push_back(item);
          item.clear();
          if (*c == '\0') break;
        } else if (*c != ' ') {
          item += *c;
        }
      }
    }
    const auto metrics = perturbdag::evaluate(dag, truth, restriction);
    *metrics_json = copy_string(perturbdag::metrics_to_json_text(metrics));
  });
}

}  // extern "C"
