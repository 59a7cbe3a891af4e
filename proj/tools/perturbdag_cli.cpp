// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "perturbdag/perturbdag.h"

namespace fs = std::filesystem;

namespace {

struct CallFailed {
  pdag_status status;
};

void check(pdag_status status) {
  if (status != PDAG_OK) throw CallFailed{status};
}

template <typename T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};
using ConfigPtr = std::unique_ptr<pdag_config, Deleter<pdag_config, pdag_config_destroy>>;
using DatasetPtr = std::unique_ptr<pdag_dataset, Deleter<pdag_dataset, pdag_dataset_destroy>>;
using TruthPtr = std::unique_ptr<pdag_truth, Deleter<pdag_truth, pdag_truth_destroy>>;
using FitPtr = std::unique_ptr<pdag_fit, Deleter<pdag_fit, pdag_fit_destroy>>;

struct SimulateArgs {
  std::string preset;
  std::string spec;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t cells = 0;
  unsigned threads = 0;
};

struct FitArgs {
  std::string config_file;
  std::string data_dir;
  std::vector<std::pair<std::string, std::string>> settings;
};

struct EvaluateArgs {
  std::string dag;
  std::string truth;
  std::string restrict_genes;
};

int run_simulate(const SimulateArgs& a, const CLI::App& cmd) {
  pdag_truth* raw = nullptr;
  if (!a.preset.empty()) {
    check(pdag_truth_preset(a.preset.c_str(), &raw));
  } else {
    check(pdag_truth_load(a.spec.c_str(), &raw));
  }
  TruthPtr truth(raw);
  if (cmd.count("--seed")) check(pdag_truth_set_seed(truth.get(), a.seed));
  if (cmd.count("--cells")) check(pdag_truth_set_cells(truth.get(), a.cells));
  pdag_dataset* data = nullptr;
  check(pdag_simulate(truth.get(), a.threads, &data));
  DatasetPtr dataset(data);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  check(pdag_dataset_save(dataset.get(), a.out.c_str()));
  check(pdag_truth_save(truth.get(), (fs::path(a.out) / "truth.json").string().c_str()));
  std::size_t n = 0, p = 0;
  check(pdag_dataset_shape(dataset.get(), &n, &p, nullptr));
  std::cerr << "simulated " << n << " cells x " << p << " genes into " << a.out << "\n";
  return 0;
}

int run_fit(const FitArgs& a) {
  pdag_config* raw = nullptr;
  check(pdag_config_create(&raw));
  ConfigPtr config(raw);
  if (!a.config_file.empty()) check(pdag_config_load_file(config.get(), a.config_file.c_str()));
  if (!a.data_dir.empty()) {
    const fs::path dir(a.data_dir);
    check(pdag_config_set(config.get(), "counts", (dir / "counts.tsv").string().c_str()));
    check(pdag_config_set(config.get(), "guides", (dir / "guides.tsv").string().c_str()));
    for (const char* name : {"covariates", "size_factors"}) {
      const auto file = dir / (std::string(name) + ".tsv");
      if (fs::exists(file)) check(pdag_config_set(config.get(), name, file.string().c_str()));
    }
  }
  for (const auto& [k, v] : a.settings) check(pdag_config_set(config.get(), k.c_str(), v.c_str()));

  char* out_dir = nullptr;
  check(pdag_config_get(config.get(), "out", &out_dir));
  const std::string out = out_dir;
  pdag_string_free(out_dir);
  if (out.empty()) {
    std::cerr << "error: no output directory (use --out or out= in the config file)\n";
    return 2;
  }

  pdag_dataset* data = nullptr;
  check(pdag_dataset_load(config.get(), &data));
  DatasetPtr dataset(data);
  char* report = nullptr;
  const auto valid = pdag_dataset_validate(dataset.get(), &report);
  if (valid != PDAG_OK) {
    std::cerr << "error: invalid dataset:\n" << (report ? report : pdag_last_error());
    pdag_string_free(report);
    return 1;
  }
  pdag_fit* fit_raw = nullptr;
  check(pdag_fit_run(dataset.get(), config.get(), &fit_raw));
  FitPtr fit(fit_raw);
  check(pdag_fit_write(fit.get(), out.c_str()));
  std::size_t genes = 0, called = 0, tested = 0;
  check(pdag_fit_counts(fit.get(), &genes, &called, &tested));
  std::cerr << "fitted " << genes << " genes: " << called << " of " << tested
            << " regressed edges called; results in " << out << "\n";
  return 0;
}

int run_evaluate(const EvaluateArgs& a) {
  char* metrics = nullptr;
  check(pdag_evaluate_files(a.dag.c_str(), a.truth.c_str(),
                            a.restrict_genes.empty() ? nullptr : a.restrict_genes.c_str(), &metrics));
  std::cout << metrics;
  pdag_string_free(metrics);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal gene network learning from Perturb-seq counts"};
  app.set_version_flag("--version", std::string(pdag_version()));
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a dataset from a ground-truth SEM");
  auto* source = simulate->add_option_group("source");
  source->add_option("--preset", sim.preset, "Built-in truth: eight-gene or three-chain");
  source->add_option("--spec", sim.spec, "Truth specification (truth.json schema)");
  source->require_option(1);
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Random seed (overrides the spec)");
  simulate->add_option("--cells", sim.cells, "Number of cells (overrides the spec)");
  simulate->add_option("--threads", sim.threads, "Worker threads");

  FitArgs fit;
  auto* fitcmd = app.add_subcommand("fit", "Estimate the causal DAG from a dataset");
  fitcmd->add_option("--config", fit.config_file, "key=value configuration file");
  fitcmd->add_option("--data", fit.data_dir, "Directory with counts.tsv, guides.tsv, ...");
  const std::vector<std::pair<std::string, std::string>> flag_keys = {
      {"--alpha", "alpha"},
      {"--ancestry-mode", "ancestry_mode"},
      {"--pvalue-convention", "pvalue_convention"},
      {"--min-cells", "min_cells"},
      {"--spending", "spending"},
      {"--seed", "seed"},
      {"--threads", "threads"},
      {"--exclude-genes", "exclude_genes"},
      {"--untargeted-as-covariates", "untargeted_as_covariates"},
      {"--counts", "counts"},
      {"--guides", "guides"},
      {"--covariates", "covariates"},
      {"--size-factors", "size_factors"},
      {"--genes", "genes"},
      {"--cell-ids", "cells"},
      {"--out", "out"},
  };
  std::vector<std::string> flag_values(flag_keys.size());
  for (std::size_t i = 0; i < flag_keys.size(); ++i) {
    fitcmd->add_option(flag_keys[i].first, flag_values[i], "Overrides config key '" + flag_keys[i].second + "'");
  }

  EvaluateArgs eval;
  auto* evaluate = app.add_subcommand("evaluate", "Score a fitted dag.json against truth.json");
  evaluate->add_option("--dag", eval.dag, "dag.json from fit")->required();
  evaluate->add_option("--truth", eval.truth, "truth.json from simulate")->required();
  evaluate->add_option("--restrict", eval.restrict_genes,
                       "Comma-separated genes; compare on the induced truth subgraph");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*simulate) return run_simulate(sim, *simulate);
    if (*fitcmd) {
      for (std::size_t i = 0; i < flag_keys.size(); ++i) {
        if (fitcmd->count(flag_keys[i].first)) fit.settings.emplace_back(flag_keys[i].second, flag_values[i]);
      }
      return run_fit(fit);
    }
    if (*evaluate) return run_evaluate(eval);
  } catch (const CallFailed& f) {
    std::cerr << "error: " << pdag_last_error() << "\n";
    return f.status == PDAG_ERR_INTERNAL ? 3 : 1;
  }
  return 0;
}
