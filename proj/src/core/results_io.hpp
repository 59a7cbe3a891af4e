// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "core/evaluate.hpp"
#include "core/pipeline.hpp"

namespace perturbdag {

constexpr int kDagSchemaVersion = 1;

std::string dag_json_text(const FitResult& fit, const std::string& version,
                          const std::string& created_at);

// parent child theta se_mt z p alpha_used called, one row per regressed pair.
std::string edges_tsv_text(const CausalDag& dag);

// Called edges; blue for positive theta, red for negative.
std::string graph_dot_text(const CausalDag& dag);

// batch node m_t alpha_t rejections
std::string fdr_audit_tsv_text(const CausalDag& dag);

// target k theta se_sandwich se_mt z p
std::string second_stage_tsv_text(const CausalDag& dag);

// Writes dag.json, edges.tsv, graph.dot, descendant_tests.tsv, fdr_audit.tsv
// and second_stage.tsv into `dir` (created if needed).
void write_fit_outputs(const FitResult& fit, const std::filesystem::path& dir,
                       const std::string& version, const std::string& created_at);

DagSummary dag_summary_from_json_text(const std::string& text);
DagSummary load_dag_summary(const std::filesystem::path& path);

// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace perturbdag
