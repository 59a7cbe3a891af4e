// SPDX-License-Identifier: Apache-2.0
#include "core/results_io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/text.hpp"

namespace perturbdag {

using Json = nlohmann::ordered_json;

namespace {

Json real(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json gene_sets(const GeneSets& sets, const std::vector<std::string>& genes) {
  Json j = Json::object();
  for (std::size_t g = 0; g < sets.size(); ++g) {
    Json members = Json::array();
    for (auto k : sets[g]) members.push_back(genes[k]);
    j[genes[g]] = members;
  }
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

}  // namespace

std::string dag_json_text(const FitResult& fit, const std::string& version,
                          const std::string& created_at) {
  const auto& dag = fit.dag;
  const auto& genes = dag.gene_names;
  Json j;
  j["schema_version"] = kDagSchemaVersion;
  j["software"] = {{"name", "perturbdag"}, {"version", version}};
  j["created_at"] = created_at;
  Json config = Json::object();
  for (const auto& [k, v] : config_entries(fit.config)) config[k] = v;
  j["config"] = config;
  j["genes"] = genes;
  j["untargeted_genes"] = fit.untargeted_genes;
  j["dropped_genes"] = fit.dropped_genes;
  Json ordering = Json::array();
  for (auto g : dag.ordering) ordering.push_back(genes[g]);
  j["ordering"] = ordering;

  Json edges = Json::array();
  for (const auto& e : dag.tested_edges) {
    edges.push_back({{"parent", genes[e.parent]},
                     {"child", genes[e.child]},
                     {"theta", real(e.theta)},
                     {"se_mt", real(e.se_mt)},
                     {"se_sandwich", real(e.se_sandwich)},
                     {"z", real(e.z)},
                     {"p", real(e.p)},
                     {"alpha_used", real(e.alpha_used)},
                     {"called", e.called}});
  }
  j["edges"] = edges;

  Json layers = Json::array();
  for (const auto& l : dag.layer_log) {
    Json cand = Json::array(), regressed = Json::array(), dropped = Json::array();
    for (auto k : l.candidates) cand.push_back(genes[k]);
    for (auto k : l.regressed) regressed.push_back(genes[k]);
    for (const auto& d : l.dropped) dropped.push_back({{"gene", genes[d.gene]}, {"reason", d.reason}});
    layers.push_back({{"node", genes[l.node]},
                      {"intervention_score", l.intervention_score},
                      {"tiebreak_score", real(l.tiebreak_score)},
                      {"candidates", cand},
                      {"regressed", regressed},
                      {"dropped", dropped},
                      {"batch", l.batch},
                      {"alpha_used", real(l.alpha_used)},
                      {"rejections", l.rejections},
                      {"warnings", l.warnings}});
  }
  j["layers"] = layers;

  const auto& a = fit.ancestry;
  Json conflicts = Json::array();
  for (const auto& c : a.conflicts) {
    conflicts.push_back({{"from", genes[c.from]}, {"to", genes[c.to]}, {"p", real(c.p)}, {"note", c.note}});
  }
  Json untested = Json::array();
  for (std::size_t r = 0; r < a.pair_tests.num_genes(); ++r) {
    for (std::size_t c = 0; c < a.pair_tests.num_genes(); ++c) {
      if (r == c || a.pair_tests.tested(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))) continue;
      untested.push_back({{"j", genes[r]}, {"k", genes[c]}, {"reason", a.pair_tests.reasons[r][c]}});
    }
  }
  j["ancestry"] = {{"mode", to_string(a.mode)},
                   {"alpha_adjusted_threshold", a.alpha_adjusted_threshold},
                   {"num_tested", a.num_tested},
                   {"num_untested", a.num_untested},
                   {"des_i", gene_sets(a.des_i, genes)},
                   {"des", gene_sets(a.des, genes)},
                   {"anc", gene_sets(a.anc, genes)},
                   {"conflicts", conflicts},
                   {"untested", untested}};

  Json batches = Json::array();
  for (const auto& b : dag.fdr.batch_history) {
    batches.push_back({{"label", b.label},
                       {"m", b.size},
                       {"alpha", b.alpha},
                       {"rejections", b.rejections},
                       {"rejections_plus", b.rejections_plus}});
  }
  j["fdr"] = {{"alpha", dag.fdr.alpha_total}, {"spending", dag.fdr.spending.describe()}, {"batches", batches}};
  j["warnings"] = dag.warnings;
  return j.dump(2) + "\n";
}

std::string edges_tsv_text(const CausalDag& dag) {
  std::string s = "parent\tchild\ttheta\tse_mt\tz\tp\talpha_used\tcalled\n";
  for (const auto& e : dag.tested_edges) {
    s += dag.gene_names[e.parent] + '\t' + dag.gene_names[e.child] + '\t' + format_real(e.theta) +
         '\t' + format_real(e.se_mt) + '\t' + format_real(e.z) + '\t' + format_real(e.p) + '\t' +
         format_real(e.alpha_used) + '\t' + (e.called ? "1" : "0") + '\n';
  }
  return s;
}

std::string graph_dot_text(const CausalDag& dag) {
  std::string s = "digraph perturbdag {\n";
  for (auto g : dag.ordering) s += "  \"" + dag.gene_names[g] + "\";\n";
  for (const auto& e : dag.edges) {
    s += "  \"" + dag.gene_names[e.parent] + "\" -> \"" + dag.gene_names[e.child] +
         "\" [color=" + (e.theta >= 0.0 ? "blue" : "red") + ", label=\"" + format_real(e.theta) +
         "\"];\n";
  }
  return s + "}\n";
}

std::string fdr_audit_tsv_text(const CausalDag& dag) {
  std::string s = "batch\tnode\tm_t\talpha_t\trejections\n";
  for (std::size_t t = 0; t < dag.fdr.batch_history.size(); ++t) {
    const auto& b = dag.fdr.batch_history[t];
    s += std::to_string(t + 1) + '\t' + b.label + '\t' + std::to_string(b.size) + '\t' +
         format_real(b.alpha) + '\t' + std::to_string(b.rejections) + '\n';
  }
  return s;
}

std::string second_stage_tsv_text(const CausalDag& dag) {
  std::string s = "target\tk\ttheta\tse_sandwich\tse_mt\tz\tp\n";
  for (const auto& e : dag.tested_edges) {
    s += dag.gene_names[e.child] + '\t' + dag.gene_names[e.parent] + '\t' + format_real(e.theta) +
         '\t' + format_real(e.se_sandwich) + '\t' + format_real(e.se_mt) + '\t' +
         format_real(e.z) + '\t' + format_real(e.p) + '\n';
  }
  return s;
}

void write_fit_outputs(const FitResult& fit, const std::filesystem::path& dir,
                       const std::string& version, const std::string& created_at) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create output directory '" + dir.string() + "'");
  write_text(dir / "dag.json", dag_json_text(fit, version, created_at));
  write_text(dir / "edges.tsv", edges_tsv_text(fit.dag));
  write_text(dir / "graph.dot", graph_dot_text(fit.dag));
  write_text(dir / "fdr_audit.tsv", fdr_audit_tsv_text(fit.dag));
  write_text(dir / "second_stage.tsv", second_stage_tsv_text(fit.dag));
  write_pair_tests_tsv(fit.ancestry, fit.analyzed.gene_names, dir / "descendant_tests.tsv");
}

DagSummary dag_summary_from_json_text(const std::string& text) {
  try {
    const auto j = Json::parse(text);
    DagSummary s;
    s.genes = j.at("genes").get<std::vector<std::string>>();
    s.ordering = j.at("ordering").get<std::vector<std::string>>();
    for (const auto& e : j.at("edges")) {
      SummaryEdge row;
      row.parent = e.at("parent").get<std::string>();
      row.child = e.at("child").get<std::string>();
      auto num = [&](const char* key) {
        const auto& v = e.at(key);
        return v.is_null() ? std::nan("") : v.get<double>();
      };
      row.theta = num("theta");
      row.se_mt = num("se_mt");
      row.z = num("z");
      row.p = num("p");
      row.alpha_used = num("alpha_used");
      row.called = e.at("called").get<bool>();
      s.tested_edges.push_back(row);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("dag.json: ") + e.what());
  }
}

DagSummary load_dag_summary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return dag_summary_from_json_text(ss.str());
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace perturbdag
