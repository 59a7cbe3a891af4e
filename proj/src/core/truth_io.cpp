// SPDX-License-Identifier: Apache-2.0
#include "core/truth_io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace perturbdag {

using Json = nlohmann::ordered_json;

namespace {

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(m.row(r).transpose()));
  return a;
}

Eigen::VectorXd vector_from(const Json& j, Eigen::Index expected, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != expected) {
    throw Error(ErrorCode::kParse,
                "truth: '" + what + "' must be an array of " + std::to_string(expected) + " numbers");
  }
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from(const Json& j, Eigen::Index rows, Eigen::Index cols,
                            const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw Error(ErrorCode::kParse, "truth: '" + what + "' must have " + std::to_string(rows) + " rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    m.row(r) = vector_from(j[static_cast<std::size_t>(r)], cols, what).transpose();
  }
  return m;
}

}  // namespace

GroundTruth truth_from_json_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("truth: invalid JSON: ") + e.what());
  }
  try {
    GroundTruth t;
    require(j.contains("genes") && j["genes"].is_array(), ErrorCode::kParse,
            "truth: missing 'genes' array");
    t.gene_names = j["genes"].get<std::vector<std::string>>();
    const auto p = static_cast<Eigen::Index>(t.gene_names.size());
    require(p > 0, ErrorCode::kParse, "truth: 'genes' is empty");
    std::map<std::string, Eigen::Index> index;
    for (Eigen::Index g = 0; g < p; ++g) {
      require(index.emplace(t.gene_names[static_cast<std::size_t>(g)], g).second, ErrorCode::kParse,
              "truth: duplicate gene '" + t.gene_names[static_cast<std::size_t>(g)] + "'");
    }
    auto gene = [&](const Json& name) {
      const auto s = name.get<std::string>();
      const auto it = index.find(s);
      require(it != index.end(), ErrorCode::kParse, "truth: edge names unknown gene '" + s + "'");
      return it->second;
    };
    t.theta = Eigen::MatrixXd::Zero(p, p);
    for (const auto& e : j.value("edges", Json::array())) {
      const auto parent = gene(e.at("parent"));
      const auto child = gene(e.at("child"));
      const double w = e.at("theta").get<double>();
      require(w != 0.0, ErrorCode::kParse, "truth: edge weights must be nonzero");
      t.theta(child, parent) = w;
    }
    if (j.contains("seed") && !j["seed"].is_null()) t.seed = j["seed"].get<std::uint64_t>();
    t.n_cells = j.value("n_cells", t.n_cells);
    t.control_weight = j.value("control_weight", t.control_weight);
    t.size_factor_log_sd = j.value("size_factor_log_sd", t.size_factor_log_sd);
    t.expression_model = parse_expression_model(j.value("expression_model", std::string("point_mass")));

    t.tau = j.contains("tau") ? vector_from(j["tau"], p, "tau") : Eigen::VectorXd::Constant(p, -1.0);
    t.noise_sd = j.contains("noise_sd") ? vector_from(j["noise_sd"], p, "noise_sd")
                                        : Eigen::VectorXd::Constant(p, 0.3);
    t.guide_weights = j.contains("guide_weights")
                          ? vector_from(j["guide_weights"], p, "guide_weights")
                          : Eigen::VectorXd::Constant(p, (1.0 - t.control_weight) / static_cast<double>(p));
    t.dispersion = j.contains("dispersion") ? vector_from(j["dispersion"], p, "dispersion")
                                            : Eigen::VectorXd::Constant(p, 0.5);
    if (j.contains("intercept")) {
      t.intercept = vector_from(j["intercept"], p, "intercept");
    } else {
      const double c = std::log(j.value("baseline", 4.0));
      t.intercept.resize(p);
      for (Eigen::Index g = 0; g < p; ++g) t.intercept(g) = c * (1.0 - t.theta.row(g).sum());
    }

    const Json cov = j.value("covariates", Json::object());
    t.covariate_names = cov.value("names", std::vector<std::string>{});
    t.covariate_kind = parse_covariate_kind(cov.value("kind", std::string("normal")));
    t.binary_probability = cov.value("binary_probability", 0.5);
    const auto nx = static_cast<Eigen::Index>(t.covariate_names.size());
    t.beta = j.contains("beta") ? matrix_from(j["beta"], p, nx, "beta") : Eigen::MatrixXd::Zero(p, nx);

    const Json conf = j.value("confounders", Json::object());
    t.confounder_model = parse_confounder_model(conf.value("model", std::string("independent")));
    if (conf.contains("gamma")) {
      const auto& g = conf["gamma"];
      const auto m = g.empty() ? 0 : static_cast<Eigen::Index>(g.at(0).size());
      t.gamma = matrix_from(g, p, m, "confounders.gamma");
    } else {
      const Eigen::Index m = conf.value("dimension", 2);
      const double magnitude = conf.value("magnitude", 0.4);
      t.gamma.resize(p, m);
      for (Eigen::Index g = 0; g < p; ++g) {
        for (Eigen::Index c = 0; c < m; ++c) {
          CounterRng rng(t.seed.value_or(0), hash_label(t.gene_names[static_cast<std::size_t>(g)]),
                         static_cast<std::uint64_t>(c), 0x67616d6dULL);
          t.gamma(g, c) = rng.uniform() < 0.5 ? -magnitude : magnitude;
        }
      }
    }
    const auto m = t.gamma.cols();
    t.confounder_loading = conf.contains("loading")
                               ? matrix_from(conf["loading"], m, nx, "confounders.loading")
                               : Eigen::MatrixXd::Zero(m, nx);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("truth: ") + e.what());
  }
}

std::string truth_to_json_text(const GroundTruth& t) {
  Json j;
  j["schema_version"] = 1;
  j["genes"] = t.gene_names;
  Json edges = Json::array();
  for (const auto& [parent, child] : t.edges()) {
    edges.push_back({{"parent", t.gene_names[parent]},
                     {"child", t.gene_names[child]},
                     {"theta", t.theta(static_cast<Eigen::Index>(child), static_cast<Eigen::Index>(parent))}});
  }
  j["edges"] = edges;
  j["intercept"] = vector_json(t.intercept);
  j["tau"] = vector_json(t.tau);
  j["noise_sd"] = vector_json(t.noise_sd);
  j["beta"] = matrix_json(t.beta);
  j["covariates"] = {{"names", t.covariate_names},
                     {"kind", to_string(t.covariate_kind)},
                     {"binary_probability", t.binary_probability}};
  j["confounders"] = {{"model", to_string(t.confounder_model)},
                      {"gamma", matrix_json(t.gamma)},
                      {"loading", matrix_json(t.confounder_loading)}};
  j["expression_model"] = to_string(t.expression_model);
  j["dispersion"] = vector_json(t.dispersion);
  j["control_weight"] = t.control_weight;
  j["guide_weights"] = vector_json(t.guide_weights);
  j["size_factor_log_sd"] = t.size_factor_log_sd;
  j["n_cells"] = t.n_cells;
  if (t.seed) {
    j["seed"] = *t.seed;
  } else {
    j["seed"] = nullptr;
  }
  return j.dump(2) + "\n";
}

GroundTruth load_truth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot read truth file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return truth_from_json_text(ss.str());
}

void save_truth(const GroundTruth& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << truth_to_json_text(t);
}

}  // namespace perturbdag
