// SPDX-License-Identifier: Apache-2.0
#include "core/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/text.hpp"

namespace perturbdag {

std::string to_string(PvalueConvention c) {
  return c == PvalueConvention::kTwoSided ? "two_sided" : "paper_literal";
}

PvalueConvention parse_pvalue_convention(const std::string& text) {
  if (text == "two_sided") return PvalueConvention::kTwoSided;
  if (text == "paper_literal") return PvalueConvention::kPaperLiteral;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown p-value convention '" + text + "' (expected two_sided or paper_literal)");
}

PvalueTail descendant_tail(PvalueConvention c) {
  return c == PvalueConvention::kTwoSided ? PvalueTail::kTwoSided : PvalueTail::kUpperAbs;
}

PvalueTail parent_tail(PvalueConvention c) {
  return c == PvalueConvention::kTwoSided ? PvalueTail::kTwoSided : PvalueTail::kUpper;
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::kInvalidArgument, "config '" + key + "': expected true or false, got '" + v + "'");
}

std::string join_names(const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) s += (i ? "," : "") + names[i];
  return s;
}

}  // namespace

void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string where = "config '" + key + "'";
  try {
    if (key == "alpha") {
      c.alpha = parse_real(value, where);
    } else if (key == "ancestry_mode") {
      c.ancestry_mode = parse_ancestry_mode(value);
    } else if (key == "pvalue_convention") {
      c.pvalue_convention = parse_pvalue_convention(value);
    } else if (key == "min_cells") {
      c.min_cells = parse_unsigned(value, where);
    } else if (key == "spending") {
      c.spending = SpendingSequence::parse(value);
    } else if (key == "seed") {
      c.seed = parse_unsigned(value, where);
    } else if (key == "threads") {
      c.threads = static_cast<unsigned>(parse_unsigned(value, where));
    } else if (key == "untargeted_as_covariates") {
      c.untargeted_as_covariates = parse_bool(value, key);
    } else if (key == "exclude_genes") {
      c.exclude_genes.clear();
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = trim(rest.substr(0, comma));
        if (!item.empty()) c.exclude_genes.emplace_back(item);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
    } else if (key == "counts") {
      c.counts = value;
    } else if (key == "guides") {
      c.guides = value;
    } else if (key == "covariates") {
      c.covariates = value;
    } else if (key == "size_factors") {
      c.size_factors = value;
    } else if (key == "genes") {
      c.genes = value;
    } else if (key == "cells") {
      c.cells = value;
    } else if (key == "out") {
      c.out = value;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw Error(ErrorCode::kInvalidArgument, e.what());
    throw;
  }
}

void apply_config_text(RunConfig& c, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view v = strip_cr(line);
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  origin + ":" + std::to_string(number) + ": expected key=value");
    }
    const std::string key(trim(v.substr(0, eq)));
    const std::string value(trim(v.substr(eq + 1)));
    try {
      set_config_value(c, key, value);
    } catch (const Error& e) {
      throw Error(e.code(), origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& c, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(c, ss.str(), path.string());
}

void validate_config(const RunConfig& c) {
  require(c.alpha > 0.0 && c.alpha < 1.0, ErrorCode::kInvalidArgument, "alpha must be in (0,1)");
  require(c.min_cells >= 1, ErrorCode::kInvalidArgument, "min_cells must be at least 1");
  require(c.threads >= 1, ErrorCode::kInvalidArgument, "threads must be at least 1");
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  return {
      {"alpha", format_real(c.alpha)},
      {"ancestry_mode", to_string(c.ancestry_mode)},
      {"pvalue_convention", to_string(c.pvalue_convention)},
      {"min_cells", std::to_string(c.min_cells)},
      {"spending", c.spending.describe()},
      {"seed", c.seed ? std::to_string(*c.seed) : ""},
      {"threads", std::to_string(c.threads)},
      {"untargeted_as_covariates", c.untargeted_as_covariates ? "true" : "false"},
      {"exclude_genes", join_names(c.exclude_genes)},
      {"counts", c.counts},
      {"guides", c.guides},
      {"covariates", c.covariates},
      {"size_factors", c.size_factors},
      {"genes", c.genes},
      {"cells", c.cells},
      {"out", c.out},
  };
}

unsigned default_thread_budget() {
  const char* env = std::getenv("PERTURBDAG_THREADS");
  if (!env || !*env) return 1;
  try {
    const auto v = parse_unsigned(env, "PERTURBDAG_THREADS");
    return v >= 1 ? static_cast<unsigned>(v) : 1u;
  } catch (const Error&) {
    return 1;
  }
}

}  // namespace perturbdag
