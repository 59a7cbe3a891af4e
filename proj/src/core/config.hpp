// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/descendants.hpp"
#include "core/fdr.hpp"
#include "core/glm.hpp"

namespace perturbdag {

enum class PvalueConvention { kTwoSided, kPaperLiteral };

std::string to_string(PvalueConvention c);
PvalueConvention parse_pvalue_convention(const std::string& text);

// Tails used for descendant and parent tests under a convention.
PvalueTail descendant_tail(PvalueConvention c);
PvalueTail parent_tail(PvalueConvention c);

struct RunConfig {
  double alpha = 0.1;
  AncestryMode ancestry_mode = AncestryMode::kClosure;
  PvalueConvention pvalue_convention = PvalueConvention::kTwoSided;
  std::size_t min_cells = 50;
  SpendingSequence spending;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool untargeted_as_covariates = false;
  // Genes left out of the analysis together with the cells perturbed at them.
  std::vector<std::string> exclude_genes;

  std::string counts;
  std::string guides;
  std::string covariates;
  std::string size_factors;
  std::string genes;
  std::string cells;
  std::string out;
};

// Flat key=value assignment. Unknown keys and malformed values throw.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

// Lines of key=value; '#' starts a comment; blank lines ignored.
void apply_config_text(RunConfig& config, const std::string& text, const std::string& origin);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

// Throws Error(kInvalidArgument) on an out-of-range field.
void validate_config(const RunConfig& config);

// Every key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);

// PERTURBDAG_THREADS if set to a positive integer, else 1.
unsigned default_thread_budget();

}  // namespace perturbdag
