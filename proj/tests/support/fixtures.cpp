// SPDX-License-Identifier: Apache-2.0
#include "support/fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace fixture {

perturbdag::PerturbDataset make_dataset(const std::vector<std::vector<unsigned>>& counts,
                                        const std::vector<std::vector<int>>& guides) {
  perturbdag::PerturbDataset d;
  const auto n = static_cast<Eigen::Index>(counts.size());
  const auto p = n ? static_cast<Eigen::Index>(counts[0].size()) : 0;
  d.counts.resize(n, p);
  d.guides.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      d.counts(i, j) = counts[i][j];
      d.guides(i, j) = static_cast<std::uint8_t>(guides[i][j]);
    }
    d.cell_ids.push_back("c" + std::to_string(i));
  }
  d.covariates.resize(n, 0);
  d.size_factors = Eigen::VectorXd::Ones(n);
  for (Eigen::Index j = 0; j < p; ++j) d.gene_names.push_back("G" + std::to_string(j + 1));
  return d;
}

std::filesystem::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("pdag_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixture
