// SPDX-License-Identifier: Apache-2.0
#include "core/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "core/error.hpp"
#include "core/text.hpp"

namespace perturbdag {
namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

struct CountTable {
  CountMatrix counts;
  std::vector<std::string> genes;
  std::vector<std::string> cells;
};

CountTable read_counts_tsv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, path.string() + ": empty file");
  auto header = split_tabs(strip_cr(line));
  const bool has_ids = !header.empty() && header.front() == "cell_id";
  CountTable t;
  for (std::size_t c = has_ids ? 1 : 0; c < header.size(); ++c) t.genes.emplace_back(header[c]);
  const std::size_t p = t.genes.size();
  std::vector<std::uint32_t> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto row = strip_cr(line);
    if (row.empty()) continue;
    auto fields = split_tabs(row);
    if (fields.size() != p + (has_ids ? 1 : 0)) {
      throw Error(ErrorCode::kParse, where(path, lineno) + ": expected " +
                                         std::to_string(p + (has_ids ? 1 : 0)) + " fields, got " +
                                         std::to_string(fields.size()));
    }
    std::size_t c0 = 0;
    if (has_ids) {
      t.cells.emplace_back(fields[0]);
      c0 = 1;
    } else {
      t.cells.push_back(std::to_string(t.cells.size() + 1));
    }
    for (std::size_t c = c0; c < fields.size(); ++c) {
      const auto v = parse_unsigned(fields[c], where(path, lineno));
      if (v > UINT32_MAX) throw Error(ErrorCode::kParse, where(path, lineno) + ": count too large");
      values.push_back(static_cast<std::uint32_t>(v));
    }
  }
  const auto n = static_cast<Eigen::Index>(t.cells.size());
  t.counts.resize(n, static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j) {
      t.counts(i, j) = values[static_cast<std::size_t>(i) * p + static_cast<std::size_t>(j)];
    }
  }
  return t;
}

std::vector<std::string> read_name_list(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    const auto row = strip_cr(line);
    if (row.empty()) continue;
    names.emplace_back(split_tabs(row).front());
  }
  return names;
}

CountTable read_counts_mtx(const fs::path& path, const std::optional<fs::path>& genes,
                           const std::optional<fs::path>& cells) {
  require(genes.has_value(), ErrorCode::kInvalidArgument,
          "Matrix Market counts need a gene-name file");
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, path.string() + ": empty file");
  ++lineno;
  if (line.rfind("%%MatrixMarket matrix coordinate", 0) != 0) {
    throw Error(ErrorCode::kParse, path.string() + ": not a Matrix Market coordinate file");
  }
  if (line.find("integer") == std::string::npos) {
    throw Error(ErrorCode::kParse, path.string() + ": counts must be an integer matrix");
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream dims(line);
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(dims >> rows >> cols >> nnz)) {
    throw Error(ErrorCode::kParse, where(path, lineno) + ": bad size line");
  }
  CountTable t;
  t.counts = CountMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t e = 0; e < nnz; ++e) {
    if (!std::getline(in, line)) throw Error(ErrorCode::kParse, path.string() + ": truncated");
    ++lineno;
    std::istringstream entry(line);
    std::size_t r = 0, c = 0;
    std::uint64_t v = 0;
    if (!(entry >> r >> c >> v) || r < 1 || r > rows || c < 1 || c > cols || v > UINT32_MAX) {
      throw Error(ErrorCode::kParse, where(path, lineno) + ": bad entry '" + line + "'");
    }
    t.counts(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) =
        static_cast<std::uint32_t>(v);
  }
  t.genes = read_name_list(*genes);
  require(t.genes.size() == cols, ErrorCode::kParse,
          genes->string() + ": " + std::to_string(t.genes.size()) + " gene names for " +
              std::to_string(cols) + " columns");
  if (cells) {
    t.cells = read_name_list(*cells);
    require(t.cells.size() == rows, ErrorCode::kParse,
            cells->string() + ": " + std::to_string(t.cells.size()) + " cell ids for " +
                std::to_string(rows) + " rows");
  } else {
    for (std::size_t i = 0; i < rows; ++i) t.cells.push_back(std::to_string(i + 1));
  }
  return t;
}

}  // namespace

PerturbDataset load_dataset(const DatasetPaths& paths) {
  CountTable table = paths.counts.extension() == ".mtx"
                         ? read_counts_mtx(paths.counts, paths.genes, paths.cells)
                         : read_counts_tsv(paths.counts);
  PerturbDataset d;
  d.counts = std::move(table.counts);
  d.gene_names = std::move(table.genes);
  d.cell_ids = std::move(table.cells);
  const auto n = d.counts.rows();
  const auto p = d.counts.cols();

  std::unordered_map<std::string, std::size_t> cell_row;
  for (std::size_t i = 0; i < d.cell_ids.size(); ++i) {
    if (!cell_row.emplace(d.cell_ids[i], i).second) {
      throw Error(ErrorCode::kParse, paths.counts.string() + ": duplicate cell id '" +
                                         d.cell_ids[i] + "'");
    }
  }
  std::unordered_map<std::string, std::size_t> gene_col;
  for (std::size_t j = 0; j < d.gene_names.size(); ++j) gene_col.emplace(d.gene_names[j], j);

  d.guides = GuideMatrix::Zero(n, p);
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  {
    auto in = open_in(paths.guides);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto row = strip_cr(line);
      if (row.empty()) continue;
      const auto fields = split_tabs(row);
      if (lineno == 1 && fields.size() == 2 && fields[0] == "cell_id" &&
          fields[1] == "target_gene") {
        continue;
      }
      if (fields.size() != 2) {
        throw Error(ErrorCode::kParse, where(paths.guides, lineno) + ": expected 2 fields");
      }
      const auto cell = cell_row.find(std::string(fields[0]));
      if (cell == cell_row.end()) {
        throw Error(ErrorCode::kParse, where(paths.guides, lineno) + ": unknown cell '" +
                                           std::string(fields[0]) + "'");
      }
      const auto i = static_cast<Eigen::Index>(cell->second);
      seen[cell->second] += 1;
      if (fields[1] == kNonTargeting) continue;
      const auto gene = gene_col.find(std::string(fields[1]));
      if (gene == gene_col.end()) {
        throw Error(ErrorCode::kParse, where(paths.guides, lineno) + ": unknown target gene '" +
                                           std::string(fields[1]) + "'");
      }
      d.guides(i, static_cast<Eigen::Index>(gene->second)) += 1;
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i] == 0) {
      throw Error(ErrorCode::kParse,
                  paths.guides.string() + ": cell '" + d.cell_ids[i] + "' has no guide record");
    }
  }

  if (paths.covariates) {
    auto in = open_in(*paths.covariates);
    std::string line;
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::kParse, paths.covariates->string() + ": empty file");
    }
    for (auto name : split_tabs(strip_cr(line))) d.covariate_names.emplace_back(name);
    const auto j = static_cast<Eigen::Index>(d.covariate_names.size());
    d.covariates.resize(n, j);
    Eigen::Index i = 0;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      const auto row = strip_cr(line);
      if (row.empty()) continue;
      const auto fields = split_tabs(row);
      if (static_cast<Eigen::Index>(fields.size()) != j) {
        throw Error(ErrorCode::kParse,
                    where(*paths.covariates, lineno) + ": expected " + std::to_string(j) + " fields");
      }
      if (i >= n) {
        throw Error(ErrorCode::kParse, paths.covariates->string() + ": more rows than cells");
      }
      for (Eigen::Index c = 0; c < j; ++c) {
        d.covariates(i, c) =
            parse_real(fields[static_cast<std::size_t>(c)], where(*paths.covariates, lineno));
      }
      ++i;
    }
    if (i != n) {
      throw Error(ErrorCode::kParse, paths.covariates->string() + ": " + std::to_string(i) +
                                         " rows for " + std::to_string(n) + " cells");
    }
  } else {
    d.covariates.resize(n, 0);
  }

  if (paths.size_factors) {
    d.size_factors = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
    auto in = open_in(*paths.size_factors);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto row = strip_cr(line);
      if (row.empty()) continue;
      const auto fields = split_tabs(row);
      if (lineno == 1 && fields.size() == 2 && fields[0] == "cell_id") continue;
      if (fields.size() != 2) {
        throw Error(ErrorCode::kParse, where(*paths.size_factors, lineno) + ": expected 2 fields");
      }
      const auto cell = cell_row.find(std::string(fields[0]));
      if (cell == cell_row.end()) {
        throw Error(ErrorCode::kParse, where(*paths.size_factors, lineno) + ": unknown cell '" +
                                           std::string(fields[0]) + "'");
      }
      d.size_factors(static_cast<Eigen::Index>(cell->second)) =
          parse_real(fields[1], where(*paths.size_factors, lineno));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isnan(d.size_factors(i))) {
        throw Error(ErrorCode::kParse, paths.size_factors->string() + ": no size factor for cell '" +
                                           d.cell_ids[static_cast<std::size_t>(i)] + "'");
      }
    }
  } else {
    d.size_factors = size_factors_from_totals(d.counts);
  }
  return d;
}

void save_dataset(const PerturbDataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  const auto n = d.counts.rows();
  auto cell_id = [&](Eigen::Index i) {
    return d.cell_ids.empty() ? std::to_string(i + 1) : d.cell_ids[static_cast<std::size_t>(i)];
  };
  {
    auto out = open_out(dir / "counts.tsv");
    out << "cell_id";
    for (const auto& g : d.gene_names) out << '\t' << g;
    out << '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
      out << cell_id(i);
      for (Eigen::Index j = 0; j < d.counts.cols(); ++j) out << '\t' << d.counts(i, j);
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "guides.tsv");
    out << "cell_id\ttarget_gene\n";
    for (Eigen::Index i = 0; i < n; ++i) {
      bool any = false;
      for (Eigen::Index j = 0; j < d.guides.cols(); ++j) {
        for (int r = 0; r < d.guides(i, j); ++r) {
          out << cell_id(i) << '\t' << d.gene_names[static_cast<std::size_t>(j)] << '\n';
          any = true;
        }
      }
      if (!any) out << cell_id(i) << '\t' << kNonTargeting << '\n';
    }
  }
  {
    auto out = open_out(dir / "size_factors.tsv");
    out << "cell_id\tsize_factor\n";
    for (Eigen::Index i = 0; i < n; ++i) out << cell_id(i) << '\t' << format_real(d.size_factors(i)) << '\n';
  }
  if (d.covariates.cols() > 0) {
    auto out = open_out(dir / "covariates.tsv");
    for (std::size_t c = 0; c < d.covariate_names.size(); ++c) {
      out << (c ? "\t" : "") << d.covariate_names[c];
    }
    out << '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < d.covariates.cols(); ++c) {
        out << (c ? "\t" : "") << format_real(d.covariates(i, c));
      }
      out << '\n';
    }
  }
}

void save_counts_mtx(const PerturbDataset& d, const fs::path& mtx, const fs::path& genes,
                     const fs::path& cells) {
  std::size_t nnz = 0;
  for (Eigen::Index i = 0; i < d.counts.size(); ++i) nnz += d.counts.data()[i] != 0;
  {
    auto out = open_out(mtx);
    out << "%%MatrixMarket matrix coordinate integer general\n";
    out << d.counts.rows() << ' ' << d.counts.cols() << ' ' << nnz << '\n';
    for (Eigen::Index j = 0; j < d.counts.cols(); ++j) {
      for (Eigen::Index i = 0; i < d.counts.rows(); ++i) {
        if (d.counts(i, j) != 0) out << i + 1 << ' ' << j + 1 << ' ' << d.counts(i, j) << '\n';
      }
    }
  }
  {
    auto out = open_out(genes);
    for (const auto& g : d.gene_names) out << g << '\n';
  }
  {
    auto out = open_out(cells);
    for (Eigen::Index i = 0; i < d.counts.rows(); ++i) {
      out << (d.cell_ids.empty() ? std::to_string(i + 1) : d.cell_ids[static_cast<std::size_t>(i)])
          << '\n';
    }
  }
}

DatasetPaths default_paths(const fs::path& dir) {
  DatasetPaths p;
  p.counts = dir / "counts.tsv";
  p.guides = dir / "guides.tsv";
  if (fs::exists(dir / "covariates.tsv")) p.covariates = dir / "covariates.tsv";
  if (fs::exists(dir / "size_factors.tsv")) p.size_factors = dir / "size_factors.tsv";
  return p;
}

}  // namespace perturbdag
