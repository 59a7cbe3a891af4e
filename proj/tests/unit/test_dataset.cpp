// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>

#include "core/dataset.hpp"
#include "core/dataset_io.hpp"
#include "core/error.hpp"
#include "core/simulator.hpp"
#include "support/fixtures.hpp"

using namespace perturbdag;

namespace {

PerturbDataset six_cells() {
  return fixture::make_dataset({{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 1}, {2, 3}},
                               {{0, 1}, {0, 1}, {0, 1}, {0, 0}, {0, 0}, {0, 0}});
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("validate accepts a well formed dataset") { CHECK(validate(six_cells()).empty()); }

TEST_CASE("validate names a guide row summing to two") {
  auto d = six_cells();
  d.guides(2, 0) = 1;
  auto v = validate(d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("cell 2") != std::string::npos);
}

TEST_CASE("validate names a zero size factor") {
  auto d = six_cells();
  d.size_factors(3) = 0.0;
  auto v = validate(d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("cell 3") != std::string::npos);
}

TEST_CASE("validate reports missing controls and duplicate genes") {
  auto d = fixture::make_dataset({{1, 1}, {2, 2}}, {{1, 0}, {0, 1}});
  CHECK(mentions(validate(d), "no control cell"));
  CHECK_THROWS_AS(require_valid(d), Error);
  d.gene_names = {"A", "A"};
  CHECK(mentions(validate(d), "duplicate gene name 'A'"));
}

TEST_CASE("size factors from totals") {
  CountMatrix same(3, 2);
  same << 2, 3, 1, 4, 5, 0;
  auto l = size_factors_from_totals(same);
  CHECK(l.isApprox(Eigen::VectorXd::Ones(3)));

  CountMatrix c(3, 1);
  c << 100, 200, 400;
  l = size_factors_from_totals(c);
  CHECK(l(0) == doctest::Approx(0.5));
  CHECK(l(1) == doctest::Approx(1.0));
  CHECK(l(2) == doctest::Approx(2.0));

  CountMatrix z(3, 2);
  z << 1, 1, 0, 0, 2, 2;
  try {
    size_factors_from_totals(z);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("perturbation and control subsets") {
  auto d = six_cells();
  CHECK(perturbation_cells(d, 1).indices == std::vector<std::size_t>{0, 1, 2});
  CHECK(perturbation_cells(d, 0).empty());
  CHECK(control_cells(d).indices == std::vector<std::size_t>{3, 4, 5});

  auto all_control = fixture::make_dataset({{1, 1}, {2, 2}}, {{0, 0}, {0, 0}});
  CHECK(perturbation_cells(all_control, 0).empty());
  CHECK(perturbation_cells(all_control, 1).empty());
  CHECK(d.perturbed_count(1) == 3);
}

TEST_CASE("min cell filter") {
  auto sim = simulate(three_chain_preset(), 400, 3, 1);
  auto& d = sim.dataset;

  auto same = min_cell_filter(d, 1);
  CHECK(same.dropped_genes.empty());
  CHECK(same.dataset.counts == d.counts);

  CHECK_THROWS_AS(min_cell_filter(d, d.num_cells()), Error);  // nothing would survive
  CHECK_THROWS_AS(min_cell_filter(d, d.num_cells() + 1), Error);

  // a gene with 10 perturbed cells falls under a threshold of 50
  auto small = d;
  std::size_t kept = 0;
  for (Eigen::Index i = 0; i < small.guides.rows(); ++i) {
    if (small.guides(i, 2) == 1 && ++kept > 10) small.guides(i, 2) = 0;
  }
  REQUIRE(small.perturbed_count(2) == 10);
  auto f = min_cell_filter(small, 50);
  CHECK(f.dropped_genes == std::vector<std::string>{"G3"});
  CHECK(f.dataset.num_genes() == 2);
  CHECK(f.dataset.num_cells() == small.num_cells() - 10);
  CHECK(validate(f.dataset).empty());
}

TEST_CASE("restrict genes drops cells perturbed at removed genes") {
  auto d = six_cells();
  std::vector<std::size_t> keep{0};
  auto r = restrict_genes(d, keep);
  CHECK(r.num_genes() == 1);
  CHECK(r.num_cells() == 3);
  CHECK(r.cell_ids == std::vector<std::string>{"c3", "c4", "c5"});
}

TEST_CASE("expression covariates and size factor rescaling") {
  auto d = six_cells();
  std::vector<std::size_t> g{1};
  auto e = append_expression_covariates(d, g);
  REQUIRE(e.num_covariates() == 1);
  CHECK(e.covariate_names[0] == "expr:G2");
  CHECK(e.covariates(0, 0) == doctest::Approx(std::log(3.0)));
  auto s = rescale_size_factors(d, 2.0);
  CHECK(s.size_factors(0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(rescale_size_factors(d, 0.0), Error);
}

TEST_CASE("tsv round trip is exact") {
  auto sim = simulate(eight_gene_preset(), 300, 11, 1);
  auto dir = fixture::scratch_dir("roundtrip");
  save_dataset(sim.dataset, dir);
  auto back = load_dataset(default_paths(dir));
  CHECK(back.counts == sim.dataset.counts);
  CHECK(back.guides == sim.dataset.guides);
  CHECK(back.gene_names == sim.dataset.gene_names);
  CHECK(back.cell_ids == sim.dataset.cell_ids);
  CHECK(back.covariate_names == sim.dataset.covariate_names);
  CHECK(back.covariates == sim.dataset.covariates);
  CHECK(back.size_factors == sim.dataset.size_factors);
  std::filesystem::remove_all(dir);
}

TEST_CASE("matrix market counts load with sidecars") {
  auto sim = simulate(three_chain_preset(), 200, 5, 1);
  auto dir = fixture::scratch_dir("mtx");
  save_dataset(sim.dataset, dir);
  save_counts_mtx(sim.dataset, dir / "counts.mtx", dir / "genes.tsv", dir / "cells.tsv");
  auto paths = default_paths(dir);
  paths.counts = dir / "counts.mtx";
  paths.genes = dir / "genes.tsv";
  paths.cells = dir / "cells.tsv";
  auto back = load_dataset(paths);
  CHECK(back.counts == sim.dataset.counts);
  CHECK(back.guides == sim.dataset.guides);
  std::filesystem::remove_all(dir);
}
