// Serial reference vs OpenMP kernels on Youshu-sized shapes.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "crosscbr/graph.hpp"
#include "crosscbr/kernels.hpp"

using namespace crosscbr;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 0.1);
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = dist(rng);
  return m;
}

Relation random_relation(std::size_t left, std::size_t right, std::size_t edges,
                         std::mt19937_64& rng) {
  Relation rel;
  for (std::size_t e = 0; e < edges; ++e) rel.emplace_back(rng() % left, rng() % right);
  std::sort(rel.begin(), rel.end());
  rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
  return rel;
}

struct SpmmFixture {
  NormalizedBipartiteGraph graph;
  Matrix in, out;
  SpmmFixture() {
    std::mt19937_64 rng(1);
    graph = build_bipartite_graph(random_relation(8039, 32770, 138515, rng), 8039, 32770);
    in = random_matrix(32770, 64, rng);
    out = Matrix(8039, 64);
  }
};

template <auto Kernel>
void BM_spmm_add(benchmark::State& state) {
  static SpmmFixture f;
  for (auto _ : state) {
    Kernel(f.graph.left_from_right, f.in, f.out);
    benchmark::DoNotOptimize(f.out.values().data());
  }
  state.SetItemsProcessed(state.iterations() * f.graph.left_from_right.nnz());
}

struct TopKFixture {
  Matrix users, bundles;
  std::vector<Id> ids;
  std::vector<std::vector<Id>> masked;
  TopKFixture() {
    std::mt19937_64 rng(2);
    users = random_matrix(1024, 64, rng);
    bundles = random_matrix(4771, 64, rng);
    for (Id u = 0; u < 1024; ++u) {
      ids.push_back(u);
      masked.push_back({static_cast<Id>(rng() % 4771)});
    }
  }
};

template <auto Kernel>
void BM_top_k(benchmark::State& state) {
  static TopKFixture f;
  const kernels::ScoreFactors factors{&f.users, &f.bundles, nullptr, nullptr};
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(factors, f.ids, f.masked, 20));
  state.SetItemsProcessed(state.iterations() * f.ids.size());
}

}  // namespace

BENCHMARK(BM_spmm_add<kernels::serial::spmm_add>)->Name("spmm_add/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_spmm_add<kernels::omp::spmm_add>)->Name("spmm_add/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_top_k<kernels::serial::top_k>)->Name("top_k/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_top_k<kernels::omp::top_k>)->Name("top_k/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
