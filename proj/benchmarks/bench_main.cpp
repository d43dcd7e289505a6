#include <benchmark/benchmark.h>

#include "locallearn/bovw.hpp"
#include "locallearn/local.hpp"
#include "locallearn/neighbors.hpp"
#include "locallearn/random.hpp"
#include "locallearn/svm.hpp"
#include "locallearn/synthetic.hpp"

using namespace locallearn;

namespace {

FeatureMatrix gaussian(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n * dim);
  for (double& x : v) x = rng.normal();
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return FeatureMatrix(dim, std::move(ids), std::move(v));
}

void BM_SvmTrain(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto X = synthetic::gaussian_blobs(n, 2, 64, 1, 1.0, 1.0);
  std::vector<int> y;
  for (int l : X.labels()) y.push_back(l == 0 ? -1 : 1);
  for (auto _ : state) benchmark::DoNotOptimize(svm::train_binary(X, y, {.C = 100.0}));
}
BENCHMARK(BM_SvmTrain)->Arg(200)->Arg(2000);

void BM_CosineTopK(benchmark::State& state) {
  const auto data = gaussian(static_cast<std::size_t>(state.range(0)), 128, 2);
  const neighbors::CosineIndex index(data);
  const auto q = gaussian(1, 128, 3);
  for (auto _ : state) benchmark::DoNotOptimize(index.top_k(q.row(0), 200));
}
BENCHMARK(BM_CosineTopK)->Arg(1000)->Arg(10000);

void BM_KdForestQuery(benchmark::State& state) {
  const auto data = gaussian(10000, 128, 4);
  const auto forest = neighbors::KdForest::build(data, {});
  const auto q = gaussian(64, 128, 5);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(forest.nearest(q.row(i++ % 64), static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_KdForestQuery)->Arg(64)->Arg(512);

void BM_DenseSift(benchmark::State& state) {
  const auto images = synthetic::stripes_and_checkerboards(1, static_cast<std::size_t>(state.range(0)), 6);
  const bovw::DenseSiftConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(bovw::dense_sift(images[0].second, cfg));
}
BENCHMARK(BM_DenseSift)->Arg(48)->Arg(96);

void BM_LocalPredict(benchmark::State& state) {
  const auto train = synthetic::two_arcs(2000, 7);
  const neighbors::CosineIndex index(train);
  const auto q = synthetic::two_arcs(16, 8, "q");
  const local::LocalLearnerConfig cfg{.k = static_cast<std::size_t>(state.range(0))};
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(local::local_predict_one(index, q.row(i++ % 16), cfg));
}
BENCHMARK(BM_LocalPredict)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
