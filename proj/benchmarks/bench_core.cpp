#include "disagg/itclust.hpp"
#include "disagg/kridge.hpp"
#include "disagg/pri.hpp"
#include "disagg/srrm.hpp"
#include "disagg/synth.hpp"

#include <benchmark/benchmark.h>

using namespace disagg;

namespace {

const synth::Scene& day223() {
    static const synth::Scene s = synth::generate_scene(synth::SceneSpec{}, synth::CropCalendar::standard(), 223, 2024);
    return s;
}

void BM_GenerateScene(benchmark::State& state) {
    const synth::SceneSpec spec;
    for (auto _ : state) {
        benchmark::DoNotOptimize(synth::generate_scene(spec, synth::CropCalendar::standard(), 223, 2024));
    }
}
BENCHMARK(BM_GenerateScene)->Unit(benchmark::kMillisecond);

void BM_Cluster(benchmark::State& state) {
    const auto X = srrm::build_features(day223());
    itclust::ClusterParams p;
    p.k = static_cast<int>(state.range(0));
    p.psi = 1e-2;
    for (auto _ : state) benchmark::DoNotOptimize(itclust::cluster(X, p));
}
BENCHMARK(BM_Cluster)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

// The full (K, psi) grid of one cross-validation day in lockstep.
void BM_ClusterBatch(benchmark::State& state) {
    const auto X = srrm::build_features(day223());
    std::vector<itclust::ClusterParams> ps;
    for (int k = 2; k <= 8; ++k) {
        for (double psi : {1e-3, 1e-2, 1e-1}) {
            itclust::ClusterParams p;
            p.k = k;
            p.psi = psi;
            ps.push_back(p);
        }
    }
    for (auto _ : state) benchmark::DoNotOptimize(itclust::cluster_batch(X, ps));
}
BENCHMARK(BM_ClusterBatch)->Unit(benchmark::kMillisecond);

void BM_KridgeFit(benchmark::State& state) {
    const Eigen::MatrixXd R = srrm::regression_features(day223());
    const auto n = state.range(0);
    const Eigen::MatrixXd X = R.topRows(n);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(day223().true_sm.values().data(), n);
    for (auto _ : state) benchmark::DoNotOptimize(kridge::fit(X, y, 1e-2));
    state.SetComplexityN(n);
}
BENCHMARK(BM_KridgeFit)->RangeMultiplier(2)->Range(128, 1024)->Unit(benchmark::kMillisecond)->Complexity();

void BM_KridgeFitPath(benchmark::State& state) {
    const Eigen::MatrixXd R = srrm::regression_features(day223());
    const Eigen::MatrixXd X = R.topRows(825);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(day223().true_sm.values().data(), 825);
    const std::vector<double> mus{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    for (auto _ : state) benchmark::DoNotOptimize(kridge::fit_path(X, y, mus));
}
BENCHMARK(BM_KridgeFitPath)->Unit(benchmark::kMillisecond);

void BM_PriDay(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(pri::pri_day(day223()));
}
BENCHMARK(BM_PriDay)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
