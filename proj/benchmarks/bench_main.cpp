#include <benchmark/benchmark.h>

#include "evd/coverage.hpp"

using namespace evd;

namespace {

const ModelSpec kGev{Family::Gev, Parametrization::natural(), std::nullopt};

ObservedSample data(std::size_t n, double c = 0.1) { return {sample(GevParams(1, 1, c), n, 42), 1e-6}; }

void BM_LoglikContinuous(benchmark::State& st) {
  const auto s = data(static_cast<std::size_t>(st.range(0)));
  const GevParams g(1, 1, 0.1);
  for (auto _ : st) benchmark::DoNotOptimize(loglik(g, s, LikelihoodKind::Continuous));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_LoglikContinuous)->Arg(25)->Arg(100)->Arg(1000);

void BM_LoglikExact(benchmark::State& st) {
  const auto s = data(static_cast<std::size_t>(st.range(0)));
  const GevParams g(1, 1, 0.1);
  for (auto _ : st) benchmark::DoNotOptimize(loglik(g, s, LikelihoodKind::Exact));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_LoglikExact)->Arg(25)->Arg(100)->Arg(1000);

void BM_FitGev(benchmark::State& st) {
  const auto s = data(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(fit_mle(kGev, s));
}
BENCHMARK(BM_FitGev)->Arg(25)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ProfileIntervalQ99(benchmark::State& st) {
  const auto s = data(static_cast<std::size_t>(st.range(0)));
  const FitResult q = refit(fit_mle(kGev, s), {Family::Gev, Parametrization::quantile(0.99), std::nullopt}, s);
  for (auto _ : st) benchmark::DoNotOptimize(likelihood_interval(q, s, 0, 0.15));
}
BENCHMARK(BM_ProfileIntervalQ99)->Arg(25)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_AmlInterval(benchmark::State& st) {
  const auto s = data(50);
  const FitResult fit = fit_mle(kGev, s);
  for (auto _ : st) benchmark::DoNotOptimize(aml_interval(fit, s, 2, 0.95));
}
BENCHMARK(BM_AmlInterval)->Unit(benchmark::kMicrosecond);

void BM_Replicate(benchmark::State& st) {
  Scenario sc;
  sc.c_true = 0.0;
  sc.n = static_cast<int>(st.range(0));
  int r = 0;
  for (auto _ : st) benchmark::DoNotOptimize(run_replicate(sc, r++));
}
BENCHMARK(BM_Replicate)->Arg(25)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
