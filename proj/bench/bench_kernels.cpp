// Serial references against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "pdn/adversary.hpp"
#include "pdn/cmd.hpp"
#include "pdn/reident.hpp"

using namespace pdn;

namespace {

const std::vector<Trace>& corpus() {
  static const std::vector<Trace> traces = [] {
    std::mt19937_64 gen(17);
    std::uniform_int_distribution<std::uint64_t> item(1, 100);
    std::uniform_int_distribution<std::int64_t> bin(0, 4);
    std::vector<Trace> out;
    for (int i = 0; i < 1000; ++i) {
      std::vector<TracePoint> pts;
      while (make_trace(pts).size() < 10) pts.push_back({ItemId{item(gen)}, bin(gen)});
      out.push_back(make_trace(pts));
    }
    return out;
  }();
  return traces;
}

const RunResult& busy_run() {
  static const RunResult run = [] {
    Scenario s;
    s.counts.customers = 200;
    s.counts.vendors = 4;
    s.counts.dpn_sites = 8;
    s.mix = PoolMix{3, 0.5};
    s.latency = Distribution::exponential(1.0);
    s.horizon = 60;
    return run_scenario(s);
  }();
  return run;
}

void BM_ReidentSerial(benchmark::State& st) {
  for (auto _ : st) {
    benchmark::DoNotOptimize(uniqueness_reident_serial(corpus(), 3, st.range(0), Rng(1)));
  }
}
void BM_ReidentParallel(benchmark::State& st) {
  for (auto _ : st) {
    benchmark::DoNotOptimize(uniqueness_reident(corpus(), 3, st.range(0), Rng(1)));
  }
}
BENCHMARK(BM_ReidentSerial)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReidentParallel)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_CorrelateSerial(benchmark::State& st) {
  const MovementIndex moves(busy_run().observations);
  for (auto _ : st) {
    benchmark::DoNotOptimize(correlate_nodes_serial(moves, busy_run().mix_nodes, CorrelationMode::Exact));
  }
}
void BM_CorrelateParallel(benchmark::State& st) {
  const MovementIndex moves(busy_run().observations);
  for (auto _ : st) {
    benchmark::DoNotOptimize(correlate_nodes(moves, busy_run().mix_nodes, CorrelationMode::Exact));
  }
}
BENCHMARK(BM_CorrelateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorrelateParallel)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& st) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pdn_bench_sweep";
  fs::create_directories(dir);
  std::ofstream(dir / "s.yaml") << "counts: {customers: 60, vendors: 2}\nhorizon: 40\n";
  const auto threads = static_cast<unsigned>(st.range(0));
  std::ostringstream err;
  for (auto _ : st) {
    fs::remove_all(dir / "out");
    if (cmd_sweep(dir / "s.yaml", "mix.X", {1, 2, 3, 4, 5, 6, 7, 8}, dir / "out", threads, err) != 0) {
      st.SkipWithError(err.str().c_str());
      break;
    }
  }
  fs::remove_all(dir);
}
BENCHMARK(BM_Sweep)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
