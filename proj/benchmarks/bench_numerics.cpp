#include <benchmark/benchmark.h>

#include <vector>

#include "mlstm/common/rng.hpp"
#include "mlstm/numerics/gemm.hpp"
#include "mlstm/numerics/half.hpp"

namespace {

using namespace mlstm::numerics;

std::vector<float> random_values(std::size_t n, std::uint64_t seed, float scale) {
  mlstm::Rng rng(seed);
  std::vector<float> v(n);
  for (float& x : v) {
    x = rng.uniform(-scale, scale);
  }
  return v;
}

void BM_RoundToHalfSpan(benchmark::State& state) {
  const auto src = random_values(static_cast<std::size_t>(state.range(0)), 1, 1000.0F);
  std::vector<float> work(src.size());
  for (auto _ : state) {
    work = src;
    round_to_half(std::span<float>(work));
    benchmark::DoNotOptimize(work.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RoundToHalfSpan)->Arg(1 << 16)->Arg(1 << 20);

void BM_ScalarF32ToF16(benchmark::State& state) {
  const auto src = random_values(1 << 16, 2, 1000.0F);
  for (auto _ : state) {
    std::uint32_t acc = 0;
    for (float x : src) {
      acc += f32_to_f16(x).bits;
    }
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * (1 << 16));
}
BENCHMARK(BM_ScalarF32ToF16);

// m x n x k with B transposed, the shape of every recurrent matmul.
void BM_Gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  TensorF32 a({m, k});
  TensorF32 b({n, k});
  TensorF32 c({m, n});
  const auto av = random_values(m * k, 3, 1.0F);
  const auto bv = random_values(n * k, 4, 1.0F);
  std::copy(av.begin(), av.end(), a.data().begin());
  std::copy(bv.begin(), bv.end(), b.data().begin());
  for (auto _ : state) {
    gemm(as_matrix(a), Transpose::kNo, as_matrix(b), Transpose::kYes, as_matrix(c),
         Accumulate::kOverwrite);
    benchmark::DoNotOptimize(c.data().data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(static_cast<double>(2 * m * n * k),
                                                benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Gemm)
    ->Args({32, 256, 256})
    ->Args({36, 256, 256})
    ->Args({96, 256, 256})
    ->Args({1024, 36, 256})
    ->Args({32, 1024, 256})
    ->Args({8192, 1024, 64})
    ->Args({8192, 256, 256})
    ->Args({1024, 256, 8192});

// Same shapes with op(B) packed once outside the loop, as the recurrent steps do.
void BM_GemmPrepacked(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  TensorF32 a({m, k});
  TensorF32 b({n, k});
  TensorF32 c({m, n});
  const auto av = random_values(m * k, 3, 1.0F);
  const auto bv = random_values(n * k, 4, 1.0F);
  std::copy(av.begin(), av.end(), a.data().begin());
  std::copy(bv.begin(), bv.end(), b.data().begin());
  const PackedRhs packed(as_matrix(b), Transpose::kYes);
  for (auto _ : state) {
    gemm(as_matrix(a), Transpose::kNo, packed, as_matrix(c), Accumulate::kOverwrite);
    benchmark::DoNotOptimize(c.data().data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(static_cast<double>(2 * m * n * k),
                                                benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}
BENCHMARK(BM_GemmPrepacked)->Args({32, 256, 256})->Args({32, 1024, 256})->Args({1024, 32, 256})->Args({256, 32, 1024});

}  // namespace
