// Serial reference kernels against the OpenMP versions.

#include <benchmark/benchmark.h>

#include <vector>

#include "fil/common/rng.hpp"
#include "fil/nn/kernels.hpp"

using namespace fil;

namespace {

struct Fixture {
  nn::PolicyModel model = nn::init_model(nn::default_policy_spec(), 7);
  std::vector<float> inputs;
  std::vector<nn::Sample> samples;
  std::vector<const float*> pointers;

  explicit Fixture(std::size_t n) : inputs(n * 256) {
    Rng rng(11);
    for (auto& v : inputs) v = static_cast<float>(rng.uniform());
    for (std::size_t i = 0; i < n; ++i) {
      samples.push_back({inputs.data() + i * 256, rng.uniform(-0.6, 0.6)});
      pointers.push_back(inputs.data() + i * 256);
    }
  }
};

template <auto Kernel>
void gradient(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(f.model, f.samples));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void predict(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(f.model, f.pointers));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(gradient<nn::kernels::batch_gradient_serial>)->Name("batch_gradient/serial")->Arg(128)->Arg(1024);
BENCHMARK(gradient<nn::kernels::batch_gradient_parallel>)->Name("batch_gradient/parallel")->Arg(128)->Arg(1024);
BENCHMARK(predict<nn::kernels::predict_serial>)->Name("predict/serial")->Arg(1000)->Arg(10000);
BENCHMARK(predict<nn::kernels::predict_parallel>)->Name("predict/parallel")->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
