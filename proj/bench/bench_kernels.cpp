#include <benchmark/benchmark.h>

#include <vector>

#include "semshare/kernels.hpp"
#include "semshare/rng.hpp"

namespace k = semshare::kernels;

namespace {

struct Shapes {
  std::vector<double> x, w, b, y, dy, dw, dx;
  std::size_t batch, in, out;

  Shapes(std::size_t batch_, std::size_t in_, std::size_t out_)
      : x(batch_ * in_), w(in_ * out_), b(out_), y(batch_ * out_), dy(batch_ * out_), dw(in_ * out_), dx(batch_ * in_),
        batch(batch_), in(in_), out(out_) {
    semshare::Rng rng(7);
    for (auto* v : {&x, &w, &b, &dy}) {
      for (auto& e : *v) e = rng.uniform(-1.0, 1.0);
    }
  }
};

// Args: batch, in, out. 64x256x256 is the hidden layer of a training update.
void shapes(benchmark::internal::Benchmark* b) {
  b->Args({64, 256, 256})->Args({64, 152, 256})->Args({256, 256, 256})->Args({1, 140, 256});
}

void BM_forward_serial(benchmark::State& st) {
  Shapes s(st.range(0), st.range(1), st.range(2));
  for (auto _ : st) {
    k::serial::dense_forward(s.x.data(), s.w.data(), s.b.data(), s.y.data(), s.batch, s.in, s.out);
    benchmark::DoNotOptimize(s.y.data());
  }
}
void BM_forward_omp(benchmark::State& st) {
  Shapes s(st.range(0), st.range(1), st.range(2));
  for (auto _ : st) {
    k::dense_forward(s.x.data(), s.w.data(), s.b.data(), s.y.data(), s.batch, s.in, s.out);
    benchmark::DoNotOptimize(s.y.data());
  }
}
void BM_backward_params_serial(benchmark::State& st) {
  Shapes s(st.range(0), st.range(1), st.range(2));
  for (auto _ : st) {
    k::serial::dense_backward_params(s.x.data(), s.dy.data(), s.dw.data(), s.b.data(), s.batch, s.in, s.out);
    benchmark::DoNotOptimize(s.dw.data());
  }
}
void BM_backward_params_omp(benchmark::State& st) {
  Shapes s(st.range(0), st.range(1), st.range(2));
  for (auto _ : st) {
    k::dense_backward_params(s.x.data(), s.dy.data(), s.dw.data(), s.b.data(), s.batch, s.in, s.out);
    benchmark::DoNotOptimize(s.dw.data());
  }
}
void BM_backward_input_serial(benchmark::State& st) {
  Shapes s(st.range(0), st.range(1), st.range(2));
  for (auto _ : st) {
    k::serial::dense_backward_input(s.dy.data(), s.w.data(), s.dx.data(), s.batch, s.in, s.out);
    benchmark::DoNotOptimize(s.dx.data());
  }
}
void BM_backward_input_omp(benchmark::State& st) {
  Shapes s(st.range(0), st.range(1), st.range(2));
  for (auto _ : st) {
    k::dense_backward_input(s.dy.data(), s.w.data(), s.dx.data(), s.batch, s.in, s.out);
    benchmark::DoNotOptimize(s.dx.data());
  }
}

}  // namespace

BENCHMARK(BM_forward_serial)->Apply(shapes);
BENCHMARK(BM_forward_omp)->Apply(shapes);
BENCHMARK(BM_backward_params_serial)->Apply(shapes);
BENCHMARK(BM_backward_params_omp)->Apply(shapes);
BENCHMARK(BM_backward_input_serial)->Apply(shapes);
BENCHMARK(BM_backward_input_omp)->Apply(shapes);

BENCHMARK_MAIN();
