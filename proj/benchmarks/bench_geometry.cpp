#include <benchmark/benchmark.h>

#include "predo/geometry.hpp"
#include "predo/services.hpp"

namespace {

using namespace predo;

geometry::TriMesh car() {
  return services::make_mock_car({4.3, 1.8, 0.65, 0.45, 0.33, 0.25, 0.3, 0.75});
}

void BM_Silhouette(benchmark::State& state) {
  const auto mesh = geometry::normalize(car());
  const int res = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(geometry::frontal_area(geometry::silhouette(mesh, geometry::Axis::x, res)));
}
BENCHMARK(BM_Silhouette)->Arg(256)->Arg(512)->Arg(1024);

void BM_SilhouetteIcosphere(benchmark::State& state) {
  const auto mesh = geometry::make_icosphere(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(geometry::frontal_area(geometry::silhouette(mesh, geometry::Axis::x, 512)));
  state.counters["faces"] = static_cast<double>(mesh.faces.size());
}
BENCHMARK(BM_SilhouetteIcosphere)->Arg(2)->Arg(4)->Arg(5);

void BM_RenderPreview(benchmark::State& state) {
  const auto mesh = geometry::normalize(car());
  for (auto _ : state) benchmark::DoNotOptimize(geometry::render_preview(mesh, {}));
}
BENCHMARK(BM_RenderPreview);

void BM_MockPipeline(benchmark::State& state) {
  const services::MockConfig cfg;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto r = services::mock_generate(cfg, "A fast car in the shape of wing", seed++);
    benchmark::DoNotOptimize(services::mock_score(geometry::load_obj(r.mesh_obj).mesh));
  }
}
BENCHMARK(BM_MockPipeline);

}  // namespace
