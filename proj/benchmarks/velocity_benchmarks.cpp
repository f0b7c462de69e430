// Per-call cost of the velocity and Jacobian of each model at k_u = 8 (Burgers)
// and k_u = 80 (flame).

#include "romnn/burgers.hpp"
#include "romnn/deim.hpp"
#include "romnn/experiment.hpp"
#include "romnn/flame.hpp"
#include "romnn/galerkin_rom.hpp"
#include "romnn/romnn.hpp"

#include <benchmark/benchmark.h>

#include <memory>

namespace romnn {
namespace {

struct Models {
  std::shared_ptr<DynamicalSystem> hdm;
  std::shared_ptr<DynamicalSystem> rom;
  std::shared_ptr<DynamicalSystem> deim;
  std::shared_ptr<DynamicalSystem> romnn;
  Vector mu;
  Vector u;
  Vector tau;
};

Models make_models(std::shared_ptr<DynamicalSystem> hdm, const TimeGrid& grid, const std::vector<Index>& corners,
                   Index k) {
  Models m;
  m.hdm = hdm;
  const auto params = uniform_grid(hdm->param_box(), corners);
  const SnapshotSet snaps = collect_snapshots(*hdm, grid, params);
  const ReducedBasis basis = compute_pod_basis(snaps.states, hdm->initial_state(), k);
  m.rom = build_rom(hdm, basis);
  m.deim = std::make_shared<DeimRom>(hdm, basis, build_deim_operator(basis, compute_deim_basis(snaps.velocities, k)));
  const std::vector<Index> widths{k + 1 + hdm->param_dim(), 80, 120, 240, 480, 240, 120, 80, k};
  m.romnn = make_romnn_system(nn::NetworkModel::initialize(widths, 1), *hdm, basis);
  m.mu = params.front();
  m.u = snaps.states.col(snaps.steps() / 2);
  m.tau = basis.project(m.u);
  return m;
}

const Models& burgers() {
  static const Models m = [] {
    auto hdm = assemble_burgers({});
    return make_models(hdm, hdm->config().time_grid(), {2, 2, 2}, 8);
  }();
  return m;
}

const Models& flame() {
  static const Models m = [] {
    FlameConfig c;
    c.nx = 20;
    c.ny = 10;
    auto hdm = assemble_flame(c);
    return make_models(hdm, c.time_grid(), {3, 3}, 80);
  }();
  return m;
}

enum Which { kHdm, kRom, kDeim, kRomNn };

template <const Models& (*Get)()>
void velocity(benchmark::State& state) {
  const Models& m = Get();
  const auto which = static_cast<Which>(state.range(0));
  const DynamicalSystem& sys = which == kHdm ? *m.hdm : which == kRom ? *m.rom : which == kDeim ? *m.deim : *m.romnn;
  const Vector& x = which == kHdm ? m.u : m.tau;
  for (auto _ : state) benchmark::DoNotOptimize(sys.velocity(x, 0.5, m.mu));
}

template <const Models& (*Get)()>
void jacobian(benchmark::State& state) {
  const Models& m = Get();
  const auto which = static_cast<Which>(state.range(0));
  const DynamicalSystem& sys = which == kHdm ? *m.hdm : which == kRom ? *m.rom : which == kDeim ? *m.deim : *m.romnn;
  const Vector& x = which == kHdm ? m.u : m.tau;
  for (auto _ : state) benchmark::DoNotOptimize(sys.jacobian(x, 0.5, m.mu));
}

void args(benchmark::internal::Benchmark* b) {
  b->ArgName("model");
  for (int w : {kHdm, kRom, kDeim, kRomNn}) b->Arg(w);
}

BENCHMARK(velocity<burgers>)->Apply(args);
BENCHMARK(jacobian<burgers>)->Apply(args);
BENCHMARK(velocity<flame>)->Apply(args);
BENCHMARK(jacobian<flame>)->Apply(args);

void integrate_burgers(benchmark::State& state) {
  const Models& m = burgers();
  const auto which = static_cast<Which>(state.range(0));
  const DynamicalSystem& sys = which == kHdm ? *m.hdm : which == kRom ? *m.rom : which == kDeim ? *m.deim : *m.romnn;
  const TimeGrid grid = TimeGrid::uniform(1.0, 100);
  for (auto _ : state) benchmark::DoNotOptimize(integrate(sys, grid, m.mu));
}
BENCHMARK(integrate_burgers)->Apply(args)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace romnn

BENCHMARK_MAIN();
