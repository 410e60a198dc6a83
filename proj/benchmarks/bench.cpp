#include "carnot/dyadic.hpp"
#include "carnot/group.hpp"
#include "carnot/measure.hpp"
#include "carnot/wolff.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace carnot;

namespace {

std::vector<GPoint> random_points(const GroupSpec& g, std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<GPoint> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(static_cast<std::size_t>(g.N()));
        for (double& v : x)
            v = u(rng);
        out.emplace_back(std::move(x));
    }
    return out;
}

GroupSpec group_for(std::int64_t index) { return index == 0 ? heisenberg() : engel(); }

std::shared_ptr<const PointCloud> graded(double radius, double spacing)
{
    const GroupSpec h = heisenberg();
    LatticeOptions lo;
    lo.kind = LatticeKind::graded;
    return std::make_shared<const PointCloud>(lattice_cloud(h, identity(h), radius, spacing, lo));
}

} // namespace

static void BM_Multiply(benchmark::State& state)
{
    const GroupSpec g = group_for(state.range(0));
    const auto pts = random_points(g, 1024, 1);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(multiply(g, pts[i & 1023], pts[(i + 1) & 1023]));
        ++i;
    }
    state.SetLabel(g.name());
}
BENCHMARK(BM_Multiply)->Arg(0)->Arg(1);

static void BM_Qdist(benchmark::State& state)
{
    const GroupSpec g = group_for(state.range(0));
    const auto pts = random_points(g, 1024, 2);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(qdist(g, pts[i & 1023], pts[(i + 7) & 1023]));
        ++i;
    }
    state.SetLabel(g.name());
}
BENCHMARK(BM_Qdist)->Arg(0)->Arg(1);

static void BM_WolffFieldAtoms(benchmark::State& state)
{
    const GroupSpec h = heisenberg();
    const auto atoms = random_points(h, static_cast<std::size_t>(state.range(0)), 3);
    const Measure mu(AtomicMeasure(h, atoms, std::vector<double>(atoms.size(), 1.0)));
    const auto at = random_points(h, 1000, 4);
    WolffParams P;
    P.p = 1.5;
    for (auto _ : state)
        benchmark::DoNotOptimize(wolff_field(mu, at, P));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(at.size()));
}
BENCHMARK(BM_WolffFieldAtoms)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_WolffFieldDensity(benchmark::State& state)
{
    const GroupSpec h = heisenberg();
    const auto cloud = graded(1.5, 0.2);
    const Measure mu(uniform_on_ball(cloud, identity(h), 1.0));
    const auto at = random_points(h, static_cast<std::size_t>(state.range(0)), 5);
    WolffParams P;
    for (auto _ : state)
        benchmark::DoNotOptimize(wolff_field(mu, at, P));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WolffFieldDensity)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_BuildFamily(benchmark::State& state)
{
    const auto cloud = graded(1.5, 0.2 / static_cast<double>(state.range(0)));
    DyadicOptions o;
    o.lambda = 2.0;
    for (auto _ : state)
        benchmark::DoNotOptimize(build_family(cloud, -2, 1, o));
    state.counters["points"] = static_cast<double>(cloud->size());
}
BENCHMARK(BM_BuildFamily)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
