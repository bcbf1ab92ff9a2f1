#include <benchmark/benchmark.h>

#include "pathsense/display.hpp"
#include "pathsense/metrics.hpp"
#include "pathsense/protocol.hpp"
#include "pathsense/rendering.hpp"
#include "pathsense/runner.hpp"
#include "pathsense/session.hpp"

using namespace pathsense;

namespace {

SessionConfig config(ControllerKind kind) {
    SessionConfig c;
    c.path = std::make_shared<const LightPath>(builtin_path("path2"));
    c.controller = kind;
    c.noise.seed = 1;
    return c;
}

void BM_RenderFrame(benchmark::State& state) {
    const LightPath path = builtin_path("path2");
    const Pose pose{{0.5, 2.0, 9.0}, look_along({0.2, 0.4, -1.0})};
    for (auto _ : state) benchmark::DoNotOptimize(render_frame(pose, path));
}
BENCHMARK(BM_RenderFrame);

void BM_ToVoltage(benchmark::State& state) {
    const LightPath path = builtin_path("path2");
    const Frame frame = render_frame({path.start(), look_along(path.tangent_at(0.0))}, path);
    const CalibrationMatrix cal;
    for (auto _ : state) benchmark::DoNotOptimize(to_voltage(frame, cal));
}
BENCHMARK(BM_ToVoltage);

void BM_SessionTick(benchmark::State& state) {
    Session s(config(ControllerKind::noisy));
    s.start();
    for (auto _ : state) {
        if (s.phase() != Phase::running) {
            state.PauseTiming();
            s = Session(config(ControllerKind::noisy));
            s.start();
            state.ResumeTiming();
        }
        benchmark::DoNotOptimize(s.tick());
    }
}
BENCHMARK(BM_SessionTick);

void BM_ConnectionTick(benchmark::State& state) {
    const std::string start = R"({"type":"start","path_id":"path2","controller":"noisy","params":{"seed":1}})";
    ConnectionSession c;
    c.on_line(start);
    for (auto _ : state) {
        if (!c.running()) {
            state.PauseTiming();
            c.on_line(start);
            state.ResumeTiming();
        }
        benchmark::DoNotOptimize(c.on_tick());
    }
}
BENCHMARK(BM_ConnectionTick);

void BM_FullNoisyTrial(benchmark::State& state) {
    const SessionConfig c = config(ControllerKind::noisy);
    for (auto _ : state) benchmark::DoNotOptimize(run_session(c));
}
BENCHMARK(BM_FullNoisyTrial)->Unit(benchmark::kMillisecond);

void BM_ZBinAndEvaluate(benchmark::State& state) {
    std::vector<TrajectoryRecord> recs;
    SessionConfig c = config(ControllerKind::noisy);
    for (int i = 0; i < state.range(0); ++i) {
        c.noise.seed = static_cast<std::uint64_t>(i);
        recs.push_back(run_session(c));
    }
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(recs, *c.path));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ZBinAndEvaluate)->Arg(1)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_ExportJsonl(benchmark::State& state) {
    const TrajectoryRecord r = run_session(config(ControllerKind::noisy));
    for (auto _ : state) benchmark::DoNotOptimize(export_jsonl(r));
}
BENCHMARK(BM_ExportJsonl)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
