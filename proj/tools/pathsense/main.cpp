#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pathsense/error.hpp"
#include "pathsense/geometry.hpp"
#include "pathsense/metrics.hpp"
#include "pathsense/runner.hpp"
#include "pathsense/server.hpp"
#include "pathsense/session.hpp"

namespace fs = std::filesystem;
using namespace pathsense;

namespace {

// A builtin id ("path1", "path2") or a path JSON file.
std::shared_ptr<const LightPath> resolve_path(const std::string& spec) {
    if (spec == "path1" || spec == "path2") return std::make_shared<const LightPath>(builtin_path(spec));
    if (fs::exists(spec)) return std::make_shared<const LightPath>(path_from_json(read_file(spec)));
    throw ConfigError(fmt::format("'{}' is neither a builtin path (path1, path2) nor a path file", spec));
}

void emit(const std::optional<fs::path>& out, const std::string& text) {
    if (out)
        write_file(*out, text);
    else
        std::cout << text << std::flush;
}

struct GenPathArgs {
    std::string builtin;
    std::string kind = "curved";
    PathParams params;
    std::optional<fs::path> out;
};

struct RunArgs {
    std::string path = "path1";
    std::string controller = "ideal";
    std::string display = "vdu";
    int trials = 1;
    std::optional<std::uint64_t> seed;
    double speed = 2.0;
    NoiseParams noise;
    double target_radius = 0.5;
    double timeout_s = 300.0;
    std::string condition = "default";
    std::optional<fs::path> out;
    bool frames = false;
};

struct ServeArgs {
    std::string address = "127.0.0.1";
    std::uint16_t port = 8765;
    int decimation = kDefaultFrameDecimation;
    int threads = 2;
    std::optional<fs::path> data_dir;
    bool unpaced = false;
};

struct ReplayArgs {
    fs::path trajectory;
    std::string path;
    double fps = 50.0;
    std::optional<fs::path> out;
};

struct MetricsArgs {
    std::vector<fs::path> files;
    std::string path;
    std::string condition = "default";
    double bin_width = kDefaultBinWidth;
    std::string sd_reference = "path";
    std::optional<fs::path> out;
};

int cmd_gen_path(const GenPathArgs& a) {
    LightPath path = [&] {
        if (!a.builtin.empty()) return builtin_path(a.builtin);
        PathParams p = a.params;
        p.kind = path_kind_from_string(a.kind);
        if (p.id.empty()) p.id = a.kind;
        return make_path(p);
    }();
    emit(a.out, path_to_json(path));
    return 0;
}

int cmd_run(const RunArgs& a) {
    RunSpec spec;
    spec.config.path = resolve_path(a.path);
    spec.config.controller = controller_kind_from_string(a.controller);
    spec.config.display = display_mode_from_string(a.display);
    spec.config.follower_speed = a.speed;
    spec.config.noise = a.noise;
    spec.config.target_radius = a.target_radius;
    spec.config.timeout_s = a.timeout_s;
    if (spec.config.controller == ControllerKind::noisy && !a.seed)
        throw ConfigError("--seed is required for the noisy controller");
    spec.seed_base = a.seed.value_or(0);
    spec.trials = a.trials;
    spec.condition = a.condition;
    spec.write_frames = a.frames;
    spec.output_dir = a.out ? *a.out : default_data_dir() / fmt::format("run-{}-{}", spec.config.path->id(), a.controller);

    const RunResult result = run_headless(spec);
    const auto& r = result.row.report;
    std::cerr << fmt::format("{} trials, {} completed -> {}\n", r.n_trials, r.n_completed, spec.output_dir.string());
    std::cout << to_csv(std::span(&result.row, 1));
    return 0;
}

int cmd_serve(const ServeArgs& a) {
    ServerOptions options;
    options.address = a.address;
    options.port = a.port;
    options.service.decimation = a.decimation;
    options.threads = a.threads;
    options.realtime = !a.unpaced;
    options.data_dir = a.data_dir ? *a.data_dir : default_data_dir() / "sessions";
    Server server(options);
    std::cerr << fmt::format("listening on ws://{}:{}/, records in {}\n", a.address, server.port(),
                             options.data_dir->string());
    server.run();
    return 0;
}

int cmd_replay(const ReplayArgs& a) {
    const TrajectoryRecord record = import_jsonl(read_file(a.trajectory));
    const auto path = resolve_path(a.path.empty() ? record.header.path_id : a.path);
    emit(a.out, frames_to_jsonl(replay(record, *path, a.fps)));
    return 0;
}

int cmd_metrics(const MetricsArgs& a) {
    if (a.files.empty()) throw ConfigError("no trajectory files given");
    ConditionTrials set;
    set.condition = a.condition;
    for (const auto& f : a.files) {
        try {
            set.trials.push_back(import_jsonl(read_file(f)));
        } catch (const ParseError& e) {
            throw ParseError(fmt::format("{}: {}", f.string(), e.what()));
        }
    }
    set.path = resolve_path(a.path.empty() ? set.trials.front().header.path_id : a.path);

    MetricsOptions options;
    options.bin_width = a.bin_width;
    options.sd_reference = a.sd_reference == "trial_mean" ? SdReference::trial_mean : SdReference::path;
    const auto rows = aggregate(std::span(&set, 1), options);
    emit(a.out, to_csv(rows));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pathsense: tactile path-following simulator, experiment runner and session server"};
    app.require_subcommand(1);

    GenPathArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-path", "Write a path JSON file");
    gen_cmd->add_option("--builtin", gen.builtin, "Builtin id")->check(CLI::IsMember({"path1", "path2"}));
    gen_cmd->add_option("--kind", gen.kind, "curved | helical")->check(CLI::IsMember({"curved", "helical"}));
    gen_cmd->add_option("--height", gen.params.height, "cm")->capture_default_str();
    gen_cmd->add_option("--extent", gen.params.lateral_extent, "Lateral extent, cm")->capture_default_str();
    gen_cmd->add_option("--turns", gen.params.turns, "Helix turns")->capture_default_str();
    gen_cmd->add_option("--points", gen.params.n_points, "Number of lights")->capture_default_str();
    gen_cmd->add_option("--id", gen.params.id, "Path id (defaults to the kind)");
    gen_cmd->add_option("-o,--out", gen.out, "Output file (stdout when omitted)");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run scripted trials headless and write trajectories plus report.csv");
    run_cmd->add_option("--path", run.path, "Builtin id or path JSON file")->capture_default_str();
    run_cmd->add_option("--controller", run.controller)->check(CLI::IsMember({"ideal", "noisy", "manual", "external"}))->capture_default_str();
    run_cmd->add_option("--display", run.display)->check(CLI::IsMember({"tdu", "vdu"}))->capture_default_str();
    run_cmd->add_option("--trials", run.trials)->check(CLI::PositiveNumber)->capture_default_str();
    run_cmd->add_option("--seed", run.seed, "Seed base; trial i uses seed+i (required for noisy)");
    run_cmd->add_option("--speed", run.speed, "Follower speed, cm/s")->capture_default_str();
    run_cmd->add_option("--tremor-sigma", run.noise.tremor_sigma)->capture_default_str();
    run_cmd->add_option("--drift-theta", run.noise.drift_theta)->capture_default_str();
    run_cmd->add_option("--drift-sigma", run.noise.drift_sigma)->capture_default_str();
    run_cmd->add_option("--target-radius", run.target_radius, "cm")->capture_default_str();
    run_cmd->add_option("--timeout", run.timeout_s, "Seconds")->capture_default_str();
    run_cmd->add_option("--condition", run.condition, "Condition label in the report")->capture_default_str();
    run_cmd->add_option("-o,--out", run.out, "Output directory (default $PATHSENSE_DATA_DIR/run-<path>-<controller>)");
    run_cmd->add_flag("--frames", run.frames, "Also write the rendered frames of every trial");

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the WebSocket session service");
    serve_cmd->add_option("--address", serve.address)->capture_default_str();
    serve_cmd->add_option("--port", serve.port, "0 picks a free port")->capture_default_str();
    serve_cmd->add_option("--decimation", serve.decimation, "Send every Nth frame")->check(CLI::PositiveNumber)->capture_default_str();
    serve_cmd->add_option("--threads", serve.threads)->check(CLI::PositiveNumber)->capture_default_str();
    serve_cmd->add_option("--data-dir", serve.data_dir, "Where finished sessions are written (default $PATHSENSE_DATA_DIR/sessions)");
    serve_cmd->add_flag("--unpaced", serve.unpaced, "Tick as fast as the client reads instead of every 5 ms");

    ReplayArgs rep;
    auto* replay_cmd = app.add_subcommand("replay", "Re-render frames from a trajectory file");
    replay_cmd->add_option("trajectory", rep.trajectory)->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--path", rep.path, "Builtin id or path JSON file (default: header path_id)");
    replay_cmd->add_option("--fps", rep.fps)->capture_default_str();
    replay_cmd->add_option("-o,--out", rep.out, "Output file (stdout when omitted)");

    MetricsArgs met;
    auto* metrics_cmd = app.add_subcommand("metrics", "Aggregate trajectory files into a CSV report");
    metrics_cmd->add_option("files", met.files, "Trajectory JSONL files")->check(CLI::ExistingFile);
    metrics_cmd->add_option("--path", met.path, "Builtin id or path JSON file (default: header path_id)");
    metrics_cmd->add_option("--condition", met.condition)->capture_default_str();
    metrics_cmd->add_option("--bin-width", met.bin_width, "cm")->capture_default_str();
    metrics_cmd->add_option("--sd-reference", met.sd_reference)->check(CLI::IsMember({"path", "trial_mean"}))->capture_default_str();
    metrics_cmd->add_option("-o,--out", met.out, "Output file (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_cmd) return cmd_gen_path(gen);
        if (*run_cmd) return cmd_run(run);
        if (*serve_cmd) return cmd_serve(serve);
        if (*replay_cmd) return cmd_replay(rep);
        if (*metrics_cmd) return cmd_metrics(met);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
