#include "pathsense/runner.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "pathsense/error.hpp"

namespace pathsense {

TrajectoryRecord run_session(const SessionConfig& config, std::vector<FrameMessage>* frames) {
    Session session(config);
    session.start();
    if (frames) frames->push_back(frame_message(0, session.render()));
    while (session.phase() == Phase::running) {
        const TickResult r = session.tick();
        if (frames) frames->push_back(frame_message(session.clock_ms(), r.frame));
    }
    return session.record();
}

RunResult run_headless(const RunSpec& spec) {
    if (spec.trials < 1) throw ParameterError("trials", "must be >= 1");
    if (spec.config.controller != ControllerKind::ideal && spec.config.controller != ControllerKind::noisy)
        throw ConfigError(fmt::format("headless runs need a scripted controller (ideal or noisy), got '{}'",
                                      to_string(spec.config.controller)));
    spec.config.validate();
    std::filesystem::create_directories(spec.output_dir);

    RunResult result;
    for (int i = 0; i < spec.trials; ++i) {
        SessionConfig config = spec.config;
        config.noise.seed = spec.seed_base + static_cast<std::uint64_t>(i);
        std::vector<FrameMessage> frames;
        TrajectoryRecord record = run_session(config, spec.write_frames ? &frames : nullptr);

        const auto file = spec.output_dir / fmt::format("trial_{:03d}.jsonl", i);
        write_file(file, export_jsonl(record));
        result.trajectory_files.push_back(file);
        if (spec.write_frames) {
            const auto frame_file = spec.output_dir / fmt::format("trial_{:03d}.frames.jsonl", i);
            write_file(frame_file, frames_to_jsonl(frames));
            result.frame_files.push_back(frame_file);
        }
        result.records.push_back(std::move(record));
    }

    const ConditionTrials set{spec.condition, spec.config.path, result.records};
    const auto rows = aggregate(std::span(&set, 1));
    result.row = rows.front();
    result.report_file = spec.output_dir / "report.csv";
    write_file(result.report_file, to_csv(rows));
    return result;
}

std::vector<FrameMessage> replay(const TrajectoryRecord& record, const LightPath& path, double fps,
                                 const CameraModel& camera, const CutoffParams& cutoff) {
    if (!(fps > 0.0) || !std::isfinite(fps)) throw ParameterError("fps", "must be > 0");
    if (record.header.path_id != path.id())
        throw ValidationError(fmt::format("trajectory was recorded on path '{}', not '{}'", record.header.path_id,
                                          path.id()));
    const int tick = record.header.tick_ms;
    const auto step_ticks = std::max<std::int64_t>(1, std::llround(1000.0 / fps / tick));
    const std::int64_t interval = step_ticks * tick;

    std::vector<FrameMessage> frames;
    for (const auto& s : record.samples)
        if (s.t_ms % interval == 0) frames.push_back(frame_message(s.t_ms, render_frame(s.pose, path, camera, cutoff)));
    return frames;
}

std::string frames_to_jsonl(const std::vector<FrameMessage>& frames) {
    std::string out;
    for (const auto& f : frames) {
        out += serialize(ServerMessage{f});
        out += '\n';
    }
    return out;
}

std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("PATHSENSE_DATA_DIR"); env && *env) return env;
    return "pathsense-data";
}

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ParseError(fmt::format("cannot open '{}'", file.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& file, std::string_view contents) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write '{}'", file.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(fmt::format("failed writing '{}'", file.string()));
}

}  // namespace pathsense
