#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pathsense/metrics.hpp"
#include "pathsense/protocol.hpp"
#include "pathsense/session.hpp"

namespace pathsense {

struct RunSpec {
    SessionConfig config;
    int trials = 1;
    std::uint64_t seed_base = 0;  // trial i runs with seed seed_base + i
    std::filesystem::path output_dir;
    std::string condition = "default";
    bool write_frames = false;  // also write trial_NNN.frames.jsonl
};

struct RunResult {
    std::vector<TrajectoryRecord> records;
    std::vector<std::filesystem::path> trajectory_files;
    std::vector<std::filesystem::path> frame_files;
    std::filesystem::path report_file;
    ConditionRow row;
};

// Runs a single scripted session to its end without wall-clock pacing.
// `frames`, when given, receives the t = 0 frame and one frame per tick.
TrajectoryRecord run_session(const SessionConfig& config, std::vector<FrameMessage>* frames = nullptr);

// Runs `trials` scripted sessions and writes trial_NNN.jsonl files plus
// report.csv into output_dir. Manual and external controllers need a live
// operator and are rejected with ConfigError.
RunResult run_headless(const RunSpec& spec);

// Re-renders recorded poses at `fps` (sample spacing rounded to whole ticks,
// at least one tick). Pure function of the record and rendering setup.
std::vector<FrameMessage> replay(const TrajectoryRecord& record, const LightPath& path, double fps,
                                 const CameraModel& camera = {}, const CutoffParams& cutoff = {});

// One serialized frame message per line.
std::string frames_to_jsonl(const std::vector<FrameMessage>& frames);

// $PATHSENSE_DATA_DIR, or ./pathsense-data when unset.
std::filesystem::path default_data_dir();

std::string read_file(const std::filesystem::path& file);
void write_file(const std::filesystem::path& file, std::string_view contents);

}  // namespace pathsense
