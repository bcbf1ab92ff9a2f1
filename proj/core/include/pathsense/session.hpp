#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pathsense/control.hpp"
#include "pathsense/geometry.hpp"
#include "pathsense/rendering.hpp"

namespace pathsense {

inline constexpr int kDefaultTickMs = 5;

enum class DisplayMode { tdu, vdu };
enum class Phase { idle, running, completed, aborted };
enum class Outcome { completed, aborted };

std::string_view to_string(DisplayMode mode) noexcept;
DisplayMode display_mode_from_string(std::string_view s);
std::string_view to_string(Phase phase) noexcept;

struct SessionConfig {
    std::shared_ptr<const LightPath> path;
    DisplayMode display = DisplayMode::vdu;
    ControllerKind controller = ControllerKind::manual;
    int tick_ms = kDefaultTickMs;
    double target_radius = 0.5;  // cm
    double timeout_s = 300.0;
    CameraModel camera;
    CutoffParams cutoff;
    ManualParams manual;
    double follower_speed = 2.0;  // cm/s, ideal and noisy controllers
    NoiseParams noise;            // noisy controller only

    void validate() const;
    std::int64_t timeout_ms() const noexcept;
};

struct TrajectorySample {
    std::int64_t t_ms = 0;
    Pose pose;

    friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

struct RecordHeader {
    std::string path_id;
    ControllerKind controller = ControllerKind::manual;
    DisplayMode display = DisplayMode::vdu;
    int tick_ms = kDefaultTickMs;
    double target_radius = 0.5;
    std::optional<std::uint64_t> seed;  // noisy runs only
    std::optional<Outcome> outcome;     // set once the session ends

    friend bool operator==(const RecordHeader&, const RecordHeader&) = default;
};

struct TrajectoryRecord {
    RecordHeader header;
    std::vector<TrajectorySample> samples;

    bool completed() const noexcept { return header.outcome == Outcome::completed; }
    friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

// Trajectory file: a header line, then one {"t_ms","pos","quat"} object per line.
std::string export_jsonl(const TrajectoryRecord& record);
// Throws ParseError naming the 1-based line on malformed input or broken cadence.
TrajectoryRecord import_jsonl(std::string_view text);

enum class EventKind { started, target_reached, aborted };
std::string_view to_string(EventKind kind) noexcept;

struct SessionEvent {
    EventKind kind;
    std::int64_t t_ms;

    friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

struct TickResult {
    Frame frame;
    std::optional<SessionEvent> event;  // terminal event, at most once per session
};

// One trial: idle -> running -> completed | aborted, driven by a logical clock
// that advances tick_ms per tick whatever the wall clock does. Not thread-safe;
// feed concurrent inputs through InputAccumulator / ExternalPoseLatch and pass
// their snapshot to tick().
class Session {
public:
    explicit Session(SessionConfig config);

    // Places the camera at the path start looking straight down and records t = 0.
    SessionEvent start();
    TickResult tick(const TickInputs& inputs = {});
    // Ends a running session early (operator abort, client disconnect).
    SessionEvent abort();

    Phase phase() const noexcept { return phase_; }
    std::int64_t clock_ms() const noexcept { return clock_ms_; }
    const Pose& pose() const noexcept { return pose_; }
    const SessionConfig& config() const noexcept { return config_; }
    const TrajectoryRecord& record() const noexcept { return record_; }
    Frame render() const;

    // Only once the session has ended.
    std::string export_record() const;

private:
    void finish(Outcome outcome);

    SessionConfig config_;
    Controller controller_;
    Phase phase_ = Phase::idle;
    std::int64_t clock_ms_ = 0;
    Pose pose_;
    TrajectoryRecord record_;
};

}  // namespace pathsense
