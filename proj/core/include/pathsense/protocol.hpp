#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pathsense/control.hpp"
#include "pathsense/error.hpp"
#include "pathsense/geometry.hpp"
#include "pathsense/rendering.hpp"
#include "pathsense/session.hpp"

namespace pathsense {

// Wire format: one JSON object per line, discriminated by "type".
class ProtocolError : public Error {
public:
    using Error::Error;
};

inline constexpr int kDefaultFrameDecimation = 4;

struct StartParams {
    std::optional<double> speed;              // ideal/noisy follower, cm/s
    std::optional<double> linear_speed;       // manual, cm/s
    std::optional<double> mouse_sensitivity;  // manual, degrees per pointer unit
    std::optional<double> tremor_sigma;
    std::optional<double> drift_theta;
    std::optional<double> drift_sigma;
    std::optional<std::uint64_t> seed;
    std::optional<double> target_radius;
    std::optional<double> timeout_s;
    std::optional<int> decimation;

    friend bool operator==(const StartParams&, const StartParams&) = default;
};

struct StartMessage {
    std::optional<std::string> path_id;  // one of path_id / path
    std::optional<LightPath> path;
    DisplayMode display = DisplayMode::vdu;
    ControllerKind controller = ControllerKind::manual;
    StartParams params;

    friend bool operator==(const StartMessage&, const StartMessage&) = default;
};

// Raw pointer deltas; the server applies mouse sensitivity.
struct InputMessage {
    int forward = 0;
    double dyaw = 0.0;
    double dpitch = 0.0;

    friend bool operator==(const InputMessage&, const InputMessage&) = default;
};

struct PoseMessage {
    std::array<double, 3> pos{};
    std::array<double, 4> quat{1.0, 0.0, 0.0, 0.0};

    friend bool operator==(const PoseMessage&, const PoseMessage&) = default;
};

struct AbortMessage {
    friend bool operator==(const AbortMessage&, const AbortMessage&) = default;
};

using ClientMessage = std::variant<StartMessage, InputMessage, PoseMessage, AbortMessage>;

struct EventMessage {
    EventKind kind = EventKind::started;
    std::int64_t t_ms = 0;

    friend bool operator==(const EventMessage&, const EventMessage&) = default;
};

struct FrameMessage {
    std::int64_t t_ms = 0;
    std::vector<double> grid;  // row-major, 144 values for the 12x12 display

    friend bool operator==(const FrameMessage&, const FrameMessage&) = default;
};

struct MetricsMessage {
    std::string path_id;
    std::size_t n_samples = 0;
    std::optional<double> transit_time_s;
    std::optional<double> avg_sd_cm;
    std::optional<double> correlation_pct;

    friend bool operator==(const MetricsMessage&, const MetricsMessage&) = default;
};

struct ErrorMessage {
    std::string message;

    friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

using ServerMessage = std::variant<EventMessage, FrameMessage, MetricsMessage, ErrorMessage>;

// Serialized messages carry no trailing newline; transports add the delimiter.
std::string serialize(const ClientMessage& msg);
std::string serialize(const ServerMessage& msg);
// Throw ProtocolError on malformed JSON, unknown "type" or bad fields.
ClientMessage parse_client_message(std::string_view line);
ServerMessage parse_server_message(std::string_view line);

FrameMessage frame_message(std::int64_t t_ms, const Frame& frame);

// Everything a connection needs besides its own messages.
struct ServiceOptions {
    int decimation = kDefaultFrameDecimation;
    CameraModel camera;
    CutoffParams cutoff;
    // Called with every finished record (completed, aborted, disconnected).
    std::function<void(const TrajectoryRecord&)> record_sink;
};

// Builds the session configuration a start message asks for.
SessionConfig session_config_from(const StartMessage& start, const ServiceOptions& options);

struct Outgoing {
    std::string line;
    bool droppable = false;  // frames may be shed under backpressure
};

// Transport-independent per-connection protocol: one session at a time,
// inbound lines in, outbound lines out. Input and pose messages go through the
// thread-safe accumulator and latch; on_tick consumes a snapshot of both.
class ConnectionSession {
public:
    explicit ConnectionSession(ServiceOptions options = {});

    std::vector<Outgoing> on_line(std::string_view line);
    std::vector<Outgoing> on_tick();
    // Aborts and persists a running session.
    std::vector<Outgoing> on_disconnect();

    bool running() const noexcept { return session_ && session_->phase() == Phase::running; }
    int tick_ms() const noexcept { return session_ ? session_->config().tick_ms : kDefaultTickMs; }
    const Session* session() const noexcept { return session_.get(); }

private:
    std::vector<Outgoing> handle(const ClientMessage& msg);
    std::vector<Outgoing> finish(const SessionEvent& event);

    ServiceOptions options_;
    std::unique_ptr<Session> session_;
    int decimation_ = kDefaultFrameDecimation;
    ManualParams manual_;
    InputAccumulator inputs_;
    ExternalPoseLatch poses_;
};

}  // namespace pathsense
