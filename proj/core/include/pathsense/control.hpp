#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string_view>
#include <variant>

#include "pathsense/geometry.hpp"

namespace pathsense {

// Per-tick steering input. Angles in degrees.
struct ControlCommand {
    int forward = 0;  // -1 backward, 0 idle, +1 forward
    double dyaw = 0.0;
    double dpitch = 0.0;

    friend bool operator==(const ControlCommand&, const ControlCommand&) = default;
};

inline constexpr double kMaxTurnPerTick = 45.0;

// forward reduced to its sign, angles clamped to +/-45 degrees.
ControlCommand sanitized(const ControlCommand& cmd) noexcept;

struct ManualParams {
    double linear_speed = 2.0;        // cm/s
    double mouse_sensitivity = 0.1;   // degrees per unit of pointer delta

    void validate() const;
};

// Hand model: Ornstein-Uhlenbeck drift plus white tremor, applied to x and y.
struct NoiseParams {
    double tremor_sigma = 0.15;  // cm / sqrt(s)
    double drift_theta = 0.5;    // 1/s
    double drift_sigma = 0.3;    // cm / sqrt(s)
    std::uint64_t seed = 0;

    void validate() const;
};

struct ExternalPoseSample {
    Vec3 position;
    std::array<double, 4> quat{1.0, 0.0, 0.0, 0.0};  // w, x, y, z; not yet validated
    std::int64_t source_time_ms = 0;
};

// Yaw about world z, then pitch about the local x axis, then move
// forward * linear_speed * dt along the resulting view axis. Angles are used
// as given; the per-tick clamp belongs to the manual controller.
Pose step_manual(const Pose& pose, const ControlCommand& cmd, const ManualParams& params, double dt);

// Converts raw pointer deltas to a command in degrees.
ControlCommand from_pointer(int forward, double dx, double dy, const ManualParams& params) noexcept;

// Validates and normalizes an externally tracked pose. Quaternions whose norm
// is off by more than 1e-6 are rejected with ValidationError.
Pose accept_external_pose(const ExternalPoseSample& sample);

// Stateless ideal step: recovers the arc position as the nearest point of the
// polyline, advances speed*dt along it and looks along the local tangent.
// dt == 0 returns the pose unchanged.
Pose step_ideal(const Pose& pose, const LightPath& path, double speed, double dt);

// Standard normal deviates from mt19937_64. Uniforms take the top 53 bits of
// each draw, normals use Box-Muller (one deviate per pair of uniforms). Both
// steps are fully specified here, so sequences are identical on every platform.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}
    double uniform() noexcept;  // (0, 1]
    double normal() noexcept;

private:
    std::mt19937_64 engine_;
};

// Scripted follower that moves at constant speed along the path polyline.
class IdealFollower {
public:
    IdealFollower(std::shared_ptr<const LightPath> path, double speed);

    Pose step(double dt);
    double arc_position() const noexcept { return arc_; }
    const LightPath& path() const noexcept { return *path_; }
    double speed() const noexcept { return speed_; }

private:
    std::shared_ptr<const LightPath> path_;
    double speed_;
    double arc_ = 0.0;
};

// Ideal follower perturbed in x and y by drift and tremor. Deterministic given
// the seed; four normals are drawn every step whatever the parameters.
class NoisyFollower {
public:
    NoisyFollower(std::shared_ptr<const LightPath> path, double speed, const NoiseParams& noise);

    Pose step(double dt);
    // Offset added to the ideal position by the last step (x, y).
    std::array<double, 2> last_perturbation() const noexcept { return last_; }

private:
    IdealFollower ideal_;
    NoiseParams noise_;
    GaussianSource rng_;
    std::array<double, 2> drift_{0.0, 0.0};
    std::array<double, 2> last_{0.0, 0.0};
};

// Pending manual input between two ticks: angle deltas add up, the latest
// forward state wins and persists (held key) until changed. Thread-safe.
class InputAccumulator {
public:
    void push(const ControlCommand& cmd);
    // Returns the pending command and clears the angle deltas.
    ControlCommand drain();
    void reset();

private:
    std::mutex mutex_;
    ControlCommand pending_;
};

// Last-writer-wins slot for tracked poses, published from any thread.
class ExternalPoseLatch {
public:
    void publish(const Pose& pose);
    std::optional<Pose> latest() const;
    void reset();

private:
    mutable std::mutex mutex_;
    std::optional<Pose> pose_;
};

enum class ControllerKind { manual, external, ideal, noisy };

std::string_view to_string(ControllerKind kind) noexcept;
ControllerKind controller_kind_from_string(std::string_view s);

// Snapshot of what the session observed for one tick.
struct TickInputs {
    ControlCommand command;
    std::optional<Pose> external;
};

// Closed set of controllers a session can own.
class Controller {
public:
    static Controller manual(const ManualParams& params);
    static Controller external();
    static Controller ideal(std::shared_ptr<const LightPath> path, double speed);
    static Controller noisy(std::shared_ptr<const LightPath> path, double speed, const NoiseParams& noise);

    ControllerKind kind() const noexcept;
    Pose step(const Pose& current, const TickInputs& inputs, double dt);

private:
    struct Manual { ManualParams params; };
    struct External {};
    using State = std::variant<Manual, External, IdealFollower, NoisyFollower>;

    explicit Controller(State state) : state_(std::move(state)) {}

    State state_;
};

}  // namespace pathsense
