#include "pathsense/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "pathsense/error.hpp"

namespace pathsense {

namespace {

constexpr double kQuatTolerance = 1e-6;

// Arc length of the polyline point nearest to p (first one on ties).
double nearest_arc_position(const LightPath& path, const Vec3& p) noexcept {
    const auto pts = path.points();
    const auto cum = path.cumulative_length();
    double best_d2 = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vec3 seg = pts[i + 1] - pts[i];
        const double len2 = dot(seg, seg);
        const double f = std::clamp(dot(p - pts[i], seg) / len2, 0.0, 1.0);
        const Vec3 q = pts[i] + seg * f;
        const double d2 = dot(p - q, p - q);
        if (d2 < best_d2) {
            best_d2 = d2;
            best_s = cum[i] + f * (cum[i + 1] - cum[i]);
        }
    }
    return best_s;
}

void require_positive_speed(double speed) {
    if (!(speed > 0.0) || !std::isfinite(speed)) throw ParameterError("speed", "must be > 0");
}

}  // namespace

ControlCommand sanitized(const ControlCommand& cmd) noexcept {
    return {(cmd.forward > 0) - (cmd.forward < 0), std::clamp(cmd.dyaw, -kMaxTurnPerTick, kMaxTurnPerTick),
            std::clamp(cmd.dpitch, -kMaxTurnPerTick, kMaxTurnPerTick)};
}

void ManualParams::validate() const {
    if (!(linear_speed > 0.0)) throw ParameterError("linear_speed", "must be > 0");
    if (!(mouse_sensitivity >= 0.0)) throw ParameterError("mouse_sensitivity", "must be >= 0");
}

void NoiseParams::validate() const {
    if (!(tremor_sigma >= 0.0)) throw ParameterError("tremor_sigma", "must be >= 0");
    if (!(drift_theta >= 0.0)) throw ParameterError("drift_theta", "must be >= 0");
    if (!(drift_sigma >= 0.0)) throw ParameterError("drift_sigma", "must be >= 0");
}

Pose step_manual(const Pose& pose, const ControlCommand& cmd, const ManualParams& params, double dt) {
    if (!(dt > 0.0)) throw ParameterError("dt", "must be > 0");
    const ControlCommand c{(cmd.forward > 0) - (cmd.forward < 0), cmd.dyaw, cmd.dpitch};
    Pose next = pose;
    next.orientation = UnitQuat::from_axis_angle({0, 0, 1}, c.dyaw) * pose.orientation *
                       UnitQuat::from_axis_angle({1, 0, 0}, c.dpitch);
    next.position += view_axis(next) * (c.forward * params.linear_speed * dt);
    return next;
}

ControlCommand from_pointer(int forward, double dx, double dy, const ManualParams& params) noexcept {
    return {forward, dx * params.mouse_sensitivity, dy * params.mouse_sensitivity};
}

Pose accept_external_pose(const ExternalPoseSample& sample) {
    const auto& q = sample.quat;
    const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    if (!(std::abs(n - 1.0) <= kQuatTolerance))
        throw ValidationError(fmt::format("pose quaternion norm {} differs from 1 by more than 1e-6", n));
    if (!is_finite(sample.position)) throw ValidationError("pose position is not finite");
    return {sample.position, UnitQuat::from_components(q[0], q[1], q[2], q[3])};
}

Pose step_ideal(const Pose& pose, const LightPath& path, double speed, double dt) {
    require_positive_speed(speed);
    if (dt == 0.0) return pose;
    const double s = std::min(nearest_arc_position(path, pose.position) + speed * dt, path.length());
    return {path.point_at(s), look_along(path.tangent_at(s))};
}

double GaussianSource::uniform() noexcept {
    // 53 random mantissa bits, shifted into (0, 1].
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double GaussianSource::normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

IdealFollower::IdealFollower(std::shared_ptr<const LightPath> path, double speed)
    : path_(std::move(path)), speed_(speed) {
    if (!path_) throw ParameterError("path", "must not be null");
    require_positive_speed(speed);
}

Pose IdealFollower::step(double dt) {
    arc_ = std::min(arc_ + speed_ * dt, path_->length());
    return {path_->point_at(arc_), look_along(path_->tangent_at(arc_))};
}

NoisyFollower::NoisyFollower(std::shared_ptr<const LightPath> path, double speed, const NoiseParams& noise)
    : ideal_(std::move(path), speed), noise_(noise), rng_(noise.seed) {
    noise_.validate();
}

Pose NoisyFollower::step(double dt) {
    Pose pose = ideal_.step(dt);
    const double root_dt = std::sqrt(dt);
    for (double& d : drift_) d = d * (1.0 - noise_.drift_theta * dt) + noise_.drift_sigma * root_dt * rng_.normal();
    for (std::size_t axis = 0; axis < 2; ++axis)
        last_[axis] = drift_[axis] + noise_.tremor_sigma * root_dt * rng_.normal();
    pose.position.x += last_[0];
    pose.position.y += last_[1];
    return pose;
}

void InputAccumulator::push(const ControlCommand& cmd) {
    std::lock_guard lock(mutex_);
    pending_.forward = cmd.forward;
    pending_.dyaw += cmd.dyaw;
    pending_.dpitch += cmd.dpitch;
}

ControlCommand InputAccumulator::drain() {
    std::lock_guard lock(mutex_);
    const ControlCommand out = pending_;
    pending_.dyaw = 0.0;
    pending_.dpitch = 0.0;
    return out;
}

void InputAccumulator::reset() {
    std::lock_guard lock(mutex_);
    pending_ = {};
}

void ExternalPoseLatch::publish(const Pose& pose) {
    std::lock_guard lock(mutex_);
    pose_ = pose;
}

std::optional<Pose> ExternalPoseLatch::latest() const {
    std::lock_guard lock(mutex_);
    return pose_;
}

void ExternalPoseLatch::reset() {
    std::lock_guard lock(mutex_);
    pose_.reset();
}

std::string_view to_string(ControllerKind kind) noexcept {
    switch (kind) {
    case ControllerKind::manual: return "manual";
    case ControllerKind::external: return "external";
    case ControllerKind::ideal: return "ideal";
    case ControllerKind::noisy: return "noisy";
    }
    return "unknown";
}

ControllerKind controller_kind_from_string(std::string_view s) {
    if (s == "manual") return ControllerKind::manual;
    if (s == "external") return ControllerKind::external;
    if (s == "ideal") return ControllerKind::ideal;
    if (s == "noisy") return ControllerKind::noisy;
    throw ParameterError("controller", fmt::format("unknown controller '{}'", s));
}

Controller Controller::manual(const ManualParams& params) {
    params.validate();
    return Controller(Manual{params});
}

Controller Controller::external() { return Controller(External{}); }

Controller Controller::ideal(std::shared_ptr<const LightPath> path, double speed) {
    return Controller(IdealFollower(std::move(path), speed));
}

Controller Controller::noisy(std::shared_ptr<const LightPath> path, double speed, const NoiseParams& noise) {
    return Controller(NoisyFollower(std::move(path), speed, noise));
}

ControllerKind Controller::kind() const noexcept {
    switch (state_.index()) {
    case 0: return ControllerKind::manual;
    case 1: return ControllerKind::external;
    case 2: return ControllerKind::ideal;
    default: return ControllerKind::noisy;
    }
}

Pose Controller::step(const Pose& current, const TickInputs& inputs, double dt) {
    struct Visitor {
        const Pose& current;
        const TickInputs& inputs;
        double dt;

        Pose operator()(const Manual& m) const {
            return step_manual(current, sanitized(inputs.command), m.params, dt);
        }
        Pose operator()(const External&) const { return inputs.external.value_or(current); }
        Pose operator()(IdealFollower& f) const { return f.step(dt); }
        Pose operator()(NoisyFollower& f) const { return f.step(dt); }
    };
    return std::visit(Visitor{current, inputs, dt}, state_);
}

}  // namespace pathsense
