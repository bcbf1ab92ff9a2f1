#include "pathsense/geometry.hpp"

#include <algorithm>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "pathsense/error.hpp"

namespace pathsense {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegToRad = kPi / 180.0;
// Points may sit on the cube faces; allow for rounding in generated coordinates.
constexpr double kCubeSlack = 1e-9;

Vec3 curve_point(const PathParams& p, double t) noexcept {
    const double a = p.lateral_extent / 2.0;
    const double z = p.height * (1.0 - t);
    switch (p.kind) {
    case PathKind::curved:
        return {a * std::sin(kPi * t), 0.3 * a * std::sin(2.0 * kPi * t), z};
    case PathKind::helical: {
        const double phase = 2.0 * kPi * p.turns * t;
        return {a * std::cos(phase), a * std::sin(phase), z};
    }
    }
    return {};
}

void validate(const PathParams& p) {
    if (!(p.height > 0.0)) throw ParameterError("height", "must be > 0");
    if (p.height > kCubeSide) throw ParameterError("height", "must fit inside the 12 cm cube");
    if (!(p.lateral_extent >= 0.0)) throw ParameterError("lateral_extent", "must be >= 0");
    if (p.lateral_extent > kCubeSide) throw ParameterError("lateral_extent", "must fit inside the 12 cm cube");
    if (p.kind == PathKind::helical && !(p.turns >= 0.0 && std::isfinite(p.turns)))
        throw ParameterError("turns", "must be a finite value >= 0");
    if (p.n_points < 2) throw ParameterError("n_points", "must be >= 2");
}

}  // namespace

UnitQuat UnitQuat::from_axis_angle(const Vec3& axis, double degrees) {
    const double n = pathsense::norm(axis);
    if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("rotation axis must be non-zero and finite");
    const double half = 0.5 * degrees * kDegToRad;
    const double s = std::sin(half) / n;
    return UnitQuat(std::cos(half), axis.x * s, axis.y * s, axis.z * s).renormalized();
}

UnitQuat UnitQuat::normalized(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("quaternion norm must be non-zero and finite");
    return UnitQuat(w / n, x / n, y / n, z / n);
}

UnitQuat UnitQuat::from_components(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (std::abs(n - 1.0) <= 1e-9) return UnitQuat(w, x, y, z);
    return normalized(w, x, y, z);
}

UnitQuat UnitQuat::renormalized() const noexcept {
    const double n = norm();
    return UnitQuat(w_ / n, x_ / n, y_ / n, z_ / n);
}

Vec3 UnitQuat::rotate(const Vec3& v) const noexcept {
    const Vec3 u{x_, y_, z_};
    const Vec3 t = 2.0 * cross(u, v);
    return v + w_ * t + cross(u, t);
}

UnitQuat operator*(const UnitQuat& a, const UnitQuat& b) noexcept {
    return UnitQuat(a.w_ * b.w_ - a.x_ * b.x_ - a.y_ * b.y_ - a.z_ * b.z_,
                    a.w_ * b.x_ + a.x_ * b.w_ + a.y_ * b.z_ - a.z_ * b.y_,
                    a.w_ * b.y_ - a.x_ * b.z_ + a.y_ * b.w_ + a.z_ * b.x_,
                    a.w_ * b.z_ + a.x_ * b.y_ - a.y_ * b.x_ + a.z_ * b.w_)
        .renormalized();
}

Vec3 view_axis(const Pose& pose) noexcept {
    const Vec3 v = pose.orientation.rotate({0.0, 0.0, -1.0});
    return v * (1.0 / norm(v));
}

UnitQuat look_along(const Vec3& direction) noexcept {
    const double lateral = std::hypot(direction.x, direction.y);
    if (lateral == 0.0 && direction.z == 0.0) return UnitQuat::identity();
    const double pitch = std::atan2(lateral, -direction.z);
    const double yaw = lateral > 0.0 ? std::atan2(-direction.x, direction.y) : 0.0;
    return UnitQuat::from_axis_angle({0, 0, 1}, yaw / kDegToRad) *
           UnitQuat::from_axis_angle({1, 0, 0}, pitch / kDegToRad);
}

LightPath::LightPath(std::string id, std::vector<Vec3> points) : id_(std::move(id)), points_(std::move(points)) {
    if (points_.size() < 2) throw ValidationError("path '" + id_ + "' needs at least 2 points");
    double zmax = points_.front().z;
    double zmin = points_.front().z;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const Vec3& p = points_[i];
        if (!is_finite(p)) throw ValidationError(fmt::format("path point {} is not finite", i));
        if (std::abs(p.x) > kCubeHalf + kCubeSlack || std::abs(p.y) > kCubeHalf + kCubeSlack ||
            p.z < -kCubeSlack || p.z > kCubeSide + kCubeSlack)
            throw ValidationError(fmt::format("path point {} lies outside the cube", i));
        if (i > 0 && p == points_[i - 1])
            throw ValidationError(fmt::format("path points {} and {} coincide", i - 1, i));
        zmax = std::max(zmax, p.z);
        zmin = std::min(zmin, p.z);
    }
    if (points_.front().z != zmax) throw ValidationError("path start must have the highest z");
    if (points_.back().z != zmin) throw ValidationError("path target must have the lowest z");

    cumulative_.reserve(points_.size());
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < points_.size(); ++i)
        cumulative_.push_back(cumulative_.back() + distance(points_[i - 1], points_[i]));
}

std::size_t LightPath::segment_at(double s) const noexcept {
    // First cumulative entry strictly greater than s closes the segment.
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    auto hi = static_cast<std::size_t>(it - cumulative_.begin());
    hi = std::clamp<std::size_t>(hi, 1, points_.size() - 1);
    return hi - 1;
}

Vec3 LightPath::point_at(double s) const noexcept {
    if (s <= 0.0) return points_.front();
    if (s >= length()) return points_.back();
    const std::size_t i = segment_at(s);
    const double seg = cumulative_[i + 1] - cumulative_[i];
    const double f = (s - cumulative_[i]) / seg;
    return points_[i] + (points_[i + 1] - points_[i]) * f;
}

Vec3 LightPath::tangent_at(double s) const noexcept {
    const std::size_t i = segment_at(std::clamp(s, 0.0, length()));
    const Vec3 d = points_[i + 1] - points_[i];
    return d * (1.0 / norm(d));
}

LightPath make_path(const PathParams& params) {
    validate(params);

    // Dense chord-sum table of arc length against t, inverted by interpolation.
    constexpr int kDense = 1 << 16;
    std::vector<double> arc(kDense + 1, 0.0);
    Vec3 prev = curve_point(params, 0.0);
    for (int i = 1; i <= kDense; ++i) {
        const Vec3 cur = curve_point(params, static_cast<double>(i) / kDense);
        arc[i] = arc[i - 1] + distance(prev, cur);
        prev = cur;
    }

    const int n = params.n_points;
    std::vector<Vec3> points;
    points.reserve(static_cast<std::size_t>(n));
    points.push_back(curve_point(params, 0.0));
    for (int k = 1; k < n - 1; ++k) {
        const double target = arc.back() * k / (n - 1);
        const auto it = std::lower_bound(arc.begin(), arc.end(), target);
        const auto hi = static_cast<int>(it - arc.begin());
        const int lo = hi - 1;
        const double span = arc[hi] - arc[lo];
        const double frac = span > 0.0 ? (target - arc[lo]) / span : 0.0;
        points.push_back(curve_point(params, (lo + frac) / kDense));
    }
    points.push_back(curve_point(params, 1.0));

    std::string id = params.id.empty() ? std::string(to_string(params.kind)) : params.id;
    return LightPath(std::move(id), std::move(points));
}

LightPath builtin_path(std::string_view id) {
    PathParams p;
    if (id == "path1") {
        p.kind = PathKind::curved;
    } else if (id == "path2") {
        p.kind = PathKind::helical;
    } else {
        throw ValidationError(fmt::format("unknown path id '{}'", id));
    }
    p.id = std::string(id);
    return make_path(p);
}

double distance_to_target(const Pose& pose, const LightPath& path) noexcept {
    return distance(pose.position, path.target());
}

std::string_view to_string(PathKind kind) noexcept {
    return kind == PathKind::curved ? "curved" : "helical";
}

PathKind path_kind_from_string(std::string_view s) {
    if (s == "curved") return PathKind::curved;
    if (s == "helical") return PathKind::helical;
    throw ParameterError("kind", fmt::format("unknown path kind '{}'", s));
}

LightPath path_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("path file: ") + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("points") ||
        !j["points"].is_array())
        throw ParseError("path file: expected {\"id\": string, \"points\": [[x,y,z], ...]}");
    std::vector<Vec3> points;
    std::size_t i = 0;
    for (const auto& p : j["points"]) {
        if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number())
            throw ParseError(fmt::format("path file: point {} must be [x, y, z]", i));
        points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
        ++i;
    }
    return LightPath(j["id"].get<std::string>(), std::move(points));
}

std::string path_to_json(const LightPath& path) {
    nlohmann::json points = nlohmann::json::array();
    for (const Vec3& p : path.points()) points.push_back({p.x, p.y, p.z});
    nlohmann::json j{{"id", path.id()}, {"points", std::move(points)}};
    return j.dump() + "\n";
}

}  // namespace pathsense
