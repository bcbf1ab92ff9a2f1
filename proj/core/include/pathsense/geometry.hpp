#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pathsense {

// World frame: right-handed, z up, centimeters. The virtual cube spans
// x,y in [-6,6] and z in [0,12] with its origin at the bottom center.
inline constexpr double kCubeSide = 12.0;
inline constexpr double kCubeHalf = kCubeSide / 2.0;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3& operator+=(const Vec3& o) noexcept { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) noexcept { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) noexcept { x *= s; y *= s; z *= s; return *this; }

    friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) noexcept { return a += b; }
    friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) noexcept { return a -= b; }
    friend constexpr Vec3 operator*(Vec3 a, double s) noexcept { return a *= s; }
    friend constexpr Vec3 operator*(double s, Vec3 a) noexcept { return a *= s; }
    friend constexpr Vec3 operator-(const Vec3& a) noexcept { return {-a.x, -a.y, -a.z}; }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) noexcept { return std::sqrt(dot(v, v)); }
inline double distance(const Vec3& a, const Vec3& b) noexcept { return norm(a - b); }
inline bool is_finite(const Vec3& v) noexcept {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Rotation quaternion. Every factory and operator returns a normalized value.
class UnitQuat {
public:
    constexpr UnitQuat() noexcept = default;

    static UnitQuat identity() noexcept { return {}; }
    // Rotation of `degrees` about `axis` (need not be unit, must be non-zero).
    static UnitQuat from_axis_angle(const Vec3& axis, double degrees);
    // Normalizes (w,x,y,z). Throws ValidationError if the norm is zero or not finite.
    static UnitQuat normalized(double w, double x, double y, double z);
    // Keeps (w,x,y,z) verbatim when already unit within 1e-9, else normalizes.
    static UnitQuat from_components(double w, double x, double y, double z);

    double w() const noexcept { return w_; }
    double x() const noexcept { return x_; }
    double y() const noexcept { return y_; }
    double z() const noexcept { return z_; }

    UnitQuat conjugate() const noexcept { return UnitQuat(w_, -x_, -y_, -z_); }
    Vec3 rotate(const Vec3& v) const noexcept;
    double norm() const noexcept { return std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_); }

    friend UnitQuat operator*(const UnitQuat& a, const UnitQuat& b) noexcept;
    friend bool operator==(const UnitQuat&, const UnitQuat&) = default;

private:
    UnitQuat(double w, double x, double y, double z) noexcept : w_(w), x_(x), y_(y), z_(z) {}
    UnitQuat renormalized() const noexcept;

    double w_ = 1.0;
    double x_ = 0.0;
    double y_ = 0.0;
    double z_ = 0.0;
};

struct Pose {
    Vec3 position;
    UnitQuat orientation;

    friend bool operator==(const Pose&, const Pose&) = default;
};

// Unit vector along which the camera looks: local -z rotated into the world.
Vec3 view_axis(const Pose& pose) noexcept;

// Orientation whose view axis is `direction`, built as yaw about world z
// followed by pitch about local x (no roll). Zero direction maps to identity.
UnitQuat look_along(const Vec3& direction) noexcept;

// An ordered chain of light points from a start (highest z) to a target
// (lowest z). Construction validates every invariant.
class LightPath {
public:
    LightPath(std::string id, std::vector<Vec3> points);

    const std::string& id() const noexcept { return id_; }
    std::span<const Vec3> points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    std::size_t start_index() const noexcept { return 0; }
    std::size_t target_index() const noexcept { return points_.size() - 1; }
    const Vec3& start() const noexcept { return points_.front(); }
    const Vec3& target() const noexcept { return points_.back(); }

    // Cumulative polyline length at each point; front() == 0.
    std::span<const double> cumulative_length() const noexcept { return cumulative_; }
    double length() const noexcept { return cumulative_.back(); }

    // Point on the polyline at arc length s, clamped to [0, length()].
    Vec3 point_at(double s) const noexcept;
    // Unit tangent of the segment containing arc length s.
    Vec3 tangent_at(double s) const noexcept;

    friend bool operator==(const LightPath& a, const LightPath& b) {
        return a.id_ == b.id_ && a.points_ == b.points_;
    }

private:
    std::size_t segment_at(double s) const noexcept;

    std::string id_;
    std::vector<Vec3> points_;
    std::vector<double> cumulative_;
};

enum class PathKind { curved, helical };

struct PathParams {
    PathKind kind = PathKind::curved;
    double height = 12.0;
    double lateral_extent = 6.0;
    double turns = 1.5;  // helical only
    int n_points = 40;
    std::string id;      // empty: "curved" or "helical"
};

// Samples the analytic curve at n_points positions evenly spaced by arc length.
//   curved:  x = A sin(pi t), y = 0.3 A sin(2 pi t), z = height (1 - t)
//   helical: x = A cos(2 pi turns t), y = A sin(2 pi turns t), z = height (1 - t)
// with A = lateral_extent / 2 and t in [0, 1].
LightPath make_path(const PathParams& params);

// The two pathways used by the platform: "path1" curved, "path2" helical.
LightPath builtin_path(std::string_view id);

double distance_to_target(const Pose& pose, const LightPath& path) noexcept;

std::string_view to_string(PathKind kind) noexcept;
PathKind path_kind_from_string(std::string_view s);

// Path file: {"id": "...", "points": [[x,y,z], ...]} in cm.
LightPath path_from_json(std::string_view text);
std::string path_to_json(const LightPath& path);

}  // namespace pathsense
