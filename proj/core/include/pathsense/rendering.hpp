#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pathsense/geometry.hpp"

namespace pathsense {

struct CameraModel {
    int grid_w = 12;
    int grid_h = 12;
    double fov_deg = 60.0;  // symmetric, both axes
    double near = 0.05;     // cm

    void validate() const;
};

// Logistic attenuation of light intensity with distance from the eye.
struct CutoffParams {
    double inflexion = 2.0;  // cm, intensity 0.5
    double steepness = 2.5;  // 1/cm

    void validate() const;
};

// Intensities below this are written as 0 (not perceivable).
inline constexpr double kVisibilityFloor = 0.004;

// Row-major intensity grid, every cell in [0,1].
class Frame {
public:
    Frame() : Frame(12, 12) {}
    Frame(int width, int height);
    Frame(int width, int height, std::vector<double> cells);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return cells_.size(); }
    double at(int row, int col) const { return cells_.at(index(row, col)); }
    void set(int row, int col, double value);
    std::span<const double> cells() const noexcept { return cells_; }
    int lit_count() const noexcept;

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    std::size_t index(int row, int col) const;

    int width_;
    int height_;
    std::vector<double> cells_;
};

struct Projection {
    int col = 0;
    int row = 0;
    double depth = 0.0;  // along the view axis, cm
};

double depth_cutoff(double distance_cm, const CutoffParams& params = {}) noexcept;

// Pinhole projection into the grid. Column grows with camera-local +x, row with
// camera-local +y; cell = floor((ndc + 1) / 2 * dim), the +1 edge clamped to the
// last index. Empty when the point is at or before the near plane or outside
// the field of view.
std::optional<Projection> project_point(const Pose& pose, const CameraModel& cam, const Vec3& point) noexcept;

// Max-composites depth_cutoff(euclidean distance) of every visible path point.
Frame render_frame(const Pose& pose, const LightPath& path, const CameraModel& cam = {},
                   const CutoffParams& cut = {});

}  // namespace pathsense
