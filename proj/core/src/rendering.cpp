#include "pathsense/rendering.hpp"

#include <algorithm>
#include <numbers>

#include <fmt/format.h>

#include "pathsense/error.hpp"

namespace pathsense {

void CameraModel::validate() const {
    if (grid_w < 1) throw ParameterError("grid_w", "must be >= 1");
    if (grid_h < 1) throw ParameterError("grid_h", "must be >= 1");
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ParameterError("fov_deg", "must be in (0, 180)");
    if (!(near >= 0.0)) throw ParameterError("near", "must be >= 0");
}

void CutoffParams::validate() const {
    if (!(inflexion > 0.0)) throw ParameterError("inflexion", "must be > 0");
    if (!(steepness > 0.0)) throw ParameterError("steepness", "must be > 0");
}

Frame::Frame(int width, int height) : Frame(width, height, std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), 0.0)) {}

Frame::Frame(int width, int height, std::vector<double> cells) : width_(width), height_(height), cells_(std::move(cells)) {
    if (width < 1 || height < 1) throw StructuralError("frame dimensions must be >= 1");
    if (cells_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw StructuralError(fmt::format("frame expects {} cells, got {}", width * height, cells_.size()));
    for (std::size_t i = 0; i < cells_.size(); ++i)
        if (!(cells_[i] >= 0.0 && cells_[i] <= 1.0))
            throw ValidationError(fmt::format("frame cell {} = {} outside [0,1]", i, cells_[i]));
}

std::size_t Frame::index(int row, int col) const {
    if (row < 0 || row >= height_ || col < 0 || col >= width_)
        throw std::out_of_range(fmt::format("cell ({},{}) outside {}x{} frame", row, col, height_, width_));
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
}

void Frame::set(int row, int col, double value) {
    if (!(value >= 0.0 && value <= 1.0)) throw ValidationError(fmt::format("intensity {} outside [0,1]", value));
    cells_[index(row, col)] = value;
}

int Frame::lit_count() const noexcept {
    return static_cast<int>(std::count_if(cells_.begin(), cells_.end(), [](double v) { return v > 0.0; }));
}

double depth_cutoff(double distance_cm, const CutoffParams& params) noexcept {
    return 1.0 / (1.0 + std::exp(params.steepness * (distance_cm - params.inflexion)));
}

std::optional<Projection> project_point(const Pose& pose, const CameraModel& cam, const Vec3& point) noexcept {
    const Vec3 local = pose.orientation.conjugate().rotate(point - pose.position);
    const double depth = -local.z;
    if (!(depth > cam.near)) return std::nullopt;

    const double half_extent = depth * std::tan(0.5 * cam.fov_deg * std::numbers::pi / 180.0);
    const double ndc_x = local.x / half_extent;
    const double ndc_y = local.y / half_extent;
    if (std::abs(ndc_x) > 1.0 || std::abs(ndc_y) > 1.0) return std::nullopt;

    const auto to_cell = [](double ndc, int dim) {
        const int cell = static_cast<int>(std::floor((ndc + 1.0) / 2.0 * dim));
        return std::clamp(cell, 0, dim - 1);
    };
    return Projection{to_cell(ndc_x, cam.grid_w), to_cell(ndc_y, cam.grid_h), depth};
}

Frame render_frame(const Pose& pose, const LightPath& path, const CameraModel& cam, const CutoffParams& cut) {
    Frame frame(cam.grid_w, cam.grid_h);
    for (const Vec3& p : path.points()) {
        const auto proj = project_point(pose, cam, p);
        if (!proj) continue;
        const double intensity = depth_cutoff(distance(pose.position, p), cut);
        if (intensity < kVisibilityFloor) continue;
        if (intensity > frame.at(proj->row, proj->col)) frame.set(proj->row, proj->col, intensity);
    }
    return frame;
}

}  // namespace pathsense
