#include "pathsense/display.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "pathsense/error.hpp"

namespace pathsense {

CalibrationMatrix::CalibrationMatrix(int width, int height)
    : CalibrationMatrix(width, height, std::vector<double>(static_cast<std::size_t>(std::max(width * height, 0)), 1.0)) {}

CalibrationMatrix::CalibrationMatrix(int width, int height, std::vector<double> gains)
    : width_(width), height_(height), gains_(std::move(gains)) {
    if (width < 1 || height < 1) throw StructuralError("calibration dimensions must be >= 1");
    if (gains_.size() != static_cast<std::size_t>(width * height))
        throw StructuralError(fmt::format("calibration expects {} gains, got {}", width * height, gains_.size()));
    for (std::size_t i = 0; i < gains_.size(); ++i)
        if (!(gains_[i] >= 0.0 && gains_[i] <= 1.0))
            throw ValidationError(fmt::format("calibration gain at ({},{}) = {} outside [0,1]", i / width,
                                              i % width, gains_[i]));
}

VoltageFrame to_voltage(const Frame& frame, const CalibrationMatrix& calibration, double activation_threshold) {
    if (frame.width() != calibration.width() || frame.height() != calibration.height())
        throw StructuralError(fmt::format("frame is {}x{} but calibration is {}x{}", frame.height(), frame.width(),
                                          calibration.height(), calibration.width()));
    VoltageFrame out{frame.width(), frame.height(), {}};
    out.volts.reserve(frame.size());
    const auto cells = frame.cells();
    const auto gains = calibration.gains();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] < activation_threshold) {
            out.volts.push_back(0.0);
            continue;
        }
        const double v = (kMinVolts + (kMaxVolts - kMinVolts) * cells[i]) * gains[i];
        out.volts.push_back(v < kMinVolts ? 0.0 : std::min(v, kMaxVolts));
    }
    return out;
}

int gray_level(double intensity) noexcept {
    const double clamped = std::clamp(intensity, 0.0, 1.0);
    return static_cast<int>(std::floor(clamped * (kGrayLevels - 1) + 0.5));
}

GrayFrame to_gray(const Frame& frame) {
    GrayFrame out{frame.width(), frame.height(), {}};
    out.levels.reserve(frame.size());
    for (double c : frame.cells()) out.levels.push_back(gray_level(c));
    return out;
}

CalibrationMatrix load_calibration(std::string_view text, int width, int height) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("calibration file: ") + e.what());
    }
    if (!j.is_array()) throw ParseError("calibration file: expected a JSON array of gains");
    const auto expected = static_cast<std::size_t>(width * height);
    if (j.size() != expected)
        throw ParseError(fmt::format("calibration file: expected {} values, got {}", expected, j.size()));
    std::vector<double> gains;
    gains.reserve(expected);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto row = i / static_cast<std::size_t>(width);
        const auto col = i % static_cast<std::size_t>(width);
        if (!j[i].is_number()) throw ParseError(fmt::format("calibration file: value at ({},{}) is not a number", row, col));
        const double g = j[i].get<double>();
        if (!(g >= 0.0 && g <= 1.0))
            throw ParseError(fmt::format("calibration file: gain {} at ({},{}) outside [0,1]", g, row, col));
        gains.push_back(g);
    }
    return CalibrationMatrix(width, height, std::move(gains));
}

std::string to_json(const VoltageFrame& frame) { return nlohmann::json(frame.volts).dump(); }

std::string to_json(const GrayFrame& frame) { return nlohmann::json(frame.levels).dump(); }

}  // namespace pathsense
