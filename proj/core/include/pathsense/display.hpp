#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pathsense/rendering.hpp"

namespace pathsense {

// Electrode stimulation range in volts; 0 V means off.
inline constexpr double kMinVolts = 1.0;
inline constexpr double kMaxVolts = 10.0;
inline constexpr double kDefaultActivationThreshold = 0.05;
inline constexpr int kGrayLevels = 128;

// Per-electrode gain in [0,1], row-major, row 0 at the top.
class CalibrationMatrix {
public:
    // All-ones matrix of the given size.
    explicit CalibrationMatrix(int width = 12, int height = 12);
    CalibrationMatrix(int width, int height, std::vector<double> gains);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::span<const double> gains() const noexcept { return gains_; }
    double gain(int row, int col) const { return gains_.at(static_cast<std::size_t>(row * width_ + col)); }

    friend bool operator==(const CalibrationMatrix&, const CalibrationMatrix&) = default;

private:
    int width_;
    int height_;
    std::vector<double> gains_;
};

struct VoltageFrame {
    int width = 12;
    int height = 12;
    std::vector<double> volts;  // each 0 or in [1, 10]
};

struct GrayFrame {
    int width = 12;
    int height = 12;
    std::vector<int> levels;  // each in [0, 127]
};

VoltageFrame to_voltage(const Frame& frame, const CalibrationMatrix& calibration,
                        double activation_threshold = kDefaultActivationThreshold);

// Round-half-up quantization to 128 gray levels.
int gray_level(double intensity) noexcept;
GrayFrame to_gray(const Frame& frame);

// Calibration file: JSON array of width*height gains, row-major. Default size 12x12.
CalibrationMatrix load_calibration(std::string_view text, int width = 12, int height = 12);

std::string to_json(const VoltageFrame& frame);
std::string to_json(const GrayFrame& frame);

}  // namespace pathsense
