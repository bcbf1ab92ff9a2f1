#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pathsense/geometry.hpp"
#include "pathsense/session.hpp"

namespace pathsense {

inline constexpr double kDefaultBinWidth = 0.1;  // cm

// Lateral coordinates averaged per z bin. Bins are half-open [lo, hi) over the
// path's z range, except that the top of the range falls into the last bin.
// Empty bins have count 0 and NaN means; they are never interpolated.
struct ZBinnedSeries {
    double z_min = 0.0;
    double bin_width = kDefaultBinWidth;
    std::vector<double> x_mean;
    std::vector<double> y_mean;
    std::vector<std::int64_t> count;

    std::size_t bins() const noexcept { return count.size(); }
    bool occupied(std::size_t bin) const noexcept { return count[bin] > 0; }
    double bin_low(std::size_t bin) const noexcept { return z_min + static_cast<double>(bin) * bin_width; }
};

// A trajectory series and the path evaluated at the very same sample heights:
// for every sample at height z the reference is the polyline point at z. Both
// series therefore share edges and occupancy.
struct ZBinnedComparison {
    ZBinnedSeries trajectory;
    ZBinnedSeries reference;
};

// Bin index of z for the given range, or empty when z lies outside it.
std::optional<std::size_t> bin_index(double z, double z_min, double z_max, double bin_width) noexcept;

// Lateral (x, y) of the polyline at height z. Requires z strictly decreasing
// along the path; throws ValidationError otherwise or when z is out of range.
std::pair<double, double> path_lateral_at(const LightPath& path, double z);

// Pools every sample of every record (revisits included). Throws
// MetricUndefined when no sample falls inside the path's z range.
ZBinnedComparison zbin(std::span<const TrajectoryRecord> records, const LightPath& path,
                       double bin_width = kDefaultBinWidth);
ZBinnedComparison zbin(const TrajectoryRecord& record, const LightPath& path, double bin_width = kDefaultBinWidth);

struct CorrelationResult {
    std::optional<double> x;  // Pearson r, empty when the path axis is degenerate
    std::optional<double> y;
    double percent = 0.0;     // mean of the defined axes, x100
};

// Pearson correlation of trajectory against path lateral coordinates over the
// jointly occupied bins. Path axes with variance < 1e-12 are left out.
CorrelationResult correlation_breakdown(const ZBinnedSeries& trajectory, const ZBinnedSeries& path);
double correlation_along_z(const ZBinnedSeries& trajectory, const ZBinnedSeries& path);

enum class SdReference {
    path,        // RMS of bin deviations from the path
    trial_mean,  // SD of bin means about the cross-trial mean at that bin
};

struct SdResult {
    double sd_x = 0.0;  // mean over occupied bins of SD_x(bin)
    double sd_y = 0.0;
    double average = 0.0;  // (sd_x + sd_y) / 2
};

// One comparison per trial, all binned over the same path with the same width.
SdResult sd_breakdown(std::span<const ZBinnedComparison> trials, SdReference reference = SdReference::path);
double avg_sd(std::span<const ZBinnedComparison> trials, SdReference reference = SdReference::path);

// Seconds from start to target. Throws MetricUndefined unless the record completed.
double transit_time(const TrajectoryRecord& record);

struct MetricsOptions {
    double bin_width = kDefaultBinWidth;
    SdReference sd_reference = SdReference::path;
};

struct MetricsReport {
    std::size_t n_trials = 0;
    std::size_t n_completed = 0;
    std::optional<double> avg_sd_cm;
    std::optional<double> sd_x_cm;
    std::optional<double> sd_y_cm;
    std::optional<double> correlation_pct;
    std::optional<double> corr_x;
    std::optional<double> corr_y;
    std::optional<double> transit_mean_s;
    std::optional<double> transit_sd_s;  // sample SD, 0 for a single trial
};

// Treats the records as one pooled set. Records must belong to `path`
// (ValidationError otherwise); undefined metrics are left empty.
MetricsReport evaluate(std::span<const TrajectoryRecord> records, const LightPath& path,
                       const MetricsOptions& options = {});

struct ConditionTrials {
    std::string condition;
    std::shared_ptr<const LightPath> path;
    std::vector<TrajectoryRecord> trials;
};

struct ConditionRow {
    std::string condition;
    std::string path_id;
    MetricsReport report;
};

// Rows keyed by (condition, path id) in first-seen order; entries sharing a key
// are pooled into one trial set before any metric is computed.
std::vector<ConditionRow> aggregate(std::span<const ConditionTrials> sets, const MetricsOptions& options = {});

// condition,path_id,n_trials,avg_sd_cm,correlation_pct,transit_mean_s,transit_sd_s
std::string to_csv(std::span<const ConditionRow> rows);
std::vector<ConditionRow> rows_from_csv(std::string_view text);

// "14.2 ± 9.3 s"
std::string format_transit(double mean_s, double sd_s);

}  // namespace pathsense
