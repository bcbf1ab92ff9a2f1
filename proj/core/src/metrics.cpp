#include "pathsense/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "pathsense/error.hpp"

namespace pathsense {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Heights within this many bin widths of an edge count as on the edge.
constexpr double kEdgeTolerance = 1e-9;
constexpr double kDegenerateVariance = 1e-12;

// Neumaier compensated sum; pooling order changes results only at the last bit.
class Sum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

std::size_t bin_count(double z_min, double z_max, double width) noexcept {
    const double n = std::ceil((z_max - z_min) / width - kEdgeTolerance);
    return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

bool z_descending(const LightPath& path) noexcept {
    const auto pts = path.points();
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i].z < pts[i - 1].z)) return false;
    return true;
}

void require_z_monotone(const LightPath& path) {
    if (!z_descending(path))
        throw ValidationError(fmt::format("path '{}' is not strictly descending in z", path.id()));
}

// Assumes a strictly z-descending path and z inside its range.
std::pair<double, double> lateral_at_unchecked(const LightPath& path, double z) noexcept {
    const auto pts = path.points();
    // First point at or below z closes the segment.
    const auto it = std::lower_bound(pts.begin(), pts.end(), z, [](const Vec3& p, double h) { return p.z > h; });
    auto hi = static_cast<std::size_t>(it - pts.begin());
    if (hi == 0) return {pts.front().x, pts.front().y};
    if (hi >= pts.size()) return {pts.back().x, pts.back().y};
    const Vec3& a = pts[hi - 1];
    const Vec3& b = pts[hi];
    const double f = (a.z - z) / (a.z - b.z);
    return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f};
}

ZBinnedSeries make_series(double z_min, double width, std::size_t bins) {
    ZBinnedSeries s;
    s.z_min = z_min;
    s.bin_width = width;
    s.x_mean.assign(bins, kNaN);
    s.y_mean.assign(bins, kNaN);
    s.count.assign(bins, 0);
    return s;
}

void require_same_layout(const ZBinnedSeries& a, const ZBinnedSeries& b) {
    if (a.bins() != b.bins() || a.z_min != b.z_min || a.bin_width != b.bin_width)
        throw StructuralError("z-binned series use different bin layouts");
}

std::optional<double> pearson(std::span<const double> t, std::span<const double> p) {
    const auto n = static_cast<double>(t.size());
    Sum st, sp;
    for (std::size_t i = 0; i < t.size(); ++i) {
        st.add(t[i]);
        sp.add(p[i]);
    }
    const double mt = st.value() / n;
    const double mp = sp.value() / n;
    Sum stt, spp, stp;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double dt = t[i] - mt;
        const double dp = p[i] - mp;
        stt.add(dt * dt);
        spp.add(dp * dp);
        stp.add(dt * dp);
    }
    if (spp.value() / n < kDegenerateVariance) return std::nullopt;
    // A flat trajectory against a varying path carries no similarity.
    if (!(stt.value() > 0.0)) return 0.0;
    return std::clamp(stp.value() / std::sqrt(stt.value() * spp.value()), -1.0, 1.0);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_number(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string(); }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

const char* const kCsvHeader = "condition,path_id,n_trials,avg_sd_cm,correlation_pct,transit_mean_s,transit_sd_s";

}  // namespace

std::optional<std::size_t> bin_index(double z, double z_min, double z_max, double bin_width) noexcept {
    if (!(z >= z_min && z <= z_max)) return std::nullopt;
    const std::size_t bins = bin_count(z_min, z_max, bin_width);
    const double pos = std::floor((z - z_min) / bin_width + kEdgeTolerance);
    return std::min(static_cast<std::size_t>(std::max(pos, 0.0)), bins - 1);
}

std::pair<double, double> path_lateral_at(const LightPath& path, double z) {
    require_z_monotone(path);
    if (!(z >= path.target().z && z <= path.start().z))
        throw ValidationError(fmt::format("height {} outside the path's z range", z));
    return lateral_at_unchecked(path, z);
}

ZBinnedComparison zbin(std::span<const TrajectoryRecord> records, const LightPath& path, double bin_width) {
    if (!(bin_width > 0.0)) throw ParameterError("bin_width", "must be > 0");
    require_z_monotone(path);
    const double z_min = path.target().z;
    const double z_max = path.start().z;
    const std::size_t bins = bin_count(z_min, z_max, bin_width);

    std::vector<Sum> tx(bins), ty(bins), rx(bins), ry(bins);
    std::vector<std::int64_t> count(bins, 0);
    std::size_t total = 0;
    for (const auto& record : records) {
        if (record.samples.empty()) throw MetricUndefined("trajectory has no samples");
        for (const auto& s : record.samples) {
            const Vec3& p = s.pose.position;
            const auto bin = bin_index(p.z, z_min, z_max, bin_width);
            if (!bin) continue;
            const auto [ref_x, ref_y] = lateral_at_unchecked(path, p.z);
            tx[*bin].add(p.x);
            ty[*bin].add(p.y);
            rx[*bin].add(ref_x);
            ry[*bin].add(ref_y);
            ++count[*bin];
            ++total;
        }
    }
    if (total == 0) throw MetricUndefined("trajectory does not overlap the path's z range");

    ZBinnedComparison out{make_series(z_min, bin_width, bins), make_series(z_min, bin_width, bins)};
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const auto n = static_cast<double>(count[b]);
        out.trajectory.x_mean[b] = tx[b].value() / n;
        out.trajectory.y_mean[b] = ty[b].value() / n;
        out.reference.x_mean[b] = rx[b].value() / n;
        out.reference.y_mean[b] = ry[b].value() / n;
    }
    out.trajectory.count = count;
    out.reference.count = std::move(count);
    return out;
}

ZBinnedComparison zbin(const TrajectoryRecord& record, const LightPath& path, double bin_width) {
    return zbin(std::span(&record, 1), path, bin_width);
}

CorrelationResult correlation_breakdown(const ZBinnedSeries& trajectory, const ZBinnedSeries& path) {
    require_same_layout(trajectory, path);
    std::vector<double> tx, ty, px, py;
    for (std::size_t b = 0; b < trajectory.bins(); ++b) {
        if (!trajectory.occupied(b) || !path.occupied(b)) continue;
        tx.push_back(trajectory.x_mean[b]);
        ty.push_back(trajectory.y_mean[b]);
        px.push_back(path.x_mean[b]);
        py.push_back(path.y_mean[b]);
    }
    if (tx.size() < 3)
        throw MetricUndefined(fmt::format("correlation needs >= 3 jointly occupied bins, got {}", tx.size()));

    CorrelationResult r;
    r.x = pearson(tx, px);
    r.y = pearson(ty, py);
    if (!r.x && !r.y) throw MetricUndefined("both path axes are degenerate (constant x and y)");
    const double sum = r.x.value_or(0.0) + r.y.value_or(0.0);
    const int axes = static_cast<int>(r.x.has_value()) + static_cast<int>(r.y.has_value());
    r.percent = std::clamp(100.0 * sum / axes, -100.0, 100.0);
    return r;
}

double correlation_along_z(const ZBinnedSeries& trajectory, const ZBinnedSeries& path) {
    return correlation_breakdown(trajectory, path).percent;
}

SdResult sd_breakdown(std::span<const ZBinnedComparison> trials, SdReference reference) {
    if (trials.empty()) throw MetricUndefined("standard deviation needs at least one trial");
    const ZBinnedSeries& layout = trials.front().trajectory;
    for (const auto& t : trials) {
        require_same_layout(layout, t.trajectory);
        require_same_layout(layout, t.reference);
    }

    Sum sum_x, sum_y;
    std::size_t occupied = 0;
    for (std::size_t b = 0; b < layout.bins(); ++b) {
        // Per-trial lateral values at this bin: deviation from the path, or the raw mean.
        Sum ax, ay, qx, qy;
        std::size_t n = 0;
        for (const auto& t : trials) {
            if (!t.trajectory.occupied(b)) continue;
            const double vx = reference == SdReference::path ? t.trajectory.x_mean[b] - t.reference.x_mean[b]
                                                             : t.trajectory.x_mean[b];
            const double vy = reference == SdReference::path ? t.trajectory.y_mean[b] - t.reference.y_mean[b]
                                                             : t.trajectory.y_mean[b];
            ax.add(vx);
            ay.add(vy);
            qx.add(vx * vx);
            qy.add(vy * vy);
            ++n;
        }
        if (n == 0) continue;
        const auto nd = static_cast<double>(n);
        double var_x = qx.value() / nd;
        double var_y = qy.value() / nd;
        if (reference == SdReference::trial_mean) {
            const double mx = ax.value() / nd;
            const double my = ay.value() / nd;
            var_x = std::max(0.0, var_x - mx * mx);
            var_y = std::max(0.0, var_y - my * my);
        }
        sum_x.add(std::sqrt(var_x));
        sum_y.add(std::sqrt(var_y));
        ++occupied;
    }
    if (occupied == 0) throw MetricUndefined("no occupied bins to compare");
    SdResult r;
    r.sd_x = sum_x.value() / static_cast<double>(occupied);
    r.sd_y = sum_y.value() / static_cast<double>(occupied);
    r.average = 0.5 * (r.sd_x + r.sd_y);
    return r;
}

double avg_sd(std::span<const ZBinnedComparison> trials, SdReference reference) {
    return sd_breakdown(trials, reference).average;
}

double transit_time(const TrajectoryRecord& record) {
    if (!record.completed()) throw MetricUndefined("transit time is only defined for completed sessions");
    if (record.samples.empty()) throw MetricUndefined("trajectory has no samples");
    return static_cast<double>(record.samples.back().t_ms) / 1000.0;
}

MetricsReport evaluate(std::span<const TrajectoryRecord> records, const LightPath& path, const MetricsOptions& options) {
    MetricsReport report;
    report.n_trials = records.size();
    for (const auto& r : records)
        if (r.header.path_id != path.id())
            throw ValidationError(fmt::format("trajectory for path '{}' does not match path '{}'", r.header.path_id,
                                              path.id()));
    if (records.empty()) return report;

    std::vector<ZBinnedComparison> per_trial;
    // Lateral metrics need a single path point per height.
    if (z_descending(path)) {
        per_trial.reserve(records.size());
        for (const auto& r : records) {
            try {
                per_trial.push_back(zbin(r, path, options.bin_width));
            } catch (const MetricUndefined&) {
                // A trial that never enters the path's z range has no bins to compare.
            }
        }
    }
    if (!per_trial.empty()) {
        const SdResult sd = sd_breakdown(per_trial, options.sd_reference);
        report.avg_sd_cm = sd.average;
        report.sd_x_cm = sd.sd_x;
        report.sd_y_cm = sd.sd_y;
        try {
            const ZBinnedComparison pooled = zbin(records, path, options.bin_width);
            const CorrelationResult c = correlation_breakdown(pooled.trajectory, pooled.reference);
            report.correlation_pct = c.percent;
            report.corr_x = c.x;
            report.corr_y = c.y;
        } catch (const MetricUndefined&) {
        }
    }

    Sum times;
    std::vector<double> completed;
    for (const auto& r : records) {
        if (!r.completed()) continue;
        completed.push_back(transit_time(r));
        times.add(completed.back());
    }
    report.n_completed = completed.size();
    if (!completed.empty()) {
        const double mean = times.value() / static_cast<double>(completed.size());
        Sum sq;
        for (double t : completed) sq.add((t - mean) * (t - mean));
        report.transit_mean_s = mean;
        report.transit_sd_s =
            completed.size() > 1 ? std::sqrt(sq.value() / static_cast<double>(completed.size() - 1)) : 0.0;
    }
    return report;
}

std::vector<ConditionRow> aggregate(std::span<const ConditionTrials> sets, const MetricsOptions& options) {
    struct Group {
        std::string condition;
        std::shared_ptr<const LightPath> path;
        std::vector<TrajectoryRecord> trials;
    };
    std::vector<Group> groups;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for (const auto& set : sets) {
        if (!set.path) throw ValidationError(fmt::format("condition '{}' has no path", set.condition));
        const auto key = std::make_pair(set.condition, set.path->id());
        auto [it, inserted] = index.try_emplace(key, groups.size());
        if (inserted) groups.push_back({set.condition, set.path, {}});
        Group& g = groups[it->second];
        if (!(*g.path == *set.path))
            throw ValidationError(fmt::format("condition '{}' uses two different paths with id '{}'", set.condition,
                                              set.path->id()));
        g.trials.insert(g.trials.end(), set.trials.begin(), set.trials.end());
    }

    std::vector<ConditionRow> rows;
    rows.reserve(groups.size());
    for (const auto& g : groups) rows.push_back({g.condition, g.path->id(), evaluate(g.trials, *g.path, options)});
    return rows;
}

std::string to_csv(std::span<const ConditionRow> rows) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& row : rows) {
        const auto& r = row.report;
        out += fmt::format("{},{},{},{},{},{},{}\n", csv_field(row.condition), csv_field(row.path_id), r.n_trials,
                           csv_number(r.avg_sd_cm), csv_number(r.correlation_pct), csv_number(r.transit_mean_s),
                           csv_number(r.transit_sd_s));
    }
    return out;
}

std::vector<ConditionRow> rows_from_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw ParseError("report CSV: unexpected header");
    std::vector<ConditionRow> rows;
    int line_no = 1;
    const auto number = [&](const std::string& s) -> std::optional<double> {
        if (s.empty()) return std::nullopt;
        try {
            return std::stod(s);
        } catch (const std::exception&) {
            throw ParseError(fmt::format("report CSV line {}: '{}' is not a number", line_no, s));
        }
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) throw ParseError(fmt::format("report CSV line {}: expected 7 fields, got {}", line_no, f.size()));
        ConditionRow row;
        row.condition = f[0];
        row.path_id = f[1];
        row.report.n_trials = static_cast<std::size_t>(number(f[2]).value_or(0.0));
        row.report.avg_sd_cm = number(f[3]);
        row.report.correlation_pct = number(f[4]);
        row.report.transit_mean_s = number(f[5]);
        row.report.transit_sd_s = number(f[6]);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_transit(double mean_s, double sd_s) { return fmt::format("{:.1f} ± {:.1f} s", mean_s, sd_s); }

}  // namespace pathsense
