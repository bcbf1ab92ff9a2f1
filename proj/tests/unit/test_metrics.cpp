#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pathsense/error.hpp"
#include "pathsense/metrics.hpp"

using namespace pathsense;

namespace {

TrajectoryRecord record_of(const std::string& path_id, const std::vector<Vec3>& positions, bool completed = true) {
    TrajectoryRecord r;
    r.header.path_id = path_id;
    r.header.outcome = completed ? Outcome::completed : Outcome::aborted;
    for (std::size_t i = 0; i < positions.size(); ++i)
        r.samples.push_back({static_cast<std::int64_t>(5 * i), {positions[i], {}}});
    return r;
}

// Samples descending through the path's z range, displaced laterally by (dx, dy).
std::vector<Vec3> along(const LightPath& path, double dx, double dy, int n = 2000) {
    const std::vector<Vec3> pts(path.points().begin(), path.points().end());
    std::vector<Vec3> out;
    const double top = path.start().z, bottom = path.target().z;
    for (int i = 0; i < n; ++i) {
        const double z = top - (top - bottom) * i / (n - 1);
        const auto xy = oracle::lateral_at(pts, z);
        out.push_back({xy[0] + dx, xy[1] + dy, z});
    }
    return out;
}

LightPath scaled(const LightPath& path, double s) {
    std::vector<Vec3> pts;
    for (const Vec3& p : path.points()) pts.push_back(p * s);
    return LightPath(path.id(), pts);
}

}  // namespace

TEST(BinIndex, HalfOpenWithTopInLastBin) {
    EXPECT_EQ(bin_index(0.0, 0.0, 12.0, 0.1), 0u);
    EXPECT_EQ(bin_index(0.1, 0.0, 12.0, 0.1), 1u);  // edge goes to the higher bin
    EXPECT_EQ(bin_index(0.3, 0.0, 12.0, 0.1), 3u);
    EXPECT_EQ(bin_index(0.0999, 0.0, 12.0, 0.1), 0u);
    EXPECT_EQ(bin_index(12.0, 0.0, 12.0, 0.1), 119u);
    EXPECT_FALSE(bin_index(12.01, 0.0, 12.0, 0.1));
    EXPECT_FALSE(bin_index(-0.01, 0.0, 12.0, 0.1));
}

TEST(ZBin, IdealTrajectoryMatchesPathPerBin) {
    const LightPath path = builtin_path("path1");
    const auto cmp = zbin(record_of("path1", along(path, 0, 0)), path);
    std::size_t occupied = 0;
    for (std::size_t b = 0; b < cmp.trajectory.bins(); ++b) {
        if (!cmp.trajectory.occupied(b)) continue;
        ++occupied;
        EXPECT_NEAR(cmp.trajectory.x_mean[b], cmp.reference.x_mean[b], 1e-6);
        EXPECT_NEAR(cmp.trajectory.y_mean[b], cmp.reference.y_mean[b], 1e-6);
    }
    EXPECT_EQ(occupied, 120u);
}

TEST(ZBin, RevisitsArePooled) {
    // Oscillating through bin [1.0, 1.1) twice: x = 1, 3 on the way down, 5, 7 back up.
    const LightPath path("v", {{0, 0, 2}, {0, 0, 0}});
    const auto cmp = zbin(record_of("v", {{1, 0, 1.08}, {3, 0, 1.02}, {5, 0, 1.04}, {7, 0, 1.06}}), path);
    EXPECT_EQ(cmp.trajectory.count[10], 4);
    EXPECT_DOUBLE_EQ(cmp.trajectory.x_mean[10], 4.0);
    EXPECT_EQ(cmp.trajectory.count[9], 0);
    EXPECT_TRUE(std::isnan(cmp.trajectory.x_mean[9]));
}

TEST(ZBin, EdgeSampleGoesUp) {
    const LightPath path("v", {{0, 0, 2}, {0, 0, 0}});
    const auto cmp = zbin(record_of("v", {{1, 0, 0.5}}), path);
    EXPECT_EQ(cmp.trajectory.count[5], 1);
    EXPECT_EQ(cmp.trajectory.count[4], 0);
}

TEST(ZBin, OutsideRangeIsUndefined) {
    const LightPath path("v", {{0, 0, 2}, {0, 0, 0}});
    EXPECT_THROW(zbin(record_of("v", {{0, 0, 5}}), path), MetricUndefined);
    const LightPath loop("loop", {{0, 0, 3}, {1, 0, 1}, {1, 1, 2}, {0, 0, 0}});
    EXPECT_THROW(zbin(record_of("loop", {{0, 0, 1}}), loop), ValidationError);
}

TEST(Correlation, IdentityAndOffset) {
    const LightPath path = builtin_path("path2");
    for (double c : {0.0, 0.7, -2.0}) {
        const auto cmp = zbin(record_of("path2", along(path, c, 0)), path);
        EXPECT_NEAR(correlation_along_z(cmp.trajectory, cmp.reference), 100.0, 1e-9) << c;
    }
}

TEST(Correlation, FlippedXGivesZero) {
    // Five bins with hand-picked path values; trajectory x mirrored.
    ZBinnedSeries p, t;
    for (ZBinnedSeries* s : {&p, &t}) {
        s->z_min = 0.0;
        s->bin_width = 1.0;
        s->count = {1, 1, 1, 1, 1};
    }
    p.x_mean = {0.0, 1.0, 3.0, 2.0, 5.0};
    p.y_mean = {1.0, -1.0, 2.0, 0.5, 0.0};
    t.x_mean = {0.0, -1.0, -3.0, -2.0, -5.0};
    t.y_mean = p.y_mean;
    const auto r = correlation_breakdown(t, p);
    EXPECT_NEAR(*r.x, -1.0, 1e-12);
    EXPECT_NEAR(*r.y, 1.0, 1e-12);
    EXPECT_NEAR(r.percent, 0.0, 1e-10);
}

TEST(Correlation, MatchesNaivePearsonAndStaysBounded) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        ZBinnedSeries p, t;
        const int bins = 3 + trial % 20;
        for (ZBinnedSeries* s : {&p, &t}) {
            s->bin_width = 1.0;
            s->count.assign(bins, 1);
        }
        for (int b = 0; b < bins; ++b) {
            p.x_mean.push_back(n(rng));
            p.y_mean.push_back(n(rng));
            t.x_mean.push_back(n(rng) + 0.5 * p.x_mean.back());
            t.y_mean.push_back(n(rng));
        }
        const auto r = correlation_breakdown(t, p);
        EXPECT_GE(r.percent, -100.0);
        EXPECT_LE(r.percent, 100.0);
        EXPECT_NEAR(*r.x, oracle::pearson(t.x_mean, p.x_mean), 1e-9);
        EXPECT_NEAR(r.percent, 50.0 * (oracle::pearson(t.x_mean, p.x_mean) + oracle::pearson(t.y_mean, p.y_mean)),
                    1e-7);
    }
}

TEST(Correlation, DegenerateAxesAreExcluded) {
    // Path in the x-z plane: y is constant and drops out.
    const LightPath planar("planar", {{0, 1, 4}, {1, 1, 3}, {0, 1, 2}, {2, 1, 1}, {0, 1, 0}});
    const auto cmp = zbin(record_of("planar", along(planar, 0.2, 0.3)), planar);
    const auto r = correlation_breakdown(cmp.trajectory, cmp.reference);
    EXPECT_TRUE(r.x);
    EXPECT_FALSE(r.y);
    EXPECT_NEAR(r.percent, 100.0, 1e-9);

    const LightPath vertical("vertical", {{1, 1, 10}, {1, 1, 5}, {1, 1, 1}});
    const auto v = zbin(record_of("vertical", along(vertical, 0.0, 0.0)), vertical);
    EXPECT_THROW(correlation_breakdown(v.trajectory, v.reference), MetricUndefined);
    const MetricsReport rep = evaluate(std::vector{record_of("vertical", along(vertical, 0.1, 0.0))}, vertical);
    EXPECT_FALSE(rep.correlation_pct);
    EXPECT_NEAR(*rep.avg_sd_cm, 0.05, 1e-12);
}

TEST(Correlation, TooFewBins) {
    const LightPath path("v", {{0, 0, 2}, {1, 0, 0}});
    const auto cmp = zbin(record_of("v", {{0, 0, 1.05}, {0, 0, 1.15}}), path);
    EXPECT_THROW(correlation_along_z(cmp.trajectory, cmp.reference), MetricUndefined);
}

TEST(AvgSd, ZeroForPathAndHalfOffset) {
    const LightPath path = builtin_path("path1");
    const std::vector<ZBinnedComparison> same{zbin(record_of("path1", along(path, 0, 0)), path)};
    EXPECT_NEAR(avg_sd(same), 0.0, 1e-9);
    for (double c : {0.25, -1.5}) {
        const std::vector<ZBinnedComparison> off{zbin(record_of("path1", along(path, c, 0)), path)};
        const SdResult r = sd_breakdown(off);
        EXPECT_NEAR(r.average, std::abs(c) / 2.0, 1e-9);
        EXPECT_NEAR(r.sd_x, std::abs(c), 1e-9);
        EXPECT_NEAR(r.sd_y, 0.0, 1e-9);
    }
}

TEST(AvgSd, PooledPlusMinusOffset) {
    const LightPath path = builtin_path("path2");
    const double c = 0.4;
    const std::vector<ZBinnedComparison> trials{zbin(record_of("path2", along(path, c, 0)), path),
                                                zbin(record_of("path2", along(path, -c, 0)), path)};
    EXPECT_NEAR(avg_sd(trials), c / 2.0, 1e-9);
    // About the cross-trial mean the two trials are +c and -c as well.
    EXPECT_NEAR(avg_sd(trials, SdReference::trial_mean), c / 2.0, 1e-9);
}

TEST(AvgSd, ZeroOnlyWhenEveryDeviationIsZero) {
    const LightPath path = builtin_path("path1");
    auto pts = along(path, 0, 0);
    pts[1000].y += 1e-3;
    const std::vector<ZBinnedComparison> one{zbin(record_of("path1", pts), path)};
    EXPECT_GT(avg_sd(one), 0.0);
}

TEST(AvgSd, TrialMeanModeIgnoresCommonBias) {
    const LightPath path = builtin_path("path1");
    const std::vector<ZBinnedComparison> trials{zbin(record_of("path1", along(path, 0.3, 0)), path),
                                                zbin(record_of("path1", along(path, 0.3, 0)), path)};
    EXPECT_NEAR(avg_sd(trials, SdReference::trial_mean), 0.0, 1e-9);
    EXPECT_NEAR(avg_sd(trials, SdReference::path), 0.15, 1e-9);
}

TEST(Metrics, ScalingScalesSdAndKeepsCorrelation) {
    const LightPath path = builtin_path("path2");
    std::mt19937_64 rng(10);
    std::normal_distribution<double> n(0.0, 0.2);
    std::vector<TrajectoryRecord> trials;
    for (int t = 0; t < 4; ++t) {
        auto pts = along(path, 0, 0, 1500);
        double wx = 0, wy = 0;
        for (auto& p : pts) {
            wx += 0.05 * n(rng);
            wy += 0.05 * n(rng);
            p.x += wx;
            p.y += wy;
        }
        trials.push_back(record_of("path2", pts));
    }
    const MetricsReport base = evaluate(trials, path);
    for (double s : {0.5, 0.25}) {
        std::vector<TrajectoryRecord> scaled_trials = trials;
        for (auto& r : scaled_trials)
            for (auto& smp : r.samples) smp.pose.position = smp.pose.position * s;
        MetricsOptions opt;
        opt.bin_width = kDefaultBinWidth * s;
        const MetricsReport r = evaluate(scaled_trials, scaled(path, s), opt);
        EXPECT_NEAR(*r.avg_sd_cm, s * *base.avg_sd_cm, 1e-9 * *base.avg_sd_cm) << s;
        EXPECT_NEAR(*r.correlation_pct, *base.correlation_pct, 1e-9) << s;
    }
}

TEST(TransitTime, CompletedOnly) {
    const LightPath path("v", {{0, 0, 2}, {0, 0, 0}});
    std::vector<Vec3> pts(2841, Vec3{0, 0, 1});
    EXPECT_DOUBLE_EQ(transit_time(record_of("v", pts)), 14.2);
    EXPECT_THROW(transit_time(record_of("v", pts, false)), MetricUndefined);
    EXPECT_EQ(format_transit(14.2, 9.3), "14.2 ± 9.3 s");
    EXPECT_EQ(format_transit(8.625, 0.04), "8.6 ± 0.0 s");
}

TEST(Evaluate, RejectsForeignTrajectories) {
    const LightPath path = builtin_path("path1");
    EXPECT_THROW(evaluate(std::vector{record_of("path2", along(path, 0, 0))}, path), ValidationError);
}

TEST(Evaluate, TransitStats) {
    const LightPath path("v", {{0, 0, 2}, {1, 0, 0}});
    std::vector<TrajectoryRecord> rs{record_of("v", std::vector<Vec3>(201, {0, 0, 1})),
                                     record_of("v", std::vector<Vec3>(401, {0, 0, 1})),
                                     record_of("v", std::vector<Vec3>(50, {0, 0, 1}), false)};
    const MetricsReport r = evaluate(rs, path);
    EXPECT_EQ(r.n_trials, 3u);
    EXPECT_EQ(r.n_completed, 2u);
    EXPECT_DOUBLE_EQ(*r.transit_mean_s, 1.5);
    EXPECT_NEAR(*r.transit_sd_s, std::sqrt(0.5), 1e-12);
    const MetricsReport one = evaluate(std::span(rs.data(), 1), path);
    EXPECT_EQ(*one.transit_sd_s, 0.0);
}

TEST(Aggregate, PoolsByConditionAndPath) {
    auto p1 = std::make_shared<const LightPath>(builtin_path("path1"));
    auto p2 = std::make_shared<const LightPath>(builtin_path("path2"));
    const auto r1 = record_of("path1", along(*p1, 0.2, 0));
    const auto r2 = record_of("path1", along(*p1, -0.2, 0));
    const auto r3 = record_of("path2", along(*p2, 0, 0));
    const std::vector<ConditionTrials> sets{{"vdu", p1, {r1}}, {"vdu", p2, {r3}}, {"vdu", p1, {r2}}, {"tdu", p1, {r1}}};
    const auto rows = aggregate(sets);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].condition, "vdu");
    EXPECT_EQ(rows[0].path_id, "path1");
    EXPECT_EQ(rows[0].report.n_trials, 2u);
    EXPECT_NEAR(*rows[0].report.avg_sd_cm, 0.1, 1e-9);
    EXPECT_EQ(rows[1].path_id, "path2");
    EXPECT_EQ(rows[2].condition, "tdu");

    // single report pooled = that report; duplicated trials keep the correlation
    const MetricsReport single = evaluate(std::vector{r1}, *p1);
    EXPECT_EQ(*rows[2].report.avg_sd_cm, *single.avg_sd_cm);
    const std::vector<ConditionTrials> twice{{"a", p1, {r1}}, {"a", p1, {r1}}};
    EXPECT_NEAR(*aggregate(twice)[0].report.correlation_pct, *single.correlation_pct, 1e-9);
}

TEST(Csv, StableColumnsAndRoundTrip) {
    auto p1 = std::make_shared<const LightPath>(builtin_path("path1"));
    const std::vector<ConditionTrials> sets{{"vdu", p1, {record_of("path1", along(*p1, 0.2, 0))}},
                                            {"tdu", p1, {record_of("path1", along(*p1, 0.1, 0), false)}}};
    const auto rows = aggregate(sets);
    const std::string csv = to_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "condition,path_id,n_trials,avg_sd_cm,correlation_pct,transit_mean_s,transit_sd_s");
    const auto back = rows_from_csv(csv);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].condition, "tdu");
    EXPECT_FALSE(back[1].report.transit_mean_s);
    EXPECT_NEAR(*back[0].report.avg_sd_cm, 0.1, 1e-6);
    EXPECT_EQ(to_csv(back), csv);
    EXPECT_THROW(rows_from_csv("a,b\n"), ParseError);
}
