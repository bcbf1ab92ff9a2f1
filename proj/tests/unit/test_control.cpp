#include <cmath>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pathsense/control.hpp"
#include "pathsense/error.hpp"

using namespace pathsense;

namespace {

double distance_to_polyline(const LightPath& path, const Vec3& p) {
    double best = 1e300;
    const auto pts = path.points();
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const Vec3 a = pts[i - 1], ab = pts[i] - pts[i - 1];
        const double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
        best = std::min(best, distance(p, a + ab * t));
    }
    return best;
}

void expect_near(const Vec3& a, const Vec3& b, double tol) {
    EXPECT_NEAR(a.x, b.x, tol);
    EXPECT_NEAR(a.y, b.y, tol);
    EXPECT_NEAR(a.z, b.z, tol);
}

}  // namespace

TEST(StepManual, ForwardMovesAlongViewAxis) {
    const Pose p = step_manual({{1, 2, 8}, {}}, {1, 0, 0}, {}, 1.0);
    expect_near(p.position, {1, 2, 6}, 1e-12);
    const Pose back = step_manual({{1, 2, 8}, {}}, {-1, 0, 0}, {}, 0.5);
    expect_near(back.position, {1, 2, 9}, 1e-12);
}

TEST(StepManual, YawTurnsViewAboutWorldZ) {
    const Pose start{{0, 0, 6}, look_along({1, 0, 0})};
    const Pose p = step_manual(start, {0, 90.0, 0}, {}, 0.005);
    EXPECT_EQ(p.position, start.position);
    expect_near(view_axis(p), {0, 1, 0}, 1e-12);
    expect_near(view_axis(p), oracle::apply(oracle::rotation_matrix({0, 0, 1}, 90.0), view_axis(start)), 1e-12);
}

TEST(StepManual, PitchedMoveIsPerpendicularToOldAxis) {
    const Pose start{{0, 0, 6}, {}};
    const Pose p = step_manual(start, {1, 0, 90.0}, {}, 1.0);
    const Vec3 disp = p.position - start.position;
    EXPECT_NEAR(norm(disp), 2.0, 1e-12);
    EXPECT_NEAR(dot(disp, view_axis(start)), 0.0, 1e-9);
}

TEST(StepManual, ControllerClampsTurnsPerTick) {
    Controller man = Controller::manual({});
    const Pose start{{0, 0, 6}, look_along({1, 0, 0})};
    const Pose p = man.step(start, {{0, 90.0, 0}, {}}, 0.005);
    const double h = std::sqrt(0.5);
    expect_near(view_axis(p), {h, h, 0}, 1e-12);
}

TEST(StepManual, TurnsClampedAndDtChecked) {
    const ControlCommand c = sanitized({5, 400.0, -400.0});
    EXPECT_EQ(c.forward, 1);
    EXPECT_EQ(c.dyaw, 45.0);
    EXPECT_EQ(c.dpitch, -45.0);
    EXPECT_THROW(step_manual({}, {}, {}, 0.0), ParameterError);
}

TEST(StepManual, QuaternionStaysUnitOverManySteps) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ang(-45.0, 45.0);
    std::uniform_int_distribution<int> fwd(-1, 1);
    Pose p{{0, 0, 6}, {}};
    for (int i = 0; i < 100000; ++i) p = step_manual(p, {fwd(rng), ang(rng), ang(rng)}, {}, 0.005);
    EXPECT_NEAR(p.orientation.norm(), 1.0, 1e-9);
}

TEST(FromPointer, AppliesSensitivity) {
    const ControlCommand c = from_pointer(1, 10.0, -4.0, {2.0, 0.25});
    EXPECT_EQ(c.forward, 1);
    EXPECT_DOUBLE_EQ(c.dyaw, 2.5);
    EXPECT_DOUBLE_EQ(c.dpitch, -1.0);
}

TEST(StepIdeal, FullTraversalReachesTarget) {
    const LightPath path = builtin_path("path1");
    const Pose p = step_ideal({path.start(), {}}, path, 2.0, path.length() / 2.0);
    expect_near(p.position, path.target(), 1e-9);
}

TEST(StepIdeal, ZeroDtIsIdentity) {
    const LightPath path = builtin_path("path2");
    const Pose start{path.start(), UnitQuat::from_axis_angle({0, 1, 0}, 10.0)};
    EXPECT_EQ(step_ideal(start, path, 2.0, 0.0), start);
}

TEST(StepIdeal, HalfTraversalMatchesWalker) {
    for (const char* id : {"path1", "path2"}) {
        const LightPath path = builtin_path(id);
        const std::vector<Vec3> pts(path.points().begin(), path.points().end());
        const Pose p = step_ideal({path.start(), {}}, path, 2.0, path.length() / 4.0);
        expect_near(p.position, oracle::walk(pts, path.length() / 2.0), 1e-9);
    }
}

TEST(StepIdeal, StaysOnPolyline) {
    const LightPath path = builtin_path("path2");
    Pose p{path.start(), {}};
    for (int i = 0; i < 4000; ++i) {
        p = step_ideal(p, path, 2.0, 0.005);
        ASSERT_LE(distance_to_polyline(path, p.position), 1e-9) << i;
    }
    EXPECT_NEAR(p.orientation.norm(), 1.0, 1e-9);
}

TEST(IdealFollower, LooksAlongTangent) {
    auto path = std::make_shared<const LightPath>(builtin_path("path1"));
    IdealFollower f(path, 2.0);
    for (int i = 0; i < 500; ++i) {
        const Pose p = f.step(0.005);
        expect_near(view_axis(p), path->tangent_at(f.arc_position()), 1e-9);
        ASSERT_LE(distance_to_polyline(*path, p.position), 1e-9);
    }
    EXPECT_NEAR(f.arc_position(), 5.0, 1e-9);
    EXPECT_THROW(IdealFollower(path, 0.0), ParameterError);
}

TEST(NoisyFollower, ZeroNoiseEqualsIdeal) {
    auto path = std::make_shared<const LightPath>(builtin_path("path2"));
    IdealFollower ideal(path, 2.0);
    NoisyFollower noisy(path, 2.0, {0.0, 0.0, 0.0, 99});
    for (int i = 0; i < 3000; ++i) EXPECT_EQ(ideal.step(0.005), noisy.step(0.005));
}

TEST(NoisyFollower, SeededRunsRepeatBitwise) {
    auto path = std::make_shared<const LightPath>(builtin_path("path1"));
    NoisyFollower a(path, 2.0, {0.15, 0.5, 0.3, 42});
    NoisyFollower b(path, 2.0, {0.15, 0.5, 0.3, 42});
    NoisyFollower c(path, 2.0, {0.15, 0.5, 0.3, 43});
    bool differs = false;
    for (int i = 0; i < 2000; ++i) {
        const Pose pa = a.step(0.005);
        EXPECT_EQ(pa, b.step(0.005));
        differs |= !(pa == c.step(0.005));
    }
    EXPECT_TRUE(differs);
}

TEST(NoisyFollower, TremorIncrementSdMatchesSigmaRootDt) {
    auto path = std::make_shared<const LightPath>(builtin_path("path1"));
    NoisyFollower f(path, 0.0001, {0.2, 0.5, 0.0, 2024});
    double sum = 0.0, sq = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        f.step(0.005);
        const double x = f.last_perturbation()[0];
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double sd = std::sqrt((sq - n * mean * mean) / (n - 1));
    EXPECT_NEAR(sd, 0.2 * std::sqrt(0.005), 0.05 * 0.2 * std::sqrt(0.005));
}

TEST(GaussianSource, MomentsAndRange) {
    GaussianSource g(1);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = g.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LE(u, 1.0);
        const double z = g.normal();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(ExternalPose, AcceptRenormalizeReject) {
    const UnitQuat q = UnitQuat::from_axis_angle({0.3, -1, 2}, 71.0);
    const Pose p = accept_external_pose({{1, 2, 3}, {q.w(), q.x(), q.y(), q.z()}, 0});
    EXPECT_EQ(p.orientation, q);
    EXPECT_EQ(p.position, (Vec3{1, 2, 3}));

    const double s = 1.0 + 1e-7;
    const Pose r = accept_external_pose({{0, 0, 6}, {q.w() * s, q.x() * s, q.y() * s, q.z() * s}, 0});
    EXPECT_NEAR(r.orientation.norm(), 1.0, 1e-15);
    EXPECT_NEAR(r.orientation.w(), q.w(), 1e-12);

    EXPECT_THROW(accept_external_pose({{0, 0, 6}, {0.9, 0, 0, 0}, 0}), ValidationError);
    EXPECT_THROW(accept_external_pose({{NAN, 0, 6}, {1, 0, 0, 0}, 0}), ValidationError);
}

TEST(InputAccumulator, SumsAnglesAndKeepsLastForward) {
    InputAccumulator acc;
    acc.push({1, 1.0, -2.0});
    acc.push({-1, 0.5, 0.5});
    ControlCommand c = acc.drain();
    EXPECT_EQ(c.forward, -1);
    EXPECT_DOUBLE_EQ(c.dyaw, 1.5);
    EXPECT_DOUBLE_EQ(c.dpitch, -1.5);
    c = acc.drain();
    EXPECT_EQ(c.forward, -1);
    EXPECT_EQ(c.dyaw, 0.0);
    acc.reset();
    EXPECT_EQ(acc.drain(), ControlCommand{});
}

TEST(InputAccumulator, ConcurrentPushesAreNotLost) {
    InputAccumulator acc;
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&] {
            for (int i = 0; i < 10000; ++i) acc.push({1, 1.0, 0.0});
        });
    double total = 0.0;
    for (int i = 0; i < 100; ++i) total += acc.drain().dyaw;
    for (auto& t : threads) t.join();
    total += acc.drain().dyaw;
    EXPECT_EQ(total, 40000.0);
}

TEST(ExternalPoseLatch, LastWriterWins) {
    ExternalPoseLatch latch;
    EXPECT_FALSE(latch.latest());
    latch.publish({{1, 0, 0}, {}});
    latch.publish({{2, 0, 0}, {}});
    EXPECT_EQ(latch.latest()->position.x, 2.0);
    latch.reset();
    EXPECT_FALSE(latch.latest());
}

TEST(Controller, Dispatch) {
    auto path = std::make_shared<const LightPath>(builtin_path("path1"));
    Controller ext = Controller::external();
    EXPECT_EQ(ext.kind(), ControllerKind::external);
    const Pose cur{{0, 0, 6}, {}};
    EXPECT_EQ(ext.step(cur, {}, 0.005), cur);
    const Pose tracked{{1, 1, 5}, {}};
    EXPECT_EQ(ext.step(cur, {{}, tracked}, 0.005), tracked);

    Controller man = Controller::manual({});
    EXPECT_EQ(man.step(cur, {{1, 0, 0}, {}}, 0.5).position, (Vec3{0, 0, 5}));
    EXPECT_EQ(Controller::ideal(path, 2.0).kind(), ControllerKind::ideal);
    EXPECT_EQ(controller_kind_from_string("noisy"), ControllerKind::noisy);
    EXPECT_THROW(controller_kind_from_string("robot"), ParameterError);
}

TEST(Controllers, UnitNormAfterManySteps) {
    auto path = std::make_shared<const LightPath>(builtin_path("path2"));
    Controller noisy = Controller::noisy(path, 0.02, {0.3, 0.5, 0.3, 5});
    Pose p{path->start(), {}};
    for (int i = 0; i < 100000; ++i) p = noisy.step(p, {}, 0.005);
    EXPECT_NEAR(p.orientation.norm(), 1.0, 1e-9);
}
