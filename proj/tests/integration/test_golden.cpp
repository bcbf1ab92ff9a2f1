#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "pathsense/protocol.hpp"
#include "pathsense/server.hpp"
#include "transcript.hpp"
#include "ws_client.hpp"

using namespace pathsense;
namespace fs = std::filesystem;

namespace {

struct Scenario {
    std::string name;
    std::vector<std::string> script;
};

std::string send(const ClientMessage& m) { return "> " + serialize(m); }

std::vector<Scenario> scenarios() {
    std::vector<Scenario> all;
    {
        PathParams p;
        p.kind = PathKind::curved;
        p.height = 3.0;
        p.lateral_extent = 2.0;
        p.n_points = 12;
        p.id = "short";
        StartMessage start;
        start.path = make_path(p);
        start.controller = ControllerKind::ideal;
        start.params.decimation = 20;
        all.push_back({"ideal_short_curve", {send(start), "@ run"}});
    }
    {
        StartMessage start;
        start.path = LightPath("drop", {{0, 0, 4}, {0, 0, 2.5}, {0, 0, 1}});
        start.controller = ControllerKind::manual;
        start.params.decimation = 25;
        all.push_back({"manual_drop", {send(start), send(InputMessage{1, 0.0, 0.0}), "@ run"}});
    }
    {
        StartMessage start;
        start.path_id = "path1";
        start.controller = ControllerKind::manual;
        start.params.decimation = 10;
        all.push_back({"manual_turn_abort",
                       {send(start), "@ tick 20", send(InputMessage{1, 30.0, -12.0}), "@ tick 20", "> {\"type\":\"nap\"}",
                        send(AbortMessage{})}});
    }
    return all;
}

fs::path golden_file(const std::string& name) { return fs::path(PATHSENSE_GOLDEN_DIR) / (name + ".transcript"); }

bool updating() {
    const char* v = std::getenv("PATHSENSE_UPDATE_GOLDEN");
    return v && std::string(v) == "1";
}

}  // namespace

TEST(Golden, TranscriptsReplayThroughConnectionSession) {
    for (const auto& s : scenarios()) {
        const fs::path file = golden_file(s.name);
        if (updating()) {
            std::ofstream(file, std::ios::binary) << transcript::play(s.script);
            continue;
        }
        ASSERT_TRUE(fs::exists(file)) << file << " missing; regenerate with PATHSENSE_UPDATE_GOLDEN=1";
        const std::string recorded = transcript::slurp(file.string());
        EXPECT_EQ(transcript::script_of(recorded), s.script) << s.name;
        EXPECT_EQ(transcript::play(transcript::script_of(recorded)), recorded) << s.name;
    }
}

TEST(Golden, RecordedRunsEndInTargetReached) {
    for (const char* name : {"ideal_short_curve", "manual_drop"}) {
        const auto lines = transcript::server_lines(transcript::slurp(golden_file(name).string()));
        ASSERT_GE(lines.size(), 4u);
        const auto first = parse_server_message(lines.front());
        EXPECT_EQ(std::get<EventMessage>(first).kind, EventKind::started);
        EXPECT_TRUE(std::holds_alternative<FrameMessage>(parse_server_message(lines[1])));
        const auto last_event = parse_server_message(lines[lines.size() - 2]);
        EXPECT_EQ(std::get<EventMessage>(last_event).kind, EventKind::target_reached) << name;
        EXPECT_TRUE(std::holds_alternative<MetricsMessage>(parse_server_message(lines.back())));
    }
}

TEST(Golden, TranscriptsReplayOverSocket) {
    ServerOptions opts;
    opts.realtime = false;
    Server server(opts);
    server.start();
    int replayed = 0;
    for (const auto& s : scenarios()) {
        if (!transcript::socket_replayable(s.script)) continue;
        const std::string recorded = transcript::slurp(golden_file(s.name).string());
        const auto expected = transcript::server_lines(recorded);
        std::string batch;
        for (const auto& line : transcript::client_lines(recorded)) batch += line + "\n";
        wsclient::Client client(server.port());
        client.send(batch);
        std::vector<std::string> got;
        while (got.size() < expected.size()) got.push_back(client.read_line());
        client.close();
        EXPECT_EQ(got, expected) << s.name;
        ++replayed;
    }
    EXPECT_EQ(replayed, 2);
}
