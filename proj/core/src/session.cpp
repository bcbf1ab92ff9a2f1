#include "pathsense/session.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "pathsense/error.hpp"

namespace pathsense {

namespace {

using ojson = nlohmann::ordered_json;

Controller make_controller(const SessionConfig& c) {
    switch (c.controller) {
    case ControllerKind::manual: return Controller::manual(c.manual);
    case ControllerKind::external: return Controller::external();
    case ControllerKind::ideal: return Controller::ideal(c.path, c.follower_speed);
    case ControllerKind::noisy: return Controller::noisy(c.path, c.follower_speed, c.noise);
    }
    throw ConfigError("unknown controller kind");
}

RecordHeader make_header(const SessionConfig& c) {
    RecordHeader h;
    h.path_id = c.path->id();
    h.controller = c.controller;
    h.display = c.display;
    h.tick_ms = c.tick_ms;
    h.target_radius = c.target_radius;
    if (c.controller == ControllerKind::noisy) h.seed = c.noise.seed;
    return h;
}

std::string_view to_string(Outcome o) noexcept { return o == Outcome::completed ? "completed" : "aborted"; }

Outcome outcome_from_string(std::string_view s) {
    if (s == "completed") return Outcome::completed;
    if (s == "aborted") return Outcome::aborted;
    throw ParseError(fmt::format("unknown outcome '{}'", s));
}

ojson header_json(const RecordHeader& h) {
    ojson j{{"path_id", h.path_id},
            {"controller", to_string(h.controller)},
            {"display", to_string(h.display)},
            {"tick_ms", h.tick_ms},
            {"target_radius", h.target_radius}};
    if (h.seed) j["seed"] = *h.seed;
    if (h.outcome) j["outcome"] = to_string(*h.outcome);
    return j;
}

ojson sample_json(const TrajectorySample& s) {
    const Pose& p = s.pose;
    return ojson{{"t_ms", s.t_ms},
                 {"pos", {p.position.x, p.position.y, p.position.z}},
                 {"quat", {p.orientation.w(), p.orientation.x(), p.orientation.y(), p.orientation.z()}}};
}

}  // namespace

std::string_view to_string(DisplayMode mode) noexcept { return mode == DisplayMode::tdu ? "tdu" : "vdu"; }

DisplayMode display_mode_from_string(std::string_view s) {
    if (s == "tdu") return DisplayMode::tdu;
    if (s == "vdu") return DisplayMode::vdu;
    throw ParameterError("display", fmt::format("unknown display '{}'", s));
}

std::string_view to_string(Phase phase) noexcept {
    switch (phase) {
    case Phase::idle: return "idle";
    case Phase::running: return "running";
    case Phase::completed: return "completed";
    case Phase::aborted: return "aborted";
    }
    return "unknown";
}

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
    case EventKind::started: return "started";
    case EventKind::target_reached: return "target_reached";
    case EventKind::aborted: return "aborted";
    }
    return "unknown";
}

void SessionConfig::validate() const {
    if (!path) throw ConfigError("session needs a path");
    if (tick_ms < 1) throw ParameterError("tick_ms", "must be >= 1");
    if (!(target_radius > 0.0)) throw ParameterError("target_radius", "must be > 0");
    if (!(timeout_s > 0.0)) throw ParameterError("timeout_s", "must be > 0");
    camera.validate();
    cutoff.validate();
}

std::int64_t SessionConfig::timeout_ms() const noexcept { return std::llround(timeout_s * 1000.0); }

Session::Session(SessionConfig config) : config_((config.validate(), std::move(config))), controller_(make_controller(config_)) {
    record_.header = make_header(config_);
}

SessionEvent Session::start() {
    if (phase_ != Phase::idle) throw StateError(fmt::format("cannot start a session that is {}", to_string(phase_)));
    pose_ = Pose{config_.path->start(), UnitQuat::identity()};
    clock_ms_ = 0;
    record_.samples.push_back({0, pose_});
    phase_ = Phase::running;
    return {EventKind::started, 0};
}

TickResult Session::tick(const TickInputs& inputs) {
    if (phase_ != Phase::running) throw StateError(fmt::format("cannot tick a session that is {}", to_string(phase_)));
    clock_ms_ += config_.tick_ms;
    pose_ = controller_.step(pose_, inputs, config_.tick_ms / 1000.0);
    record_.samples.push_back({clock_ms_, pose_});

    TickResult result{render(), std::nullopt};
    if (distance_to_target(pose_, *config_.path) <= config_.target_radius) {
        finish(Outcome::completed);
        result.event = SessionEvent{EventKind::target_reached, clock_ms_};
    } else if (clock_ms_ >= config_.timeout_ms()) {
        finish(Outcome::aborted);
        result.event = SessionEvent{EventKind::aborted, clock_ms_};
    }
    return result;
}

SessionEvent Session::abort() {
    if (phase_ != Phase::running) throw StateError(fmt::format("cannot abort a session that is {}", to_string(phase_)));
    finish(Outcome::aborted);
    return {EventKind::aborted, clock_ms_};
}

void Session::finish(Outcome outcome) {
    phase_ = outcome == Outcome::completed ? Phase::completed : Phase::aborted;
    record_.header.outcome = outcome;
}

Frame Session::render() const { return render_frame(pose_, *config_.path, config_.camera, config_.cutoff); }

std::string Session::export_record() const {
    if (phase_ != Phase::completed && phase_ != Phase::aborted)
        throw StateError(fmt::format("cannot export a session that is {}", to_string(phase_)));
    return export_jsonl(record_);
}

std::string export_jsonl(const TrajectoryRecord& record) {
    std::string out = header_json(record.header).dump();
    out += '\n';
    for (const auto& s : record.samples) {
        out += sample_json(s).dump();
        out += '\n';
    }
    return out;
}

TrajectoryRecord import_jsonl(std::string_view text) {
    TrajectoryRecord record;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    bool have_header = false;
    const auto fail = [&](const std::string& what) -> ParseError {
        return ParseError(fmt::format("trajectory line {}: {}", line_no, what));
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw fail(e.what());
        }
        try {
            if (!have_header) {
                auto& h = record.header;
                h.path_id = j.at("path_id").get<std::string>();
                h.controller = controller_kind_from_string(j.at("controller").get<std::string>());
                h.display = display_mode_from_string(j.at("display").get<std::string>());
                h.tick_ms = j.at("tick_ms").get<int>();
                h.target_radius = j.at("target_radius").get<double>();
                if (j.contains("seed")) h.seed = j["seed"].get<std::uint64_t>();
                if (j.contains("outcome")) h.outcome = outcome_from_string(j["outcome"].get<std::string>());
                if (h.tick_ms < 1) throw fail("tick_ms must be >= 1");
                have_header = true;
                continue;
            }
            TrajectorySample s;
            s.t_ms = j.at("t_ms").get<std::int64_t>();
            const auto& pos = j.at("pos");
            const auto& quat = j.at("quat");
            if (!pos.is_array() || pos.size() != 3) throw fail("pos must be [x, y, z]");
            if (!quat.is_array() || quat.size() != 4) throw fail("quat must be [w, x, y, z]");
            s.pose.position = {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()};
            s.pose.orientation = UnitQuat::from_components(quat[0].get<double>(), quat[1].get<double>(),
                                                      quat[2].get<double>(), quat[3].get<double>());
            const std::int64_t expected =
                record.samples.empty() ? 0 : record.samples.back().t_ms + record.header.tick_ms;
            if (s.t_ms != expected) throw fail(fmt::format("expected t_ms {}, got {}", expected, s.t_ms));
            record.samples.push_back(s);
        } catch (const nlohmann::json::exception& e) {
            throw fail(e.what());
        } catch (const ValidationError& e) {
            throw fail(e.what());
        }
    }
    if (!have_header) throw ParseError("trajectory file is empty");
    if (record.samples.empty()) throw ParseError("trajectory file has no samples");
    return record;
}

}  // namespace pathsense
