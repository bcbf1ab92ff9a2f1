#include "pathsense/protocol.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "pathsense/metrics.hpp"

namespace pathsense {

namespace {

using ojson = nlohmann::ordered_json;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

template <class T>
void put_optional(ojson& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

template <class T>
void get_optional(const nlohmann::json& j, const char* key, std::optional<T>& out) {
    if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

ojson nullable(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson path_json(const LightPath& path) {
    ojson points = ojson::array();
    for (const Vec3& p : path.points()) points.push_back({p.x, p.y, p.z});
    return ojson{{"id", path.id()}, {"points", std::move(points)}};
}

nlohmann::json parse_object(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProtocolError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ProtocolError("message must be a JSON object");
    if (!j.contains("type") || !j["type"].is_string()) throw ProtocolError("message has no string \"type\"");
    return j;
}

template <class F>
auto with_field_errors(std::string_view type, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(fmt::format("bad '{}' message: {}", type, e.what()));
    } catch (const ProtocolError&) {
        throw;
    } catch (const Error& e) {
        throw ProtocolError(fmt::format("bad '{}' message: {}", type, e.what()));
    }
}

EventKind event_kind_from_string(std::string_view s) {
    if (s == "started") return EventKind::started;
    if (s == "target_reached") return EventKind::target_reached;
    if (s == "aborted") return EventKind::aborted;
    throw ProtocolError(fmt::format("unknown event kind '{}'", s));
}

}  // namespace

std::string serialize(const ClientMessage& msg) {
    ojson j = std::visit(
        Overloaded{
            [](const StartMessage& m) {
                ojson o{{"type", "start"}};
                if (m.path_id) o["path_id"] = *m.path_id;
                if (m.path) o["path"] = path_json(*m.path);
                o["display"] = to_string(m.display);
                o["controller"] = to_string(m.controller);
                ojson params = ojson::object();
                const StartParams& p = m.params;
                put_optional(params, "speed", p.speed);
                put_optional(params, "linear_speed", p.linear_speed);
                put_optional(params, "mouse_sensitivity", p.mouse_sensitivity);
                put_optional(params, "tremor_sigma", p.tremor_sigma);
                put_optional(params, "drift_theta", p.drift_theta);
                put_optional(params, "drift_sigma", p.drift_sigma);
                put_optional(params, "seed", p.seed);
                put_optional(params, "target_radius", p.target_radius);
                put_optional(params, "timeout_s", p.timeout_s);
                put_optional(params, "decimation", p.decimation);
                o["params"] = std::move(params);
                return o;
            },
            [](const InputMessage& m) {
                return ojson{{"type", "input"}, {"forward", m.forward}, {"dyaw", m.dyaw}, {"dpitch", m.dpitch}};
            },
            [](const PoseMessage& m) { return ojson{{"type", "pose"}, {"pos", m.pos}, {"quat", m.quat}}; },
            [](const AbortMessage&) { return ojson{{"type", "abort"}}; },
        },
        msg);
    return j.dump();
}

std::string serialize(const ServerMessage& msg) {
    ojson j = std::visit(
        Overloaded{
            [](const EventMessage& m) {
                return ojson{{"type", "event"}, {"kind", to_string(m.kind)}, {"t_ms", m.t_ms}};
            },
            [](const FrameMessage& m) { return ojson{{"type", "frame"}, {"t_ms", m.t_ms}, {"grid", m.grid}}; },
            [](const MetricsMessage& m) {
                return ojson{{"type", "metrics"},
                             {"path_id", m.path_id},
                             {"n_samples", m.n_samples},
                             {"transit_time_s", nullable(m.transit_time_s)},
                             {"avg_sd_cm", nullable(m.avg_sd_cm)},
                             {"correlation_pct", nullable(m.correlation_pct)}};
            },
            [](const ErrorMessage& m) { return ojson{{"type", "error"}, {"message", m.message}}; },
        },
        msg);
    return j.dump();
}

ClientMessage parse_client_message(std::string_view line) {
    const nlohmann::json j = parse_object(line);
    const std::string type = j["type"].get<std::string>();
    return with_field_errors(type, [&]() -> ClientMessage {
        if (type == "start") {
            StartMessage m;
            get_optional(j, "path_id", m.path_id);
            if (j.contains("path") && !j["path"].is_null()) m.path = path_from_json(j["path"].dump());
            if (m.path_id.has_value() == m.path.has_value())
                throw ProtocolError("start needs exactly one of \"path_id\" or \"path\"");
            if (j.contains("display")) m.display = display_mode_from_string(j["display"].get<std::string>());
            if (j.contains("controller"))
                m.controller = controller_kind_from_string(j["controller"].get<std::string>());
            if (j.contains("params")) {
                const auto& p = j["params"];
                if (!p.is_object()) throw ProtocolError("start \"params\" must be an object");
                get_optional(p, "speed", m.params.speed);
                get_optional(p, "linear_speed", m.params.linear_speed);
                get_optional(p, "mouse_sensitivity", m.params.mouse_sensitivity);
                get_optional(p, "tremor_sigma", m.params.tremor_sigma);
                get_optional(p, "drift_theta", m.params.drift_theta);
                get_optional(p, "drift_sigma", m.params.drift_sigma);
                get_optional(p, "seed", m.params.seed);
                get_optional(p, "target_radius", m.params.target_radius);
                get_optional(p, "timeout_s", m.params.timeout_s);
                get_optional(p, "decimation", m.params.decimation);
            }
            return m;
        }
        if (type == "input") {
            InputMessage m;
            m.forward = j.value("forward", 0);
            m.dyaw = j.value("dyaw", 0.0);
            m.dpitch = j.value("dpitch", 0.0);
            if (m.forward < -1 || m.forward > 1) throw ProtocolError("input \"forward\" must be -1, 0 or 1");
            return m;
        }
        if (type == "pose") {
            PoseMessage m;
            m.pos = j.at("pos").get<std::array<double, 3>>();
            m.quat = j.at("quat").get<std::array<double, 4>>();
            return m;
        }
        if (type == "abort") return AbortMessage{};
        throw ProtocolError(fmt::format("unknown message type '{}'", type));
    });
}

ServerMessage parse_server_message(std::string_view line) {
    const nlohmann::json j = parse_object(line);
    const std::string type = j["type"].get<std::string>();
    return with_field_errors(type, [&]() -> ServerMessage {
        if (type == "event")
            return EventMessage{event_kind_from_string(j.at("kind").get<std::string>()), j.at("t_ms").get<std::int64_t>()};
        if (type == "frame")
            return FrameMessage{j.at("t_ms").get<std::int64_t>(), j.at("grid").get<std::vector<double>>()};
        if (type == "metrics") {
            MetricsMessage m;
            m.path_id = j.at("path_id").get<std::string>();
            m.n_samples = j.at("n_samples").get<std::size_t>();
            get_optional(j, "transit_time_s", m.transit_time_s);
            get_optional(j, "avg_sd_cm", m.avg_sd_cm);
            get_optional(j, "correlation_pct", m.correlation_pct);
            return m;
        }
        if (type == "error") return ErrorMessage{j.at("message").get<std::string>()};
        throw ProtocolError(fmt::format("unknown message type '{}'", type));
    });
}

FrameMessage frame_message(std::int64_t t_ms, const Frame& frame) {
    return {t_ms, std::vector<double>(frame.cells().begin(), frame.cells().end())};
}

SessionConfig session_config_from(const StartMessage& start, const ServiceOptions& options) {
    SessionConfig c;
    c.path = std::make_shared<const LightPath>(start.path ? *start.path : builtin_path(*start.path_id));
    c.display = start.display;
    c.controller = start.controller;
    c.camera = options.camera;
    c.cutoff = options.cutoff;
    const StartParams& p = start.params;
    if (p.speed) c.follower_speed = *p.speed;
    if (p.linear_speed) c.manual.linear_speed = *p.linear_speed;
    if (p.mouse_sensitivity) c.manual.mouse_sensitivity = *p.mouse_sensitivity;
    if (p.tremor_sigma) c.noise.tremor_sigma = *p.tremor_sigma;
    if (p.drift_theta) c.noise.drift_theta = *p.drift_theta;
    if (p.drift_sigma) c.noise.drift_sigma = *p.drift_sigma;
    if (p.seed) c.noise.seed = *p.seed;
    if (p.target_radius) c.target_radius = *p.target_radius;
    if (p.timeout_s) c.timeout_s = *p.timeout_s;
    return c;
}

ConnectionSession::ConnectionSession(ServiceOptions options) : options_(std::move(options)) {
    if (options_.decimation < 1) throw ParameterError("decimation", "must be >= 1");
}

std::vector<Outgoing> ConnectionSession::on_line(std::string_view line) {
    try {
        return handle(parse_client_message(line));
    } catch (const Error& e) {
        return {{serialize(ServerMessage{ErrorMessage{e.what()}}), false}};
    }
}

std::vector<Outgoing> ConnectionSession::handle(const ClientMessage& msg) {
    const auto error = [](std::string text) {
        return std::vector<Outgoing>{{serialize(ServerMessage{ErrorMessage{std::move(text)}}), false}};
    };
    if (const auto* start = std::get_if<StartMessage>(&msg)) {
        if (running()) return error("a session is already running on this connection");
        const int decimation = start->params.decimation.value_or(options_.decimation);
        if (decimation < 1) return error("decimation: must be >= 1");
        auto session = std::make_unique<Session>(session_config_from(*start, options_));
        session_ = std::move(session);
        decimation_ = decimation;
        manual_ = session_->config().manual;
        inputs_.reset();
        poses_.reset();
        const SessionEvent started = session_->start();
        return {{serialize(ServerMessage{EventMessage{started.kind, started.t_ms}}), false},
                {serialize(ServerMessage{frame_message(0, session_->render())}), true}};
    }
    if (!running()) return error("no running session; send \"start\" first");
    if (const auto* input = std::get_if<InputMessage>(&msg)) {
        inputs_.push(from_pointer(input->forward, input->dyaw, input->dpitch, manual_));
        return {};
    }
    if (const auto* pose = std::get_if<PoseMessage>(&msg)) {
        ExternalPoseSample sample;
        sample.position = {pose->pos[0], pose->pos[1], pose->pos[2]};
        sample.quat = pose->quat;
        sample.source_time_ms = session_->clock_ms();
        poses_.publish(accept_external_pose(sample));
        return {};
    }
    return finish(session_->abort());
}

std::vector<Outgoing> ConnectionSession::on_tick() {
    if (!running()) return {};
    const TickInputs snapshot{inputs_.drain(), poses_.latest()};
    const TickResult result = session_->tick(snapshot);
    std::vector<Outgoing> out;
    const std::int64_t tick_index = session_->clock_ms() / session_->config().tick_ms;
    if (tick_index % decimation_ == 0)
        out.push_back({serialize(ServerMessage{frame_message(session_->clock_ms(), result.frame)}), true});
    if (result.event) {
        auto tail = finish(*result.event);
        out.insert(out.end(), tail.begin(), tail.end());
    }
    return out;
}

std::vector<Outgoing> ConnectionSession::on_disconnect() {
    if (!running()) return {};
    return finish(session_->abort());
}

std::vector<Outgoing> ConnectionSession::finish(const SessionEvent& event) {
    const TrajectoryRecord& record = session_->record();
    const LightPath& path = *session_->config().path;
    MetricsMessage metrics;
    metrics.path_id = path.id();
    metrics.n_samples = record.samples.size();
    const MetricsReport report = evaluate(std::span(&record, 1), path);
    metrics.transit_time_s = report.transit_mean_s;
    metrics.avg_sd_cm = report.avg_sd_cm;
    metrics.correlation_pct = report.correlation_pct;
    if (options_.record_sink) options_.record_sink(record);
    return {{serialize(ServerMessage{EventMessage{event.kind, event.t_ms}}), false},
            {serialize(ServerMessage{metrics}), false}};
}

}  // namespace pathsense
