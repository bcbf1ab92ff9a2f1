#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "pathsense/protocol.hpp"

namespace pathsense {

struct ServerOptions {
    std::string address = "127.0.0.1";
    std::uint16_t port = 0;  // 0 picks a free port
    ServiceOptions service;
    // Pace ticks to the wall clock (5 ms nominal). When false, ticks run as
    // fast as the client drains frames and no frame is ever dropped.
    bool realtime = true;
    // Frames queued beyond this are dropped in realtime mode.
    std::size_t max_queued_frames = 32;
    // Every finished record is written here as session_NNNNNN_<path>.jsonl.
    std::optional<std::filesystem::path> data_dir;
    int threads = 2;
};

// WebSocket endpoint: each text message from the client holds one or more
// newline-delimited JSON messages; each server message goes out as one text
// message terminated by '\n'.
class Server {
public:
    explicit Server(ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    std::uint16_t port() const noexcept;
    // Blocks until stop() is called from another thread.
    void run();
    // Runs the I/O threads in the background and returns.
    void start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace pathsense
