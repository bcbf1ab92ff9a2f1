#include "pathsense/server.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <thread>
#include <vector>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

#include "pathsense/runner.hpp"

namespace pathsense {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket&& socket, const ServerOptions& options)
        : ws_(std::move(socket)),
          timer_(ws_.get_executor()),
          options_(options),
          protocol_(options.service) {}

    void run() {
        net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->on_run(); });
    }

private:
    void on_run() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.text(true);
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->do_read();
        });
    }

    void do_read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
    }

    void on_read(beast::error_code ec) {
        if (ec) {
            on_close();
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        std::size_t begin = 0;
        while (begin <= text.size()) {
            std::size_t end = text.find('\n', begin);
            if (end == std::string::npos) end = text.size();
            std::string_view line(text.data() + begin, end - begin);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (!line.empty()) enqueue(protocol_.on_line(line));
            begin = end + 1;
        }
        if (protocol_.running() && !ticking_) start_ticking();
        do_read();
    }

    void start_ticking() {
        ticking_ = true;
        if (options_.realtime) {
            next_tick_ = Clock::now() + tick_period();
            arm_timer();
        } else {
            schedule_fast_tick();
        }
    }

    std::chrono::milliseconds tick_period() const { return std::chrono::milliseconds(protocol_.tick_ms()); }

    void arm_timer() {
        timer_.expires_at(next_tick_);
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) { self->on_timer(ec); });
    }

    // Late wake-ups run the missed ticks back to back; the logical clock never skips.
    void on_timer(beast::error_code ec) {
        if (ec || closed_) return;
        const auto now = Clock::now();
        while (protocol_.running() && next_tick_ <= now) {
            enqueue(protocol_.on_tick());
            next_tick_ += tick_period();
        }
        if (protocol_.running())
            arm_timer();
        else
            ticking_ = false;
    }

    void schedule_fast_tick() {
        if (outbox_.size() >= options_.max_queued_frames) {
            waiting_for_drain_ = true;
            return;
        }
        net::post(ws_.get_executor(), [self = shared_from_this()] { self->on_fast_tick(); });
    }

    void on_fast_tick() {
        if (closed_ || !protocol_.running()) {
            ticking_ = false;
            return;
        }
        enqueue(protocol_.on_tick());
        if (protocol_.running())
            schedule_fast_tick();
        else
            ticking_ = false;
    }

    void enqueue(std::vector<Outgoing> messages) {
        if (closed_) return;
        for (auto& m : messages) {
            if (m.droppable && options_.realtime && queued_frames_ >= options_.max_queued_frames) continue;
            if (m.droppable) ++queued_frames_;
            m.line += '\n';
            outbox_.push_back(std::move(m));
        }
        if (!writing_ && !outbox_.empty()) do_write();
    }

    void do_write() {
        writing_ = true;
        ws_.async_write(net::buffer(outbox_.front().line),
                        [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_write(ec); });
    }

    void on_write(beast::error_code ec) {
        if (ec) {
            writing_ = false;
            on_close();
            return;
        }
        if (outbox_.front().droppable) --queued_frames_;
        outbox_.pop_front();
        if (!outbox_.empty())
            do_write();
        else
            writing_ = false;
        if (waiting_for_drain_ && outbox_.size() < options_.max_queued_frames) {
            waiting_for_drain_ = false;
            schedule_fast_tick();
        }
    }

    void on_close() {
        if (closed_) return;
        closed_ = true;
        timer_.cancel();
        protocol_.on_disconnect();
    }

    websocket::stream<beast::tcp_stream> ws_;
    net::steady_timer timer_;
    const ServerOptions& options_;
    ConnectionSession protocol_;
    beast::flat_buffer buffer_;
    std::deque<Outgoing> outbox_;
    std::size_t queued_frames_ = 0;
    Clock::time_point next_tick_;
    bool writing_ = false;
    bool ticking_ = false;
    bool waiting_for_drain_ = false;
    bool closed_ = false;
};

}  // namespace

struct Server::Impl {
    explicit Impl(ServerOptions opts) : options(std::move(opts)), acceptor(ioc) {
        if (options.data_dir) {
            std::filesystem::create_directories(*options.data_dir);
            auto user_sink = options.service.record_sink;
            options.service.record_sink = [this, user_sink](const TrajectoryRecord& record) {
                const auto n = record_counter.fetch_add(1);
                write_file(*options.data_dir / fmt::format("session_{:06d}_{}.jsonl", n, record.header.path_id),
                           export_jsonl(record));
                if (user_sink) user_sink(record);
            };
        }
        const tcp::endpoint endpoint(net::ip::make_address(options.address), options.port);
        acceptor.open(endpoint.protocol());
        acceptor.set_option(net::socket_base::reuse_address(true));
        acceptor.bind(endpoint);
        acceptor.listen(net::socket_base::max_listen_connections);
        bound_port = acceptor.local_endpoint().port();
        do_accept();
    }

    void do_accept() {
        acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            std::make_shared<Connection>(std::move(socket), options)->run();
            do_accept();
        });
    }

    void run_threads(bool include_caller) {
        const int n = std::max(1, options.threads);
        for (int i = include_caller ? 1 : 0; i < n; ++i) threads.emplace_back([this] { ioc.run(); });
        if (include_caller) ioc.run();
    }

    void stop() {
        net::post(ioc, [this] {
            beast::error_code ec;
            acceptor.close(ec);
        });
        ioc.stop();
        for (auto& t : threads)
            if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
        threads.clear();
    }

    ServerOptions options;
    net::io_context ioc;
    tcp::acceptor acceptor;
    std::vector<std::thread> threads;
    std::atomic<std::uint64_t> record_counter{0};
    std::uint16_t bound_port = 0;
};

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Server::~Server() { impl_->stop(); }

std::uint16_t Server::port() const noexcept { return impl_->bound_port; }

void Server::run() {
    net::signal_set signals(impl_->ioc, SIGINT, SIGTERM);
    signals.async_wait([this](beast::error_code ec, int) {
        if (!ec) impl_->ioc.stop();
    });
    impl_->run_threads(true);
}

void Server::start() { impl_->run_threads(false); }

void Server::stop() { impl_->stop(); }

}  // namespace pathsense
