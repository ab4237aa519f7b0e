#pragma once

// WebSocket transport for live sessions (Boost.Beast). One io_context
// thread owns the LiveSession, so every state change is serialized: frame
// reads, timer expiries and disconnects all run as handlers on that thread.

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <deque>
#include <memory>
#include <optional>
#include <string>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "msi/service/live.hpp"

namespace msi::service {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

inline constexpr const char* kSessionPath = "/session";
inline constexpr const char* kBindEnv = "MSI_BIND_ADDRESS";
inline constexpr const char* kDefaultBind = "127.0.0.1:8765";

struct Endpoint {
    std::string host = "127.0.0.1";
    unsigned short port = 8765;
    friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// Accepts "host:port", ":port" and "ws://host:port/session".
inline Endpoint parse_endpoint(std::string s) {
    if (s.rfind("ws://", 0) == 0) s = s.substr(5);
    if (const auto slash = s.find('/'); slash != std::string::npos) {
        if (s.substr(slash) != kSessionPath) throw InvalidArgument("endpoint path must be " + std::string(kSessionPath));
        s = s.substr(0, slash);
    }
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw InvalidArgument("endpoint needs host:port, got '" + s + "'");
    Endpoint e;
    if (colon > 0) e.host = s.substr(0, colon);
    const std::string port = s.substr(colon + 1);
    char* end = nullptr;
    const long p = std::strtol(port.c_str(), &end, 10);
    if (port.empty() || *end != '\0' || p < 0 || p > 65535) throw InvalidArgument("bad endpoint port '" + port + "'");
    e.port = static_cast<unsigned short>(p);
    return e;
}

/// The flag wins, then the environment, then the default.
inline Endpoint resolve_endpoint(const std::optional<std::string>& flag) {
    if (flag) return parse_endpoint(*flag);
    if (const char* env = std::getenv(kBindEnv); env && *env) return parse_endpoint(env);
    return parse_endpoint(kDefaultBind);
}

struct ServerOptions {
    /// Virtual session time runs 1/time_scale times faster than wall time.
    /// Tests use a small scale to play whole sessions in seconds.
    double time_scale = 1.0;
    /// How long a suspended session waits for its client to come back.
    std::chrono::milliseconds reconnect_wait{std::chrono::minutes(5)};
    bool handle_signals = false;
};

class SessionServer {
public:
    SessionServer(LiveSession& live, const Endpoint& ep, ServerOptions opt = {})
        : live_(live), opt_(opt), acceptor_(io_), timer_(io_), reconnect_(io_), signals_(io_) {
        if (!(opt_.time_scale > 0)) throw InvalidArgument("time scale must be positive");
        const tcp::endpoint where(net::ip::make_address(ep.host), ep.port);
        acceptor_.open(where.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(where);
        acceptor_.listen();
        start_ = std::chrono::steady_clock::now();
        // A resumed session keeps its server timeline increasing.
        const auto& ev = live_.recorder().log().events;
        base_ = ev.empty() ? 0 : ev.back().t_server_mono_ns + 1;
    }

    unsigned short port() const { return port_ ? *port_ : acceptor_.local_endpoint().port(); }

    SessionResult run() {
        port_ = acceptor_.local_endpoint().port();
        accept();
        if (opt_.handle_signals) {
            signals_.add(SIGINT);
            signals_.add(SIGTERM);
            signals_.async_wait([this](beast::error_code ec, int) {
                if (!ec) suspend_now();
            });
        }
        io_.run();
        return result_;
    }

    /// Thread-safe: suspends the session and makes run() return.
    void stop() {
        net::post(io_, [this] { suspend_now(); });
    }

private:
    class Conn : public std::enable_shared_from_this<Conn> {
    public:
        Conn(SessionServer& srv, tcp::socket s) : srv_(srv), ws_(std::move(s)) {}

        void start() {
            http::async_read(ws_.next_layer(), buf_, req_,
                             [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
        }

        void send(const std::string& frame) {
            queue_.push_back(frame);
            if (!writing_) write_next();
        }

        /// Close once everything queued has been written.
        void close_after_writes() {
            closing_ = true;
            if (!writing_) do_close();
        }

        void drop() {
            beast::error_code ignored;
            beast::get_lowest_layer(ws_).close(ignored);
        }

        bool closing() const { return closing_; }

    private:
        void on_request(beast::error_code ec) {
            if (ec) return;
            if (!websocket::is_upgrade(req_) || req_.target() != kSessionPath) {
                auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found, req_.version());
                res->set(http::field::content_type, "text/plain");
                res->body() = "sessions are served over WebSocket at " + std::string(kSessionPath) + "\n";
                res->prepare_payload();
                http::async_write(ws_.next_layer(), *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
                    beast::error_code ignored;
                    self->ws_.next_layer().shutdown(tcp::socket::shutdown_both, ignored);
                });
                return;
            }
            websocket::stream_base::timeout t{};
            t.handshake_timeout = std::chrono::seconds(2);  // also bounds the close handshake
            t.idle_timeout = websocket::stream_base::none();
            t.keep_alive_pings = false;
            ws_.set_option(t);
            ws_.async_accept(req_, [self = shared_from_this()](beast::error_code ec2) {
                if (!ec2) self->srv_.on_open(self);
            });
        }

        void read() {
            ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
                if (ec) return self->srv_.on_lost(self);
                const std::string frame = beast::buffers_to_string(self->buf_.data());
                self->buf_.consume(self->buf_.size());
                self->srv_.on_frame(self, frame);
                if (!self->closing_) self->read();
            });
        }
        friend class SessionServer;

        void write_next() {
            writing_ = true;
            ws_.text(true);
            ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
                self->queue_.pop_front();
                self->writing_ = false;
                if (ec) return;
                if (!self->queue_.empty()) return self->write_next();
                if (self->closing_) self->do_close();
            });
        }

        void do_close() {
            ws_.async_close(websocket::close_code::normal,
                            [self = shared_from_this()](beast::error_code) { self->srv_.on_closed(self); });
        }

        SessionServer& srv_;
        websocket::stream<tcp::socket> ws_;
        beast::flat_buffer buf_;
        http::request<http::string_body> req_;
        std::deque<std::string> queue_;
        bool writing_ = false;
        bool closing_ = false;
    };

    std::int64_t now() const {
        const auto real = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_);
        return base_ + static_cast<std::int64_t>(static_cast<double>(real.count()) / opt_.time_scale);
    }

    std::chrono::steady_clock::time_point real_time(std::int64_t t) const {
        const double ns = static_cast<double>(t - base_) * opt_.time_scale;
        return start_ + std::chrono::nanoseconds(static_cast<std::int64_t>(ns));
    }

    void accept() {
        acceptor_.async_accept([this](beast::error_code ec, tcp::socket s) {
            if (ec) return;
            s.set_option(tcp::no_delay(true), ec);
            std::make_shared<Conn>(*this, std::move(s))->start();
            accept();
        });
    }

    void on_open(const std::shared_ptr<Conn>& c) {
        if (finished_) return c->drop();
        if (active_) {
            c->send(encode_message(LiveSession::refusal("session already has a client")));
            return c->close_after_writes();
        }
        active_ = c;
        reconnect_.cancel();
        live_.connect();
        c->read();
    }

    void on_frame(const std::shared_ptr<Conn>& c, const std::string& frame) {
        if (c != active_ || c->closing()) return;
        Outbox out;
        try {
            out = live_.receive(decode_message(frame), now());
        } catch (const WireError& e) {
            out = live_.reject_frame(e.what(), now());
        }
        dispatch(out);
    }

    void on_timer() {
        dispatch(live_.tick(now()));
    }

    void dispatch(const Outbox& out) {
        if (active_) {
            for (const auto& m : out.send) active_->send(encode_message(m));
            if (out.close) active_->close_after_writes();
        }
        arm();
    }

    void arm() {
        const auto due = live_.deadline();
        if (!due || finished_) {
            timer_.cancel();
            return;
        }
        timer_.expires_at(real_time(*due));
        timer_.async_wait([this](beast::error_code ec) {
            if (!ec) on_timer();
        });
    }

    void on_closed(const std::shared_ptr<Conn>& c) {
        c->drop();
        if (c != active_) return;
        active_.reset();
        if (live_.finished()) return finish(*live_.result());
        // A refused handshake: the session never started on this client.
        if (!live_.connected()) return;
        lost_while_running();
    }

    void on_lost(const std::shared_ptr<Conn>& c) {
        if (c != active_) return;
        active_.reset();
        if (live_.finished()) return finish(*live_.result());
        if (!live_.connected()) return;
        lost_while_running();
    }

    void lost_while_running() {
        live_.disconnect(now());
        timer_.cancel();
        reconnect_.expires_after(opt_.reconnect_wait);
        reconnect_.async_wait([this](beast::error_code ec) {
            if (!ec) finish(SessionResult::Suspended);
        });
    }

    void suspend_now() {
        if (finished_) return;
        if (active_) live_.disconnect(now());
        finish(live_.finished() ? *live_.result() : SessionResult::Suspended);
    }

    void finish(SessionResult r) {
        if (finished_) return;
        finished_ = true;
        result_ = r;
        beast::error_code ignored;
        acceptor_.close(ignored);
        timer_.cancel();
        reconnect_.cancel();
        signals_.cancel();
        if (active_) active_->drop();
        active_.reset();
        io_.stop();
    }

    net::io_context io_;
    LiveSession& live_;
    ServerOptions opt_;
    tcp::acceptor acceptor_;
    net::steady_timer timer_;
    net::steady_timer reconnect_;
    net::signal_set signals_;
    std::shared_ptr<Conn> active_;
    std::chrono::steady_clock::time_point start_;
    std::int64_t base_ = 0;
    std::optional<unsigned short> port_;
    bool finished_ = false;
    SessionResult result_ = SessionResult::Suspended;
};

enum class ClientOutcome { Done, Dropped, Refused, Failed };

/// Synchronous client loop for a runner with hello()/receive()/done()/
/// dropped()/refusal()/error(), such as sim::SimRunner.
template <class Runner>
ClientOutcome run_ws_client(const Endpoint& ep, Runner& runner, int protocol_version = kWireVersion) {
    net::io_context ioc;
    tcp::resolver resolver(ioc);
    websocket::stream<tcp::socket> ws(ioc);
    net::connect(ws.next_layer(), resolver.resolve(ep.host, std::to_string(ep.port)));
    ws.next_layer().set_option(tcp::no_delay(true));
    ws.handshake(ep.host + ":" + std::to_string(ep.port), kSessionPath);
    ws.text(true);
    auto write = [&](const WireMessage& m) { ws.write(net::buffer(encode_message(m))); };
    write(runner.hello(protocol_version));
    beast::flat_buffer buf;
    for (;;) {
        beast::error_code ec;
        ws.read(buf, ec);
        if (ec) return runner.done() ? ClientOutcome::Done : ClientOutcome::Failed;
        const auto m = decode_message(beast::buffers_to_string(buf.data()));
        buf.consume(buf.size());
        const auto replies = runner.receive(m);
        if (runner.dropped()) {
            beast::get_lowest_layer(ws).close(ec);
            return ClientOutcome::Dropped;
        }
        for (const auto& r : replies) write(r);
        ClientOutcome end;
        if (runner.done()) end = ClientOutcome::Done;
        else if (runner.refusal()) end = ClientOutcome::Refused;
        else if (runner.error()) end = ClientOutcome::Failed;
        else continue;
        ws.close(websocket::close_code::normal, ec);
        return end;
    }
}

}  // namespace msi::service
