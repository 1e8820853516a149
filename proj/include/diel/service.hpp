#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "diel/engine.hpp"

namespace diel::service {

struct Outgoing {
    enum class Target { Sender, All };
    Target target = Target::Sender;
    std::string text;  // one JSON object
};

/// Maps client frames to replies. Transport-free so the protocol can be
/// tested without sockets; the server calls it from a single thread.
class WireHandler {
   public:
    /// Binds every output of `engine`. The engine must outlive the handler.
    explicit WireHandler(Engine& engine);

    /// `{"type":"catalog", "inputs":[...], "outputs":[...]}`.
    [[nodiscard]] auto catalog_message() const -> std::string;

    /// Handles one client frame received at `wallclock_ms`.
    auto handle(std::string_view frame, double wallclock_ms) -> std::vector<Outgoing>;

   private:
    Engine& engine_;
    std::vector<std::pair<std::string, Relation>> pending_;
};

auto error_message(std::string_view message) -> std::string;

struct ServeOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 0;  // 0 picks a free port
};

/// WebSocket server over one engine. All engine access happens on the
/// thread that calls run(), which serializes events in arrival order.
class Server {
   public:
    Server(Engine engine, ServeOptions options);
    ~Server();
    Server(const Server&) = delete;
    auto operator=(const Server&) -> Server& = delete;

    /// Bound port; valid after construction. Throws std::system_error when
    /// the address cannot be bound.
    [[nodiscard]] auto port() const -> unsigned short;

    /// Serves until stop() is called.
    void run();
    /// Thread-safe.
    void stop();

    struct Impl;

   private:
    std::unique_ptr<Impl> impl_;
};

/// Wallclock in milliseconds since the epoch.
auto now_ms() -> double;

}  // namespace diel::service
