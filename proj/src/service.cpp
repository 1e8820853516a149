#include "diel/service.hpp"

#include <chrono>
#include <deque>
#include <set>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "diel/eval.hpp"
#include "diel/harness.hpp"

namespace diel::service {

using harness::json;

auto now_ms() -> double {
    using namespace std::chrono;
    return duration<double, std::milli>(system_clock::now().time_since_epoch()).count();
}

auto error_message(std::string_view message) -> std::string {
    json j = json::object();
    j["type"] = "error";
    j["message"] = message;
    return j.dump();
}

namespace {

auto columns_json(const Schema& schema, std::size_t count) -> json {
    json cols = json::array();
    for (std::size_t i = 0; i < count; ++i) {
        json c = json::object();
        c["name"] = schema[i].name;
        c["type"] = type_name(schema[i].type);
        cols.push_back(std::move(c));
    }
    return cols;
}

auto to_sender(std::string text) -> Outgoing { return {Outgoing::Target::Sender, std::move(text)}; }

}  // namespace

WireHandler::WireHandler(Engine& engine) : engine_(engine) {
    for (const auto& name : engine_.output_names()) {
        engine_.bind_output(name, [this, name](const Relation& rows) { pending_.emplace_back(name, rows); });
    }
}

auto WireHandler::catalog_message() const -> std::string {
    json j = json::object();
    j["type"] = "catalog";
    json inputs = json::array();
    json outputs = json::array();
    for (const auto& t : engine_.catalog().tables) {
        if (t.kind != TableKind::Input) continue;
        json in = json::object();
        in["name"] = t.name;
        in["columns"] = columns_json(t.schema, t.user_columns);
        inputs.push_back(std::move(in));
    }
    for (const auto& v : engine_.catalog().views) {
        if (!v.is_output) continue;
        json out = json::object();
        out["name"] = v.name;
        out["columns"] = columns_json(v.plan->schema, v.plan->schema.size());
        outputs.push_back(std::move(out));
    }
    j["inputs"] = std::move(inputs);
    j["outputs"] = std::move(outputs);
    return j.dump();
}

auto WireHandler::handle(std::string_view frame, double wallclock_ms) -> std::vector<Outgoing> {
    json msg;
    try {
        msg = json::parse(frame);
    } catch (const json::parse_error& err) {
        return {to_sender(error_message(std::string("malformed JSON: ") + err.what()))};
    }
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
        return {to_sender(error_message("message must be an object with a string \"type\""))};
    }
    if (msg["type"] != "input") {
        return {to_sender(error_message("unsupported message type '" +
                                        msg["type"].get<std::string>() + "'"))};
    }
    if (!msg.contains("name") || !msg["name"].is_string()) {
        return {to_sender(error_message("input message needs a string \"name\""))};
    }
    Event event;
    event.input = msg["name"].get<std::string>();
    event.wallclock_ms = wallclock_ms;
    if (msg.contains("values")) {
        if (!msg["values"].is_object()) return {to_sender(error_message("\"values\" must be an object"))};
        try {
            for (const auto& [k, v] : msg["values"].items()) {
                event.values.emplace_back(k, harness::value_from_json(v));
            }
        } catch (const std::invalid_argument& err) {
            return {to_sender(error_message(err.what()))};
        }
    }

    pending_.clear();
    IngestResult result;
    try {
        result = engine_.ingest(event);
    } catch (const UnknownInput&) {
        return {to_sender(error_message("unknown input '" + event.input + "'"))};
    } catch (const ConstraintViolation& err) {
        return {to_sender(error_message(err.what()))};
    } catch (const UnknownColumn& err) {
        return {to_sender(error_message(err.what()))};
    } catch (const EvalError& err) {
        return {to_sender(error_message(std::string("evaluation error: ") + err.what()))};
    }

    std::vector<Outgoing> out;
    if (!result.committed) {
        json j = json::object();
        j["type"] = "rejected";
        j["input"] = event.input;
        json violations = json::array();
        for (const auto& v : result.violations) violations.push_back(v.to_string());
        j["violations"] = std::move(violations);
        out.push_back(to_sender(j.dump()));
        return out;
    }
    for (const auto& [name, rows] : pending_) {
        json j = json::object();
        j["type"] = "output";
        j["name"] = name;
        j["timestep"] = result.timestep;
        j["rows"] = harness::rows_to_json(rows);
        out.push_back({Outgoing::Target::All, j.dump()});
    }
    pending_.clear();
    return out;
}

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

class Session;

struct Server::Impl {
    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    Engine engine;
    WireHandler handler{engine};
    std::set<std::shared_ptr<Session>> sessions;

    explicit Impl(Engine e) : engine(std::move(e)) {}

    void accept();
    void dispatch(const std::shared_ptr<Session>& from, const std::string& text);
};

class Session : public std::enable_shared_from_this<Session> {
   public:
    Session(tcp::socket socket, Server::Impl& server) : ws_(std::move(socket)), server_(server) {}

    void start() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
    }

    void send(std::string text) {
        queue_.push_back(std::move(text));
        if (queue_.size() == 1) write_next();
    }

    void close() {
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().close(ec);
    }

   private:
    websocket::stream<beast::tcp_stream> ws_;
    Server::Impl& server_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;

    void on_accept(beast::error_code ec) {
        if (ec) return;
        server_.sessions.insert(shared_from_this());
        send(server_.handler.catalog_message());
        read_next();
    }

    void read_next() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->on_read(ec);
        });
    }

    void on_read(beast::error_code ec) {
        if (ec) {
            server_.sessions.erase(shared_from_this());
            return;
        }
        std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        server_.dispatch(shared_from_this(), text);
        read_next();
    }

    void write_next() {
        ws_.text(true);
        ws_.async_write(net::buffer(queue_.front()),
                        [self = shared_from_this()](beast::error_code ec, std::size_t) {
                            self->on_write(ec);
                        });
    }

    void on_write(beast::error_code ec) {
        if (ec) {
            queue_.clear();
            server_.sessions.erase(shared_from_this());
            return;
        }
        queue_.pop_front();
        if (!queue_.empty()) write_next();
    }
};

void Server::Impl::accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;  // acceptor closed
        std::make_shared<Session>(std::move(socket), *this)->start();
        accept();
    });
}

void Server::Impl::dispatch(const std::shared_ptr<Session>& from, const std::string& text) {
    for (auto& msg : handler.handle(text, now_ms())) {
        if (msg.target == Outgoing::Target::Sender) {
            from->send(std::move(msg.text));
        } else {
            for (const auto& s : sessions) s->send(msg.text);
        }
    }
}

Server::Server(Engine engine, ServeOptions options)
    : impl_(std::make_unique<Impl>(std::move(engine))) {
    const tcp::endpoint endpoint(net::ip::make_address(options.address), options.port);
    impl_->acceptor.open(endpoint.protocol());
    impl_->acceptor.set_option(net::socket_base::reuse_address(true));
    impl_->acceptor.bind(endpoint);
    impl_->acceptor.listen(net::socket_base::max_listen_connections);
    impl_->accept();
}

Server::~Server() {
    for (const auto& s : impl_->sessions) s->close();
}

auto Server::port() const -> unsigned short { return impl_->acceptor.local_endpoint().port(); }

void Server::run() { impl_->ioc.run(); }

void Server::stop() { impl_->ioc.stop(); }

}  // namespace diel::service
