#include <gtest/gtest.h>

#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "diel/harness.hpp"
#include "diel/service.hpp"
#include "test_support.hpp"

namespace diel::service {
namespace {

using harness::json;

auto program_text(const std::string& fixture) -> std::string {
    return testing::slurp(testing::fixture_root() / fixture / "program.diel");
}

auto trace_frames(const std::string& fixture) -> std::vector<std::string> {
    std::vector<std::string> frames;
    for (const auto& line : harness::parse_trace(
             testing::slurp(testing::fixture_root() / fixture / "trace.jsonl"))) {
        json msg = json::object();
        msg["type"] = "input";
        msg["name"] = line.event.input;
        json values = json::object();
        for (const auto& [k, v] : line.event.values) values[k] = harness::value_to_json(v);
        msg["values"] = std::move(values);
        frames.push_back(msg.dump());
    }
    return frames;
}

TEST(WireHandler, CatalogMessage) {
    auto engine = Engine::load(program_text("select-all"));
    WireHandler handler(engine);
    auto catalog = json::parse(handler.catalog_message());
    EXPECT_EQ(catalog["type"], "catalog");
    ASSERT_EQ(catalog["inputs"].size(), 2u);
    EXPECT_EQ(catalog["inputs"][0]["name"], "brushEvent");
    EXPECT_EQ(catalog["inputs"][1]["name"], "tweetEvent");
    EXPECT_EQ(catalog["inputs"][0]["columns"].size(), 5u);
    EXPECT_EQ(catalog["inputs"][0]["columns"][0]["type"], "real");
    ASSERT_EQ(catalog["outputs"].size(), 2u);
    EXPECT_EQ(catalog["outputs"][0]["name"], "regionSelection");
}

TEST(WireHandler, InBoxTweetBroadcastsOutput) {
    auto engine = Engine::load(program_text("select-all"));
    WireHandler handler(engine);
    auto first = handler.handle(
        R"({"type":"input","name":"brushEvent","values":{"latMin":0,"latMax":50,"lonMin":0,"lonMax":50,"mouseEvent":"up"}})",
        1.0);
    EXPECT_TRUE(first.empty());
    auto replies = handler.handle(
        R"({"type":"input","name":"tweetEvent","values":{"id":"A","lat":10,"lon":10,"hour":9}})", 2.0);
    ASSERT_EQ(replies.size(), 2u);
    EXPECT_EQ(replies[0].target, Outgoing::Target::All);
    auto msg = json::parse(replies[0].text);
    EXPECT_EQ(msg["type"], "output");
    EXPECT_EQ(msg["name"], "regionSelection");
    EXPECT_EQ(msg["timestep"], 2);
    EXPECT_EQ(msg["rows"][0]["id"], "A");
    EXPECT_EQ(json::parse(replies[1].text)["name"], "hourDistOutput");
    EXPECT_EQ(engine.export_log().back().event.wallclock_ms, 2.0);
}

TEST(WireHandler, MalformedFramesLeaveEngineUntouched) {
    auto engine = Engine::load(program_text("select-all"));
    WireHandler handler(engine);
    for (const char* frame : {"{not json", "[1,2]", R"({"type":"input"})", R"({"type":"subscribe"})",
                              R"({"type":"input","name":"tweetEvent","values":[1]})",
                              R"({"type":"input","name":"tweetEvent","values":{"id":{"x":1}}})"}) {
        auto replies = handler.handle(frame, 0);
        ASSERT_EQ(replies.size(), 1u) << frame;
        EXPECT_EQ(replies[0].target, Outgoing::Target::Sender);
        EXPECT_EQ(json::parse(replies[0].text)["type"], "error") << frame;
    }
    EXPECT_EQ(engine.timestep(), 0);
}

TEST(WireHandler, UnknownInput) {
    auto engine = Engine::load(program_text("select-all"));
    WireHandler handler(engine);
    auto replies = handler.handle(R"({"type":"input","name":"nope","values":{}})", 0);
    ASSERT_EQ(replies.size(), 1u);
    auto msg = json::parse(replies[0].text);
    EXPECT_EQ(msg["type"], "error");
    EXPECT_NE(msg["message"].get<std::string>().find("unknown input"), std::string::npos);
}

TEST(WireHandler, DeployRejectionGoesToSender) {
    auto engine = Engine::load(program_text("select-all"), {}, Mode::Deploy);
    WireHandler handler(engine);
    auto replies = handler.handle(
        R"({"type":"input","name":"brushEvent","values":{"latMin":null,"latMax":5,"lonMin":0,"lonMax":5,"mouseEvent":"down"}})",
        0);
    ASSERT_EQ(replies.size(), 1u);
    EXPECT_EQ(replies[0].target, Outgoing::Target::Sender);
    auto msg = json::parse(replies[0].text);
    EXPECT_EQ(msg["type"], "rejected");
    EXPECT_EQ(msg["input"], "brushEvent");
    ASSERT_EQ(msg["violations"].size(), 1u);
    EXPECT_NE(msg["violations"][0].get<std::string>().find("NOT NULL"), std::string::npos);
    EXPECT_EQ(engine.timestep(), 0);
}

TEST(WireHandler, DevViolationIsError) {
    auto engine = Engine::load(program_text("select-all"), {}, Mode::Dev);
    WireHandler handler(engine);
    auto replies = handler.handle(R"({"type":"input","name":"brushEvent","values":{"mouseEvent":"up"}})", 0);
    ASSERT_EQ(replies.size(), 1u);
    EXPECT_EQ(json::parse(replies[0].text)["type"], "error");
    EXPECT_EQ(engine.timestep(), 0);
}

TEST(WireHandler, ValidBrushNeverRejected) {
    auto engine = Engine::load(program_text("select-all"), {}, Mode::Deploy);
    WireHandler handler(engine);
    auto replies = handler.handle(
        R"({"type":"input","name":"brushEvent","values":{"latMin":0,"latMax":5,"lonMin":0,"lonMax":5,"mouseEvent":"up"}})",
        0);
    for (const auto& r : replies) EXPECT_EQ(json::parse(r.text)["type"], "output");
    EXPECT_EQ(engine.timestep(), 1);
}

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

class Client {
   public:
    explicit Client(unsigned short port) : ws_(ioc_) {
        tcp::resolver resolver(ioc_);
        net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
        ws_.handshake("127.0.0.1", "/");
    }
    auto read() -> json {
        beast::flat_buffer buffer;
        ws_.read(buffer);
        return json::parse(beast::buffers_to_string(buffer.data()));
    }
    void send(const std::string& text) { ws_.write(net::buffer(text)); }
    void close() { ws_.close(websocket::close_code::normal); }

   private:
    net::io_context ioc_;
    websocket::stream<tcp::socket> ws_;
};

class ServerThread {
   public:
    explicit ServerThread(Engine engine) : server_(std::move(engine), ServeOptions{"127.0.0.1", 0}) {
        thread_ = std::thread([this] { server_.run(); });
    }
    ~ServerThread() {
        server_.stop();
        thread_.join();
    }
    [[nodiscard]] auto port() const -> unsigned short { return server_.port(); }

   private:
    Server server_;
    std::thread thread_;
};

TEST(Server, HandshakeSendsCatalog) {
    ServerThread server(Engine::load(program_text("select-all")));
    Client client(server.port());
    auto catalog = client.read();
    EXPECT_EQ(catalog["type"], "catalog");
    EXPECT_EQ(catalog["inputs"][0]["name"], "brushEvent");
    EXPECT_EQ(catalog["inputs"][1]["name"], "tweetEvent");
    client.close();
}

TEST(Server, OutputsBroadcastErrorsDoNot) {
    ServerThread server(Engine::load(program_text("select-all")));
    Client a(server.port());
    Client b(server.port());
    a.read();
    b.read();
    a.send("{broken");
    EXPECT_EQ(a.read()["type"], "error");
    b.send(R"({"type":"input","name":"brushEvent","values":{"latMin":0,"latMax":50,"lonMin":0,"lonMax":50,"mouseEvent":"up"}})");
    b.send(R"({"type":"input","name":"tweetEvent","values":{"id":"A","lat":10,"lon":10,"hour":9}})");
    for (Client* c : {&a, &b}) {
        auto msg = c->read();
        EXPECT_EQ(msg["type"], "output");
        EXPECT_EQ(msg["name"], "regionSelection");
        EXPECT_EQ(msg["timestep"], 2);
        EXPECT_EQ(c->read()["name"], "hourDistOutput");
    }
    a.close();
    b.close();
}

TEST(Server, WireStreamEqualsSnapshotStream) {
    ServerThread server(Engine::load(program_text("select-all")));
    Client client(server.port());
    client.read();
    auto frames = trace_frames("select-all");
    for (const auto& f : frames) client.send(f);
    auto expected = harness::parse_snapshots(
        testing::slurp(testing::fixture_root() / "select-all" / "expected.snapshots.jsonl"));
    std::vector<harness::SnapshotEntry> wire;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        auto msg = client.read();
        ASSERT_EQ(msg["type"], "output");
        harness::SnapshotEntry e;
        e.timestep = msg["timestep"].get<std::int64_t>();
        e.output = msg["name"].get<std::string>();
        for (const auto& row : msg["rows"]) e.rows.push_back(row.dump());
        wire.push_back(std::move(e));
    }
    EXPECT_EQ(harness::diff_snapshots(expected, wire), "");
    client.close();
}

TEST(Server, BindFailureThrows) {
    ServerThread first(Engine::load(program_text("select-all")));
    EXPECT_ANY_THROW(Server(Engine::load(program_text("select-all")),
                            ServeOptions{"127.0.0.1", first.port()}));
}

TEST(Cli, ServeBindFailureExitCode) {
    ServerThread first(Engine::load(program_text("select-all")));
    auto r = testing::run_command(testing::quoted(testing::cli_path()) + " serve " +
                                  (testing::fixture_root() / "select-all" / "program.diel").string() +
                                  " --port " + std::to_string(first.port()));
    EXPECT_EQ(r.exit_code, 3) << r.output;
}

}  // namespace
}  // namespace diel::service
