#include <csignal>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "diel/compile.hpp"
#include "diel/csv.hpp"
#include "diel/harness.hpp"
#include "diel/parser.hpp"
#include "diel/service.hpp"

namespace {

diel::service::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

// DIEL_MODE wins over --mode. Returns false on an unknown value.
auto resolve_mode(const std::string& flag, diel::Mode& mode) -> bool {
    std::string text = flag;
    if (const char* env = std::getenv("DIEL_MODE"); env && *env) text = env;
    auto parsed = diel::parse_mode(text);
    if (!parsed) {
        std::cerr << "error: unknown mode '" << text << "' (expected dev or deploy)\n";
        return false;
    }
    mode = *parsed;
    return true;
}

auto serve(const std::string& program, const std::vector<std::string>& statics,
           diel::Mode mode, const std::string& address, unsigned short port) -> int {
    using namespace diel;
    std::string text;
    std::vector<StaticData> data;
    try {
        text = harness::read_file(program);
        data = harness::load_statics(statics);
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return harness::kExitIo;
    }
    std::optional<Engine> engine;
    try {
        engine.emplace(Engine::load(text, data, mode, program));
    } catch (const ParseError& e) {
        std::cerr << format_error(e, text) << '\n';
        return harness::kExitCompile;
    } catch (const SemanticErrors& e) {
        std::cerr << format_errors(e, text) << '\n';
        return harness::kExitCompile;
    } catch (const csv::CsvError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return harness::kExitIo;
    }
    std::unique_ptr<service::Server> server;
    try {
        server = std::make_unique<service::Server>(std::move(*engine),
                                                   service::ServeOptions{address, port});
    } catch (const std::exception& e) {
        std::cerr << "error: cannot listen on " << address << ":" << port << ": " << e.what()
                  << '\n';
        return harness::kExitIo;
    }
    std::cout << "listening on " << address << ":" << server->port() << std::endl;
    g_server = server.get();
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server->run();
    g_server = nullptr;
    return harness::kExitOk;
}

}  // namespace

auto main(int argc, char** argv) -> int {
    CLI::App app{"diel: event-log state management engine"};
    app.require_subcommand(1);

    std::string file;
    std::string emit = "sql";
    std::vector<std::string> statics;
    std::string mode_flag = "dev";

    auto* compile = app.add_subcommand("compile", "check a program and print a compiled form");
    compile->add_option("file", file, "DIEL program")->required();
    compile->add_option("--emit", emit, "ast|sql|plan|deps")
        ->check(CLI::IsMember({"ast", "sql", "plan", "deps"}));
    compile->add_option("--static", statics, "static table as name=path.csv");

    diel::harness::RunOptions run_opts;
    auto* run = app.add_subcommand("run", "replay a trace and write the snapshot stream");
    run->add_option("file", run_opts.program, "DIEL program")->required();
    run->add_option("--trace", run_opts.trace, "trace JSON Lines file")->required();
    run->add_option("--static", run_opts.statics, "static table as name=path.csv");
    run->add_option("--mode", mode_flag, "dev|deploy (DIEL_MODE overrides)");
    run->add_option("--out", run_opts.out, "'-' for stdout, a .jsonl file, or a directory");
    run->add_option("--outputs", run_opts.outputs, "outputs to bind (default: all)")->delimiter(',');
    run->add_option("--export-log", run_opts.export_log, "write the committed events as a trace");

    std::string diff_a;
    std::string diff_b;
    auto* diff = app.add_subcommand("diff", "compare two snapshot streams");
    diff->add_option("a", diff_a)->required();
    diff->add_option("b", diff_b)->required();

    std::string csv_file;
    std::string column;
    std::string pattern;
    std::vector<std::string> projection;
    auto* match = app.add_subcommand("match", "run a MATCH pattern over a CSV file");
    match->add_option("file", csv_file, "CSV with a header row")->required();
    match->add_option("--column", column, "column holding the symbols")->required();
    match->add_option("--pattern", pattern, "pattern, e.g. '(down)(?:move)*(up)'")->required();
    match->add_option("--project", projection, "columns to emit after mg")->delimiter(',');

    std::string address = "127.0.0.1";
    unsigned short port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "serve a program over WebSocket");
    serve_cmd->add_option("file", file, "DIEL program")->required();
    serve_cmd->add_option("--static", statics, "static table as name=path.csv");
    serve_cmd->add_option("--mode", mode_flag, "dev|deploy (DIEL_MODE overrides)");
    serve_cmd->add_option("--address", address, "listen address");
    serve_cmd->add_option("--port", port, "listen port (0 picks one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : diel::harness::kExitCompile;
    }

    using namespace diel::harness;
    if (*compile) return cmd_compile(file, emit, statics, std::cout, std::cerr);
    if (*run) {
        if (!resolve_mode(mode_flag, run_opts.mode)) return kExitIo;
        return cmd_run(run_opts, std::cout, std::cerr);
    }
    if (*diff) return cmd_diff(diff_a, diff_b, std::cout, std::cerr);
    if (*match) return cmd_match(csv_file, column, pattern, projection, std::cout, std::cerr);
    if (*serve_cmd) {
        diel::Mode mode = diel::Mode::Dev;
        if (!resolve_mode(mode_flag, mode)) return kExitIo;
        return serve(file, statics, mode, address, port);
    }
    return kExitCompile;
}
