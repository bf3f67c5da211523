#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "designloop/error.hpp"
#include "designloop/patchkit/apply.hpp"
#include "designloop/patchkit/edit.hpp"
#include "designloop/patchkit/numbering.hpp"
#include "designloop/server/config.hpp"
#include "designloop/server/http_server.hpp"
#include "designloop/streamsync/reconciler.hpp"

using namespace designloop;

namespace {

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int serve(const std::optional<std::string>& config_file, const std::optional<std::string>& host,
          const std::optional<int>& port) {
    server::ServerConfig config = server::load_config(
        config_file ? std::optional<std::filesystem::path>(*config_file) : std::nullopt);
    if (host) config.host = *host;
    if (port) config.port = *port;
    server::validate(config);

    // Signals are taken synchronously by one thread so that shutdown runs
    // outside any signal handler.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    store::ArtifactStore store(config.store_root);
    for (const auto& [project, report] : store.recovery()) {
        for (const auto& action : report.actions) std::cerr << "recovered " << project << ": " << action << "\n";
    }
    auto provider = server::make_provider(config);
    server::ServiceOptions options;
    options.agents = server::agent_config(config);
    options.event_ring = config.event_ring;
    server::Service service(store, *provider, options);
    server::HttpServer http(service);
    const int bound = http.bind(config.host, config.port);
    std::cerr << "serving " << provider->identity() << " on http://" << config.host << ":" << bound << " from "
              << config.store_root.string() << "\n";

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        http.stop();
    });
    http.run();
    // run() also returns if listening fails; wake the waiter either way.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"designloop: design-exploration backend and patch tools"};
    app.require_subcommand(1);

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/SSE server");
    std::optional<std::string> config_file, host;
    std::optional<int> port;
    serve_cmd->add_option("-c,--config", config_file, "JSON config file");
    serve_cmd->add_option("--host", host, "Bind address (overrides config)");
    serve_cmd->add_option("-p,--port", port, "Port, 0 for any (overrides config)");

    auto* number_cmd = app.add_subcommand("number", "Prefix every line with its L#### number");
    std::string number_in = "-";
    number_cmd->add_option("file", number_in, "Input file, - for stdin");

    auto* strip_cmd = app.add_subcommand("strip", "Remove L#### prefixes");
    std::string strip_in = "-";
    strip_cmd->add_option("file", strip_in, "Input file, - for stdin");

    auto* apply_cmd = app.add_subcommand("apply", "Apply an edit payload to a code file");
    std::string code_file, payload_file;
    patchkit::FuzzPolicy fuzz;
    apply_cmd->add_option("code", code_file, "Code file")->required();
    apply_cmd->add_option("payload", payload_file, "Edit payload JSON, - for stdin")->required();
    apply_cmd->add_option("--radius", fuzz.search_radius, "Search radius in lines");
    apply_cmd->add_option("--threshold", fuzz.min_similarity, "Minimum window similarity");

    auto* replay_cmd = app.add_subcommand("replay-panel", "Reconcile a streamed panel against a base panel");
    std::string base_file, stream_file;
    std::size_t chunk = 0;
    replay_cmd->add_option("base", base_file, "Base panel in storage JSON, or 'empty'")->required();
    replay_cmd->add_option("stream", stream_file, "Streamed panel text, - for stdin")->required();
    replay_cmd->add_option("--chunk", chunk, "Feed in pieces of this many bytes (0: one piece)");

    auto* versions_cmd = app.add_subcommand("versions", "List stored versions of a project");
    std::string store_root, project, kind = "code";
    std::optional<std::uint64_t> show;
    versions_cmd->add_option("store", store_root, "Store root")->required();
    versions_cmd->add_option("project", project, "Project id")->required();
    versions_cmd->add_option("-k,--kind", kind, "code or panel")->check(CLI::IsMember({"code", "panel"}));
    versions_cmd->add_option("--show", show, "Print the content of this version instead");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve_cmd) return serve(config_file, host, port);
        if (*number_cmd) {
            std::cout << patchkit::number_lines(read_input(number_in)).rendered();
            return 0;
        }
        if (*strip_cmd) {
            std::cout << patchkit::strip_prefixes(read_input(strip_in));
            return 0;
        }
        if (*apply_cmd) {
            const std::string code = read_input(code_file);
            const auto edits = patchkit::parse_edit_payload(read_input(payload_file));
            const auto result = patchkit::apply_edits(code, edits, fuzz);
            std::cerr << patchkit::outcome_name(result.outcome) << ": " << result.applied_edits.size()
                      << " applied, " << result.failed_edits.size() << " failed\n";
            if (!result.new_code) return 2;
            std::cout << *result.new_code;
            return 0;
        }
        if (*replay_cmd) {
            const design::DesignPanel base =
                base_file == "empty" ? design::DesignPanel{} : design::deserialize_panel(read_input(base_file));
            const std::string stream = read_input(stream_file);
            streamsync::Reconciler rec(base);
            const std::size_t step = chunk == 0 ? std::max<std::size_t>(stream.size(), 1) : chunk;
            for (std::size_t at = 0; at < stream.size(); at += step) {
                for (const auto& e : rec.feed(std::string_view(stream).substr(at, step))) {
                    std::cout << streamsync::to_json(e).dump() << "\n";
                }
            }
            const auto result = rec.finalize();
            std::cout << design::to_json(result.panel).dump(2) << "\n";
            return 0;
        }
        if (*versions_cmd) {
            store::ArtifactStore store(store_root, store::system_clock_ms, store::StoreMode::ReadOnly);
            const auto k = *store::kind_from_name(kind);
            if (show) {
                std::cout << store.load_artifact(project, k, *show);
                return 0;
            }
            for (const auto& meta : store.list_versions(project, k)) std::cout << store::to_json(meta).dump() << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << error_code_name(e.code()) << "): " << e.what() << "\n";
        return 1;
    }
    return 0;
}
