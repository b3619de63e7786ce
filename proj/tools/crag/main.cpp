// SPDX-License-Identifier: Apache-2.0
//
// crag: command-line entry point for every pipeline stage and the HTTP service.
//
// Exit codes: 0 success, 1 error, 2 usage, 3 missing prerequisite stage,
// 4 some products failed to build.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "crag/app/commands.hpp"
#include "crag/app/config.hpp"
#include "crag/app/service.hpp"
#include "crag/errors.hpp"

namespace {

constexpr int exit_error = 1;
constexpr int exit_usage = 2;
constexpr int exit_stage = 3;
constexpr int exit_partial = 4;

crag::app::AppConfig load(const std::string& config_path, const std::optional<std::uint64_t>& seed) {
    namespace fs = std::filesystem;
    crag::app::AppConfig config;
    if (!config_path.empty()) {
        config = crag::app::load_config(config_path);
    } else if (fs::exists("crag.json")) {
        config = crag::app::load_config("crag.json");
    } else {
        config = crag::app::default_config();
        config.base_dir = ".";
    }
    if (seed) {
        crag::app::apply_seed(config, *seed);
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("crag"));
    spdlog::set_level(spdlog::level::warn);

    CLI::App app{"Review summarization and QA over clustered knowledge"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool force = false;
    bool verbose = false;
    app.add_option("--config", config_path, "JSON config file (default: ./crag.json if present)");
    app.add_option("--seed", seed, "Seed for clustering and the test embedder");
    app.add_flag("--force", force, "Recompute even when fingerprints match");
    app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

    auto* ingest = app.add_subcommand("ingest", "Parse the review CSV into the reviews artifact");
    std::string csv_override;
    bool dedup = false;
    ingest->add_option("csv", csv_override, "Review CSV (overrides paths.corpus_csv)");
    ingest->add_flag("--dedup", dedup, "Drop exact duplicate reviews within a product");

    auto* embed = app.add_subcommand("embed", "Embed every review");

    auto* build = app.add_subcommand("build", "Build CRAG or RAG knowledge documents");
    std::string method_name;
    build->add_option("--method", method_name, "crag or rag")
        ->required()
        ->check(CLI::IsMember({"crag", "rag"}, CLI::ignore_case));

    auto* evaluate = app.add_subcommand("evaluate", "Compare CRAG and RAG prompts and answers");
    std::string questions;
    evaluate->add_option("--questions", questions, "One question per line")->required();

    auto* query = app.add_subcommand("query", "Interactive question loop over stored knowledge");

    auto* serve = app.add_subcommand("serve", "HTTP service for the chat client");
    std::optional<std::string> host;
    std::optional<int> port;
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Bind port");

    auto* elbow = app.add_subcommand("elbow", "Print the inertia curve for one product as CSV");
    std::string elbow_product;
    elbow->add_option("product", elbow_product, "Product id")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_usage;
    }
    if (verbose) {
        spdlog::set_level(spdlog::level::info);
    }

    try {
        auto config = load(config_path, seed);
        const crag::app::CommandIo io{std::cout, std::cerr, force};
        if (ingest->parsed()) {
            if (!csv_override.empty()) {
                config.paths.corpus_csv = std::filesystem::absolute(csv_override);
            }
            config.ingest.dedup = config.ingest.dedup || dedup;
            crag::app::cmd_ingest(config, io);
        } else if (embed->parsed()) {
            crag::app::cmd_embed(config, io);
        } else if (build->parsed()) {
            const auto summary = crag::app::cmd_build(config, crag::method_from_string(method_name), io);
            if (!summary.failed.empty()) {
                return exit_partial;
            }
        } else if (evaluate->parsed()) {
            crag::app::cmd_evaluate(config, questions, io);
        } else if (query->parsed()) {
            crag::app::cmd_query(config, std::cin, io);
        } else if (serve->parsed()) {
            if (host) {
                config.service.host = *host;
            }
            if (port) {
                config.service.port = *port;
            }
            spdlog::set_level(spdlog::level::info);
            crag::app::block_shutdown_signals();
            crag::app::Service service(config);
            service.start();
            service.run_until_signal();
        } else if (elbow->parsed()) {
            crag::app::cmd_elbow(config, elbow_product, io);
        }
    } catch (const crag::StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_stage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_error;
    }
    return 0;
}
