// Command-line front end for the intents KB pipeline.
//
//   intentskb <acquire|categorize|cluster|build|eval|run-all>
//             --config <path> [--seed <int>] [--out <dir>]
//
// Exit codes: 0 success, 1 input/config error, 2 internal error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "intentskb/config.hpp"
#include "intentskb/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::int64_t> seed;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& options) {
    cmd->add_option("--config", options.config_path, "pipeline config file")
        ->required();
    cmd->add_option("--seed", options.seed,
                    "random seed (overrides the config)");
    cmd->add_option("--out", options.out_dir,
                    "output directory (overrides the config)");
}

void print_report(const intentskb::StageReport& report) {
    std::cout << "[" << report.stage << "]";
    for (const auto& [key, value] : report.counts)
        std::cout << " " << key << "=" << value;
    for (const auto& [key, value] : report.metrics)
        std::cout << " " << key << "=" << value;
    std::cout << " (" << report.duration_ms << " ms)\n";
}

int run(const std::string& stage, const CommonOptions& options) {
    intentskb::PipelineConfig config =
        intentskb::parse_config(options.config_path);
    if (options.seed)
        config.seed = static_cast<std::uint64_t>(*options.seed);
    if (!options.out_dir.empty()) config.output_dir = options.out_dir;

    if (stage == "run-all") {
        for (const auto& report : intentskb::run_all(config))
            print_report(report);
    } else {
        print_report(intentskb::run_stage(stage, config));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Builds a knowledge base of entity-oriented search intents "
                 "from query suggestions"};
    app.require_subcommand(1);

    const std::vector<std::string> stages = {"acquire", "categorize", "cluster",
                                             "build",   "eval",       "run-all"};
    CommonOptions options;
    for (const auto& stage : stages)
        add_common(app.add_subcommand(stage, "run the " + stage + " stage"),
                   options);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        return run(stage, options);
    } catch (const intentskb::ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const intentskb::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
