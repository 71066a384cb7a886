// semiheat command-line tool.

#include "semiheat/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace semiheat;
    if (argc < 2) {
        std::cerr << usage();
        return 1;
    }
    CLI::App app{"Paracontrolled calculus and PAM experiments on weighted graphs", "semiheat"};
    std::string command, graph_spec, config_path, out_dir, cache, ladder;
    std::uint64_t seed = 0;
    int draws = 0;
    bool oracle = false;
    app.add_option("command", command, "command to run")->required();
    app.add_option("graph", graph_spec, "graph spec overriding graph.spec");
    app.add_option("--config", config_path, "JSON run configuration");
    auto* seed_opt = app.add_option("--seed", seed, "noise seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--spectral-cache", cache, "spectral decomposition cache file");
    auto* draws_opt = app.add_option("--draws", draws, "noise draws")->check(CLI::PositiveNumber);
    app.add_option("--eps-ladder", ladder, "comma-separated eps values");
    app.add_flag("--oracle", oracle, "compare paraproducts with the exact tensor oracle");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << e.what() << "\n" << usage();
        return 1;
    }
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end()) {
        std::cerr << "unknown command '" << command << "'\n" << usage();
        return 1;
    }
    CommandContext ctx;
    try {
        ctx.cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (!graph_spec.empty()) ctx.cfg.graph.spec = graph_spec;
        if (*seed_opt) ctx.cfg.noise.seed = seed;
        if (*draws_opt) ctx.cfg.noise.draws = draws;
        if (!ladder.empty()) {
            ctx.cfg.noise.eps_ladder.clear();
            for (const auto& tok : detail::split(ladder, ',')) {
                std::size_t used = 0;
                double v = std::stod(tok, &used);
                require(used == tok.size(), "bad --eps-ladder entry '" + tok + "'");
                ctx.cfg.noise.eps_ladder.push_back(v);
            }
        }
        if (!out_dir.empty()) ctx.cfg.output_dir = out_dir;
        validate(ctx.cfg);
    } catch (const std::logic_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    ctx.out = ctx.cfg.output_dir;
    ctx.spectral_cache = cache;
    ctx.oracle = oracle;
    return run_command(command, ctx, std::cerr);
}
