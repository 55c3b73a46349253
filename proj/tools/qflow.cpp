#include <iostream>

#include <CLI11.hpp>

#include "qflow/cli.hpp"
#include "qflow/error.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Flow-equation ground-state solver for spin chains"};
    app.require_subcommand(1);

    std::string config;
    qflow::CliOptions opts;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out;

    for (const char* name : {"run", "gradcheck", "oracle", "bench"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("config", config, "run configuration (JSON)")->required();
        sub->add_option("--seed", seed, "override flow.seed");
        sub->add_option("--threads", threads, "worker threads");
        sub->add_option("--out", out, "output directory");
    }
    CLI11_PARSE(app, argc, argv);

    const auto* sub = app.get_subcommands().front();
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--threads")) opts.threads = threads;
    if (sub->count("--out")) opts.out = out;
    try {
        qflow::apply_environment(opts);
    } catch (const qflow::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }

    const std::string cmd = sub->get_name();
    if (cmd == "run") return qflow::cmd_run(config, opts, std::cout, std::cerr);
    if (cmd == "gradcheck") return qflow::cmd_gradcheck(config, opts, std::cout, std::cerr);
    if (cmd == "oracle") return qflow::cmd_oracle(config, opts, std::cout, std::cerr);
    return qflow::cmd_bench(config, opts, std::cout, std::cerr);
}
