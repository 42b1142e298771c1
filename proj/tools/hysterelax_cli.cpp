#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hysterelax/commands.hpp"

int main(int argc, char** argv) {
    using namespace hysterelax;
    CLI::App app{"Time-discrete solver for the heat equation with Preisach hysteresis"};
    app.require_subcommand(1);

    CommandOptions options;
    auto add = [&](const std::string& name, const std::string& about, bool levels) {
        CLI::App* sub = app.add_subcommand(name, about);
        sub->add_option("-c,--config", options.config, "TOML configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--out-dir", options.out_dir, "output directory (default: output.dir of the config)");
        sub->add_option("-j,--threads", options.threads, "worker threads (HYSTERELAX_THREADS takes precedence)")
            ->check(CLI::NonNegativeNumber);
        sub->add_flag("--check-assembly", options.check_assembly, "self-test the assembled operator first");
        if (levels) sub->add_option("-l,--levels", options.levels, "number of step refinements")->check(CLI::PositiveNumber);
        return sub;
    };
    CLI::App* run = add("run", "solve the problem and write trajectories and monitors", false);
    CLI::App* refine = add("refine", "repeat the run with the step halved at each level", true);
    CLI::App* loops = add("loops", "trace hysteresis loops of the scalar operator", false);
    CLI::App* check = add("check", "audit initial data, step size and convexifier without solving", false);
    CLI::App* convexify = add("check-convexify", "verify the convexifying change of variables", false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    }

    if (run->parsed()) return cmd_run(options, std::cout, std::cerr);
    if (refine->parsed()) return cmd_refine(options, std::cout, std::cerr);
    if (loops->parsed()) return cmd_loops(options, std::cout, std::cerr);
    if (check->parsed()) return cmd_check(options, std::cout, std::cerr);
    if (convexify->parsed()) return cmd_check_convexify(options, std::cout, std::cerr);
    return exit_input;
}
