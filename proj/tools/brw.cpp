#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "brw/experiment.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Branching random walk with immigration: simulation and moment analytics"};
    brw::RunRequest request;
    std::uint64_t seed = 0;
    std::size_t replicas = 0;
    app.add_option("task", request.task, "Task to run")
        ->required()
        ->check(CLI::IsMember(brw::kTasks));
    app.add_option("--config", request.config, "JSON experiment config")->required();
    app.add_option("--out", request.out, "Output directory")->required();
    auto* seed_opt = app.add_option("--seed", seed, "Master seed override");
    auto* rep_opt = app.add_option("--replicas", replicas, "Replica count override");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : brw::kExitConfig;
    }
    if (*seed_opt) request.seed = seed;
    if (*rep_opt) request.replicas = replicas;
    return brw::run(request, std::cout);
}
