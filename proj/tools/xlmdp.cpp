#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "xlmdp/experiment/commands.hpp"
#include "xlmdp/wireless/config.hpp"

namespace ex = xlmdp::experiment;

int main(int argc, char** argv) {
    CLI::App app{"Layered MDP solver and wireless cross-layer experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mode;
    std::optional<double> gamma;
    std::optional<long> stages;
    std::optional<unsigned long long> seed;
    std::string out_dir = ".";
    std::string policy, policy_a, policy_b;

    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "stack config file (INI)")->required();
        cmd->add_option("--gamma", gamma, "discount factor override");
        cmd->add_option("--stages", stages, "stage count override");
        cmd->add_option("--seed", seed, "random seed override");
        cmd->add_option("--out", out_dir, "output directory");
    };
    auto* solve = app.add_subcommand("solve", "solve the stack and write values and policy");
    common(solve);
    solve->add_option("--mode", mode, "centralized | layered | simplified1 | simplified2");
    auto* simulate = app.add_subcommand("simulate", "roll out a stored policy");
    common(simulate);
    simulate->add_option("--policy", policy, "policy file")->required();
    auto* compare = app.add_subcommand("compare", "compare policy B against policy A");
    common(compare);
    compare->add_option("--policy-a", policy_a, "reference policy file")->required();
    compare->add_option("--policy-b", policy_b, "compared policy file")->required();
    auto* learn = app.add_subcommand("learn", "run actor-critic learning");
    common(learn);
    learn->add_option("--mode", mode, "centralized | layered");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ex::ExitCode::config);
    }

    try {
        ex::ExperimentSpec spec;
        spec.config = xlmdp::wireless::load_config(config_path);
        if (gamma) spec.config.solver.gamma = *gamma;
        if (stages) spec.config.learning.stages = *stages;
        if (seed) spec.config.learning.seed = *seed;
        xlmdp::wireless::validate(spec.config);
        spec.mode = mode;
        spec.out = out_dir;
        if (!policy.empty()) spec.policy = policy;
        if (!policy_a.empty()) spec.policy_a = policy_a;
        if (!policy_b.empty()) spec.policy_b = policy_b;

        ex::CommandOutcome outcome;
        if (solve->parsed()) outcome = ex::cmd_solve(spec);
        else if (simulate->parsed()) outcome = ex::cmd_simulate(spec);
        else if (compare->parsed()) outcome = ex::cmd_compare(spec);
        else outcome = ex::cmd_learn(spec);

        std::cout << "config_hash " << xlmdp::wireless::config_hash(spec.config) << " seed "
                  << spec.config.learning.seed << '\n';
        for (const auto& note : outcome.notes) std::cout << note << '\n';
        for (const auto& path : outcome.written) std::cout << "wrote " << path.string() << '\n';
        return static_cast<int>(outcome.code);
    } catch (const std::exception& e) {
        std::cerr << "xlmdp: " << e.what() << '\n';
        return static_cast<int>(ex::exit_code_for(e));
    }
}
