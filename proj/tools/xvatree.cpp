#include <iostream>

#include <CLI11.hpp>

#include "xvatree/cli.hpp"

int main(int argc, char** argv) {
    using xvatree::cli::Command;
    CLI::App app{"Liability-side discounting and XVA on a binomial lattice"};
    app.require_subcommand(1);

    xvatree::cli::Options opt;
    std::string method;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON run configuration")->required();
        sub->add_flag("--json", opt.json, "machine-readable output");
        sub->add_option("--steps", opt.steps, "override engine.steps (converge: single step count)");
        sub->add_option("--out", opt.out_path, "write output to this file");
    };
    auto* price = app.add_subcommand("price", "fair value, riskfree value, CRA and Greeks");
    auto* xva = app.add_subcommand("xva", "cva/cfa/dva/dfa breakdown");
    auto* tree = app.add_subcommand("tree", "per-node CSV dump");
    auto* converge = app.add_subcommand("converge", "tree and PDE convergence checks");
    for (auto* sub : {price, xva, tree, converge}) add_common(sub);
    xva->add_option("--method", method, "recursive | rate-shift")
        ->check(CLI::IsMember({"recursive", "rate-shift", "rate_shift"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : xvatree::cli::exit_config_error;
    }

    if (!method.empty())
        opt.method = method == "recursive" ? xvatree::XvaMethod::recursive : xvatree::XvaMethod::rate_shift;

    Command command = Command::price;
    if (xva->parsed()) command = Command::xva;
    else if (tree->parsed()) command = Command::tree;
    else if (converge->parsed()) command = Command::converge;
    return xvatree::cli::run(command, opt, std::cout, std::cerr);
}
