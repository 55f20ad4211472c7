#include <cstdio>
#include <thread>

#include <CLI11.hpp>

#include "wclab/cli.hpp"

namespace cli = wclab::cli;

int main(int argc, char** argv) {
    CLI::App app{"wclab: weak-coupling limit laboratory for Friedrichs Hamiltonians"};
    app.require_subcommand(1);

    cli::Options opt;
    unsigned hw = std::thread::hardware_concurrency();
    int default_jobs = hw == 0 ? 1 : static_cast<int>(hw);

    auto add_model = [&](CLI::App* sub, bool required) {
        auto* o = sub->add_option("--model", opt.model_ref, "model file or builtin:<name>");
        if (required) o->required();
    };

    auto* validate = app.add_subcommand("validate", "check the model assumptions");
    add_model(validate, true);

    auto* davies = app.add_subcommand("davies", "effective generators by all routes");
    add_model(davies, true);
    davies->add_option("--route", opt.route, "closed | stationary | dynamic | all")
        ->default_val("all");
    davies->add_option("--tol", opt.tol, "quadrature tolerance")->default_val(1e-10);
    davies->add_option("--out", opt.out_dir, "output directory");

    auto* dilation = app.add_subcommand("dilation", "unitary dilation diagnostics");
    add_model(dilation, true);
    dilation->add_option("--tol", opt.tol, "quadrature tolerance")->default_val(1e-10);
    dilation->add_option("--out", opt.out_dir, "output directory");

    auto* sweep = app.add_subcommand("sweep", "run a convergence sweep from a config file");
    sweep->add_option("--config", opt.config_path, "sweep config (JSON)")->required();
    add_model(sweep, false);
    sweep->add_option("--out", opt.out_dir, "output directory");
    sweep->add_option("--jobs", opt.jobs, "worker threads over lambda")
        ->default_val(default_jobs);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    cli::CommandResult res;
    if (validate->parsed())
        res = cli::cmd_validate(opt);
    else if (davies->parsed())
        res = cli::cmd_davies(opt);
    else if (dilation->parsed())
        res = cli::cmd_dilation(opt);
    else
        res = cli::cmd_sweep(opt);
    std::fputs(res.report.c_str(), res.exit_code == 2 ? stderr : stdout);
    return res.exit_code;
}
