// voi — propagate parameter uncertainty through the pollution health impact
// model, estimate per-parameter EVPPI, update priority parameters from data
// and rank research investments under a person-day budget.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "voi/errors.hpp"
#include "voi/pipeline.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = "run";
    std::uint64_t seed = 0;
    bool seed_given = false;
};

voi::ProjectConfig load_config(const GlobalArgs& args) {
    voi::ProjectConfig config = voi::ProjectConfig::load(args.config_path);
    if (args.seed_given) {
        config.seed = args.seed;
        config.mcmc.seed = args.seed;
    }
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"value-of-information analysis for the pollution health impact model"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "project config JSON")->required();
    app.add_option("--out", args.out_dir, "run directory (default: run)");
    auto* seed_opt = app.add_option("--seed", args.seed, "override the config seed");

    std::string update_param;
    std::string losses_csv;
    std::size_t samples_override = 0;
    int threads_override = -1;

    auto* c_sim = app.add_subcommand("simulate", "draw joint samples and evaluate the model");
    c_sim->add_option("--samples", samples_override, "override sample count R");
    c_sim->add_option("--threads", threads_override, "worker threads (0 = all cores)");
    auto* c_evppi = app.add_subcommand("evppi", "estimate EVPPI per parameter from samples.csv");
    c_evppi->add_option("--losses", losses_csv,
                        "losses CSV (one column per decision) for the decision form");
    auto* c_meta = app.add_subcommand("update-meta", "meta-analysis update of a proportion");
    c_meta->add_option("--param", update_param, "parameter to update (default: zeta)");
    auto* c_hier = app.add_subcommand("update-hier", "hierarchical update of a concentration");
    c_hier->add_option("--param", update_param, "parameter to update (default: eta)");
    auto* c_prio = app.add_subcommand("prioritize", "rank research under the budget");
    auto* c_report = app.add_subcommand("report", "write report tables and density curves");
    auto* c_run = app.add_subcommand("run", "full pipeline: simulate, evppi, prioritize, "
                                            "update, re-simulate, report");
    c_run->add_option("--samples", samples_override, "override sample count R");
    c_run->add_option("--threads", threads_override, "worker threads (0 = all cores)");

    CLI11_PARSE(app, argc, argv);
    args.seed_given = seed_opt->count() > 0;

    try {
        voi::ProjectConfig config = load_config(args);
        if (samples_override > 0) config.samples = samples_override;
        if (threads_override >= 0) config.threads = threads_override;
        voi::RunDir run{args.out_dir};

        if (c_sim->parsed()) {
            voi::simulate_step(config, run);
            std::cout << "wrote " << run.samples().string() << "\n";
        } else if (c_evppi->parsed()) {
            voi::evppi_step(config, run, false, losses_csv);
            std::cout << "wrote " << run.evppi_report().string() << "\n";
        } else if (c_meta->parsed()) {
            voi::update_step(config, run, update_param.empty() ? "zeta" : update_param);
            std::cout << "wrote posterior for "
                      << (update_param.empty() ? "zeta" : update_param) << "\n";
        } else if (c_hier->parsed()) {
            voi::update_step(config, run, update_param.empty() ? "eta" : update_param);
            std::cout << "wrote posterior for " << (update_param.empty() ? "eta" : update_param)
                      << "\n";
        } else if (c_prio->parsed()) {
            const voi::Selection sel = voi::prioritize_step(config, run);
            if (sel.nothing_worthwhile) {
                std::cout << "no parameter has positive EVPPI; further research is not "
                             "worthwhile for this model\n";
            } else {
                std::cout << "selected:";
                for (const auto& s : sel.selected) std::cout << " " << s;
                std::cout << "\ntotal cost " << sel.total_cost << " of budget " << sel.budget
                          << " person-days\nvariance reduction bound (upper bound) "
                          << sel.variance_reduction_bound << "\n";
                if (sel.exact_check_ran && sel.greedy_gap > 0)
                    std::cout << "note: exact knapsack beats greedy by " << sel.greedy_gap
                              << "\n";
            }
        } else if (c_report->parsed()) {
            voi::report_step(config, run);
            std::cout << "wrote " << run.report_txt().string() << "\n";
        } else if (c_run->parsed()) {
            voi::run_pipeline(config, run);
            std::cout << "run complete; artifacts in " << run.dir.string() << "\n";
        }
        return voi::kExitOk;
    } catch (const voi::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return voi::kExitConvergenceFailure;
    } catch (const voi::ModelEvalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return voi::kExitModelEvalError;
    } catch (const voi::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return voi::kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return voi::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
