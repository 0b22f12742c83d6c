#include "voi/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "voi/csv.hpp"
#include "voi/errors.hpp"
#include "voi/evppi.hpp"
#include "voi/stats.hpp"

namespace voi {

namespace {

namespace fs = std::filesystem;

void atomic_write_text(const fs::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw ConfigError(tmp.string() + ": cannot open for writing");
        out << text;
    }
    fs::rename(tmp, path);
}

void atomic_write_json(const fs::path& path, const nlohmann::json& j) {
    atomic_write_text(path, j.dump(2) + "\n");
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void append_log(const RunDir& run, const std::string& line) {
    std::ofstream out(run.log(), std::ios::app);
    out << line << "\n";
}

// Priors with any posterior pools in the run directory swapped in.
PriorMap effective_priors(const ProjectConfig& config, const RunDir& run, bool updated) {
    PriorMap priors = config.prior_map();
    if (!updated) return priors;
    for (auto& [name, dist] : priors) {
        const fs::path pool_file = run.posterior(name);
        if (fs::exists(pool_file)) {
            dist = Distribution::empirical(read_pool_csv(pool_file),
                                           pool_file.filename().string());
        }
    }
    return priors;
}

std::string format_cell(double v) {
    if (std::isnan(v)) return "";
    return CsvWriter::format_number(v);
}

void write_evppi_csv(const fs::path& path, const std::vector<EvppiEstimate>& estimates,
                     const ResearchCatalog& catalog,
                     const std::vector<EvppiEstimate>* loss_estimates) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::vector<std::string> header = {"parameter",    "sd_reduction", "pct_explained",
                                           "evppi_abs",    "bootstrap_se", "cost_person_days"};
        if (loss_estimates) header.push_back("evppi_loss");
        CsvWriter w(tmp, header);
        for (std::size_t i = 0; i < estimates.size(); ++i) {
            const EvppiEstimate& e = estimates[i];
            std::vector<std::string> cells = {e.target, format_cell(e.sd_reduction),
                                              format_cell(e.pct_explained),
                                              format_cell(e.evppi), format_cell(e.bootstrap_se)};
            auto it = catalog.find(e.target);
            cells.push_back(it != catalog.end() ? format_cell(it->second.cost) : "");
            if (loss_estimates) {
                double loss = std::numeric_limits<double>::quiet_NaN();
                for (const auto& le : *loss_estimates)
                    if (le.target == e.target) loss = le.evppi;
                cells.push_back(format_cell(loss));
            }
            w.row_mixed(cells);
        }
        w.close();
    }
    fs::rename(tmp, path);
}

struct ReportRow {
    std::string parameter;
    double sd_reduction, pct_explained, evppi_abs, bootstrap_se, cost;
};

std::vector<ReportRow> read_evppi_csv(const fs::path& path) {
    CsvTable t = read_csv(path);
    const std::size_t c_param = t.column("parameter");
    const std::size_t c_sd = t.column("sd_reduction");
    const std::size_t c_pct = t.column("pct_explained");
    const std::size_t c_abs = t.column("evppi_abs");
    const std::size_t c_se = t.column("bootstrap_se");
    const std::size_t c_cost = t.column("cost_person_days");
    std::vector<ReportRow> rows;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ReportRow row;
        row.parameter = t.cell(r, c_param);
        row.sd_reduction = t.cell(r, c_sd).empty() ? NAN : t.number(r, c_sd);
        row.pct_explained = t.cell(r, c_pct).empty() ? NAN : t.number(r, c_pct);
        row.evppi_abs = t.cell(r, c_abs).empty() ? NAN : t.number(r, c_abs);
        row.bootstrap_se = t.cell(r, c_se).empty() ? NAN : t.number(r, c_se);
        row.cost = t.cell(r, c_cost).empty() ? NAN : t.number(r, c_cost);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_density_csv(const ProjectConfig& config, const RunDir& run, const std::string& param) {
    const Distribution& prior = config.parameter(param);
    switch (prior.kind()) {
    case DistKind::Normal:
    case DistKind::LogNormal:
    case DistKind::Beta:
    case DistKind::HalfNormal:
        break;
    default:
        return; // no evaluable prior density to plot
    }
    double lo = prior.quantile(0.001), hi = prior.quantile(0.999);

    std::vector<double> pool;
    const fs::path pool_file = run.posterior(param);
    const bool have_posterior = fs::exists(pool_file);
    if (have_posterior) {
        pool = read_pool_csv(pool_file);
        for (double v : pool) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }

    constexpr int kGrid = 201;
    constexpr int kBins = 50;
    std::vector<double> hist(kBins, 0.0);
    if (have_posterior) {
        const double bin_w = (hi - lo) / kBins;
        for (double v : pool) {
            int b = static_cast<int>((v - lo) / bin_w);
            b = std::clamp(b, 0, kBins - 1);
            hist[b] += 1.0;
        }
        for (double& h : hist) h /= static_cast<double>(pool.size()) * bin_w;
    }

    fs::path path = run.density(param);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::vector<std::string> header = {"x", "prior_density"};
        if (have_posterior) header.push_back("posterior_density");
        CsvWriter w(tmp, header);
        for (int i = 0; i < kGrid; ++i) {
            const double x = lo + (hi - lo) * i / (kGrid - 1);
            std::vector<double> row = {x, std::exp(prior.log_density(x))};
            if (have_posterior) {
                int b = static_cast<int>((x - lo) / ((hi - lo) / kBins));
                b = std::clamp(b, 0, kBins - 1);
                row.push_back(hist[b]);
            }
            w.row(row);
        }
        w.close();
    }
    fs::rename(tmp, path);
}

} // namespace

void RunDir::ensure_exists() const { fs::create_directories(dir); }

void simulate_step(const ProjectConfig& config, const RunDir& run, bool updated) {
    run.ensure_exists();
    const ConstantTables tables = config.load_tables();
    const CurveSet curves = config.load_curves();
    const PriorMap priors = effective_priors(config, run, updated);

    McOptions opts;
    opts.samples = config.samples;
    opts.seed = config.seed;
    opts.threads = config.threads;
    const SampleMatrix m = propagate(priors, tables, curves, opts);

    fs::path tmp = run.samples(updated);
    tmp += ".tmp";
    m.write_csv(tmp);
    fs::rename(tmp, run.samples(updated));
    atomic_write_json(run.summary(updated), summarize(m).to_json());
}

void evppi_step(const ProjectConfig& config, const RunDir& run, bool updated,
                const std::filesystem::path& losses_csv) {
    const fs::path samples = run.samples(updated);
    if (!fs::exists(samples))
        throw ConfigError(samples.string() + ": not found; run 'voi simulate' first");
    const SampleMatrix m = SampleMatrix::read_csv(samples);

    // In the updated phase a parameter backed by a posterior pool is still
    // uncertain, so groups always come from the configured set.
    const std::vector<ParameterGroup> groups = config.evppi_groups();
    const OutputWeights outputs = config.output_weights();
    EvppiOptions opts;
    opts.seed = config.seed ^ 0xB007u;
    std::vector<EvppiEstimate> estimates = evppi_all(m, groups, outputs, opts);
    for (const auto& e : estimates) {
        if (e.noise_flag)
            std::cerr << "warning: EVPPI for '" << e.target
                      << "' was negative beyond Monte Carlo noise (raw " << e.evppi_raw << ")\n";
        if (e.var_y > 0 && e.bootstrap_se > 0.1 * e.var_y)
            std::cerr << "warning: EVPPI Monte Carlo error for '" << e.target
                      << "' exceeds 10% of var(Y); consider more samples\n";
    }

    std::vector<EvppiEstimate> loss_estimates;
    const bool decision_mode = !losses_csv.empty();
    if (decision_mode) {
        CsvTable t = read_csv(losses_csv);
        DecisionProblem problem;
        problem.decision_names = t.header;
        problem.losses.assign(t.header.size(), std::vector<double>(t.rows.size()));
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            for (std::size_t c = 0; c < t.header.size(); ++c)
                problem.losses[c][r] = t.number(r, c);
        for (const auto& g : groups)
            loss_estimates.push_back(evppi_decision(problem, m, g.columns, opts, g.name));
    }

    write_evppi_csv(run.evppi_report(updated), estimates, config.catalog,
                    decision_mode ? &loss_estimates : nullptr);
}

void update_step(const ProjectConfig& config, const RunDir& run, const std::string& param) {
    run.ensure_exists();
    auto it = config.updates.find(param);
    if (it == config.updates.end())
        throw ConfigError("config: no update plan for parameter '" + param + "'");
    const UpdatePlan& plan = it->second;

    McmcConfig mcfg = config.mcmc;
    mcfg.seed = config.seed ^ fnv1a(param);

    PosteriorSamples posterior = [&] {
        if (plan.method == "meta") {
            const MetaAnalysisData data = MetaAnalysisData::from_csv(plan.data_file);
            const Distribution& prior = config.parameter(param);
            const Distribution prior_tau =
                plan.prior_tau ? *plan.prior_tau : Distribution::half_normal(1);
            return meta_analysis_zeta(data, prior, prior_tau, mcfg);
        }
        const CityPollutionData data = CityPollutionData::from_csv(plan.data_file);
        HierarchicalOptions opts;
        opts.region_hint = plan.region;
        return hierarchical_eta(data, plan.country, opts, mcfg);
    }();

    const std::string column = plan.method == "meta" ? "zeta" : "eta";
    const std::vector<double> pool = posterior.pooled(column);
    fs::path tmp = run.posterior(param);
    tmp += ".tmp";
    write_pool_csv(tmp, pool);
    fs::rename(tmp, run.posterior(param));
    atomic_write_json(run.diagnostics(param), posterior.diagnostics_json());
}

Selection prioritize_step(const ProjectConfig& config, const RunDir& run) {
    const fs::path report = run.evppi_report(false);
    if (!fs::exists(report))
        throw ConfigError(report.string() + ": not found; run 'voi evppi' first");
    std::vector<EvppiEstimate> ranked;
    for (const auto& row : read_evppi_csv(report)) {
        EvppiEstimate e;
        e.target = row.parameter;
        e.evppi = row.evppi_abs;
        ranked.push_back(std::move(e));
    }
    const Selection sel = prioritize(ranked, config.catalog, config.budget);
    atomic_write_json(run.selection(), sel.to_json());
    return sel;
}

void report_step(const ProjectConfig& config, const RunDir& run) {
    const fs::path report = run.evppi_report(false);
    if (!fs::exists(report))
        throw ConfigError(report.string() + ": not found; run 'voi evppi' first");
    const std::vector<ReportRow> ranked = read_evppi_csv(report);

    // Rows in the configured parameter order.
    std::vector<ReportRow> ordered;
    for (const auto& name : config.report_order())
        for (const auto& row : ranked)
            if (row.parameter == name) ordered.push_back(row);

    {
        fs::path tmp = run.report_csv();
        tmp += ".tmp";
        CsvWriter w(tmp, {"parameter", "sd_reduction", "pct_explained", "cost_person_days"});
        for (const auto& row : ordered)
            w.row_mixed({row.parameter, format_cell(row.sd_reduction),
                         format_cell(row.pct_explained), format_cell(row.cost)});
        w.close();
        fs::rename(tmp, run.report_csv());
    }

    std::ostringstream text;
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %14s %14s %12s %14s %6s\n", "parameter",
                  "sd_reduction", "pct_explained", "evppi_abs", "bootstrap_se", "cost");
    text << line;
    for (const auto& row : ordered) {
        std::snprintf(line, sizeof(line), "%-14s %14.4g %14.4g %12.4g %14.4g %6.3g\n",
                      row.parameter.c_str(), row.sd_reduction, row.pct_explained, row.evppi_abs,
                      row.bootstrap_se, row.cost);
        text << line;
    }
    text << "\n" << kPerfectInformationCaveat << "\n";
    if (fs::exists(run.selection())) {
        std::ifstream in(run.selection());
        nlohmann::json sel = nlohmann::json::parse(in);
        text << "\nselected for research (budget " << sel.at("budget").get<double>()
             << " person-days):";
        for (const auto& s : sel.at("selected")) text << " " << s.get<std::string>();
        text << "\n";
    }
    atomic_write_text(run.report_txt(), text.str());

    for (const auto& [param, plan] : config.updates) write_density_csv(config, run, param);
}

void run_pipeline(const ProjectConfig& config, const RunDir& run) {
    run.ensure_exists();
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    std::ostringstream log;

    simulate_step(config, run, false);
    log << "simulate: R=" << config.samples << " seed=" << config.seed << "\n";

    evppi_step(config, run, false);
    log << "evppi: report written\n";

    const Selection sel = prioritize_step(config, run);
    if (sel.nothing_worthwhile)
        log << "prioritize: no parameter has positive EVPPI; no research worthwhile\n";
    else {
        log << "prioritize: selected";
        for (const auto& s : sel.selected) log << " " << s;
        log << " (cost " << sel.total_cost << " of " << sel.budget << ")\n";
    }

    std::vector<std::string> updated_params;
    for (const auto& name : sel.selected) {
        if (!config.updates.count(name)) {
            log << "update: no plan for '" << name << "', skipping\n";
            continue;
        }
        update_step(config, run, name);
        updated_params.push_back(name);
        log << "update: posterior written for '" << name << "'\n";
    }

    if (!updated_params.empty()) {
        simulate_step(config, run, true);
        evppi_step(config, run, true);
        log << "re-simulate: posteriors fed back for";
        for (const auto& s : updated_params) log << " " << s;
        log << "\n";
    }

    report_step(config, run);
    log << "report: written\n";

    nlohmann::json manifest{{"version", kVoiVersion},
                            {"seed", config.seed},
                            {"samples", config.samples},
                            {"scenario", config.scenario},
                            {"config_hash", config_file_hash(config.config_path)},
                            {"updated_parameters", updated_params}};
    std::vector<std::string> artifacts;
    for (const auto& entry : fs::directory_iterator(run.dir)) {
        const std::string name = entry.path().filename().string();
        if (name != "manifest.json" && name != "log.txt") artifacts.push_back(name);
    }
    std::sort(artifacts.begin(), artifacts.end());
    manifest["artifacts"] = artifacts;
    atomic_write_json(run.manifest(), manifest);

    log << "done in " << elapsed() << " s\n";
    append_log(run, log.str());
}

} // namespace voi
