#include "voi/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "voi/errors.hpp"

namespace voi {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& file) {
    std::filesystem::path p = file;
    return p.is_relative() ? base / p : p;
}

} // namespace

ProjectConfig ProjectConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    nlohmann::json j;
    nlohmann::ordered_json ordered;
    try {
        j = nlohmann::json::parse(text);
        ordered = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }

    ProjectConfig cfg;
    cfg.config_path = path;
    cfg.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

    try {
        const auto& tables = j.at("tables");
        cfg.travel_csv = resolve(cfg.base_dir, tables.at("travel").get<std::string>());
        cfg.population_csv = resolve(cfg.base_dir, tables.at("population").get<std::string>());
        cfg.burden_csv = resolve(cfg.base_dir, tables.at("burden").get<std::string>());

        if (j.at("curves").is_string())
            cfg.curves_csv = resolve(cfg.base_dir, j.at("curves").get<std::string>());
        else
            cfg.curves_json = j.at("curves");

        cfg.baseline = j.value("baseline", std::string("baseline"));
        cfg.scenario = j.at("scenario").get<std::string>();

        if (j.contains("outputs")) {
            for (const auto& o : j.at("outputs"))
                cfg.outputs.push_back({o.at("column").get<std::string>(), o.value("weight", 1.0)});
        } else {
            cfg.outputs.push_back({"deaths_averted[" + cfg.scenario + "]", 1.0});
        }

        if (!j.contains("parameters") || !j.at("parameters").is_object())
            throw ConfigError("config: missing 'parameters' object");
        for (const auto& [name, dist_json] : ordered.at("parameters").items()) {
            // Re-parse through the unordered type for Distribution::from_json.
            const nlohmann::json dj = nlohmann::json::parse(dist_json.dump());
            cfg.parameters.emplace_back(name, Distribution::from_json(dj, cfg.base_dir));
        }

        cfg.samples = j.value("samples", std::size_t{5000});
        cfg.seed = j.value("seed", std::uint64_t{1});
        cfg.threads = j.value("threads", 0);
        cfg.budget = j.value("budget", 0.0);

        if (j.contains("catalog")) {
            for (const auto& [name, item] : j.at("catalog").items()) {
                ResearchItem r;
                r.cost = item.at("cost").get<double>();
                r.kind = item.value("kind", std::string());
                r.notes = item.value("notes", std::string());
                if (!(r.cost > 0))
                    throw ConfigError("config: catalog cost for '" + name + "' must be > 0");
                cfg.catalog[name] = std::move(r);
            }
        }

        if (j.contains("updates")) {
            for (const auto& [name, u] : j.at("updates").items()) {
                UpdatePlan plan;
                plan.method = u.at("method").get<std::string>();
                if (plan.method != "meta" && plan.method != "hier")
                    throw ConfigError("config: update method for '" + name +
                                      "' must be 'meta' or 'hier'");
                plan.data_file = resolve(cfg.base_dir, u.at("data").get<std::string>());
                plan.country = u.value("country", std::string());
                plan.region = u.value("region", std::string());
                if (u.contains("prior_tau"))
                    plan.prior_tau = Distribution::from_json(u.at("prior_tau"), cfg.base_dir);
                if (plan.method == "hier" && plan.country.empty())
                    throw ConfigError("config: hierarchical update for '" + name +
                                      "' needs a 'country'");
                cfg.updates[name] = std::move(plan);
            }
        }

        if (j.contains("mcmc")) {
            const auto& m = j.at("mcmc");
            cfg.mcmc.chains = m.value("chains", 4);
            cfg.mcmc.iterations = m.value("iterations", 5000);
        }
        cfg.mcmc.seed = cfg.seed;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }

    // Validate the parameter assignment: every model input must be covered.
    std::set<std::string> given;
    for (const auto& [name, dist] : cfg.parameters) given.insert(name);
    std::vector<std::string> required = {"eta", "zeta", "lambda_walk", "lambda_cycle"};
    for (int d = 0; d < kNumDiseases; ++d)
        required.push_back(std::string("xi_") + disease_label(static_cast<Disease>(d)));
    for (const auto& name : required)
        if (!given.count(name))
            throw ConfigError("config: no distribution assigned to parameter '" + name + "'");
    const bool has_alpha = given.count("alpha") > 0;
    bool has_alpha_fixed = true;
    for (const auto& col : parameter_columns("alpha"))
        if (!given.count(col)) has_alpha_fixed = false;
    if (!has_alpha && !has_alpha_fixed)
        throw ConfigError("config: assign 'alpha' (dirichlet) or all four fixed alpha entries");

    for (const auto& [name, w] : cfg.outputs)
        if (w < 0) throw ConfigError("config: negative output weight for '" + name + "'");

    // The declared scenario (and baseline) must exist; loading the tables
    // enforces the rest of the schema.
    const ConstantTables tables = cfg.load_tables();
    tables.scenario_index(cfg.scenario);

    return cfg;
}

ConstantTables ProjectConfig::load_tables() const {
    return ConstantTables::from_csv(travel_csv, population_csv, burden_csv, baseline);
}

CurveSet ProjectConfig::load_curves() const {
    if (curves_json) return CurveSet::from_json(*curves_json);
    return CurveSet::from_csv(curves_csv);
}

PriorMap ProjectConfig::prior_map() const {
    PriorMap m;
    for (const auto& [name, dist] : parameters) m.emplace(name, dist);
    return m;
}

OutputWeights ProjectConfig::output_weights() const {
    OutputWeights w;
    for (const auto& o : outputs) w.emplace_back(o.column, o.weight);
    return w;
}

std::vector<ParameterGroup> ProjectConfig::evppi_groups() const {
    std::vector<ParameterGroup> groups;
    for (const auto& [name, dist] : parameters) {
        if (dist.is_constant()) continue;
        if (name == "alpha") {
            groups.push_back({"alpha", {"alpha[bus]", "alpha[car]", "alpha[motorbike]"}});
        } else if (name.rfind("alpha[", 0) == 0) {
            continue; // fixed simplex entries carry no uncertainty
        } else {
            groups.push_back({name, {name}});
        }
    }
    return groups;
}

std::vector<std::string> ProjectConfig::report_order() const {
    std::vector<std::string> order;
    for (const auto& g : evppi_groups()) order.push_back(g.name);
    return order;
}

const Distribution& ProjectConfig::parameter(const std::string& name) const {
    for (const auto& [n, d] : parameters)
        if (n == name) return d;
    throw ConfigError("config: no parameter '" + name + "'");
}

bool ProjectConfig::has_parameter(const std::string& name) const {
    for (const auto& [n, d] : parameters)
        if (n == name) return true;
    return false;
}

std::string config_file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

} // namespace voi
