#ifndef VOI_CONFIG_HPP
#define VOI_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "voi/distribution.hpp"
#include "voi/mc.hpp"
#include "voi/mcmc.hpp"
#include "voi/model.hpp"
#include "voi/prioritize.hpp"

namespace voi {

struct OutputSpec {
    std::string column; // e.g. "deaths_averted[sp2040]"
    double weight = 1.0;
};

// How a parameter gets re-estimated once selected for research.
struct UpdatePlan {
    std::string method;               // "meta" | "hier"
    std::filesystem::path data_file;
    std::string country;              // hier: target country
    std::string region;               // hier: region hint when the country has no data
    std::optional<Distribution> prior_tau; // meta: between-study sd prior override
};

// The single project file driving the pipeline. Parameter insertion order
// is preserved and defines the report row order.
struct ProjectConfig {
    std::filesystem::path base_dir;
    std::filesystem::path config_path;

    std::filesystem::path travel_csv, population_csv, burden_csv;
    std::filesystem::path curves_csv;           // tabulated curves...
    std::optional<nlohmann::json> curves_json;  // ...or parametric blocks
    std::string baseline = "baseline";
    std::string scenario;

    std::vector<OutputSpec> outputs;
    std::vector<std::pair<std::string, Distribution>> parameters;

    std::size_t samples = 5000;
    std::uint64_t seed = 1;
    int threads = 0;

    ResearchCatalog catalog;
    double budget = 0;
    std::map<std::string, UpdatePlan> updates;
    McmcConfig mcmc;

    static ProjectConfig load(const std::filesystem::path& path);

    ConstantTables load_tables() const;
    CurveSet load_curves() const;
    PriorMap prior_map() const;
    OutputWeights output_weights() const;
    // EVPPI groups for the non-constant parameters, in config order.
    std::vector<ParameterGroup> evppi_groups() const;
    // Report row order: group names, config order.
    std::vector<std::string> report_order() const;
    const Distribution& parameter(const std::string& name) const;
    bool has_parameter(const std::string& name) const;
};

// FNV-1a 64 over the raw config bytes; recorded in the run manifest.
std::string config_file_hash(const std::filesystem::path& path);

} // namespace voi

#endif // VOI_CONFIG_HPP
