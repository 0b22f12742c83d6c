#ifndef VOI_PIPELINE_HPP
#define VOI_PIPELINE_HPP

#include <filesystem>
#include <string>

#include "voi/bayes.hpp"
#include "voi/config.hpp"
#include "voi/prioritize.hpp"

namespace voi {

inline constexpr const char* kVoiVersion = "0.1.0";

// Artifact layout of one run directory.
struct RunDir {
    std::filesystem::path dir;

    std::filesystem::path samples(bool updated = false) const {
        return dir / (updated ? "samples_updated.csv" : "samples.csv");
    }
    std::filesystem::path summary(bool updated = false) const {
        return dir / (updated ? "summary_updated.json" : "summary.json");
    }
    std::filesystem::path evppi_report(bool updated = false) const {
        return dir / (updated ? "evppi_report_updated.csv" : "evppi_report.csv");
    }
    std::filesystem::path selection() const { return dir / "selection.json"; }
    std::filesystem::path posterior(const std::string& param) const {
        return dir / ("posterior_" + param + ".csv");
    }
    std::filesystem::path diagnostics(const std::string& param) const {
        return dir / ("diagnostics_" + param + ".json");
    }
    std::filesystem::path manifest() const { return dir / "manifest.json"; }
    std::filesystem::path report_txt() const { return dir / "report.txt"; }
    std::filesystem::path report_csv() const { return dir / "report.csv"; }
    std::filesystem::path density(const std::string& param) const {
        return dir / ("density_" + param + ".csv");
    }
    std::filesystem::path log() const { return dir / "log.txt"; }

    void ensure_exists() const;
};

// Individual pipeline steps; each writes its artifacts atomically into the
// run directory. simulate/evppi with updated=true use any posterior pools
// already present in the directory in place of the configured priors.
void simulate_step(const ProjectConfig& config, const RunDir& run, bool updated = false);
void evppi_step(const ProjectConfig& config, const RunDir& run, bool updated = false,
                const std::filesystem::path& losses_csv = {});
void update_step(const ProjectConfig& config, const RunDir& run, const std::string& param);
Selection prioritize_step(const ProjectConfig& config, const RunDir& run);
void report_step(const ProjectConfig& config, const RunDir& run);

// The full loop: simulate, estimate EVPPI, select research under the
// budget, update the selected parameters that have update plans, re-run
// with posteriors, report, and write the manifest.
void run_pipeline(const ProjectConfig& config, const RunDir& run);

} // namespace voi

#endif // VOI_PIPELINE_HPP
