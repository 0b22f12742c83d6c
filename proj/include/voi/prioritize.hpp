#ifndef VOI_PRIORITIZE_HPP
#define VOI_PRIORITIZE_HPP

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "voi/evppi.hpp"

namespace voi {

struct ResearchItem {
    double cost = 0; // person-days
    std::string kind; // literature+modelling | primary data collection | elicitation
    std::string notes;
};

using ResearchCatalog = std::map<std::string, ResearchItem>;

// Caveat attached to every selection report: learning a parameter exactly
// is the ceiling, real research yields less.
extern const char* kPerfectInformationCaveat;

struct Selection {
    std::vector<std::string> selected;      // greedy pick, ratio order
    double total_cost = 0;
    double variance_reduction_bound = 0;    // sum of selected EVPPI (upper bound)
    double budget = 0;
    bool nothing_worthwhile = false;        // all EVPPI zero
    // Exact knapsack cross-check on small catalogs (<= 15 ranked params).
    bool exact_check_ran = false;
    double exact_optimum = 0;
    double greedy_gap = 0;                  // exact_optimum - greedy value, >= 0
    std::vector<std::string> exact_selected;

    nlohmann::json to_json() const;
};

// Greedy selection by EVPPI/cost ratio under the budget; ties broken by
// larger EVPPI, then name order. Every ranked parameter must appear in the
// catalog with cost > 0.
Selection prioritize(const std::vector<EvppiEstimate>& ranked, const ResearchCatalog& catalog,
                     double budget);

} // namespace voi

#endif // VOI_PRIORITIZE_HPP
