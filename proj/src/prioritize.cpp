#include "voi/prioritize.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "voi/errors.hpp"

namespace voi {

const char* kPerfectInformationCaveat =
    "EVPPI is the expected value of perfect information on each parameter; actual research "
    "yields imperfect information, so the reported variance reduction is an upper bound.";

nlohmann::json Selection::to_json() const {
    nlohmann::json j{{"selected", selected},
                     {"total_cost", total_cost},
                     {"budget", budget},
                     {"variance_reduction_bound", variance_reduction_bound},
                     {"bound_is_upper_bound", true},
                     {"nothing_worthwhile", nothing_worthwhile},
                     {"caveat", kPerfectInformationCaveat}};
    if (exact_check_ran) {
        j["exact_check"] = {{"optimum", exact_optimum},
                            {"selected", exact_selected},
                            {"greedy_gap", greedy_gap}};
    }
    return j;
}

Selection prioritize(const std::vector<EvppiEstimate>& ranked, const ResearchCatalog& catalog,
                     double budget) {
    if (catalog.empty()) throw ConfigError("prioritize: empty research catalog");
    if (!(budget > 0)) throw ConfigError("prioritize: budget must be > 0");
    struct Item {
        std::string name;
        double evppi, cost;
    };
    std::vector<Item> items;
    for (const auto& e : ranked) {
        auto it = catalog.find(e.target);
        if (it == catalog.end())
            throw ConfigError("prioritize: parameter '" + e.target + "' missing from catalog");
        if (!(it->second.cost > 0))
            throw ConfigError("prioritize: non-positive cost for '" + e.target + "'");
        items.push_back({e.target, e.evppi, it->second.cost});
    }

    Selection sel;
    sel.budget = budget;

    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        const double ra = a.evppi / a.cost, rb = b.evppi / b.cost;
        if (ra != rb) return ra > rb;
        if (a.evppi != b.evppi) return a.evppi > b.evppi;
        return a.name < b.name;
    });

    double remaining = budget, greedy_value = 0.0;
    for (const auto& item : items) {
        if (item.evppi <= 0.0) continue; // nothing to gain
        if (item.cost <= remaining) {
            sel.selected.push_back(item.name);
            sel.total_cost += item.cost;
            greedy_value += item.evppi;
            remaining -= item.cost;
        }
    }
    sel.variance_reduction_bound = greedy_value;
    sel.nothing_worthwhile = sel.selected.empty();

    // Exact 0/1 knapsack by enumeration on small instances; any greedy gap
    // is reported, never hidden.
    if (items.size() <= 15) {
        sel.exact_check_ran = true;
        const std::size_t n = items.size();
        double best = -1.0;
        unsigned best_mask = 0;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            double cost = 0, value = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i)) {
                    cost += items[i].cost;
                    value += items[i].evppi;
                }
            if (cost <= budget && value > best) {
                best = value;
                best_mask = mask;
            }
        }
        sel.exact_optimum = best;
        for (std::size_t i = 0; i < n; ++i)
            if (best_mask & (1u << i)) sel.exact_selected.push_back(items[i].name);
        sel.greedy_gap = std::max(0.0, best - greedy_value);
    }
    return sel;
}

} // namespace voi
