#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gridclear/pricing.hpp"

namespace gridclear::euphemia {

struct EuphemiaResult {
    clearing::MarketOutcome outcome;
    pricing::PriceSurface prices;       // uniform (national or zonal) final prices
    pricing::Settlement settlement;     // at the final prices
    int iterations = 0;
    std::vector<std::pair<int, int>> cuts;  // (seller, hour) with u forced to 0
    double welfare_loss = 0.0;              // vs the unconstrained clearing
    std::vector<std::string> paradoxically_rejected;  // seller ids
    std::vector<std::string> flow_warnings;  // cross-zonal high-to-low price flows
    bool hit_max_iters = false;
};

/// Iterates clearing and uniform-price settlement, forcing u = 0 on every
/// committed hour of any seller with negative total utility, until no seller
/// needs a make-whole payment or max_iters is reached.
EuphemiaResult run_euphemia(const market::MarketInstance& instance, const grid::ZoneMap* zones,
                            double gap, int max_iters = 200,
                            double interconnector_fraction = 0.8);

}  // namespace gridclear::euphemia
