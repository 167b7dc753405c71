#include "gridclear/euphemia.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gridclear::euphemia {

namespace {

constexpr double kUtilityTol = 1e-6;

}  // namespace

EuphemiaResult run_euphemia(const market::MarketInstance& instance, const grid::ZoneMap* zones,
                            double gap, int max_iters, double interconnector_fraction) {
    instance.validate();
    const bool zonal = zones != nullptr && zones->zone_count > 1;
    const int S = static_cast<int>(instance.sellers.size());
    const int T = instance.horizon;

    EuphemiaResult res;
    double base_objective = 0.0;
    for (res.iterations = 1;; ++res.iterations) {
        clearing::ClearingOptions extra;
        extra.forced_off = res.cuts;
        res.outcome = zonal ? clearing::clear_zonal(instance, *zones, interconnector_fraction,
                                                    gap, extra)
                            : clearing::clear_national(instance, gap, extra);
        if (res.iterations == 1) base_objective = res.outcome.objective;
        res.prices = pricing::ip_prices(instance, res.outcome);
        res.prices.rule = "euphemia";
        res.settlement = pricing::settle(instance, res.outcome, res.prices);

        // Paradoxically accepted sellers: committed somewhere yet losing money
        // at the published uniform prices.
        std::vector<int> losers;
        for (int s = 0; s < S; ++s) {
            const auto& ps = res.settlement.participants[s];
            bool committed = false;
            for (int c : res.outcome.schedule.sellers[s].commitment) committed |= c != 0;
            if (committed && ps.utility < -kUtilityTol) losers.push_back(s);
        }
        if (losers.empty()) break;
        if (res.iterations >= max_iters) {
            res.hit_max_iters = true;
            break;
        }
        for (int s : losers)
            for (int t = 0; t < T; ++t)
                if (res.outcome.schedule.sellers[s].commitment[t] == 1)
                    res.cuts.emplace_back(s, t);
    }
    res.welfare_loss = res.outcome.objective - base_objective;

    // Paradoxically rejected sellers: fully off at termination but with a
    // profitable best response at the final prices.
    for (int s = 0; s < S; ++s) {
        bool off = true;
        for (int c : res.outcome.schedule.sellers[s].commitment) off &= c == 0;
        if (!off) continue;
        if (res.settlement.participants[s].gloc > kUtilityTol)
            res.paradoxically_rejected.push_back(instance.sellers[s].seller_id);
    }

    // Optional sanity report: cross-zonal power should flow toward the higher
    // price.
    if (zonal && res.outcome.kind == clearing::ConfigKind::Zonal) {
        const grid::Network& net = instance.network;
        for (int l : grid::cross_zonal_lines(net, *zones)) {
            const grid::Line& line = net.lines()[l];
            for (int t = 0; t < T; ++t) {
                double f = res.outcome.flows[l][t];
                if (std::abs(f) < 1e-6) continue;
                double p_from = pricing::node_price(instance, res.outcome, res.prices, line.from, t);
                double p_to = pricing::node_price(instance, res.outcome, res.prices, line.to, t);
                double spread = f > 0 ? p_to - p_from : p_from - p_to;
                if (spread < -kUtilityTol) {
                    std::ostringstream msg;
                    msg << "line " << line.from << "-" << line.to << " hour " << t
                        << ": flow " << f << " MW runs toward the lower-priced zone";
                    res.flow_warnings.push_back(msg.str());
                }
            }
        }
    }
    return res;
}

}  // namespace gridclear::euphemia
