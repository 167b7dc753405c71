#pragma once

// Shared instance builders for the test suite. Margins are zero so the small
// worked examples use full line capacities.

#include <string>
#include <vector>

#include "gridclear/clearing.hpp"
#include "gridclear/market.hpp"

namespace testutil {

using gridclear::grid::Line;
using gridclear::grid::Network;
using gridclear::grid::Node;
using gridclear::grid::ZoneMap;
using gridclear::market::DemandSeries;
using gridclear::market::GeneratorOffer;
using gridclear::market::MarketInstance;

inline GeneratorOffer offer(std::string id, std::string node, double p_min, double p_max,
                            double var_cost, double fixed_cost = 0.0, int uptime = 1) {
    GeneratorOffer g;
    g.seller_id = std::move(id);
    g.node_id = std::move(node);
    g.p_min = p_min;
    g.p_max = {p_max};
    g.var_cost = var_cost;
    g.fixed_cost = fixed_cost;
    g.min_uptime = uptime;
    return g;
}

// Two nodes, one 50 MW line; cheap unit at A, dear unit at B, 80 MWh at B.
inline MarketInstance make_ex2n(double line_limit = 50.0) {
    MarketInstance m{Network({{"A", {}, {}}, {"B", {}, {}}},
                             {{"A", "B", 10.0, line_limit}}, 0.0),
                     {},
                     {{"dB", "B", {80.0}}},
                     {offer("genA", "A", 0.0, 100.0, 10.0),
                      offer("genB", "B", 0.0, 100.0, 30.0)},
                     1,
                     3000.0};
    return m;
}

// One node, one hour, 60 MWh; G2 carries a 100 EUR no-load cost.
inline MarketInstance make_exuc() {
    MarketInstance m{Network({{"N1", {}, {}}}, {}, 0.0),
                     {},
                     {{"d1", "N1", {60.0}}},
                     {offer("G1", "N1", 0.0, 50.0, 10.0),
                      offer("G2", "N1", 0.0, 50.0, 20.0, 100.0)},
                     1,
                     3000.0};
    return m;
}

inline MarketInstance make_exuc3() {
    MarketInstance m = make_exuc();
    m.sellers.push_back(offer("G3", "N1", 0.0, 50.0, 35.0));
    return m;
}

// Six nodes, two lines into v5, 100 MWh demand at v5; v1, v2, v6 isolated.
inline MarketInstance make_exb() {
    MarketInstance m{Network({{"v1", {}, {}},
                              {"v2", {}, {}},
                              {"v3", {}, {}},
                              {"v4", {}, {}},
                              {"v5", {}, {}},
                              {"v6", {}, {}}},
                             {{"v3", "v5", 1.0, 50.0}, {"v4", "v5", 1.0, 100.0}}, 0.0),
                     {},
                     {{"d5", "v5", {100.0}}},
                     {offer("s1", "v1", 0.0, 200.0, 1.0),
                      offer("s2", "v2", 0.0, 200.0, 3.0),
                      offer("s3", "v3", 0.0, 200.0, 2.0),
                      offer("s4", "v4", 0.0, 200.0, 40.0)},
                     1,
                     3000.0};
    return m;
}

inline ZoneMap exb_zones2() {
    ZoneMap z;
    z.zone_count = 2;
    z.node_zone = {{"v1", "Z1"}, {"v2", "Z1"}, {"v3", "Z1"},
                   {"v4", "Z1"}, {"v5", "Z2"}, {"v6", "Z2"}};
    return z;
}

inline ZoneMap exb_zones3() {
    ZoneMap z;
    z.zone_count = 3;
    z.node_zone = {{"v1", "Z1"}, {"v3", "Z1"}, {"v2", "Z3"},
                   {"v4", "Z3"}, {"v5", "Z2"}, {"v6", "Z2"}};
    return z;
}

inline std::string fixture_dir(const std::string& name) {
    return std::string(GRIDCLEAR_TEST_DATA_DIR) + "/" + name;
}

}  // namespace testutil
