#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridclear/grid.hpp"
#include "gridclear/lp.hpp"

namespace gridclear::market {

struct DemandSeries {
    std::string buyer_id;
    std::string node_id;
    std::vector<double> load_mwh;  // fixed profile per hour, >= 0
};

struct GeneratorOffer {
    std::string seller_id;
    std::string node_id;
    double p_min = 0.0;             // MW, >= 0
    std::vector<double> p_max;      // per hour (time-varying for renewables)
    int min_uptime = 1;             // hours, >= 1
    double var_cost = 0.0;          // EUR/MWh
    double fixed_cost = 0.0;        // EUR per committed hour

    double p_max_at(int t) const { return p_max.size() == 1 ? p_max[0] : p_max.at(t); }
};

struct MarketInstance {
    grid::Network network;
    std::optional<grid::ZoneMap> zones;
    std::vector<DemandSeries> buyers;
    std::vector<GeneratorOffer> sellers;
    int horizon = 0;
    double voll = 3000.0;  // EUR/MWh on unserved energy

    void validate() const;  // throws std::invalid_argument
    double total_demand(int hour) const;
    int seller_index(const std::string& id) const;
};

struct SellerSchedule {
    std::vector<double> dispatch;  // MWh per hour
    std::vector<int> commitment;   // {0,1} per hour
    std::vector<int> startup;      // {0,1} per hour
};

struct Schedule {
    std::vector<SellerSchedule> sellers;
};

/// Rows of the unit-commitment polytope over previously created columns.
/// Units start offline before the first hour; the first hour carries no
/// startup-linking constraint.
std::vector<lp::Row> build_uc_constraints(const GeneratorOffer& offer, int horizon,
                                          const std::vector<int>& y_vars,
                                          const std::vector<int>& u_vars,
                                          const std::vector<int>& phi_vars);

/// Names the first violated polytope row, or nullopt when feasible.
std::optional<std::string> check_schedule(const GeneratorOffer& offer, const SellerSchedule& s,
                                          double tol = 1e-6);

/// Sum of variable and committed-hour fixed costs. Rejects schedules outside
/// the generator's polytope.
double cost_of(const GeneratorOffer& offer, const SellerSchedule& schedule);

}  // namespace gridclear::market
