#pragma once

#include <string>
#include <vector>

#include "gridclear/clearing.hpp"

namespace gridclear::redispatch {

enum class FlowCapMode { ZonalFlows, Physical };

struct RedispatchResult {
    market::Schedule schedule;
    std::vector<std::vector<double>> angles;  // [node][hour]
    std::vector<std::vector<double>> flows;   // [line][hour]
    double redispatch_cost = 0.0;             // sum_s |c_s(y) - c_s(y_base)|
    double redispatch_volume = 0.0;           // sum_s sum_t |y - y_base|
    std::vector<double> up_mwh;               // per seller
    std::vector<double> down_mwh;
    FlowCapMode mode = FlowCapMode::ZonalFlows;
    double achieved_gap = 0.0;
};

/// DCOPF-feasible adjustment of a zonal/national outcome at minimal
/// compensation cost; volume is the lexicographic tie-break.
RedispatchResult redispatch_min_cost(const market::MarketInstance& instance,
                                     const clearing::MarketOutcome& base, FlowCapMode mode,
                                     double gap);

/// Minimal adjustment volume; cost is evaluated (and tie-broken) second.
RedispatchResult redispatch_min_volume(const market::MarketInstance& instance,
                                       const clearing::MarketOutcome& base, FlowCapMode mode,
                                       double gap);

struct LineViolation {
    int line = -1;
    int hour = -1;
    double flow_mw = 0.0;
    double limit_mw = 0.0;
};

struct BalanceViolation {
    std::string node_id;
    int hour = -1;
    double residual_mw = 0.0;
};

struct FeasibilityReport {
    std::vector<LineViolation> line_violations;
    std::vector<BalanceViolation> balance_violations;
    bool feasible() const { return line_violations.empty() && balance_violations.empty(); }
};

/// Report-only DCOPF check of an outcome against the configured margin.
/// Outcomes without angles are projected onto the DC equations first.
FeasibilityReport feasibility_check(const market::MarketInstance& instance,
                                    const clearing::MarketOutcome& outcome);

}  // namespace gridclear::redispatch
