#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridclear/grid.hpp"
#include "gridclear/lp.hpp"
#include "gridclear/market.hpp"

namespace gridclear::clearing {

enum class ConfigKind { National, Zonal, Nodal };

std::string config_tag(ConfigKind kind, int zone_count);

struct ClearingOptions {
    double gap = 0.05;
    double interconnector_fraction = 0.8;           // zonal only
    std::optional<double> margin_override;          // per-run security margin
    bool relax_commitment = false;                  // u, phi in [0,1]
    const std::vector<std::vector<int>>* fixed_commitment = nullptr;  // [seller][hour]
    std::vector<std::pair<int, int>> forced_off;    // (seller, hour) cuts: u = 0
    bool deterministic_tie_break = true;            // lexicographic second stage at gap 0
};

/// Clearing LP/MILP together with the index maps needed to read solutions and
/// balance-row duals back out.
struct ClearingModel {
    lp::LinearProgram lp;
    ConfigKind kind = ConfigKind::National;
    std::vector<std::string> locations;         // node ids / zone ids / {"national"}
    std::vector<std::vector<int>> y, u, phi;    // [seller][hour] variable indices
    std::vector<std::vector<int>> unserved;     // [buyer][hour]
    std::vector<std::vector<int>> theta;        // [node][hour], -1 when absent
    std::vector<std::vector<int>> balance_row;  // [location][hour] row indices
    std::vector<int> capped_lines;              // lines with flow caps (zonal: cross-zonal)
};

ClearingModel build_model(const market::MarketInstance& instance, ConfigKind kind,
                          const grid::ZoneMap* zones, const ClearingOptions& opts);

struct MarketOutcome {
    ConfigKind kind = ConfigKind::National;
    int zone_count = 0;
    std::optional<grid::ZoneMap> zones;             // zonal runs only
    double interconnector_fraction = 1.0;
    std::optional<double> margin_override;
    market::Schedule schedule;
    std::vector<std::vector<double>> angles;        // [node][hour]; empty for national
    std::vector<std::vector<double>> flows;         // [line][hour]; zonal: cross-zonal only
    std::vector<std::vector<double>> served;        // [buyer][hour]
    std::vector<std::vector<double>> unserved;      // [buyer][hour]
    double objective = 0.0;                         // generation + VOLL * unserved
    double generation_cost = 0.0;                   // excludes the VOLL penalty
    double total_unserved = 0.0;
    double achieved_gap = 0.0;

    std::string tag() const { return config_tag(kind, zone_count); }
};

MarketOutcome clear_national(const market::MarketInstance& instance, double gap,
                             const ClearingOptions& extra = {});
MarketOutcome clear_zonal(const market::MarketInstance& instance, const grid::ZoneMap& zones,
                          double interconnector_fraction, double gap,
                          const ClearingOptions& extra = {});
MarketOutcome clear_nodal(const market::MarketInstance& instance, double gap,
                          const ClearingOptions& extra = {});

/// Reads a solved primal vector back into an outcome. Exposed for the
/// redispatch and pricing modules.
MarketOutcome extract_outcome(const market::MarketInstance& instance, const ClearingModel& model,
                              const lp::SolveResult& result, const ClearingOptions& opts,
                              const grid::ZoneMap* zones);

}  // namespace gridclear::clearing
