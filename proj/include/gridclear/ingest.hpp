#pragma once

#include <map>
#include <string>
#include <vector>

#include "gridclear/market.hpp"

namespace gridclear::ingest {

/// config.json contents; defaults apply to absent keys.
struct Config {
    double margin = 0.20;
    double interconnector_fraction = 0.8;
    double mip_gap = 0.05;
    double voll_eur_mwh = 3000.0;
    double price_cap_eur_mwh = 100.0;
    std::string redispatch_flow_cap = "zonal_flows";  // or "physical"
};

Config load_config(const std::string& path);

struct LoadedInstance {
    market::MarketInstance instance;
    Config config;
    grid::ValidationReport report;
};

/// Loads nodes.csv, lines.csv, generators.csv, demand.csv and, when present,
/// zones.csv and config.json from a directory. Parallel lines are merged by
/// summing susceptances and limits. Throws std::runtime_error naming the
/// file/row/column on schema or referential failures.
LoadedInstance load_instance(const std::string& dir);

/// Writes the instance back out in the same schemas; load_instance on the
/// result reproduces the instance field by field.
void write_instance(const market::MarketInstance& instance, const Config& config,
                    const std::string& dir);

/// Splits a national hourly profile across nodes in proportion to base load.
std::vector<market::DemandSeries> disaggregate_demand(
    const std::vector<double>& national_profile,
    const std::vector<std::pair<std::string, double>>& base_loads);

/// Splits an aggregate hourly output across a fleet in proportion to nominal
/// capacity; returns per-unit hourly maximum output.
std::vector<std::vector<double>> scale_renewables(const std::vector<double>& aggregate_output,
                                                  const std::vector<double>& capacities);

struct MappingUnit {
    std::string id;
    double capacity_mw = 0.0;
};

struct MappingCategory {
    std::string id;
    double target_capacity_mw = 0.0;
    int target_count = 0;
};

struct MappingType {
    std::string id;
    std::vector<MappingUnit> units;
    std::vector<MappingCategory> categories;
};

struct UnitMappingProblem {
    std::vector<MappingType> types;
    std::vector<MappingUnit> free_pool;  // units matchable to any category
    double capacity_dev_bound_mw = 600.0;
    int count_dev_bound = 2;
};

struct CategoryDeviation {
    std::string category_id;
    double capacity_mw = 0.0;  // target minus assigned, in [0, bound]
    int count = 0;             // target minus assigned, in [0, bound]
};

struct UnitAssignment {
    std::map<std::string, std::string> unit_category;
    std::vector<CategoryDeviation> deviations;  // ordered as the input categories
    double objective = 0.0;
};

/// Assigns every unit to one category of its own type (free-pool units may go
/// anywhere or stay unassigned), bounding per-category capacity and count
/// deviations, minimizing count-weighted capacity deviation plus
/// capacity-weighted count deviation. Throws with the binding categories when
/// no assignment fits the bounds.
UnitAssignment map_units(const UnitMappingProblem& problem, double gap);

struct SyntheticOptions {
    double congestion_level = 0.5;  // 0: limits cover total capacity
    int max_uptime = 0;             // 0: up to the horizon
    double margin = 0.20;           // sizing reference for decongested limits
};

/// Deterministic per seed; the result validates and total capacity covers peak
/// demand.
market::MarketInstance gen_synthetic(unsigned seed, int nodes, int sellers, int hours,
                                     const SyntheticOptions& opts = {});

}  // namespace gridclear::ingest
