#pragma once

#include <map>
#include <string>
#include <vector>

#include "gridclear/grid.hpp"
#include "gridclear/pricing.hpp"

namespace gridclear::stats {

struct PriceStats {
    double mean = 0.0;
    double median = 0.0;
    double std_dev = 0.0;  // population
    int outlier_count = 0; // prices above the cap before capping
    int count = 0;
};

/// Mean/median/population std over the series after capping at `cap`.
/// Median of an even-length series is the midpoint of the middle pair.
PriceStats price_stats(const std::vector<double>& series, double cap);

/// Flattens a surface into one series (location-major) and caps it.
PriceStats price_stats(const pricing::PriceSurface& surface, double cap);

struct VarianceDecomposition {
    std::vector<double> congestion_std;        // per hour, across nodes
    std::vector<std::string> locations;        // node ids, order of time_std
    std::vector<double> time_std;              // per node, across hours
    std::map<std::string, double> zone_congestion_mean;  // per zone, hour-averaged
    std::map<std::string, double> zone_time_mean;        // per zone, node-averaged
};

/// Splits nodal price variability into a per-hour across-node component and a
/// per-node across-hour component; zone means when a ZoneMap is supplied.
/// Throws on non-nodal surfaces.
VarianceDecomposition variance_decomposition(const pricing::PriceSurface& surface,
                                             const grid::ZoneMap* zones = nullptr);

}  // namespace gridclear::stats
