#include "gridclear/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gridclear::stats {

namespace {

double population_std(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / v.size());
}

}  // namespace

PriceStats price_stats(const std::vector<double>& series, double cap) {
    if (series.empty()) throw std::invalid_argument("price series is empty");
    PriceStats st;
    std::vector<double> capped;
    for (double v : series) {
        if (v > cap + 1e-9) ++st.outlier_count;
        capped.push_back(std::min(v, cap));
    }
    st.count = static_cast<int>(capped.size());
    st.mean = std::accumulate(capped.begin(), capped.end(), 0.0) / capped.size();
    std::sort(capped.begin(), capped.end());
    std::size_t mid = capped.size() / 2;
    st.median = capped.size() % 2 == 1 ? capped[mid] : 0.5 * (capped[mid - 1] + capped[mid]);
    st.std_dev = population_std(capped);
    return st;
}

PriceStats price_stats(const pricing::PriceSurface& surface, double cap) {
    std::vector<double> flat;
    for (const auto& row : surface.prices) flat.insert(flat.end(), row.begin(), row.end());
    return price_stats(flat, cap);
}

VarianceDecomposition variance_decomposition(const pricing::PriceSurface& surface,
                                             const grid::ZoneMap* zones) {
    if (surface.kind != clearing::ConfigKind::Nodal)
        throw std::invalid_argument("variance decomposition requires a nodal price surface");
    const std::size_t N = surface.locations.size();
    const std::size_t T = N > 0 ? surface.prices[0].size() : 0;

    VarianceDecomposition vd;
    vd.locations = surface.locations;
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> across;
        for (std::size_t n = 0; n < N; ++n) across.push_back(surface.prices[n][t]);
        vd.congestion_std.push_back(population_std(across));
    }
    for (std::size_t n = 0; n < N; ++n) vd.time_std.push_back(population_std(surface.prices[n]));

    if (zones != nullptr) {
        std::map<std::string, std::vector<std::size_t>> members;
        for (std::size_t n = 0; n < N; ++n)
            members[zones->zone_of(surface.locations[n])].push_back(n);
        for (const auto& [zone, idx] : members) {
            std::vector<double> hour_stds;
            for (std::size_t t = 0; t < T; ++t) {
                std::vector<double> across;
                for (std::size_t n : idx) across.push_back(surface.prices[n][t]);
                hour_stds.push_back(population_std(across));
            }
            vd.zone_congestion_mean[zone] =
                hour_stds.empty()
                    ? 0.0
                    : std::accumulate(hour_stds.begin(), hour_stds.end(), 0.0) / hour_stds.size();
            double acc = 0.0;
            for (std::size_t n : idx) acc += vd.time_std[n];
            vd.zone_time_mean[zone] = idx.empty() ? 0.0 : acc / idx.size();
        }
    }
    return vd;
}

}  // namespace gridclear::stats
