#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridclear/stats.hpp"
#include "testutil.hpp"

using namespace gridclear;
using namespace gridclear::stats;

namespace {

pricing::PriceSurface nodal_surface(std::vector<std::string> locs,
                                    std::vector<std::vector<double>> prices) {
    pricing::PriceSurface s;
    s.kind = clearing::ConfigKind::Nodal;
    s.locations = std::move(locs);
    s.prices = std::move(prices);
    s.rule = "test";
    return s;
}

}  // namespace

TEST_CASE("basic series statistics") {
    auto st = price_stats({10.0, 30.0}, 1000.0);
    CHECK(st.mean == doctest::Approx(20.0));
    CHECK(st.median == doctest::Approx(20.0));
    CHECK(st.std_dev == doctest::Approx(10.0));
    CHECK(st.outlier_count == 0);
    CHECK(st.count == 2);

    auto odd = price_stats({3.0, 1.0, 2.0}, 1000.0);
    CHECK(odd.median == doctest::Approx(2.0));
}

TEST_CASE("prices above the cap are clipped and counted") {
    auto st = price_stats({50.0, 150.0}, 100.0);
    CHECK(st.mean == doctest::Approx(75.0));
    CHECK(st.outlier_count == 1);
    // A price exactly at the cap is not an outlier.
    CHECK(price_stats({100.0}, 100.0).outlier_count == 0);
}

TEST_CASE("an empty series is rejected") {
    CHECK_THROWS_AS(price_stats(std::vector<double>{}, 100.0), std::invalid_argument);
}

TEST_CASE("uniform surfaces have no variability") {
    auto s = nodal_surface({"A", "B"}, {{25.0, 25.0}, {25.0, 25.0}});
    auto vd = variance_decomposition(s);
    for (double v : vd.congestion_std) CHECK(v == doctest::Approx(0.0));
    for (double v : vd.time_std) CHECK(v == doctest::Approx(0.0));
    auto st = price_stats(s, 100.0);
    CHECK(st.std_dev == doctest::Approx(0.0));
    CHECK(st.mean == doctest::Approx(25.0));
}

TEST_CASE("congested single hour shows up as across-node spread") {
    auto s = nodal_surface({"A", "B"}, {{10.0}, {30.0}});
    auto vd = variance_decomposition(s);
    REQUIRE(vd.congestion_std.size() == 1);
    CHECK(vd.congestion_std[0] == doctest::Approx(10.0));
    CHECK(vd.time_std[0] == doctest::Approx(0.0));
    CHECK(vd.time_std[1] == doctest::Approx(0.0));
}

TEST_CASE("two-hour surface separates space and time components") {
    auto s = nodal_surface({"A", "B"}, {{10.0, 20.0}, {30.0, 20.0}});
    auto vd = variance_decomposition(s);
    CHECK(vd.congestion_std[0] == doctest::Approx(10.0));
    CHECK(vd.congestion_std[1] == doctest::Approx(0.0));
    CHECK(vd.time_std[0] == doctest::Approx(5.0));
    CHECK(vd.time_std[1] == doctest::Approx(5.0));

    grid::ZoneMap z;
    z.zone_count = 2;
    z.node_zone = {{"A", "Z1"}, {"B", "Z2"}};
    auto zoned = variance_decomposition(s, &z);
    // Single-node zones have no internal spread but keep their hourly swing.
    CHECK(zoned.zone_congestion_mean.at("Z1") == doctest::Approx(0.0));
    CHECK(zoned.zone_congestion_mean.at("Z2") == doctest::Approx(0.0));
    CHECK(zoned.zone_time_mean.at("Z1") == doctest::Approx(5.0));
    CHECK(zoned.zone_time_mean.at("Z2") == doctest::Approx(5.0));

    grid::ZoneMap one;
    one.zone_count = 1;
    one.node_zone = {{"A", "Z"}, {"B", "Z"}};
    auto single = variance_decomposition(s, &one);
    CHECK(single.zone_congestion_mean.at("Z") == doctest::Approx(5.0));
    CHECK(single.zone_time_mean.at("Z") == doctest::Approx(5.0));
}

TEST_CASE("non-nodal surfaces are rejected") {
    pricing::PriceSurface s;
    s.kind = clearing::ConfigKind::National;
    s.locations = {"national"};
    s.prices = {{20.0}};
    CHECK_THROWS_AS(variance_decomposition(s), std::invalid_argument);
}
