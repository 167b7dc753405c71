#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridclear/grid.hpp"
#include "testutil.hpp"

using namespace gridclear::grid;

TEST_CASE("dc flows follow B * angle difference") {
    Network net({{"n", {}, {}}, {"m", {}, {}}}, {{"n", "m", 10.0, 100.0}}, 0.0);
    CHECK(dc_flows(net, {{0.3}, {0.3}})[0][0] == doctest::Approx(0.0));
    CHECK(dc_flows(net, {{0.5}, {0.0}})[0][0] == doctest::Approx(5.0));
    // Antisymmetry: swapping the angle roles negates the flow.
    CHECK(dc_flows(net, {{0.0}, {0.5}})[0][0] == doctest::Approx(-5.0));
}

TEST_CASE("dc flows reject missing angles") {
    Network net({{"n", {}, {}}, {"m", {}, {}}}, {{"n", "m", 10.0, 100.0}}, 0.0);
    CHECK_THROWS_WITH_AS(dc_flows(net, {{0.5}}), doctest::Contains("m"), std::invalid_argument);
}

TEST_CASE("cross-zonal line selection") {
    auto inst = testutil::make_exb();
    ZoneMap one;
    one.zone_count = 1;
    for (const auto& n : inst.network.nodes()) one.node_zone[n.id] = "Z";
    CHECK(cross_zonal_lines(inst.network, one).empty());

    auto two = testutil::exb_zones2();
    auto lines2 = cross_zonal_lines(inst.network, two);
    REQUIRE(lines2.size() == 2);
    CHECK(inst.network.lines()[lines2[0]].from == "v3");
    CHECK(inst.network.lines()[lines2[1]].from == "v4");

    auto three = testutil::exb_zones3();
    CHECK(cross_zonal_lines(inst.network, three).size() == 2);
    // Z1 and Z2 trade only over (v3,v5): 50 MW between them.
    int l = cross_zonal_lines(inst.network, three)[0];
    CHECK(inst.network.lines()[l].limit_mw == doctest::Approx(50.0));
}

TEST_CASE("validation reports components and structural errors") {
    auto inst = testutil::make_exb();
    auto report = validate_network(inst.network.nodes(), inst.network.lines());
    CHECK(report.error_count() == 0);
    REQUIRE(report.components.size() == 4);

    auto bad = validate_network({{"a", {}, {}}}, {{"a", "ghost", 1.0, 10.0}});
    CHECK(bad.error_count() > 0);

    auto dup = validate_network({{"a", {}, {}}, {"a", {}, {}}}, {});
    CHECK(dup.error_count() > 0);

    auto neg = validate_network({{"a", {}, {}}, {"b", {}, {}}}, {{"a", "b", -1.0, 10.0}});
    CHECK(neg.error_count() > 0);

    auto par = validate_network({{"a", {}, {}}, {"b", {}, {}}},
                                {{"a", "b", 1.0, 10.0}, {"b", "a", 1.0, 10.0}});
    CHECK(par.error_count() > 0);
}

TEST_CASE("network construction rejects invalid input") {
    CHECK_THROWS_AS(Network({{"a", {}, {}}}, {{"a", "a", 1.0, 10.0}}), std::invalid_argument);
}

TEST_CASE("effective limits apply the security margin") {
    Network net({{"a", {}, {}}, {"b", {}, {}}}, {{"a", "b", 1.0, 100.0}}, 0.20);
    CHECK(net.effective_limit(0) == doctest::Approx(80.0));
    CHECK(net.effective_limit(0, 0.0) == doctest::Approx(100.0));
    CHECK(net.effective_limit(0, 0.5) == doctest::Approx(50.0));
}

TEST_CASE("zone map validation") {
    auto inst = testutil::make_ex2n();
    ZoneMap z;
    z.zone_count = 2;
    z.node_zone = {{"A", "Z1"}};  // B unmapped
    CHECK_THROWS_AS(z.validate(inst.network), std::invalid_argument);
    z.node_zone["B"] = "Z2";
    CHECK_NOTHROW(z.validate(inst.network));
    z.zone_count = 3;  // no member for the third zone
    CHECK_THROWS_AS(z.validate(inst.network), std::invalid_argument);
}

TEST_CASE("zone ids are sorted and lookups checked") {
    auto z = testutil::exb_zones3();
    auto ids = z.zone_ids();
    REQUIRE(ids.size() == 3);
    CHECK(std::is_sorted(ids.begin(), ids.end()));
    CHECK(z.zone_of("v5") == "Z2");
    CHECK_THROWS_AS(z.zone_of("nope"), std::invalid_argument);
}
