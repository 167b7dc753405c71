#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gridclear/ingest.hpp"
#include "gridclear/pricing.hpp"
#include "testutil.hpp"

using namespace gridclear;
using namespace gridclear::pricing;

namespace {

PriceSurface uniform_national(double p) {
    PriceSurface s;
    s.kind = clearing::ConfigKind::National;
    s.locations = {"national"};
    s.prices = {{p}};
    s.rule = "scan";
    return s;
}

}  // namespace

TEST_CASE("marginal pricing leaves the committed dear unit short") {
    auto inst = testutil::make_exuc();
    auto out = clearing::clear_national(inst, 0.0);
    auto ip = ip_prices(inst, out);
    CHECK(ip.at("national", 0) == doctest::Approx(20.0));

    auto s = settle(inst, out, ip);
    CHECK(s.of("G1").utility == doctest::Approx(500.0));
    CHECK(s.of("G1").mwp == doctest::Approx(0.0));
    CHECK(s.of("G2").utility == doctest::Approx(-100.0));
    CHECK(s.of("G2").mwp == doctest::Approx(100.0));
    CHECK(s.of("G2").lloc == doctest::Approx(0.0));
    // The buyer pays 60 MWh at 20.
    CHECK(s.of("d1").revenue == doctest::Approx(-1200.0));
    CHECK(s.of("d1").mwp == doctest::Approx(0.0));
    CHECK(s.of("d1").lloc == doctest::Approx(0.0));
    CHECK(s.of("d1").gloc == doctest::Approx(0.0));
}

TEST_CASE("relaxation pricing folds the no-load cost into the price") {
    auto inst = testutil::make_exuc();
    auto out = clearing::clear_national(inst, 0.0);
    auto ch = ch_prices(inst, out);
    CHECK(ch.at("national", 0) == doctest::Approx(22.0));

    auto s = settle(inst, out, ch);
    // At 22 the dear unit's best response breaks even: running flat out earns
    // 1100 against 1100 of cost, so the -80 it actually makes is all regret.
    CHECK(s.of("G2").utility == doctest::Approx(-80.0));
    CHECK(s.of("G2").mwp == doctest::Approx(80.0));
    CHECK(s.of("G2").gloc == doctest::Approx(80.0));
    CHECK(s.of("G1").gloc == doctest::Approx(0.0));
}

TEST_CASE("join pricing minimizes the uplift functional") {
    auto inst = testutil::make_exuc();
    auto out = clearing::clear_national(inst, 0.0);
    auto join = join_prices(inst, out);
    CHECK(join.at("national", 0) == doctest::Approx(22.0));
    double best = join_functional(inst, out, join);
    CHECK(best == doctest::Approx(80.0));

    // A brute scan over uniform prices never beats the optimizer.
    for (double p = 0.0; p <= 60.0; p += 0.5) {
        double f = join_functional(inst, out, uniform_national(p));
        CHECK(f >= best - 1e-6);
    }
}

TEST_CASE("congestion separates nodal prices") {
    auto inst = testutil::make_ex2n();
    auto out = clearing::clear_nodal(inst, 0.0);
    auto ip = ip_prices(inst, out);
    CHECK(ip.at("A", 0) == doctest::Approx(10.0));
    CHECK(ip.at("B", 0) == doctest::Approx(30.0));
    // The congestion rent matches what the line earns, so the network
    // participant has nothing to regret at these prices.
    CHECK(network_lloc(inst, out, ip) == doctest::Approx(0.0).epsilon(1e-6));

    auto wide = testutil::make_ex2n(200.0);
    auto out2 = clearing::clear_nodal(wide, 0.0);
    auto ip2 = ip_prices(wide, out2);
    CHECK(ip2.at("A", 0) == doctest::Approx(ip2.at("B", 0)));
    CHECK(ip2.at("A", 0) == doctest::Approx(10.0));
}

TEST_CASE("convex instances price cleanly under every rule") {
    auto inst = testutil::make_exb();  // no fixed costs, uptime 1
    auto out = clearing::clear_nodal(inst, 0.0);
    auto ip = ip_prices(inst, out);
    auto ch = ch_prices(inst, out);
    for (const auto& loc : ip.locations)
        CHECK(ip.at(loc, 0) == doctest::Approx(ch.at(loc, 0)));
    // Marginal prices support the dispatch: no one is out of pocket.
    CHECK(join_functional(inst, out, ip) == doctest::Approx(0.0).epsilon(1e-6));
    auto s = settle(inst, out, ip);
    CHECK(s.total_mwp == doctest::Approx(0.0));
    CHECK(s.total_gloc == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("settlement utilities reconcile revenue and cost") {
    auto inst = testutil::make_exuc3();
    auto out = clearing::clear_national(inst, 0.0);
    auto s = settle(inst, out, ch_prices(inst, out));
    for (const auto& p : s.participants) {
        CHECK(p.utility == doctest::Approx(p.revenue - p.cost));
        CHECK(p.gloc >= -1e-9);
        CHECK(p.lloc >= -1e-9);
        CHECK(p.mwp >= -1e-9);
        if (p.is_seller) CHECK(p.mwp == doctest::Approx(std::max(-p.utility, 0.0)));
    }
}

TEST_CASE("join never does worse than the other rules on random instances") {
    for (unsigned seed : {4u, 17u, 23u}) {
        auto inst = ingest::gen_synthetic(seed, 3, 3, 2, {0.5, 1, 0.0});
        auto out = clearing::clear_national(inst, 0.0);
        auto join = join_prices(inst, out);
        double fj = join_functional(inst, out, join);
        CHECK(fj >= -1e-7);
        for (auto* other : {&ip_prices, &ch_prices}) {
            auto surface = (*other)(inst, out);
            CHECK(fj <= join_functional(inst, out, surface) + 1e-6);
        }
    }
}

TEST_CASE("relaxation prices minimize total best-response regret") {
    // With single-hour commitment blocks the relaxation is exactly the convex
    // hull of each seller's feasible set, so its prices minimize total GLOC.
    for (unsigned seed : {6u, 12u}) {
        auto inst = ingest::gen_synthetic(seed, 3, 3, 2, {0.5, 1, 0.0});
        auto out = clearing::clear_national(inst, 0.0);
        auto ch = ch_prices(inst, out);
        auto base = settle(inst, out, ch);
        double gch = base.total_gloc + network_lloc(inst, out, ch);
        for (int k = -4; k <= 4; ++k) {
            if (k == 0) continue;
            PriceSurface bumped = ch;
            for (auto& row : bumped.prices)
                for (auto& v : row) v += 0.7 * k;
            auto s = settle(inst, out, bumped);
            double g = s.total_gloc + network_lloc(inst, out, bumped);
            CHECK(g >= gch - 1e-6);
        }
    }
}
