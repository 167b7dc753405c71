#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridclear/lp.hpp"
#include "gridclear/market.hpp"
#include "testutil.hpp"

using namespace gridclear;
using namespace gridclear::market;

namespace {

SellerSchedule sched(std::vector<double> y, std::vector<int> u, std::vector<int> phi) {
    return {std::move(y), std::move(u), std::move(phi)};
}

}  // namespace

TEST_CASE("uptime one degenerates to startup <= commitment") {
    auto g = testutil::offer("g", "n", 10.0, 50.0, 5.0, 0.0, 1);
    std::vector<int> y{0, 1, 2}, u{3, 4, 5}, phi{6, 7, 8};
    auto rows = build_uc_constraints(g, 3, y, u, phi);
    // per hour: min/max output; for t>0: startup link + one-term window.
    CHECK(rows.size() == 3 * 2 + 2 * 2);
    for (const auto& r : rows)
        if (r.name.find("uptime") != std::string::npos) CHECK(r.entries.size() == 2);
}

TEST_CASE("three-hour uptime forbids early shutdown") {
    auto g = testutil::offer("g", "n", 0.0, 50.0, 5.0, 0.0, 3);
    // Started in hour 1 but off in hour 3: violates the window at t=3.
    auto bad = sched({0, 10, 10, 0}, {0, 1, 1, 0}, {0, 1, 0, 0});
    auto violated = check_schedule(g, bad);
    REQUIRE(violated.has_value());
    CHECK(violated->find("uptime") != std::string::npos);
    CHECK_THROWS_AS(cost_of(g, bad), std::invalid_argument);
    // Running through the end is fine.
    auto ok = sched({0, 10, 10, 10}, {0, 1, 1, 1}, {0, 1, 0, 0});
    CHECK_FALSE(check_schedule(g, ok).has_value());
}

TEST_CASE("commitment boxes dispatch") {
    auto g = testutil::offer("g", "n", 10.0, 50.0, 5.0);
    CHECK_FALSE(check_schedule(g, sched({10}, {1}, {0})).has_value());
    CHECK_FALSE(check_schedule(g, sched({50}, {1}, {0})).has_value());
    CHECK(check_schedule(g, sched({5}, {1}, {0})).has_value());
    CHECK(check_schedule(g, sched({60}, {1}, {0})).has_value());
    CHECK(check_schedule(g, sched({10}, {0}, {0})).has_value());
}

TEST_CASE("cost evaluation") {
    auto g2 = testutil::offer("G2", "n", 0.0, 50.0, 20.0, 100.0);
    CHECK(cost_of(g2, sched({0}, {0}, {0})) == doctest::Approx(0.0));
    CHECK(cost_of(g2, sched({10}, {1}, {0})) == doctest::Approx(300.0));
    auto s4 = testutil::offer("s4", "n", 0.0, 200.0, 40.0);
    CHECK(cost_of(s4, sched({50}, {1}, {0})) == doctest::Approx(2000.0));
}

TEST_CASE("cost is additive across hours and homogeneous in prices") {
    auto g = testutil::offer("g", "n", 0.0, 50.0, 7.0, 11.0);
    auto two = sched({10, 20}, {1, 1}, {0, 0});
    auto h0 = sched({10}, {1}, {0});
    auto h1 = sched({20}, {1}, {0});
    CHECK(cost_of(g, two) == doctest::Approx(cost_of(g, h0) + cost_of(g, h1)));
    auto scaled = g;
    scaled.var_cost *= 3.0;
    scaled.fixed_cost *= 3.0;
    CHECK(cost_of(scaled, two) == doctest::Approx(3.0 * cost_of(g, two)));
}

TEST_CASE("uptime beyond the horizon is rejected") {
    auto g = testutil::offer("g", "n", 0.0, 50.0, 5.0, 0.0, 4);
    std::vector<int> idx{0, 1, 2};
    CHECK_THROWS_AS(build_uc_constraints(g, 3, idx, idx, idx), std::invalid_argument);
}

TEST_CASE("solver schedules satisfy the emitted rows round trip") {
    auto g = testutil::offer("g", "n", 5.0, 40.0, 6.0, 30.0, 2);
    const int T = 3;
    lp::LinearProgram prog;
    std::vector<int> y(T), u(T), phi(T);
    for (int t = 0; t < T; ++t) {
        y[t] = prog.add_variable("y", 0.0, 40.0, g.var_cost);
        u[t] = prog.add_variable("u", 0.0, 1.0, g.fixed_cost, lp::VarKind::Binary);
        phi[t] = prog.add_variable("phi", 0.0, 1.0, 0.0);
    }
    for (auto& row : build_uc_constraints(g, T, y, u, phi))
        prog.add_row(row.entries, row.sense, row.rhs, row.name);
    std::vector<lp::RowEntry> demand;
    for (int t = 0; t < T; ++t) demand.push_back({y[t], 1.0});
    prog.add_row(demand, lp::RowSense::GreaterEqual, 30.0);
    auto res = lp::solve_milp(prog, 0.0);
    REQUIRE(res.status == lp::SolveStatus::Optimal);
    SellerSchedule s;
    for (int t = 0; t < T; ++t) {
        s.dispatch.push_back(res.primal[y[t]]);
        s.commitment.push_back(res.primal[u[t]] > 0.5 ? 1 : 0);
    }
    s.startup.assign(T, 0);
    for (int t = 1; t < T; ++t) s.startup[t] = std::max(0, s.commitment[t] - s.commitment[t - 1]);
    CHECK_FALSE(check_schedule(g, s).has_value());
    CHECK(cost_of(g, s) == doctest::Approx(res.objective));
}

TEST_CASE("instance validation catches bad references and profiles") {
    auto inst = testutil::make_ex2n();
    CHECK_NOTHROW(inst.validate());
    auto bad_node = inst;
    bad_node.sellers[0].node_id = "ghost";
    CHECK_THROWS_AS(bad_node.validate(), std::invalid_argument);
    auto bad_len = inst;
    bad_len.buyers[0].load_mwh.push_back(1.0);
    CHECK_THROWS_AS(bad_len.validate(), std::invalid_argument);
    auto bad_uptime = inst;
    bad_uptime.sellers[0].min_uptime = 2;  // horizon is 1
    CHECK_THROWS_AS(bad_uptime.validate(), std::invalid_argument);
}
