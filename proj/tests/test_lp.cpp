#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gridclear/lp.hpp"

using namespace gridclear::lp;

TEST_CASE("single-constraint maximization with dual") {
    LinearProgram lp;
    int x = lp.add_variable("x", 0.0, kInf, 1.0);
    lp.set_objective_sense(ObjSense::Maximize);
    int row = lp.add_row({{x, 1.0}}, RowSense::LessEqual, 5.0);
    SolveResult res = solve_lp(lp);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.primal[x] == doctest::Approx(5.0));
    CHECK(res.objective == doctest::Approx(5.0));
    CHECK(res.row_duals[row] == doctest::Approx(1.0));
}

TEST_CASE("two-variable dispatch LP with balance dual") {
    LinearProgram lp;
    int a = lp.add_variable("a", 0.0, 50.0, 10.0);
    int b = lp.add_variable("b", 0.0, 100.0, 30.0);
    int bal = lp.add_row({{a, 1.0}, {b, 1.0}}, RowSense::Equal, 80.0);
    SolveResult res = solve_lp(lp);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.primal[a] == doctest::Approx(50.0));
    CHECK(res.primal[b] == doctest::Approx(30.0));
    CHECK(res.objective == doctest::Approx(1400.0));
    CHECK(res.row_duals[bal] == doctest::Approx(30.0));
}

TEST_CASE("empty feasible set reported infeasible") {
    LinearProgram lp;
    int x = lp.add_variable("x", -kInf, kInf, 0.0);
    lp.add_row({{x, 1.0}}, RowSense::LessEqual, 1.0);
    lp.add_row({{x, 1.0}}, RowSense::GreaterEqual, 2.0);
    CHECK(solve_lp(lp).status == SolveStatus::Infeasible);
}

TEST_CASE("unbounded ray detected") {
    LinearProgram lp;
    int x = lp.add_variable("x", 0.0, kInf, 1.0);
    lp.set_objective_sense(ObjSense::Maximize);
    lp.add_row({{x, 1.0}}, RowSense::GreaterEqual, 1.0);
    CHECK(solve_lp(lp).status == SolveStatus::Unbounded);
}

TEST_CASE("malformed programs rejected") {
    LinearProgram lp;
    int x = lp.add_variable("x", 1.0, 0.0, 0.0);
    (void)x;
    CHECK_THROWS_AS(lp.validate(), std::invalid_argument);
    LinearProgram lp2;
    lp2.add_variable("b", 0.0, 2.0, 0.0, VarKind::Binary);
    CHECK_THROWS_AS(lp2.validate(), std::invalid_argument);
}

namespace {

// Small commitment model: y1 in [0,50] at 10; y2 <= 50*u2 at 20 plus 100
// fixed; meet 60.
LinearProgram commitment_lp() {
    LinearProgram lp;
    int y1 = lp.add_variable("y1", 0.0, 50.0, 10.0);
    int y2 = lp.add_variable("y2", 0.0, 50.0, 20.0);
    int u2 = lp.add_variable("u2", 0.0, 1.0, 100.0, VarKind::Binary);
    lp.add_row({{y2, 1.0}, {u2, -50.0}}, RowSense::LessEqual, 0.0);
    lp.add_row({{y1, 1.0}, {y2, 1.0}}, RowSense::Equal, 60.0);
    return lp;
}

}  // namespace

TEST_CASE("branch and bound solves the commitment model exactly") {
    LinearProgram lp = commitment_lp();
    SolveResult res = solve_milp(lp, 0.0);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.objective == doctest::Approx(800.0));
    CHECK(res.primal[2] == doctest::Approx(1.0));
    CHECK(res.achieved_gap <= 1e-9);
    CHECK_FALSE(res.has_duals);
}

TEST_CASE("oracle agrees with branch and bound") {
    LinearProgram lp = commitment_lp();
    SolveResult oracle = enumerate_oracle(lp);
    SolveResult bb = solve_milp(lp, 0.0);
    CHECK(oracle.objective == doctest::Approx(bb.objective));
}

TEST_CASE("zero binaries reduce to the LP") {
    LinearProgram lp;
    int a = lp.add_variable("a", 0.0, 50.0, 10.0);
    lp.add_row({{a, 1.0}}, RowSense::GreaterEqual, 20.0);
    CHECK(enumerate_oracle(lp).objective == doctest::Approx(solve_lp(lp).objective));
    CHECK(solve_milp(lp, 0.0).objective == doctest::Approx(solve_lp(lp).objective));
}

TEST_CASE("binaries fixed by bounds need no branching") {
    LinearProgram lp = commitment_lp();
    lp.set_bounds(2, 1.0, 1.0);
    SolveResult res = solve_milp(lp, 0.0);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.objective == doctest::Approx(800.0));
}

TEST_CASE("oracle refuses too many binaries") {
    LinearProgram lp;
    for (int i = 0; i < 5; ++i) lp.add_variable("b", 0.0, 1.0, 1.0, VarKind::Binary);
    CHECK_THROWS_AS(enumerate_oracle(lp, 4), std::invalid_argument);
}

TEST_CASE("relaxed gap accepted") {
    LinearProgram lp = commitment_lp();
    SolveResult res = solve_milp(lp, 0.05);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.achieved_gap <= 0.05 + 1e-12);
    CHECK(res.objective <= 800.0 * 1.05 + 1e-9);
}

TEST_CASE("randomized LPs satisfy strong duality and complementary slackness") {
    std::mt19937 rng(7);
    auto unif = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng()) / 4294967296.0);
    };
    int optimal_seen = 0;
    for (int trial = 0; trial < 40; ++trial) {
        LinearProgram lp;
        int n = 2 + static_cast<int>(rng() % 4);
        for (int j = 0; j < n; ++j) lp.add_variable("x", 0.0, unif(1.0, 10.0), unif(-5.0, 5.0));
        int rows = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < rows; ++i) {
            std::vector<RowEntry> ent;
            for (int j = 0; j < n; ++j) ent.push_back({j, unif(-2.0, 2.0)});
            RowSense sense = rng() % 2 == 0 ? RowSense::LessEqual : RowSense::GreaterEqual;
            lp.add_row(ent, sense, unif(-5.0, 5.0));
        }
        SolveResult res = solve_lp(lp);
        if (res.status != SolveStatus::Optimal) continue;
        ++optimal_seen;
        // Reduced costs close the duality gap through the variable bounds.
        double dual_obj = 0.0;
        for (int i = 0; i < lp.num_rows(); ++i) {
            dual_obj += res.row_duals[i] * lp.row(i).rhs;
            // Complementary slackness: nonzero dual only on a tight row.
            double act = 0.0;
            for (const auto& e : lp.row(i).entries) act += e.coeff * res.primal[e.var];
            if (std::abs(res.row_duals[i]) > 1e-7)
                CHECK(std::abs(act - lp.row(i).rhs) < 1e-6);
        }
        for (int j = 0; j < lp.num_vars(); ++j) {
            double rc = lp.objective_coeff(j);
            for (int i = 0; i < lp.num_rows(); ++i)
                for (const auto& e : lp.row(i).entries)
                    if (e.var == j) rc -= res.row_duals[i] * e.coeff;
            dual_obj += rc * res.primal[j];
        }
        CHECK(std::abs(res.objective - dual_obj) <
              1e-6 * std::max(1.0, std::abs(res.objective)));
    }
    CHECK(optimal_seen >= 10);
}

TEST_CASE("dump writes one constraint per line") {
    LinearProgram lp = commitment_lp();
    std::string text = lp.dump();
    CHECK(text.find("y1") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') >= lp.num_rows());
}
