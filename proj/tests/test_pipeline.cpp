#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gridclear/pipeline.hpp"
#include "testutil.hpp"

using namespace gridclear;
using namespace gridclear::pipeline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("gridclear_pipe_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

json run_exb(const fs::path& out_dir, const std::vector<std::string>& configs,
             const std::vector<std::string>& rules, int jobs = 1) {
    auto fixture = testutil::fixture_dir("exb");
    auto config = ingest::load_config(fixture + "/config.json");
    PipelineRequest req{fixture, out_dir.string(), configs, rules, jobs};
    auto res = run_pipeline(config, req);
    REQUIRE(fs::exists(res.summary_path));
    return json::parse(slurp(res.summary_path));
}

}  // namespace

TEST_CASE("the six-node study reproduces the reference totals") {
    auto dir = scratch("totals");
    auto fixture = testutil::fixture_dir("exb");
    auto summary = run_exb(dir,
                           {"national", "zonal", "zonal:" + fixture + "/zones3.csv", "nodal"},
                           {"ip"});
    const auto& cells = summary["cells"];
    CHECK(cells["national"]["total_cost_eur"].get<double>() == doctest::Approx(2300.0));
    CHECK(cells["zonal2"]["total_cost_eur"].get<double>() == doctest::Approx(2300.0));
    CHECK(cells["zonal3"]["total_cost_eur"].get<double>() == doctest::Approx(2500.0));
    CHECK(cells["nodal"]["total_cost_eur"].get<double>() == doctest::Approx(2100.0));
    CHECK(cells["zonal2"]["generation_cost_eur"].get<double>() == doctest::Approx(100.0));
    CHECK(cells["zonal3"]["generation_cost_eur"].get<double>() == doctest::Approx(200.0));
    // Nodal clears feasibly, so its redispatch block is identically zero.
    CHECK(cells["nodal"]["redispatch"]["min_cost"]["cost_eur"].get<double>() == 0.0);
    CHECK(cells["nodal"]["redispatch"]["min_volume"]["volume_mwh"].get<double>() == 0.0);
    for (const auto& [tag, cell] : cells.items()) CHECK(cell["errors"].empty());
    // All three flat files exist and carry their headers.
    for (const auto* f : {"outcomes.csv", "prices.csv", "settlement.csv"})
        CHECK(slurp(dir / f).find("config,") == 0);
    fs::remove_all(dir);
}

TEST_CASE("summary output is byte-identical across runs and thread counts") {
    auto d1 = scratch("det1"), d2 = scratch("det2");
    run_exb(d1, {"national", "zonal", "nodal"}, {"ip", "ch", "join"}, 1);
    run_exb(d2, {"national", "zonal", "nodal"}, {"ip", "ch", "join"}, 3);
    CHECK(slurp(d1 / "summary.json") == slurp(d2 / "summary.json"));
    CHECK(slurp(d1 / "outcomes.csv") == slurp(d2 / "outcomes.csv"));
    CHECK(slurp(d1 / "prices.csv") == slurp(d2 / "prices.csv"));
    CHECK(slurp(d1 / "settlement.csv") == slurp(d2 / "settlement.csv"));
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("a failing cell is recorded without sinking the rest") {
    auto dir = scratch("partial");
    auto fixture = testutil::fixture_dir("exb");
    auto config = ingest::load_config(fixture + "/config.json");
    PipelineRequest req{fixture, dir.string(), {"national", "nodal"}, {"euphemia"}, 1};
    auto res = run_pipeline(config, req);
    CHECK_FALSE(res.all_ok);
    REQUIRE(res.errors.size() == 1);
    CHECK(res.errors[0].find("nodal/euphemia") != std::string::npos);
    auto summary = json::parse(slurp(res.summary_path));
    // The national cell still settled fine.
    CHECK(summary["cells"]["national"]["errors"].empty());
    CHECK(summary["cells"]["national"]["rules"].contains("euphemia"));
    CHECK_FALSE(summary["cells"]["nodal"]["errors"].empty());
    fs::remove_all(dir);
}

TEST_CASE("euphemia cells report their iteration metadata") {
    auto dir = scratch("meta");
    auto summary = run_exb(dir, {"national"}, {"euphemia"});
    const auto& jr = summary["cells"]["national"]["rules"]["euphemia"];
    CHECK(jr["iterations"].get<int>() >= 1);
    CHECK(jr["welfare_loss_eur"].get<double>() == doctest::Approx(0.0));
    CHECK(jr["paradoxically_rejected"].empty());
    fs::remove_all(dir);
}
