#include "gridclear/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "gridclear/euphemia.hpp"
#include "gridclear/redispatch.hpp"
#include "gridclear/stats.hpp"

namespace gridclear::pipeline {

namespace {

using nlohmann::json;

double r6(double v) {
    double r = std::round(v * 1e6) / 1e6;
    return r == 0.0 ? 0.0 : r;  // normalize -0
}

std::string f6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", r6(v));
    return std::string(buf);
}

grid::ZoneMap load_zones_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "node_id,zone_id")
        throw std::runtime_error(path + ": header must be exactly `node_id,zone_id`");
    grid::ZoneMap zm;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error(path + ": malformed row `" + line + "`");
        zm.node_zone[line.substr(0, comma)] = line.substr(comma + 1);
    }
    zm.zone_count = static_cast<int>(zm.zone_ids().size());
    return zm;
}

struct RuleData {
    pricing::PriceSurface prices;
    pricing::Settlement settlement;
    stats::PriceStats price_stats;
    // Euphemia extras.
    int iterations = 0;
    double welfare_loss = 0.0;
    std::vector<std::string> paradoxically_rejected;
};

struct CellData {
    std::string tag;
    bool cleared = false;
    clearing::MarketOutcome outcome;
    bool has_redispatch = false;
    redispatch::RedispatchResult min_cost, min_volume;
    std::map<std::string, RuleData> rules;  // by rule name
    std::vector<std::string> errors;
};

void compute_cell(const market::MarketInstance& instance, const ingest::Config& config,
                  const std::string& configuration, const std::vector<std::string>& rules,
                  CellData& cell) {
    const double gap = config.mip_gap;
    clearing::ClearingOptions extra;
    extra.margin_override = config.margin;

    const grid::ZoneMap* zones = nullptr;
    grid::ZoneMap own_zones;
    std::string kind = configuration;
    if (configuration.rfind("zonal", 0) == 0) {
        kind = "zonal";
        auto colon = configuration.find(':');
        if (colon != std::string::npos) {
            own_zones = load_zones_csv(configuration.substr(colon + 1));
            zones = &own_zones;
        } else if (instance.zones) {
            zones = &*instance.zones;
        } else {
            throw std::runtime_error("zonal configuration needs zones.csv");
        }
    }

    if (kind == "national") {
        cell.outcome = clearing::clear_national(instance, gap, extra);
    } else if (kind == "zonal") {
        cell.outcome =
            clearing::clear_zonal(instance, *zones, config.interconnector_fraction, gap, extra);
    } else if (kind == "nodal") {
        cell.outcome = clearing::clear_nodal(instance, gap, extra);
    } else {
        throw std::runtime_error("unknown configuration `" + configuration + "`");
    }
    cell.tag = cell.outcome.tag();
    cell.cleared = true;

    if (kind != "nodal") {
        try {
            auto mode = config.redispatch_flow_cap == "physical"
                            ? redispatch::FlowCapMode::Physical
                            : redispatch::FlowCapMode::ZonalFlows;
            cell.min_cost = redispatch::redispatch_min_cost(instance, cell.outcome, mode, gap);
            cell.min_volume = redispatch::redispatch_min_volume(instance, cell.outcome, mode, gap);
            cell.has_redispatch = true;
        } catch (const std::exception& e) {
            cell.errors.push_back(cell.tag + "/redispatch: " + e.what());
        }
    }

    for (const std::string& rule : rules) {
        try {
            RuleData rd;
            if (rule == "ip") {
                rd.prices = pricing::ip_prices(instance, cell.outcome);
            } else if (rule == "ch") {
                rd.prices = pricing::ch_prices(instance, cell.outcome);
            } else if (rule == "join") {
                rd.prices = pricing::join_prices(instance, cell.outcome);
            } else if (rule == "euphemia") {
                if (kind == "nodal")
                    throw std::runtime_error("euphemia needs a national or zonal configuration");
                auto er = euphemia::run_euphemia(instance, zones, gap, 200,
                                                config.interconnector_fraction);
                rd.prices = er.prices;
                rd.settlement = er.settlement;
                rd.iterations = er.iterations;
                rd.welfare_loss = er.welfare_loss;
                rd.paradoxically_rejected = er.paradoxically_rejected;
                rd.price_stats = stats::price_stats(rd.prices, config.price_cap_eur_mwh);
                cell.rules[rule] = std::move(rd);
                continue;
            } else {
                throw std::runtime_error("unknown pricing rule `" + rule + "`");
            }
            rd.settlement = pricing::settle(instance, cell.outcome, rd.prices);
            rd.price_stats = stats::price_stats(rd.prices, config.price_cap_eur_mwh);
            cell.rules[rule] = std::move(rd);
        } catch (const std::exception& e) {
            cell.errors.push_back(cell.tag + "/" + rule + ": " + e.what());
        }
    }
}

}  // namespace

PipelineResult run_pipeline(const ingest::Config& config, const PipelineRequest& request) {
    ingest::LoadedInstance li = ingest::load_instance(request.instance_dir);
    const market::MarketInstance& instance = li.instance;

    std::vector<CellData> cells(request.configurations.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                compute_cell(instance, config, request.configurations[i], request.rules,
                             cells[i]);
            } catch (const std::exception& e) {
                cells[i].tag = request.configurations[i];
                cells[i].errors.push_back(request.configurations[i] + ": " + e.what());
            }
        }
    };
    int jobs = std::max(1, request.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    PipelineResult result;
    auto open = [&](const std::string& name) {
        std::ofstream out(request.out_dir + "/" + name, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + request.out_dir + "/" + name);
        return out;
    };

    {
        auto out = open("outcomes.csv");
        out << "config,seller_id,hour,dispatch_mwh,commitment,startup\n";
        for (const auto& cell : cells) {
            if (!cell.cleared) continue;
            for (std::size_t s = 0; s < instance.sellers.size(); ++s) {
                const auto& sched = cell.outcome.schedule.sellers[s];
                for (int t = 0; t < instance.horizon; ++t)
                    out << cell.tag << ',' << instance.sellers[s].seller_id << ',' << t << ','
                        << f6(sched.dispatch[t]) << ',' << sched.commitment[t] << ','
                        << sched.startup[t] << '\n';
            }
        }
    }
    {
        auto out = open("prices.csv");
        out << "config,rule,location,hour,price_eur_mwh\n";
        for (const auto& cell : cells)
            for (const auto& [rule, rd] : cell.rules)
                for (std::size_t loc = 0; loc < rd.prices.locations.size(); ++loc)
                    for (int t = 0; t < instance.horizon; ++t)
                        out << cell.tag << ',' << rule << ',' << rd.prices.locations[loc] << ','
                            << t << ',' << f6(rd.prices.prices[loc][t]) << '\n';
    }
    {
        auto out = open("settlement.csv");
        out << "config,rule,participant_id,revenue_eur,cost_eur,utility_eur,lloc_eur,gloc_eur,"
               "mwp_eur\n";
        for (const auto& cell : cells)
            for (const auto& [rule, rd] : cell.rules)
                for (const auto& p : rd.settlement.participants)
                    out << cell.tag << ',' << rule << ',' << p.id << ',' << f6(p.revenue) << ','
                        << f6(p.cost) << ',' << f6(p.utility) << ',' << f6(p.lloc) << ','
                        << f6(p.gloc) << ',' << f6(p.mwp) << '\n';
    }

    json summary;
    summary["cells"] = json::object();
    for (const auto& cell : cells) {
        json jc;
        if (cell.cleared) {
            jc["generation_cost_eur"] = r6(cell.outcome.generation_cost);
            jc["objective_eur"] = r6(cell.outcome.objective);
            jc["unserved_mwh"] = r6(cell.outcome.total_unserved);
            double redispatch_cost = 0.0;
            if (cell.has_redispatch) {
                jc["redispatch"]["min_cost"]["cost_eur"] = r6(cell.min_cost.redispatch_cost);
                jc["redispatch"]["min_cost"]["volume_mwh"] = r6(cell.min_cost.redispatch_volume);
                jc["redispatch"]["min_volume"]["cost_eur"] = r6(cell.min_volume.redispatch_cost);
                jc["redispatch"]["min_volume"]["volume_mwh"] =
                    r6(cell.min_volume.redispatch_volume);
                redispatch_cost = cell.min_cost.redispatch_cost;
            } else if (cell.outcome.kind == clearing::ConfigKind::Nodal) {
                jc["redispatch"]["min_cost"]["cost_eur"] = 0.0;
                jc["redispatch"]["min_cost"]["volume_mwh"] = 0.0;
                jc["redispatch"]["min_volume"]["cost_eur"] = 0.0;
                jc["redispatch"]["min_volume"]["volume_mwh"] = 0.0;
            }
            jc["total_cost_eur"] = r6(cell.outcome.generation_cost + redispatch_cost);
            for (const auto& [rule, rd] : cell.rules) {
                json jr;
                jr["price_mean"] = r6(rd.price_stats.mean);
                jr["price_median"] = r6(rd.price_stats.median);
                jr["price_std"] = r6(rd.price_stats.std_dev);
                jr["price_outliers"] = rd.price_stats.outlier_count;
                jr["total_lloc_eur"] = r6(rd.settlement.total_lloc);
                jr["total_gloc_eur"] = r6(rd.settlement.total_gloc);
                jr["total_mwp_eur"] = r6(rd.settlement.total_mwp);
                jr["network_lloc_eur"] = r6(rd.settlement.network_lloc);
                if (rule == "euphemia") {
                    jr["iterations"] = rd.iterations;
                    jr["welfare_loss_eur"] = r6(rd.welfare_loss);
                    jr["paradoxically_rejected"] = rd.paradoxically_rejected;
                }
                jc["rules"][rule] = std::move(jr);
            }
        }
        jc["errors"] = cell.errors;
        summary["cells"][cell.tag] = std::move(jc);
        for (const auto& e : cell.errors) {
            result.errors.push_back(e);
            result.all_ok = false;
        }
    }
    result.summary_path = request.out_dir + "/summary.json";
    std::ofstream out(result.summary_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + result.summary_path);
    out << summary.dump(2) << '\n';
    return result;
}

}  // namespace gridclear::pipeline
