#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridclear/euphemia.hpp"
#include "gridclear/pipeline.hpp"
#include "gridclear/redispatch.hpp"
#include "gridclear/stats.hpp"

namespace {

using nlohmann::json;
namespace gc = gridclear;

double r6(double v) {
    double r = std::round(v * 1e6) / 1e6;
    return r == 0.0 ? 0.0 : r;
}

struct GlobalFlags {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<double> mip_gap;
    std::optional<double> margin;
    std::optional<std::string> flow_cap;
    std::optional<double> price_cap;
    unsigned seed = 1;
    int jobs = 1;
};

gc::ingest::Config resolve_config(const GlobalFlags& flags, const gc::ingest::Config& base) {
    gc::ingest::Config cfg = base;
    if (!flags.config_path.empty()) cfg = gc::ingest::load_config(flags.config_path);
    if (flags.mip_gap) cfg.mip_gap = *flags.mip_gap;
    if (flags.margin) cfg.margin = *flags.margin;
    if (flags.flow_cap) cfg.redispatch_flow_cap = *flags.flow_cap;
    if (flags.price_cap) cfg.price_cap_eur_mwh = *flags.price_cap;
    if (cfg.redispatch_flow_cap != "zonal_flows" && cfg.redispatch_flow_cap != "physical")
        throw CLI::ValidationError("--redispatch-flow-cap must be zonal_flows or physical");
    return cfg;
}

gc::clearing::MarketOutcome clear_one(const gc::market::MarketInstance& instance,
                                      const gc::ingest::Config& cfg,
                                      const std::string& configuration) {
    gc::clearing::ClearingOptions extra;
    extra.margin_override = cfg.margin;
    if (configuration == "national")
        return gc::clearing::clear_national(instance, cfg.mip_gap, extra);
    if (configuration == "zonal") {
        if (!instance.zones) throw std::runtime_error("zonal clearing needs zones.csv");
        return gc::clearing::clear_zonal(instance, *instance.zones,
                                         cfg.interconnector_fraction, cfg.mip_gap, extra);
    }
    if (configuration == "nodal") return gc::clearing::clear_nodal(instance, cfg.mip_gap, extra);
    throw std::runtime_error("unknown configuration `" + configuration + "`");
}

json outcome_json(const gc::market::MarketInstance& instance,
                  const gc::clearing::MarketOutcome& out) {
    json j;
    j["config"] = out.tag();
    j["objective_eur"] = r6(out.objective);
    j["generation_cost_eur"] = r6(out.generation_cost);
    j["unserved_mwh"] = r6(out.total_unserved);
    j["achieved_gap"] = r6(out.achieved_gap);
    for (std::size_t s = 0; s < instance.sellers.size(); ++s) {
        json js;
        for (int t = 0; t < instance.horizon; ++t) {
            js["dispatch_mwh"].push_back(r6(out.schedule.sellers[s].dispatch[t]));
            js["commitment"].push_back(out.schedule.sellers[s].commitment[t]);
        }
        j["sellers"][instance.sellers[s].seller_id] = std::move(js);
    }
    return j;
}

json prices_json(const gc::pricing::PriceSurface& prices) {
    json j;
    j["rule"] = prices.rule;
    for (std::size_t i = 0; i < prices.locations.size(); ++i) {
        json arr = json::array();
        for (double v : prices.prices[i]) arr.push_back(r6(v));
        j["prices"][prices.locations[i]] = std::move(arr);
    }
    return j;
}

json settlement_json(const gc::pricing::Settlement& st) {
    json j;
    for (const auto& p : st.participants) {
        json jp;
        jp["revenue_eur"] = r6(p.revenue);
        jp["cost_eur"] = r6(p.cost);
        jp["utility_eur"] = r6(p.utility);
        jp["lloc_eur"] = r6(p.lloc);
        jp["gloc_eur"] = r6(p.gloc);
        jp["mwp_eur"] = r6(p.mwp);
        j["participants"][p.id] = std::move(jp);
    }
    j["total_lloc_eur"] = r6(st.total_lloc);
    j["total_gloc_eur"] = r6(st.total_gloc);
    j["total_mwp_eur"] = r6(st.total_mwp);
    j["network_lloc_eur"] = r6(st.network_lloc);
    return j;
}

gc::ingest::UnitMappingProblem mapping_from_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    gc::ingest::UnitMappingProblem p;
    p.capacity_dev_bound_mw = j.value("capacity_dev_bound_mw", p.capacity_dev_bound_mw);
    p.count_dev_bound = j.value("count_dev_bound", p.count_dev_bound);
    auto read_units = [](const json& arr) {
        std::vector<gc::ingest::MappingUnit> units;
        for (const auto& u : arr)
            units.push_back({u.at("id").get<std::string>(), u.at("capacity_mw").get<double>()});
        return units;
    };
    for (const auto& t : j.value("types", json::array())) {
        gc::ingest::MappingType type;
        type.id = t.at("id").get<std::string>();
        type.units = read_units(t.value("units", json::array()));
        for (const auto& c : t.value("categories", json::array()))
            type.categories.push_back({c.at("id").get<std::string>(),
                                       c.at("target_capacity_mw").get<double>(),
                                       c.at("target_count").get<int>()});
        p.types.push_back(std::move(type));
    }
    p.free_pool = read_units(j.value("free_pool", json::array()));
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"day-ahead market clearing, redispatch, and settlement toolkit"};
    app.require_subcommand(1);
    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "config.json overriding the instance's");
    app.add_option("--out-dir", flags.out_dir, "output directory");
    app.add_option("--mip-gap", flags.mip_gap, "relative MIP gap");
    app.add_option("--margin", flags.margin, "line security margin in [0,1)");
    app.add_option("--redispatch-flow-cap", flags.flow_cap, "zonal_flows | physical");
    app.add_option("--price-cap", flags.price_cap, "price cap for statistics, EUR/MWh");
    app.add_option("--seed", flags.seed, "random seed");
    app.add_option("--jobs", flags.jobs, "parallel pipeline cells");

    std::string instance_dir, configuration = "national", rule = "ip", objective = "cost";
    std::string problem_path, prices_path;
    std::vector<std::string> configurations{"national"};
    std::vector<std::string> rules{"ip"};
    int n_nodes = 2, n_sellers = 2, n_hours = 1;
    double congestion = 0.5;

    auto* validate = app.add_subcommand("validate", "load an instance and report problems");
    validate->add_option("dir", instance_dir)->required();

    auto* clear = app.add_subcommand("clear", "clear the market once");
    clear->add_option("dir", instance_dir)->required();
    clear->add_option("--configuration", configuration, "national | zonal | nodal");

    auto* redisp = app.add_subcommand("redispatch", "clear, then redispatch to DCOPF feasibility");
    redisp->add_option("dir", instance_dir)->required();
    redisp->add_option("--configuration", configuration, "national | zonal");
    redisp->add_option("--objective", objective, "cost | volume");

    auto* price = app.add_subcommand("price", "clear, price, and settle under one rule");
    price->add_option("dir", instance_dir)->required();
    price->add_option("--configuration", configuration, "national | zonal | nodal");
    price->add_option("--rule", rule, "ip | ch | join");

    auto* euph = app.add_subcommand("euphemia", "iterative uniform-price clearing with cuts");
    euph->add_option("dir", instance_dir)->required();
    euph->add_option("--configuration", configuration, "national | zonal");

    auto* pipe = app.add_subcommand("pipeline", "full experiment grid with file outputs");
    pipe->add_option("dir", instance_dir)->required();
    pipe->add_option("--configurations", configurations,
                     "subset of: national zonal[:<zones.csv>] nodal")
        ->delimiter(',');
    pipe->add_option("--rules", rules, "subset of: ip ch join euphemia")->delimiter(',');

    auto* mapu = app.add_subcommand("map-units", "solve the unit-to-category assignment");
    mapu->add_option("problem", problem_path, "problem description (JSON)")->required();

    auto* gen = app.add_subcommand("gen-synthetic", "write a random instance");
    gen->add_option("--nodes", n_nodes);
    gen->add_option("--sellers", n_sellers);
    gen->add_option("--hours", n_hours);
    gen->add_option("--congestion", congestion, "0 (none) .. 1 (tight)");

    auto* statcmd = app.add_subcommand("stats", "price statistics from a prices.csv");
    statcmd->add_option("prices", prices_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            auto li = gc::ingest::load_instance(instance_dir);
            json j;
            j["nodes"] = li.instance.network.num_nodes();
            j["lines"] = li.instance.network.num_lines();
            j["sellers"] = li.instance.sellers.size();
            j["buyers"] = li.instance.buyers.size();
            j["horizon"] = li.instance.horizon;
            j["components"] = li.report.components;
            for (const auto& issue : li.report.issues) j["notes"].push_back(issue.message);
            std::cout << j.dump(2) << '\n';
            return 0;
        }
        if (*clear) {
            auto li = gc::ingest::load_instance(instance_dir);
            auto cfg = resolve_config(flags, li.config);
            auto out = clear_one(li.instance, cfg, configuration);
            std::cout << outcome_json(li.instance, out).dump(2) << '\n';
            return 0;
        }
        if (*redisp) {
            auto li = gc::ingest::load_instance(instance_dir);
            auto cfg = resolve_config(flags, li.config);
            auto base = clear_one(li.instance, cfg, configuration);
            auto mode = cfg.redispatch_flow_cap == "physical"
                            ? gc::redispatch::FlowCapMode::Physical
                            : gc::redispatch::FlowCapMode::ZonalFlows;
            auto rd = objective == "volume"
                          ? gc::redispatch::redispatch_min_volume(li.instance, base, mode,
                                                                  cfg.mip_gap)
                          : gc::redispatch::redispatch_min_cost(li.instance, base, mode,
                                                                cfg.mip_gap);
            json j;
            j["config"] = base.tag();
            j["system_cost_eur"] = r6(base.generation_cost);
            j["redispatch_cost_eur"] = r6(rd.redispatch_cost);
            j["redispatch_volume_mwh"] = r6(rd.redispatch_volume);
            j["total_cost_eur"] = r6(base.generation_cost + rd.redispatch_cost);
            for (std::size_t s = 0; s < li.instance.sellers.size(); ++s) {
                j["up_mwh"][li.instance.sellers[s].seller_id] = r6(rd.up_mwh[s]);
                j["down_mwh"][li.instance.sellers[s].seller_id] = r6(rd.down_mwh[s]);
            }
            std::cout << j.dump(2) << '\n';
            return 0;
        }
        if (*price) {
            auto li = gc::ingest::load_instance(instance_dir);
            auto cfg = resolve_config(flags, li.config);
            auto out = clear_one(li.instance, cfg, configuration);
            gc::pricing::PriceSurface surface;
            if (rule == "ip") surface = gc::pricing::ip_prices(li.instance, out);
            else if (rule == "ch") surface = gc::pricing::ch_prices(li.instance, out);
            else if (rule == "join") surface = gc::pricing::join_prices(li.instance, out);
            else throw std::runtime_error("unknown rule `" + rule + "`");
            auto st = gc::pricing::settle(li.instance, out, surface);
            json j;
            j["config"] = out.tag();
            j["prices"] = prices_json(surface);
            j["settlement"] = settlement_json(st);
            std::cout << j.dump(2) << '\n';
            return 0;
        }
        if (*euph) {
            auto li = gc::ingest::load_instance(instance_dir);
            auto cfg = resolve_config(flags, li.config);
            const gc::grid::ZoneMap* zones = nullptr;
            if (configuration == "zonal") {
                if (!li.instance.zones) throw std::runtime_error("zonal euphemia needs zones.csv");
                zones = &*li.instance.zones;
            }
            auto er = gc::euphemia::run_euphemia(li.instance, zones, cfg.mip_gap, 200,
                                                 cfg.interconnector_fraction);
            json j;
            j["iterations"] = er.iterations;
            j["welfare_loss_eur"] = r6(er.welfare_loss);
            j["cuts"] = er.cuts.size();
            j["paradoxically_rejected"] = er.paradoxically_rejected;
            j["flow_warnings"] = er.flow_warnings;
            j["hit_max_iters"] = er.hit_max_iters;
            j["prices"] = prices_json(er.prices);
            j["settlement"] = settlement_json(er.settlement);
            std::cout << j.dump(2) << '\n';
            return 0;
        }
        if (*pipe) {
            auto li = gc::ingest::load_instance(instance_dir);
            auto cfg = resolve_config(flags, li.config);
            gc::pipeline::PipelineRequest req;
            req.instance_dir = instance_dir;
            req.out_dir = flags.out_dir;
            req.configurations = configurations;
            req.rules = rules;
            req.jobs = flags.jobs;
            auto pr = gc::pipeline::run_pipeline(cfg, req);
            for (const auto& e : pr.errors) std::cerr << "error: " << e << '\n';
            std::cout << "wrote " << pr.summary_path << '\n';
            return pr.all_ok ? 0 : 2;
        }
        if (*mapu) {
            auto problem = mapping_from_json(problem_path);
            gc::ingest::Config cfg = resolve_config(flags, {});
            auto assignment = gc::ingest::map_units(problem, cfg.mip_gap);
            json j;
            j["objective"] = r6(assignment.objective);
            for (const auto& [unit, cat] : assignment.unit_category) j["assignment"][unit] = cat;
            for (const auto& dev : assignment.deviations) {
                j["deviations"][dev.category_id]["capacity_mw"] = r6(dev.capacity_mw);
                j["deviations"][dev.category_id]["count"] = dev.count;
            }
            std::cout << j.dump(2) << '\n';
            return 0;
        }
        if (*gen) {
            gc::ingest::SyntheticOptions opts;
            opts.congestion_level = congestion;
            if (flags.margin) opts.margin = *flags.margin;
            auto instance = gc::ingest::gen_synthetic(flags.seed, n_nodes, n_sellers, n_hours,
                                                      opts);
            gc::ingest::Config cfg = resolve_config(flags, {});
            cfg.margin = opts.margin;
            gc::ingest::write_instance(instance, cfg, flags.out_dir);
            std::cout << "wrote instance to " << flags.out_dir << '\n';
            return 0;
        }
        if (*statcmd) {
            std::ifstream in(prices_path);
            if (!in) throw std::runtime_error("cannot open " + prices_path);
            std::string line;
            if (!std::getline(in, line) ||
                (line != "config,rule,location,hour,price_eur_mwh" &&
                 line != "config,rule,location,hour,price_eur_mwh\r"))
                throw std::runtime_error(prices_path +
                                         ": expected a prices.csv produced by `pipeline`");
            std::map<std::string, std::vector<double>> groups;
            while (std::getline(in, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                std::stringstream ss(line);
                std::string config_s, rule_s, loc, hour, value;
                std::getline(ss, config_s, ',');
                std::getline(ss, rule_s, ',');
                std::getline(ss, loc, ',');
                std::getline(ss, hour, ',');
                std::getline(ss, value, ',');
                groups[config_s + "/" + rule_s].push_back(std::stod(value));
            }
            double cap = flags.price_cap.value_or(100.0);
            json j;
            for (const auto& [key, series] : groups) {
                auto st = gc::stats::price_stats(series, cap);
                j[key]["mean"] = r6(st.mean);
                j[key]["median"] = r6(st.median);
                j[key]["std"] = r6(st.std_dev);
                j[key]["outliers"] = st.outlier_count;
                j[key]["count"] = st.count;
            }
            std::cout << j.dump(2) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
