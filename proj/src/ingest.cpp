#include "gridclear/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gridclear/lp.hpp"

namespace gridclear::ingest {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

struct Csv {
    std::string path;
    std::vector<std::vector<std::string>> rows;  // header excluded
};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

Csv read_csv(const std::string& path, const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header)
        throw std::runtime_error(path + ": header must be exactly `" + expected_header + "`");
    Csv csv;
    csv.path = path;
    const std::size_t cols = split(expected_header).size();
    int row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != cols)
            throw std::runtime_error(path + " row " + std::to_string(row_no) + ": expected " +
                                     std::to_string(cols) + " columns, got " +
                                     std::to_string(cells.size()));
        csv.rows.push_back(std::move(cells));
    }
    return csv;
}

double parse_num(const Csv& csv, std::size_t row, const std::string& cell,
                 const std::string& column) {
    try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(csv.path + " row " + std::to_string(row + 2) + " column " +
                                 column + ": cannot parse `" + cell + "` as a number");
    }
}

int parse_int(const Csv& csv, std::size_t row, const std::string& cell,
              const std::string& column) {
    double v = parse_num(csv, row, cell, column);
    if (v != std::floor(v))
        throw std::runtime_error(csv.path + " row " + std::to_string(row + 2) + " column " +
                                 column + ": expected an integer, got `" + cell + "`");
    return static_cast<int>(v);
}

bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

}  // namespace

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    Config c;
    c.margin = j.value("margin", c.margin);
    c.interconnector_fraction = j.value("interconnector_fraction", c.interconnector_fraction);
    c.mip_gap = j.value("mip_gap", c.mip_gap);
    c.voll_eur_mwh = j.value("voll_eur_mwh", c.voll_eur_mwh);
    c.price_cap_eur_mwh = j.value("price_cap_eur_mwh", c.price_cap_eur_mwh);
    c.redispatch_flow_cap = j.value("redispatch_flow_cap", c.redispatch_flow_cap);
    if (c.redispatch_flow_cap != "zonal_flows" && c.redispatch_flow_cap != "physical")
        throw std::runtime_error(path + ": redispatch_flow_cap must be zonal_flows or physical");
    return c;
}

LoadedInstance load_instance(const std::string& dir) {
    LoadedInstance li;
    if (file_exists(dir + "/config.json")) li.config = load_config(dir + "/config.json");

    Csv ncsv = read_csv(dir + "/nodes.csv", "node_id,lat,lon");
    std::vector<grid::Node> nodes;
    for (std::size_t i = 0; i < ncsv.rows.size(); ++i) {
        const auto& r = ncsv.rows[i];
        grid::Node n;
        n.id = r[0];
        if (!r[1].empty()) n.lat = parse_num(ncsv, i, r[1], "lat");
        if (!r[2].empty()) n.lon = parse_num(ncsv, i, r[2], "lon");
        nodes.push_back(std::move(n));
    }

    Csv lcsv = read_csv(dir + "/lines.csv", "from,to,susceptance_pu,limit_mw");
    std::vector<grid::Line> lines;
    for (std::size_t i = 0; i < lcsv.rows.size(); ++i) {
        const auto& r = lcsv.rows[i];
        grid::Line ln{r[0], r[1], parse_num(lcsv, i, r[2], "susceptance_pu"),
                      parse_num(lcsv, i, r[3], "limit_mw")};
        // Parallel lines merge into one by summing susceptances and limits.
        auto same_pair = [&](const grid::Line& o) {
            return (o.from == ln.from && o.to == ln.to) || (o.from == ln.to && o.to == ln.from);
        };
        auto it = std::find_if(lines.begin(), lines.end(), same_pair);
        if (it != lines.end()) {
            it->susceptance += ln.susceptance;
            it->limit_mw += ln.limit_mw;
        } else {
            lines.push_back(std::move(ln));
        }
    }

    li.report = grid::validate_network(nodes, lines);
    if (!li.report.ok()) {
        std::string msg = dir + ": network validation failed:";
        for (const auto& issue : li.report.issues)
            if (issue.severity == grid::ValidationIssue::Severity::Error)
                msg += "\n  " + issue.message;
        throw std::runtime_error(msg);
    }

    market::MarketInstance inst{grid::Network(nodes, lines, li.config.margin), {}, {}, {}, 0,
                                li.config.voll_eur_mwh};

    Csv dcsv = read_csv(dir + "/demand.csv", "buyer_id,node_id,hour,load_mwh");
    std::map<std::string, std::pair<std::string, std::map<int, double>>> buyers;
    std::vector<std::string> buyer_order;
    int horizon = 1;
    for (std::size_t i = 0; i < dcsv.rows.size(); ++i) {
        const auto& r = dcsv.rows[i];
        int hour = parse_int(dcsv, i, r[2], "hour");
        if (hour < 0)
            throw std::runtime_error(dcsv.path + " row " + std::to_string(i + 2) +
                                     ": hour must be >= 0");
        horizon = std::max(horizon, hour + 1);
        auto [it, fresh] = buyers.try_emplace(r[0], r[1], std::map<int, double>{});
        if (fresh) buyer_order.push_back(r[0]);
        if (it->second.first != r[1])
            throw std::runtime_error(dcsv.path + ": buyer " + r[0] +
                                     " appears at more than one node");
        it->second.second[hour] = parse_num(dcsv, i, r[3], "load_mwh");
    }
    inst.horizon = horizon;
    for (const auto& id : buyer_order) {
        const auto& [node, loads] = buyers[id];
        market::DemandSeries d{id, node, std::vector<double>(horizon, 0.0)};
        for (auto [t, v] : loads) d.load_mwh[t] = v;
        inst.buyers.push_back(std::move(d));
    }

    Csv gcsv = read_csv(dir + "/generators.csv",
                        "gen_id,node_id,type,p_min_mw,p_max_mw,min_uptime_h,var_cost_eur_mwh,"
                        "fixed_cost_eur_h");
    for (std::size_t i = 0; i < gcsv.rows.size(); ++i) {
        const auto& r = gcsv.rows[i];
        market::GeneratorOffer g;
        g.seller_id = r[0];
        g.node_id = r[1];
        g.p_min = parse_num(gcsv, i, r[3], "p_min_mw");
        g.p_max = {parse_num(gcsv, i, r[4], "p_max_mw")};
        g.min_uptime = parse_int(gcsv, i, r[5], "min_uptime_h");
        g.var_cost = parse_num(gcsv, i, r[6], "var_cost_eur_mwh");
        g.fixed_cost = parse_num(gcsv, i, r[7], "fixed_cost_eur_h");
        inst.sellers.push_back(std::move(g));
    }

    if (file_exists(dir + "/zones.csv")) {
        Csv zcsv = read_csv(dir + "/zones.csv", "node_id,zone_id");
        grid::ZoneMap zm;
        for (const auto& r : zcsv.rows) zm.node_zone[r[0]] = r[1];
        zm.zone_count = static_cast<int>(zm.zone_ids().size());
        inst.zones = std::move(zm);
    }

    try {
        inst.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(dir + ": " + e.what());
    }
    li.instance = std::move(inst);
    return li;
}

void write_instance(const market::MarketInstance& instance, const Config& config,
                    const std::string& dir) {
    auto open = [&](const std::string& name) {
        std::ofstream out(dir + "/" + name, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + dir + "/" + name);
        return out;
    };
    {
        auto out = open("nodes.csv");
        out << "node_id,lat,lon\n";
        for (const auto& n : instance.network.nodes())
            out << n.id << ',' << (n.lat ? fmt(*n.lat) : "") << ','
                << (n.lon ? fmt(*n.lon) : "") << '\n';
    }
    {
        auto out = open("lines.csv");
        out << "from,to,susceptance_pu,limit_mw\n";
        for (const auto& l : instance.network.lines())
            out << l.from << ',' << l.to << ',' << fmt(l.susceptance) << ',' << fmt(l.limit_mw)
                << '\n';
    }
    {
        auto out = open("generators.csv");
        out << "gen_id,node_id,type,p_min_mw,p_max_mw,min_uptime_h,var_cost_eur_mwh,"
               "fixed_cost_eur_h\n";
        for (const auto& g : instance.sellers)
            out << g.seller_id << ',' << g.node_id << ",generic," << fmt(g.p_min) << ','
                << fmt(g.p_max_at(0)) << ',' << g.min_uptime << ',' << fmt(g.var_cost) << ','
                << fmt(g.fixed_cost) << '\n';
    }
    {
        auto out = open("demand.csv");
        out << "buyer_id,node_id,hour,load_mwh\n";
        for (const auto& b : instance.buyers)
            for (int t = 0; t < instance.horizon; ++t)
                out << b.buyer_id << ',' << b.node_id << ',' << t << ',' << fmt(b.load_mwh[t])
                    << '\n';
    }
    if (instance.zones) {
        auto out = open("zones.csv");
        out << "node_id,zone_id\n";
        for (const auto& n : instance.network.nodes())
            out << n.id << ',' << instance.zones->zone_of(n.id) << '\n';
    }
    {
        auto out = open("config.json");
        json j;
        j["margin"] = config.margin;
        j["interconnector_fraction"] = config.interconnector_fraction;
        j["mip_gap"] = config.mip_gap;
        j["voll_eur_mwh"] = config.voll_eur_mwh;
        j["price_cap_eur_mwh"] = config.price_cap_eur_mwh;
        j["redispatch_flow_cap"] = config.redispatch_flow_cap;
        out << j.dump(2) << '\n';
    }
}

std::vector<market::DemandSeries> disaggregate_demand(
    const std::vector<double>& national_profile,
    const std::vector<std::pair<std::string, double>>& base_loads) {
    double total = 0.0;
    for (const auto& [node, load] : base_loads) {
        if (load < 0.0) throw std::invalid_argument("negative base load at " + node);
        total += load;
    }
    if (total <= 0.0) throw std::invalid_argument("base loads sum to zero");
    std::vector<market::DemandSeries> out;
    for (const auto& [node, load] : base_loads) {
        market::DemandSeries d{"d_" + node, node, {}};
        double share = load / total;
        for (double p : national_profile) d.load_mwh.push_back(share * p);
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<std::vector<double>> scale_renewables(const std::vector<double>& aggregate_output,
                                                  const std::vector<double>& capacities) {
    double total = 0.0;
    for (double c : capacities) total += c;
    if (total <= 0.0) throw std::invalid_argument("fleet capacity sums to zero");
    for (std::size_t t = 0; t < aggregate_output.size(); ++t)
        if (aggregate_output[t] > total + 1e-9)
            throw std::invalid_argument("aggregate output exceeds fleet capacity at hour " +
                                        std::to_string(t));
    std::vector<std::vector<double>> out(capacities.size());
    for (std::size_t i = 0; i < capacities.size(); ++i) {
        double share = capacities[i] / total;
        for (double a : aggregate_output) out[i].push_back(share * a);
    }
    return out;
}

namespace {

struct MappingColumns {
    // Flattened (unit, category) pairs with their objective contribution.
    struct Entry {
        const MappingUnit* unit;
        const MappingCategory* category;
        int var = -1;
    };
    std::vector<Entry> entries;
};

}  // namespace

UnitAssignment map_units(const UnitMappingProblem& problem, double gap) {
    // Objective sum_a n_a*(P_a - assigned capacity) + P_a*(n_a - assigned
    // count) is, up to a constant, -(n_a*p_i + P_a) per assignment.
    std::vector<const MappingCategory*> categories;
    lp::LinearProgram lp;
    lp.set_objective_sense(lp::ObjSense::Minimize);
    MappingColumns cols;
    double constant = 0.0;

    auto add_assignment_vars = [&](const MappingUnit& unit,
                                   const std::vector<const MappingCategory*>& cats,
                                   bool optional) {
        std::vector<lp::RowEntry> one;
        for (const MappingCategory* cat : cats) {
            int v = lp.add_variable("x." + unit.id + "." + cat->id, 0.0, 1.0,
                                    -(cat->target_count * unit.capacity_mw +
                                      cat->target_capacity_mw),
                                    lp::VarKind::Binary);
            cols.entries.push_back({&unit, cat, v});
            one.push_back({v, 1.0});
        }
        lp.add_row(std::move(one), optional ? lp::RowSense::LessEqual : lp::RowSense::Equal, 1.0,
                   "assign." + unit.id);
    };

    std::vector<const MappingCategory*> all_categories;
    for (const auto& type : problem.types)
        for (const auto& cat : type.categories) all_categories.push_back(&cat);
    for (const auto& type : problem.types) {
        std::vector<const MappingCategory*> cats;
        for (const auto& cat : type.categories) cats.push_back(&cat);
        if (cats.empty() && !type.units.empty())
            throw std::invalid_argument("type " + type.id + " has units but no categories");
        for (const auto& unit : type.units) add_assignment_vars(unit, cats, false);
    }
    for (const auto& unit : problem.free_pool) add_assignment_vars(unit, all_categories, true);

    for (const MappingCategory* cat : all_categories) {
        constant += cat->target_count * cat->target_capacity_mw +
                    cat->target_capacity_mw * cat->target_count;
        std::vector<lp::RowEntry> cap_row, count_row;
        for (const auto& e : cols.entries) {
            if (e.category != cat) continue;
            cap_row.push_back({e.var, e.unit->capacity_mw});
            count_row.push_back({e.var, 1.0});
        }
        // 0 <= target - assigned <= bound, for capacity and count alike.
        lp.add_row(cap_row, lp::RowSense::LessEqual, cat->target_capacity_mw,
                   "capdev_lo." + cat->id);
        lp.add_row(cap_row, lp::RowSense::GreaterEqual,
                   cat->target_capacity_mw - problem.capacity_dev_bound_mw,
                   "capdev_hi." + cat->id);
        lp.add_row(count_row, lp::RowSense::LessEqual, static_cast<double>(cat->target_count),
                   "countdev_lo." + cat->id);
        lp.add_row(count_row, lp::RowSense::GreaterEqual,
                   static_cast<double>(cat->target_count - problem.count_dev_bound),
                   "countdev_hi." + cat->id);
    }

    lp::SolveResult res = lp::solve_milp(lp, gap);
    if (res.status == lp::SolveStatus::Infeasible) {
        // Elastic re-solve isolates the categories whose deviation bounds bind.
        lp::LinearProgram soft;
        soft.set_objective_sense(lp::ObjSense::Minimize);
        for (int j = 0; j < lp.num_vars(); ++j)
            soft.add_variable(lp.var_name(j), lp.lower(j), lp.upper(j), 0.0, lp.kind(j));
        std::vector<std::pair<std::string, int>> soft_slacks;
        for (int i = 0; i < lp.num_rows(); ++i) {
            lp::Row row = lp.row(i);
            const auto& name = row.name;
            if (name.rfind("capdev_", 0) == 0 || name.rfind("countdev_", 0) == 0) {
                int sv = soft.add_variable("slack." + name, 0.0, lp::kInf, 1.0);
                double sign = row.sense == lp::RowSense::LessEqual ? -1.0 : 1.0;
                row.entries.push_back({sv, sign});
                soft_slacks.emplace_back(name, sv);
            }
            soft.add_row(row.entries, row.sense, row.rhs, name);
        }
        lp::SolveResult diag = lp::solve_milp(soft, 0.0);
        std::string msg = "no assignment fits the deviation bounds; binding categories:";
        if (diag.status == lp::SolveStatus::Optimal) {
            for (const auto& [name, sv] : soft_slacks)
                if (diag.primal[sv] > 1e-6) msg += " " + name;
        }
        throw std::runtime_error(msg);
    }
    if (res.status != lp::SolveStatus::Optimal)
        throw std::runtime_error("unit mapping solve failed: " + res.message);

    UnitAssignment out;
    out.objective = res.objective + constant;
    for (const auto& e : cols.entries)
        if (res.primal[e.var] > 0.5) out.unit_category[e.unit->id] = e.category->id;
    for (const MappingCategory* cat : all_categories) {
        CategoryDeviation dev;
        dev.category_id = cat->id;
        double assigned_cap = 0.0;
        int assigned_count = 0;
        for (const auto& e : cols.entries) {
            if (e.category != cat || res.primal[e.var] <= 0.5) continue;
            assigned_cap += e.unit->capacity_mw;
            ++assigned_count;
        }
        dev.capacity_mw = cat->target_capacity_mw - assigned_cap;
        dev.count = cat->target_count - assigned_count;
        out.deviations.push_back(std::move(dev));
    }
    return out;
}

namespace {

double unif(std::mt19937& rng, double lo, double hi) {
    // Fixed mapping keeps generated files identical across library versions.
    return lo + (hi - lo) * (static_cast<double>(rng()) / 4294967296.0);
}

int unif_int(std::mt19937& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint32_t>(hi - lo + 1));
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

market::MarketInstance gen_synthetic(unsigned seed, int nodes, int sellers, int hours,
                                     const SyntheticOptions& opts) {
    if (nodes < 1 || sellers < 1 || hours < 1)
        throw std::invalid_argument("synthetic sizes must be >= 1");
    std::mt19937 rng(seed);

    std::vector<grid::Node> node_list;
    for (int n = 0; n < nodes; ++n) node_list.push_back({"N" + std::to_string(n + 1), {}, {}});

    std::vector<market::GeneratorOffer> offers;
    double total_cap = 0.0;
    for (int s = 0; s < sellers; ++s) {
        market::GeneratorOffer g;
        g.seller_id = "G" + std::to_string(s + 1);
        g.node_id = node_list[unif_int(rng, 0, nodes - 1)].id;
        double cap = round2(unif(rng, 50.0, 200.0));
        g.p_max = {cap};
        g.p_min = rng() % 2 == 0 ? 0.0 : round2(unif(rng, 0.0, 0.3 * cap));
        g.var_cost = round2(unif(rng, 5.0, 50.0));
        g.fixed_cost = rng() % 2 == 0 ? 0.0 : round2(unif(rng, 10.0, 200.0));
        int uptime_cap = opts.max_uptime > 0 ? std::min(opts.max_uptime, hours) : hours;
        g.min_uptime = unif_int(rng, 1, uptime_cap);
        total_cap += cap;
        offers.push_back(std::move(g));
    }

    std::vector<market::DemandSeries> buyers;
    for (int n = 0; n < nodes; ++n) {
        market::DemandSeries d{"D" + std::to_string(n + 1), node_list[n].id, {}};
        for (int t = 0; t < hours; ++t)
            d.load_mwh.push_back(round2(unif(rng, 0.0, 0.6 * total_cap / nodes)));
        buyers.push_back(std::move(d));
    }

    // Spanning tree plus a few chords; limits slide from covering the whole
    // fleet (congestion 0) down to a fraction of it.
    std::vector<grid::Line> lines;
    double decongested = std::ceil(total_cap / (1.0 - opts.margin));
    for (int n = 1; n < nodes; ++n) {
        grid::Line l;
        l.to = node_list[n].id;
        l.from = node_list[unif_int(rng, 0, n - 1)].id;
        l.susceptance = round2(unif(rng, 1.0, 10.0));
        double tight = round2(unif(rng, 0.15, 0.5) * total_cap);
        l.limit_mw = opts.congestion_level <= 0.0
                         ? decongested
                         : std::max(1.0, (1.0 - opts.congestion_level) * decongested +
                                             opts.congestion_level * tight);
        lines.push_back(std::move(l));
    }
    int chords = nodes >= 3 ? unif_int(rng, 0, nodes / 2) : 0;
    for (int c = 0; c < chords; ++c) {
        int a = unif_int(rng, 0, nodes - 1), b = unif_int(rng, 0, nodes - 1);
        if (a == b) continue;
        const std::string &fa = node_list[a].id, &fb = node_list[b].id;
        bool dup = false;
        for (const auto& l : lines)
            dup |= (l.from == fa && l.to == fb) || (l.from == fb && l.to == fa);
        if (dup) continue;
        grid::Line l;
        l.from = fa;
        l.to = fb;
        l.susceptance = round2(unif(rng, 1.0, 10.0));
        double tight = round2(unif(rng, 0.15, 0.5) * total_cap);
        l.limit_mw = opts.congestion_level <= 0.0
                         ? decongested
                         : std::max(1.0, (1.0 - opts.congestion_level) * decongested +
                                             opts.congestion_level * tight);
        lines.push_back(std::move(l));
    }

    market::MarketInstance inst{grid::Network(node_list, lines, opts.margin), {},
                                std::move(buyers), std::move(offers), hours, 3000.0};

    // Two zones split along the node order when the network is large enough.
    if (nodes >= 2) {
        grid::ZoneMap zm;
        zm.zone_count = 2;
        for (int n = 0; n < nodes; ++n)
            zm.node_zone[node_list[n].id] = n < (nodes + 1) / 2 ? "Z1" : "Z2";
        inst.zones = std::move(zm);
    }
    inst.validate();
    return inst;
}

}  // namespace gridclear::ingest
