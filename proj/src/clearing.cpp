#include "gridclear/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

namespace gridclear::clearing {

namespace {

using market::MarketInstance;

// Union-find components over a chosen line subset; one reference angle per
// component removes the translation freedom of the DC equations.
std::vector<int> component_of(const grid::Network& net, const std::vector<int>& lines) {
    std::vector<int> parent(net.num_nodes());
    for (int i = 0; i < net.num_nodes(); ++i) parent[i] = i;
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int l : lines) parent[find(net.from_index(l))] = find(net.to_index(l));
    std::vector<int> comp(net.num_nodes());
    for (int i = 0; i < net.num_nodes(); ++i) comp[i] = find(i);
    return comp;
}

std::string hour_tag(int t) { return std::to_string(t); }

}  // namespace

std::string config_tag(ConfigKind kind, int zone_count) {
    switch (kind) {
        case ConfigKind::National: return "national";
        case ConfigKind::Zonal: return "zonal" + std::to_string(zone_count);
        case ConfigKind::Nodal: return "nodal";
    }
    return "unknown";
}

ClearingModel build_model(const MarketInstance& instance, ConfigKind kind,
                          const grid::ZoneMap* zones, const ClearingOptions& opts) {
    instance.validate();
    if (kind == ConfigKind::Zonal) {
        if (zones == nullptr) throw std::invalid_argument("zonal clearing requires a zone map");
        zones->validate(instance.network);
        if (opts.interconnector_fraction <= 0.0 || opts.interconnector_fraction > 1.0)
            throw std::invalid_argument("interconnector fraction must lie in (0,1]");
    }
    const grid::Network& net = instance.network;
    const int T = instance.horizon;
    const int S = static_cast<int>(instance.sellers.size());
    const int B = static_cast<int>(instance.buyers.size());

    ClearingModel m;
    m.kind = kind;
    auto& lp = m.lp;
    lp.set_objective_sense(lp::ObjSense::Minimize);

    // Generator columns and unit-commitment rows.
    m.y.assign(S, std::vector<int>(T));
    m.u.assign(S, std::vector<int>(T));
    m.phi.assign(S, std::vector<int>(T));
    for (int s = 0; s < S; ++s) {
        const auto& offer = instance.sellers[s];
        for (int t = 0; t < T; ++t) {
            m.y[s][t] = lp.add_variable("y." + offer.seller_id + "." + hour_tag(t), 0.0,
                                        offer.p_max_at(t), offer.var_cost);
            double ulo = 0.0, uhi = 1.0;
            lp::VarKind ukind = opts.relax_commitment ? lp::VarKind::Continuous
                                                      : lp::VarKind::Binary;
            if (opts.fixed_commitment != nullptr) {
                ulo = uhi = static_cast<double>((*opts.fixed_commitment)[s][t]);
                ukind = lp::VarKind::Continuous;
            }
            m.u[s][t] = lp.add_variable("u." + offer.seller_id + "." + hour_tag(t), ulo, uhi,
                                        offer.fixed_cost, ukind);
            m.phi[s][t] =
                lp.add_variable("phi." + offer.seller_id + "." + hour_tag(t), 0.0, 1.0, 0.0);
        }
        for (auto& row : market::build_uc_constraints(offer, T, m.y[s], m.u[s], m.phi[s]))
            lp.add_row(std::move(row.entries), row.sense, row.rhs, std::move(row.name));
    }
    for (auto [s, t] : opts.forced_off) lp.set_bounds(m.u[s][t], 0.0, 0.0);

    // Unserved-energy slack guarantees feasibility; priced at VOLL.
    m.unserved.assign(B, std::vector<int>(T));
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < T; ++t)
            m.unserved[b][t] =
                lp.add_variable("uns." + instance.buyers[b].buyer_id + "." + hour_tag(t), 0.0,
                                instance.buyers[b].load_mwh[t], instance.voll);

    // Angle columns where the configuration constrains flows.
    m.theta.assign(net.num_nodes(), std::vector<int>(T, -1));
    std::vector<int> flow_lines;
    if (kind == ConfigKind::Nodal) {
        for (int l = 0; l < net.num_lines(); ++l) flow_lines.push_back(l);
    } else if (kind == ConfigKind::Zonal) {
        flow_lines = grid::cross_zonal_lines(net, *zones);
    }
    m.capped_lines = flow_lines;
    if (!flow_lines.empty() || kind == ConfigKind::Nodal) {
        std::vector<char> needs_theta(net.num_nodes(), kind == ConfigKind::Nodal ? 1 : 0);
        for (int l : flow_lines) {
            needs_theta[net.from_index(l)] = 1;
            needs_theta[net.to_index(l)] = 1;
        }
        std::vector<int> comp = component_of(net, flow_lines);
        std::vector<char> fixed_ref(net.num_nodes(), 0);
        for (int n = 0; n < net.num_nodes(); ++n) {
            if (!needs_theta[n]) continue;
            bool ref = !fixed_ref[comp[n]];
            fixed_ref[comp[n]] = 1;
            for (int t = 0; t < T; ++t)
                m.theta[n][t] = lp.add_variable("theta." + net.nodes()[n].id + "." + hour_tag(t),
                                                ref ? 0.0 : -lp::kInf, ref ? 0.0 : lp::kInf, 0.0);
        }
    }

    // Flow caps.
    for (int l : flow_lines) {
        double cap = net.effective_limit(l, opts.margin_override);
        if (kind == ConfigKind::Zonal) cap *= opts.interconnector_fraction;
        double b = net.lines()[l].susceptance;
        int nf = net.from_index(l), nt = net.to_index(l);
        const std::string tag = net.lines()[l].from + "-" + net.lines()[l].to;
        for (int t = 0; t < T; ++t) {
            std::vector<lp::RowEntry> ent{{m.theta[nf][t], b}, {m.theta[nt][t], -b}};
            lp.add_row(ent, lp::RowSense::LessEqual, cap, "flow_hi." + tag + "." + hour_tag(t));
            lp.add_row(ent, lp::RowSense::GreaterEqual, -cap,
                       "flow_lo." + tag + "." + hour_tag(t));
        }
    }

    // Balance rows per location and hour; their duals carry the prices.
    auto add_balance = [&](const std::string& loc, int t, std::vector<lp::RowEntry> entries,
                           double rhs) {
        int row = lp.add_row(std::move(entries), lp::RowSense::Equal, rhs,
                             "balance." + loc + "." + hour_tag(t));
        return row;
    };

    if (kind == ConfigKind::National) {
        m.locations = {"national"};
        m.balance_row.assign(1, std::vector<int>(T));
        for (int t = 0; t < T; ++t) {
            std::vector<lp::RowEntry> entries;
            for (int s = 0; s < S; ++s) entries.push_back({m.y[s][t], 1.0});
            for (int b = 0; b < B; ++b) entries.push_back({m.unserved[b][t], 1.0});
            m.balance_row[0][t] =
                add_balance("national", t, std::move(entries), instance.total_demand(t));
        }
    } else if (kind == ConfigKind::Nodal) {
        m.locations.resize(net.num_nodes());
        m.balance_row.assign(net.num_nodes(), std::vector<int>(T));
        for (int n = 0; n < net.num_nodes(); ++n) m.locations[n] = net.nodes()[n].id;
        for (int n = 0; n < net.num_nodes(); ++n) {
            for (int t = 0; t < T; ++t) {
                std::map<int, double> coeff;
                for (int s = 0; s < S; ++s)
                    if (net.node_index(instance.sellers[s].node_id) == n)
                        coeff[m.y[s][t]] += 1.0;
                double rhs = 0.0;
                for (int b = 0; b < B; ++b) {
                    if (net.node_index(instance.buyers[b].node_id) != n) continue;
                    coeff[m.unserved[b][t]] += 1.0;
                    rhs += instance.buyers[b].load_mwh[t];
                }
                for (int l = 0; l < net.num_lines(); ++l) {
                    double b_l = net.lines()[l].susceptance;
                    double sign = 0.0;
                    if (net.from_index(l) == n) sign = -1.0;  // export over l
                    if (net.to_index(l) == n) sign = 1.0;     // import over l
                    if (sign == 0.0) continue;
                    coeff[m.theta[net.from_index(l)][t]] += sign * b_l;
                    coeff[m.theta[net.to_index(l)][t]] -= sign * b_l;
                }
                std::vector<lp::RowEntry> entries;
                for (auto [var, c] : coeff) entries.push_back({var, c});
                m.balance_row[n][t] = add_balance(net.nodes()[n].id, t, std::move(entries), rhs);
            }
        }
    } else {  // Zonal
        m.locations = zones->zone_ids();
        const int Z = static_cast<int>(m.locations.size());
        m.balance_row.assign(Z, std::vector<int>(T));
        std::map<std::string, int> zone_idx;
        for (int z = 0; z < Z; ++z) zone_idx[m.locations[z]] = z;
        for (int z = 0; z < Z; ++z) {
            const std::string& zid = m.locations[z];
            for (int t = 0; t < T; ++t) {
                std::map<int, double> coeff;
                double rhs = 0.0;
                for (int s = 0; s < S; ++s)
                    if (zones->zone_of(instance.sellers[s].node_id) == zid)
                        coeff[m.y[s][t]] += 1.0;
                for (int b = 0; b < B; ++b) {
                    if (zones->zone_of(instance.buyers[b].node_id) != zid) continue;
                    coeff[m.unserved[b][t]] += 1.0;
                    rhs += instance.buyers[b].load_mwh[t];
                }
                for (int l : flow_lines) {
                    const grid::Line& line = net.lines()[l];
                    double sign = 0.0;
                    if (zones->zone_of(line.from) == zid) sign = -1.0;
                    if (zones->zone_of(line.to) == zid) sign = 1.0;
                    if (sign == 0.0) continue;
                    coeff[m.theta[net.from_index(l)][t]] += sign * line.susceptance;
                    coeff[m.theta[net.to_index(l)][t]] -= sign * line.susceptance;
                }
                std::vector<lp::RowEntry> entries;
                for (auto [var, c] : coeff) entries.push_back({var, c});
                m.balance_row[z][t] = add_balance(zid, t, std::move(entries), rhs);
            }
        }
    }
    return m;
}

MarketOutcome extract_outcome(const MarketInstance& instance, const ClearingModel& model,
                              const lp::SolveResult& result, const ClearingOptions& opts,
                              const grid::ZoneMap* zones) {
    const grid::Network& net = instance.network;
    const int T = instance.horizon;
    MarketOutcome out;
    out.kind = model.kind;
    out.interconnector_fraction = opts.interconnector_fraction;
    out.margin_override = opts.margin_override;
    if (zones != nullptr) {
        out.zones = *zones;
        out.zone_count = zones->zone_count;
    }
    const int S = static_cast<int>(instance.sellers.size());
    const int B = static_cast<int>(instance.buyers.size());
    out.schedule.sellers.resize(S);
    for (int s = 0; s < S; ++s) {
        auto& sched = out.schedule.sellers[s];
        sched.dispatch.resize(T);
        sched.commitment.resize(T);
        sched.startup.resize(T);
        for (int t = 0; t < T; ++t) {
            sched.dispatch[t] = result.primal[model.y[s][t]];
            sched.commitment[t] = result.primal[model.u[s][t]] > 0.5 ? 1 : 0;
        }
        // Startup indicators carry no cost; normalize them to the minimal
        // pattern implied by the commitments.
        sched.startup[0] = 0;
        for (int t = 1; t < T; ++t)
            sched.startup[t] = std::max(0, sched.commitment[t] - sched.commitment[t - 1]);
        // Drop idle commitments when doing so stays feasible; never dearer.
        if (instance.sellers[s].fixed_cost >= 0.0) {
            market::SellerSchedule trimmed = sched;
            for (int t = 0; t < T; ++t)
                if (trimmed.dispatch[t] <= 1e-9) trimmed.commitment[t] = 0;
            trimmed.startup[0] = 0;
            for (int t = 1; t < T; ++t)
                trimmed.startup[t] =
                    std::max(0, trimmed.commitment[t] - trimmed.commitment[t - 1]);
            if (!market::check_schedule(instance.sellers[s], trimmed)) sched = trimmed;
        }
    }
    out.served.assign(B, std::vector<double>(T, 0.0));
    out.unserved.assign(B, std::vector<double>(T, 0.0));
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < T; ++t) {
            out.unserved[b][t] = result.primal[model.unserved[b][t]];
            out.served[b][t] = instance.buyers[b].load_mwh[t] - out.unserved[b][t];
            out.total_unserved += out.unserved[b][t];
        }
    if (model.kind != ConfigKind::National) {
        out.angles.assign(net.num_nodes(), std::vector<double>(T, 0.0));
        for (int n = 0; n < net.num_nodes(); ++n)
            for (int t = 0; t < T; ++t)
                if (model.theta[n][t] >= 0) out.angles[n][t] = result.primal[model.theta[n][t]];
        out.flows.assign(net.num_lines(), std::vector<double>(T, 0.0));
        for (int l : model.capped_lines) {
            int nf = net.from_index(l), nt = net.to_index(l);
            double b = net.lines()[l].susceptance;
            for (int t = 0; t < T; ++t)
                out.flows[l][t] = b * (out.angles[nf][t] - out.angles[nt][t]);
        }
        if (model.kind == ConfigKind::Nodal) out.flows = grid::dc_flows(net, out.angles);
    }
    out.generation_cost = 0.0;
    for (int s = 0; s < S; ++s)
        out.generation_cost += market::cost_of(instance.sellers[s], out.schedule.sellers[s]);
    out.objective = out.generation_cost + instance.voll * out.total_unserved;
    out.achieved_gap = result.achieved_gap;
    return out;
}

namespace {

MarketOutcome solve_and_extract(const MarketInstance& instance, ConfigKind kind,
                                const grid::ZoneMap* zones, ClearingOptions opts) {
    ClearingModel model = build_model(instance, kind, zones, opts);
    lp::SolveResult res = lp::solve_milp(model.lp, opts.gap);
    if (res.status != lp::SolveStatus::Optimal)
        throw std::runtime_error("clearing failed (" + config_tag(kind, 0) + "): " + res.message);
    if (opts.deterministic_tie_break && opts.gap == 0.0) {
        // Lexicographic stage: among cost-optimal allocations prefer
        // low-index sellers, pinning the dispatch for golden tests.
        ClearingModel second = build_model(instance, kind, zones, opts);
        std::vector<lp::RowEntry> cost_row;
        for (int j = 0; j < second.lp.num_vars(); ++j)
            if (second.lp.objective_coeff(j) != 0.0)
                cost_row.push_back({j, second.lp.objective_coeff(j)});
        for (int j = 0; j < second.lp.num_vars(); ++j) second.lp.set_objective_coeff(j, 0.0);
        const int S = static_cast<int>(instance.sellers.size());
        for (int s = 0; s < S; ++s)
            for (int t = 0; t < instance.horizon; ++t)
                second.lp.set_objective_coeff(second.y[s][t], static_cast<double>(s));
        second.lp.add_row(std::move(cost_row), lp::RowSense::LessEqual, res.objective + 1e-7,
                          "optimal_cost_cap");
        lp::SolveResult res2 = lp::solve_milp(second.lp, 0.0);
        if (res2.status == lp::SolveStatus::Optimal) {
            MarketOutcome out = extract_outcome(instance, second, res2, opts, zones);
            out.achieved_gap = res.achieved_gap;
            return out;
        }
    }
    return extract_outcome(instance, model, res, opts, zones);
}

}  // namespace

MarketOutcome clear_national(const MarketInstance& instance, double gap,
                             const ClearingOptions& extra) {
    ClearingOptions opts = extra;
    opts.gap = gap;
    return solve_and_extract(instance, ConfigKind::National, nullptr, opts);
}

MarketOutcome clear_zonal(const MarketInstance& instance, const grid::ZoneMap& zones,
                          double interconnector_fraction, double gap,
                          const ClearingOptions& extra) {
    ClearingOptions opts = extra;
    opts.gap = gap;
    opts.interconnector_fraction = interconnector_fraction;
    return solve_and_extract(instance, ConfigKind::Zonal, &zones, opts);
}

MarketOutcome clear_nodal(const MarketInstance& instance, double gap,
                          const ClearingOptions& extra) {
    ClearingOptions opts = extra;
    opts.gap = gap;
    return solve_and_extract(instance, ConfigKind::Nodal, nullptr, opts);
}

}  // namespace gridclear::clearing
