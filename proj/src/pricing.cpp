#include "gridclear/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

namespace gridclear::pricing {

namespace {

using clearing::ConfigKind;
using clearing::MarketOutcome;
using market::MarketInstance;

std::string location_of(const MarketOutcome& outcome, const std::string& node_id) {
    switch (outcome.kind) {
        case ConfigKind::National: return "national";
        case ConfigKind::Zonal: return outcome.zones->zone_of(node_id);
        case ConfigKind::Nodal: return node_id;
    }
    return node_id;
}

clearing::ClearingOptions pricing_options(const MarketOutcome& outcome) {
    clearing::ClearingOptions opts;
    opts.interconnector_fraction = outcome.interconnector_fraction;
    opts.margin_override = outcome.margin_override;
    return opts;
}

PriceSurface balance_duals(const MarketInstance& instance, const MarketOutcome& outcome,
                           const clearing::ClearingOptions& opts, std::string rule) {
    const grid::ZoneMap* zones = outcome.zones ? &*outcome.zones : nullptr;
    clearing::ClearingModel model = clearing::build_model(instance, outcome.kind, zones, opts);
    lp::SolveResult res = lp::solve_lp(model.lp);
    if (res.status != lp::SolveStatus::Optimal)
        throw std::runtime_error(rule + " pricing LP failed: " + res.message);
    PriceSurface surface;
    surface.kind = outcome.kind;
    surface.locations = model.locations;
    surface.rule = std::move(rule);
    surface.prices.assign(model.locations.size(), std::vector<double>(instance.horizon, 0.0));
    for (std::size_t loc = 0; loc < model.locations.size(); ++loc)
        for (int t = 0; t < instance.horizon; ++t)
            surface.prices[loc][t] = res.row_duals[model.balance_row[loc][t]];
    return surface;
}

// Lines whose flows the configuration caps, with their effective capacities.
struct CappedLines {
    std::vector<int> lines;
    std::vector<double> caps;
};

CappedLines capped_lines(const MarketInstance& instance, const MarketOutcome& outcome) {
    CappedLines c;
    const grid::Network& net = instance.network;
    if (outcome.kind == ConfigKind::Nodal) {
        for (int l = 0; l < net.num_lines(); ++l) {
            c.lines.push_back(l);
            c.caps.push_back(net.effective_limit(l, outcome.margin_override));
        }
    } else if (outcome.kind == ConfigKind::Zonal) {
        for (int l : grid::cross_zonal_lines(net, *outcome.zones)) {
            c.lines.push_back(l);
            c.caps.push_back(net.effective_limit(l, outcome.margin_override) *
                             outcome.interconnector_fraction);
        }
    }
    return c;
}

std::vector<int> subgraph_components(const grid::Network& net, const std::vector<int>& lines) {
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

double seller_lloc(const market::GeneratorOffer& offer, const market::SellerSchedule& sched,
                   const std::vector<double>& p) {
    // Profit is linear in y under fixed commitment, so the best response per
    // hour sits at an endpoint of [Pmin*u, Pmax*u]; fixed costs cancel.
    double best = 0.0, actual = 0.0;
    for (std::size_t t = 0; t < sched.dispatch.size(); ++t) {
        double margin = p[t] - offer.var_cost;
        int u = sched.commitment[t];
        best += std::max(margin * offer.p_min * u, margin * offer.p_max_at(t) * u);
        actual += margin * sched.dispatch[t];
    }
    return std::max(0.0, best - actual);
}

double seller_best_response(const market::GeneratorOffer& offer, int horizon,
                            const std::vector<double>& p) {
    lp::LinearProgram lp;
    lp.set_objective_sense(lp::ObjSense::Maximize);
    std::vector<int> y(horizon), u(horizon), phi(horizon);
    for (int t = 0; t < horizon; ++t) {
        y[t] = lp.add_variable("y", 0.0, offer.p_max_at(t), p[t] - offer.var_cost);
        u[t] = lp.add_variable("u", 0.0, 1.0, -offer.fixed_cost, lp::VarKind::Binary);
        phi[t] = lp.add_variable("phi", 0.0, 1.0, 0.0);
    }
    for (auto& row : market::build_uc_constraints(offer, horizon, y, u, phi))
        lp.add_row(std::move(row.entries), row.sense, row.rhs, std::move(row.name));
    lp::SolveResult res = lp::solve_milp(lp, 0.0);
    if (res.status != lp::SolveStatus::Optimal)
        throw std::runtime_error("best-response solve failed for " + offer.seller_id);
    return res.objective;
}

}  // namespace

int PriceSurface::location_index(const std::string& loc) const {
    for (std::size_t i = 0; i < locations.size(); ++i)
        if (locations[i] == loc) return static_cast<int>(i);
    throw std::invalid_argument("no price for location " + loc);
}

double PriceSurface::at(const std::string& loc, int hour) const {
    return prices[location_index(loc)].at(hour);
}

double node_price(const MarketInstance&, const MarketOutcome& outcome,
                  const PriceSurface& surface, const std::string& node_id, int hour) {
    return surface.at(location_of(outcome, node_id), hour);
}

PriceSurface ip_prices(const MarketInstance& instance, const MarketOutcome& outcome) {
    std::vector<std::vector<int>> fixed(outcome.schedule.sellers.size());
    for (std::size_t s = 0; s < outcome.schedule.sellers.size(); ++s)
        fixed[s] = outcome.schedule.sellers[s].commitment;
    clearing::ClearingOptions opts = pricing_options(outcome);
    opts.fixed_commitment = &fixed;
    return balance_duals(instance, outcome, opts, "ip");
}

PriceSurface ch_prices(const MarketInstance& instance, const MarketOutcome& outcome) {
    clearing::ClearingOptions opts = pricing_options(outcome);
    opts.relax_commitment = true;
    return balance_duals(instance, outcome, opts, "ch");
}

const ParticipantSettlement& Settlement::of(const std::string& id) const {
    for (const auto& p : participants)
        if (p.id == id) return p;
    throw std::invalid_argument("no settlement entry for " + id);
}

Settlement settle(const MarketInstance& instance, const MarketOutcome& outcome,
                  const PriceSurface& prices) {
    const int T = instance.horizon;
    Settlement st;
    st.rule = prices.rule;
    for (std::size_t s = 0; s < instance.sellers.size(); ++s) {
        const auto& offer = instance.sellers[s];
        const auto& sched = outcome.schedule.sellers[s];
        std::vector<double> p(T);
        for (int t = 0; t < T; ++t)
            p[t] = node_price(instance, outcome, prices, offer.node_id, t);
        ParticipantSettlement ps;
        ps.id = offer.seller_id;
        ps.is_seller = true;
        for (int t = 0; t < T; ++t) ps.revenue += p[t] * sched.dispatch[t];
        ps.cost = market::cost_of(offer, sched);
        ps.utility = ps.revenue - ps.cost;
        ps.mwp = std::max(-ps.utility, 0.0);
        ps.lloc = seller_lloc(offer, sched, p);
        ps.gloc = std::max(0.0, seller_best_response(offer, T, p) - ps.utility);
        st.total_lloc += ps.lloc;
        st.total_gloc += ps.gloc;
        st.total_mwp += ps.mwp;
        st.participants.push_back(std::move(ps));
    }
    for (std::size_t b = 0; b < instance.buyers.size(); ++b) {
        const auto& buyer = instance.buyers[b];
        ParticipantSettlement ps;
        ps.id = buyer.buyer_id;
        for (int t = 0; t < T; ++t)
            ps.revenue -= node_price(instance, outcome, prices, buyer.node_id, t) *
                          outcome.served[b][t];
        ps.utility = ps.revenue;  // inelastic demand: no valuation term
        st.participants.push_back(std::move(ps));
    }
    st.network_lloc = network_lloc(instance, outcome, prices);
    return st;
}

double network_lloc(const MarketInstance& instance, const MarketOutcome& outcome,
                    const PriceSurface& prices) {
    const grid::Network& net = instance.network;
    const int T = instance.horizon;
    CappedLines capped = capped_lines(instance, outcome);
    if (capped.lines.empty()) return 0.0;

    // Per-line price spread the transport participant earns: p_to - p_from.
    std::vector<std::vector<double>> spread(capped.lines.size(), std::vector<double>(T));
    double actual = 0.0;
    for (std::size_t i = 0; i < capped.lines.size(); ++i) {
        int l = capped.lines[i];
        for (int t = 0; t < T; ++t) {
            spread[i][t] =
                node_price(instance, outcome, prices, net.lines()[l].to, t) -
                node_price(instance, outcome, prices, net.lines()[l].from, t);
            actual += outcome.flows[l][t] * spread[i][t];
        }
    }

    lp::LinearProgram lp;
    lp.set_objective_sense(lp::ObjSense::Maximize);
    std::vector<char> involved(net.num_nodes(), 0);
    for (int l : capped.lines) involved[net.from_index(l)] = involved[net.to_index(l)] = 1;
    std::vector<int> comp = subgraph_components(net, capped.lines);
    std::vector<char> ref_taken(net.num_nodes(), 0);
    std::vector<std::vector<int>> theta(net.num_nodes(), std::vector<int>(T, -1));
    for (int n = 0; n < net.num_nodes(); ++n) {
        if (!involved[n]) continue;
        bool ref = !ref_taken[comp[n]];
        ref_taken[comp[n]] = 1;
        for (int t = 0; t < T; ++t)
            theta[n][t] = lp.add_variable("theta", ref ? 0.0 : -lp::kInf, ref ? 0.0 : lp::kInf, 0.0);
    }
    for (std::size_t i = 0; i < capped.lines.size(); ++i) {
        int l = capped.lines[i];
        double b = net.lines()[l].susceptance;
        int nf = net.from_index(l), nt = net.to_index(l);
        for (int t = 0; t < T; ++t) {
            lp.set_objective_coeff(theta[nf][t],
                                   lp.objective_coeff(theta[nf][t]) + b * spread[i][t]);
            lp.set_objective_coeff(theta[nt][t],
                                   lp.objective_coeff(theta[nt][t]) - b * spread[i][t]);
            std::vector<lp::RowEntry> ent{{theta[nf][t], b}, {theta[nt][t], -b}};
            lp.add_row(ent, lp::RowSense::LessEqual, capped.caps[i]);
            lp.add_row(ent, lp::RowSense::GreaterEqual, -capped.caps[i]);
        }
    }
    lp::SolveResult res = lp::solve_lp(lp);
    if (res.status != lp::SolveStatus::Optimal)
        throw std::runtime_error("network best-response LP failed: " + res.message);
    return std::max(0.0, res.objective - actual);
}

double join_functional(const MarketInstance& instance, const MarketOutcome& outcome,
                       const PriceSurface& prices) {
    Settlement st = settle(instance, outcome, prices);
    double total = st.network_lloc;
    for (const auto& p : st.participants)
        if (p.is_seller) total += std::max({p.lloc, p.mwp, 0.0});
    return total;
}

PriceSurface join_prices(const MarketInstance& instance, const MarketOutcome& outcome) {
    const grid::Network& net = instance.network;
    const int T = instance.horizon;
    const double V = instance.voll;

    std::vector<std::string> locations;
    switch (outcome.kind) {
        case ConfigKind::National: locations = {"national"}; break;
        case ConfigKind::Zonal: locations = outcome.zones->zone_ids(); break;
        case ConfigKind::Nodal:
            for (const auto& n : net.nodes()) locations.push_back(n.id);
            break;
    }
    std::map<std::string, int> loc_idx;
    for (std::size_t i = 0; i < locations.size(); ++i) loc_idx[locations[i]] = static_cast<int>(i);
    auto loc_of_node = [&](const std::string& node_id) {
        return loc_idx.at(location_of(outcome, node_id));
    };

    lp::LinearProgram lp;
    lp.set_objective_sense(lp::ObjSense::Minimize);
    std::vector<std::vector<int>> p(locations.size(), std::vector<int>(T));
    for (std::size_t i = 0; i < locations.size(); ++i)
        for (int t = 0; t < T; ++t)
            p[i][t] = lp.add_variable("p." + locations[i] + "." + std::to_string(t), -V, V, 0.0);

    // Sellers: m_s dominates both the fixed-commitment lost opportunity cost
    // (per-hour endpoint epigraph) and the make-whole payment, each linear in p.
    for (std::size_t s = 0; s < instance.sellers.size(); ++s) {
        const auto& offer = instance.sellers[s];
        const auto& sched = outcome.schedule.sellers[s];
        int ploc = loc_of_node(offer.node_id);
        int m_s = lp.add_variable("m." + offer.seller_id, 0.0, lp::kInf, 1.0);
        std::vector<int> lambda(T);
        std::vector<lp::RowEntry> lloc_row{{m_s, -1.0}};
        double lloc_rhs = 0.0;
        for (int t = 0; t < T; ++t) {
            lambda[t] = lp.add_variable("lam." + offer.seller_id + "." + std::to_string(t),
                                        -lp::kInf, lp::kInf, 0.0);
            for (double endpoint : {offer.p_min * sched.commitment[t],
                                    offer.p_max_at(t) * sched.commitment[t]})
                lp.add_row({{lambda[t], 1.0}, {p[ploc][t], -endpoint}},
                           lp::RowSense::GreaterEqual, -offer.var_cost * endpoint);
            lloc_row.push_back({lambda[t], 1.0});
            lloc_row.push_back({p[ploc][t], -sched.dispatch[t]});
            lloc_rhs -= offer.var_cost * sched.dispatch[t];
        }
        lp.add_row(std::move(lloc_row), lp::RowSense::LessEqual, lloc_rhs,
                   "lloc." + offer.seller_id);
        std::vector<lp::RowEntry> mwp_row{{m_s, -1.0}};
        for (int t = 0; t < T; ++t) mwp_row.push_back({p[ploc][t], -sched.dispatch[t]});
        lp.add_row(std::move(mwp_row), lp::RowSense::LessEqual,
                   -market::cost_of(offer, sched), "mwp." + offer.seller_id);
    }

    // Network participant: weak LP duality bounds its best transport payoff,
    // so m_net dominates its lost opportunity cost; minimization makes the
    // bound tight.
    CappedLines capped = capped_lines(instance, outcome);
    if (!capped.lines.empty()) {
        int m_net = lp.add_variable("m.network", 0.0, lp::kInf, 1.0);
        std::vector<std::vector<int>> mu_hi(capped.lines.size(), std::vector<int>(T));
        std::vector<std::vector<int>> mu_lo(capped.lines.size(), std::vector<int>(T));
        for (std::size_t i = 0; i < capped.lines.size(); ++i)
            for (int t = 0; t < T; ++t) {
                mu_hi[i][t] = lp.add_variable("mu+", 0.0, lp::kInf, 0.0);
                mu_lo[i][t] = lp.add_variable("mu-", 0.0, lp::kInf, 0.0);
            }
        std::vector<char> involved(net.num_nodes(), 0);
        for (int l : capped.lines) involved[net.from_index(l)] = involved[net.to_index(l)] = 1;
        std::vector<int> comp = subgraph_components(net, capped.lines);
        std::vector<char> ref_taken(net.num_nodes(), 0);
        for (int n = 0; n < net.num_nodes(); ++n) {
            if (!involved[n]) continue;
            if (!ref_taken[comp[n]]) {  // reference angle: no stationarity row
                ref_taken[comp[n]] = 1;
                continue;
            }
            for (int t = 0; t < T; ++t) {
                std::map<int, double> coeff;
                for (std::size_t i = 0; i < capped.lines.size(); ++i) {
                    int l = capped.lines[i];
                    double a = 0.0;
                    if (net.from_index(l) == n) a = 1.0;
                    if (net.to_index(l) == n) a = -1.0;
                    if (a == 0.0) continue;
                    double b = net.lines()[l].susceptance;
                    coeff[p[loc_of_node(net.lines()[l].to)][t]] += a * b;
                    coeff[p[loc_of_node(net.lines()[l].from)][t]] -= a * b;
                    coeff[mu_hi[i][t]] -= a * b;
                    coeff[mu_lo[i][t]] += a * b;
                }
                std::vector<lp::RowEntry> entries;
                for (auto [var, c] : coeff) entries.push_back({var, c});
                lp.add_row(std::move(entries), lp::RowSense::Equal, 0.0,
                           "netstat." + net.nodes()[n].id + "." + std::to_string(t));
            }
        }
        std::map<int, double> dom;
        dom[m_net] = -1.0;
        for (std::size_t i = 0; i < capped.lines.size(); ++i) {
            int l = capped.lines[i];
            for (int t = 0; t < T; ++t) {
                dom[mu_hi[i][t]] += capped.caps[i];
                dom[mu_lo[i][t]] += capped.caps[i];
                dom[p[loc_of_node(net.lines()[l].to)][t]] -= outcome.flows[l][t];
                dom[p[loc_of_node(net.lines()[l].from)][t]] += outcome.flows[l][t];
            }
        }
        std::vector<lp::RowEntry> entries;
        for (auto [var, c] : dom) entries.push_back({var, c});
        lp.add_row(std::move(entries), lp::RowSense::LessEqual, 0.0, "netdom");
    }

    lp::SolveResult res = lp::solve_lp(lp);
    if (res.status != lp::SolveStatus::Optimal)
        throw std::runtime_error("join pricing LP failed: " + res.message);
    PriceSurface surface;
    surface.kind = outcome.kind;
    surface.locations = locations;
    surface.rule = "join";
    surface.prices.assign(locations.size(), std::vector<double>(T, 0.0));
    for (std::size_t i = 0; i < locations.size(); ++i)
        for (int t = 0; t < T; ++t) surface.prices[i][t] = res.primal[p[i][t]];
    return surface;
}

}  // namespace gridclear::pricing
