#include "gridclear/redispatch.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

namespace gridclear::redispatch {

namespace {

using clearing::MarketOutcome;
using market::MarketInstance;

constexpr double kBalanceTol = 1e-7;  // matches the solver feasibility tolerance

struct RedispatchModel {
    lp::LinearProgram lp;
    std::vector<std::vector<int>> y, u, phi;   // [seller][hour]
    std::vector<std::vector<int>> theta;       // [node][hour]
    std::vector<int> cost_epi;                 // per seller
    std::vector<std::vector<int>> volume_epi;  // [seller][hour]
};

std::vector<int> all_lines(const grid::Network& net) {
    std::vector<int> v(net.num_lines());
    for (int l = 0; l < net.num_lines(); ++l) v[l] = l;
    return v;
}

std::vector<int> reference_nodes(const grid::Network& net) {
    std::vector<int> parent(net.num_nodes());
    for (int i = 0; i < net.num_nodes(); ++i) parent[i] = i;
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int l = 0; l < net.num_lines(); ++l)
        parent[find(net.from_index(l))] = find(net.to_index(l));
    std::vector<char> seen(net.num_nodes(), 0);
    std::vector<int> refs;
    for (int n = 0; n < net.num_nodes(); ++n) {
        int r = find(n);
        if (!seen[r]) {
            seen[r] = 1;
            refs.push_back(n);
        }
    }
    return refs;
}

RedispatchModel build_model(const MarketInstance& instance, const MarketOutcome& base,
                            FlowCapMode mode) {
    const grid::Network& net = instance.network;
    const int T = instance.horizon;
    const int S = static_cast<int>(instance.sellers.size());
    RedispatchModel m;
    auto& lp = m.lp;
    lp.set_objective_sense(lp::ObjSense::Minimize);

    m.y.assign(S, std::vector<int>(T));
    m.u.assign(S, std::vector<int>(T));
    m.phi.assign(S, std::vector<int>(T));
    for (int s = 0; s < S; ++s) {
        const auto& offer = instance.sellers[s];
        for (int t = 0; t < T; ++t) {
            m.y[s][t] = lp.add_variable("y." + offer.seller_id + "." + std::to_string(t), 0.0,
                                        offer.p_max_at(t), 0.0);
            m.u[s][t] = lp.add_variable("u." + offer.seller_id + "." + std::to_string(t), 0.0, 1.0,
                                        0.0, lp::VarKind::Binary);
            m.phi[s][t] =
                lp.add_variable("phi." + offer.seller_id + "." + std::to_string(t), 0.0, 1.0, 0.0);
        }
        for (auto& row : market::build_uc_constraints(offer, T, m.y[s], m.u[s], m.phi[s]))
            lp.add_row(std::move(row.entries), row.sense, row.rhs, std::move(row.name));
    }

    m.theta.assign(net.num_nodes(), std::vector<int>(T));
    std::vector<char> is_ref(net.num_nodes(), 0);
    for (int n : reference_nodes(net)) is_ref[n] = 1;
    for (int n = 0; n < net.num_nodes(); ++n)
        for (int t = 0; t < T; ++t)
            m.theta[n][t] =
                lp.add_variable("theta." + net.nodes()[n].id + "." + std::to_string(t),
                                is_ref[n] ? 0.0 : -lp::kInf, is_ref[n] ? 0.0 : lp::kInf, 0.0);

    // Physical line limits, and optionally the realized cross-zonal flows of
    // the base solution as additional caps.
    for (int l = 0; l < net.num_lines(); ++l) {
        double cap = net.effective_limit(l, base.margin_override);
        double b = net.lines()[l].susceptance;
        int nf = net.from_index(l), nt = net.to_index(l);
        const std::string tag = net.lines()[l].from + "-" + net.lines()[l].to;
        for (int t = 0; t < T; ++t) {
            std::vector<lp::RowEntry> ent{{m.theta[nf][t], b}, {m.theta[nt][t], -b}};
            lp.add_row(ent, lp::RowSense::LessEqual, cap, "flow_hi." + tag + "." + std::to_string(t));
            lp.add_row(ent, lp::RowSense::GreaterEqual, -cap,
                       "flow_lo." + tag + "." + std::to_string(t));
        }
    }
    if (mode == FlowCapMode::ZonalFlows && base.kind == clearing::ConfigKind::Zonal &&
        base.zones) {
        for (int l : grid::cross_zonal_lines(net, *base.zones)) {
            double b = net.lines()[l].susceptance;
            int nf = net.from_index(l), nt = net.to_index(l);
            const std::string tag = net.lines()[l].from + "-" + net.lines()[l].to;
            for (int t = 0; t < T; ++t) {
                double cap = std::abs(base.flows[l][t]) + 1e-9;
                std::vector<lp::RowEntry> ent{{m.theta[nf][t], b}, {m.theta[nt][t], -b}};
                lp.add_row(ent, lp::RowSense::LessEqual, cap,
                           "zflow_hi." + tag + "." + std::to_string(t));
                lp.add_row(ent, lp::RowSense::GreaterEqual, -cap,
                           "zflow_lo." + tag + "." + std::to_string(t));
            }
        }
    }

    // Nodal balance with demand pinned at the base allocation.
    for (int n = 0; n < net.num_nodes(); ++n) {
        for (int t = 0; t < T; ++t) {
            std::map<int, double> coeff;
            double rhs = 0.0;
            for (int s = 0; s < S; ++s)
                if (net.node_index(instance.sellers[s].node_id) == n) coeff[m.y[s][t]] += 1.0;
            for (int b = 0; b < static_cast<int>(instance.buyers.size()); ++b)
                if (net.node_index(instance.buyers[b].node_id) == n) rhs += base.served[b][t];
            for (int l = 0; l < net.num_lines(); ++l) {
                double b_l = net.lines()[l].susceptance;
                double sign = 0.0;
                if (net.from_index(l) == n) sign = -1.0;
                if (net.to_index(l) == n) sign = 1.0;
                if (sign == 0.0) continue;
                coeff[m.theta[net.from_index(l)][t]] += sign * b_l;
                coeff[m.theta[net.to_index(l)][t]] -= sign * b_l;
            }
            std::vector<lp::RowEntry> entries;
            for (auto [var, c] : coeff) entries.push_back({var, c});
            lp.add_row(std::move(entries), lp::RowSense::Equal, rhs,
                       "balance." + net.nodes()[n].id + "." + std::to_string(t));
        }
    }

    // Epigraphs for both objectives; the caller picks which one to price.
    m.cost_epi.resize(S);
    m.volume_epi.assign(S, std::vector<int>(T));
    for (int s = 0; s < S; ++s) {
        const auto& offer = instance.sellers[s];
        double base_cost = market::cost_of(offer, base.schedule.sellers[s]);
        m.cost_epi[s] = lp.add_variable("dc." + offer.seller_id, 0.0, lp::kInf, 0.0);
        std::vector<lp::RowEntry> pos{{m.cost_epi[s], -1.0}};
        std::vector<lp::RowEntry> neg{{m.cost_epi[s], -1.0}};
        for (int t = 0; t < T; ++t) {
            pos.push_back({m.y[s][t], offer.var_cost});
            pos.push_back({m.u[s][t], offer.fixed_cost});
            neg.push_back({m.y[s][t], -offer.var_cost});
            neg.push_back({m.u[s][t], -offer.fixed_cost});
        }
        lp.add_row(std::move(pos), lp::RowSense::LessEqual, base_cost,
                   "dcost_hi." + offer.seller_id);
        lp.add_row(std::move(neg), lp::RowSense::LessEqual, -base_cost,
                   "dcost_lo." + offer.seller_id);
        for (int t = 0; t < T; ++t) {
            double y0 = base.schedule.sellers[s].dispatch[t];
            m.volume_epi[s][t] =
                lp.add_variable("dy." + offer.seller_id + "." + std::to_string(t), 0.0, lp::kInf, 0.0);
            lp.add_row({{m.y[s][t], 1.0}, {m.volume_epi[s][t], -1.0}}, lp::RowSense::LessEqual, y0,
                       "dvol_hi." + offer.seller_id + "." + std::to_string(t));
            lp.add_row({{m.y[s][t], -1.0}, {m.volume_epi[s][t], -1.0}}, lp::RowSense::LessEqual,
                       -y0, "dvol_lo." + offer.seller_id + "." + std::to_string(t));
        }
    }
    return m;
}

enum class Objective { Cost, Volume };

void set_objective(RedispatchModel& m, Objective which) {
    for (int j = 0; j < m.lp.num_vars(); ++j) m.lp.set_objective_coeff(j, 0.0);
    if (which == Objective::Cost) {
        for (int v : m.cost_epi) m.lp.set_objective_coeff(v, 1.0);
    } else {
        for (const auto& row : m.volume_epi)
            for (int v : row) m.lp.set_objective_coeff(v, 1.0);
    }
}

void cap_objective(RedispatchModel& m, Objective which, double bound) {
    std::vector<lp::RowEntry> row;
    if (which == Objective::Cost) {
        for (int v : m.cost_epi) row.push_back({v, 1.0});
    } else {
        for (const auto& r : m.volume_epi)
            for (int v : r) row.push_back({v, 1.0});
    }
    m.lp.add_row(std::move(row), lp::RowSense::LessEqual, bound, "stage1_cap");
}

RedispatchResult solve(const MarketInstance& instance, const MarketOutcome& base, FlowCapMode mode,
                       double gap, Objective primary) {
    instance.validate();
    const int T = instance.horizon;
    const int S = static_cast<int>(instance.sellers.size());

    RedispatchModel m = build_model(instance, base, mode);
    set_objective(m, primary);
    lp::SolveResult stage1 = lp::solve_milp(m.lp, gap);
    if (stage1.status == lp::SolveStatus::Infeasible && mode == FlowCapMode::ZonalFlows)
        throw std::runtime_error(
            "redispatch infeasible under the zonal-flows cap; retry with the physical cap");
    if (stage1.status != lp::SolveStatus::Optimal)
        throw std::runtime_error("redispatch solve failed: " + stage1.message);

    // Lexicographic second stage pins the secondary quantity deterministically.
    Objective secondary = primary == Objective::Cost ? Objective::Volume : Objective::Cost;
    RedispatchModel m2 = build_model(instance, base, mode);
    cap_objective(m2, primary, stage1.objective + 1e-7);
    set_objective(m2, secondary);
    lp::SolveResult res = lp::solve_milp(m2.lp, gap);
    const RedispatchModel& mm = res.status == lp::SolveStatus::Optimal ? m2 : m;
    const lp::SolveResult& sol = res.status == lp::SolveStatus::Optimal ? res : stage1;

    RedispatchResult out;
    out.mode = mode;
    out.achieved_gap = stage1.achieved_gap;
    out.schedule.sellers.resize(S);
    out.up_mwh.assign(S, 0.0);
    out.down_mwh.assign(S, 0.0);
    for (int s = 0; s < S; ++s) {
        auto& sched = out.schedule.sellers[s];
        sched.dispatch.resize(T);
        sched.commitment.resize(T);
        sched.startup.assign(T, 0);
        for (int t = 0; t < T; ++t) {
            sched.dispatch[t] = sol.primal[mm.y[s][t]];
            sched.commitment[t] = sol.primal[mm.u[s][t]] > 0.5 ? 1 : 0;
        }
        for (int t = 1; t < T; ++t)
            sched.startup[t] = std::max(0, sched.commitment[t] - sched.commitment[t - 1]);
        double new_cost = market::cost_of(instance.sellers[s], sched);
        double base_cost = market::cost_of(instance.sellers[s], base.schedule.sellers[s]);
        out.redispatch_cost += std::abs(new_cost - base_cost);
        for (int t = 0; t < T; ++t) {
            double d = sched.dispatch[t] - base.schedule.sellers[s].dispatch[t];
            out.redispatch_volume += std::abs(d);
            (d >= 0.0 ? out.up_mwh[s] : out.down_mwh[s]) += std::abs(d);
        }
    }
    const grid::Network& net = instance.network;
    out.angles.assign(net.num_nodes(), std::vector<double>(T, 0.0));
    for (int n = 0; n < net.num_nodes(); ++n)
        for (int t = 0; t < T; ++t) out.angles[n][t] = sol.primal[mm.theta[n][t]];
    out.flows = grid::dc_flows(net, out.angles);
    return out;
}

}  // namespace

RedispatchResult redispatch_min_cost(const MarketInstance& instance, const MarketOutcome& base,
                                     FlowCapMode mode, double gap) {
    return solve(instance, base, mode, gap, Objective::Cost);
}

RedispatchResult redispatch_min_volume(const MarketInstance& instance, const MarketOutcome& base,
                                       FlowCapMode mode, double gap) {
    return solve(instance, base, mode, gap, Objective::Volume);
}

FeasibilityReport feasibility_check(const MarketInstance& instance,
                                    const clearing::MarketOutcome& outcome) {
    instance.validate();
    const grid::Network& net = instance.network;
    const int T = instance.horizon;
    FeasibilityReport rep;

    std::vector<std::vector<double>> injection(net.num_nodes(), std::vector<double>(T, 0.0));
    for (int s = 0; s < static_cast<int>(instance.sellers.size()); ++s) {
        int n = net.node_index(instance.sellers[s].node_id);
        for (int t = 0; t < T; ++t) injection[n][t] += outcome.schedule.sellers[s].dispatch[t];
    }
    for (int b = 0; b < static_cast<int>(instance.buyers.size()); ++b) {
        int n = net.node_index(instance.buyers[b].node_id);
        for (int t = 0; t < T; ++t) injection[n][t] -= outcome.served[b][t];
    }

    if (outcome.kind == clearing::ConfigKind::Nodal && !outcome.flows.empty()) {
        // Direct check against the outcome's own flow pattern.
        for (int l = 0; l < net.num_lines(); ++l) {
            double cap = net.effective_limit(l, outcome.margin_override);
            for (int t = 0; t < T; ++t)
                if (std::abs(outcome.flows[l][t]) > cap + kBalanceTol)
                    rep.line_violations.push_back({l, t, outcome.flows[l][t], cap});
        }
        for (int n = 0; n < net.num_nodes(); ++n) {
            for (int t = 0; t < T; ++t) {
                double exported = 0.0;
                for (int l = 0; l < net.num_lines(); ++l) {
                    if (net.from_index(l) == n) exported += outcome.flows[l][t];
                    if (net.to_index(l) == n) exported -= outcome.flows[l][t];
                }
                double residual = injection[n][t] - exported;
                if (std::abs(residual) > kBalanceTol)
                    rep.balance_violations.push_back({net.nodes()[n].id, t, residual});
            }
        }
        return rep;
    }

    // Project the injections onto the DC equations; per-node slack measures
    // how far the outcome is from any feasible flow pattern.
    lp::LinearProgram lp;
    std::vector<std::vector<int>> theta(net.num_nodes(), std::vector<int>(T));
    std::vector<char> is_ref(net.num_nodes(), 0);
    for (int n : reference_nodes(net)) is_ref[n] = 1;
    for (int n = 0; n < net.num_nodes(); ++n)
        for (int t = 0; t < T; ++t)
            theta[n][t] = lp.add_variable("theta", is_ref[n] ? 0.0 : -lp::kInf,
                                          is_ref[n] ? 0.0 : lp::kInf, 0.0);
    std::vector<std::vector<int>> spos(net.num_nodes(), std::vector<int>(T)),
        sneg(net.num_nodes(), std::vector<int>(T));
    for (int n = 0; n < net.num_nodes(); ++n)
        for (int t = 0; t < T; ++t) {
            spos[n][t] = lp.add_variable("s+", 0.0, lp::kInf, 1.0);
            sneg[n][t] = lp.add_variable("s-", 0.0, lp::kInf, 1.0);
        }
    for (int l = 0; l < net.num_lines(); ++l) {
        double cap = net.effective_limit(l, outcome.margin_override);
        double b = net.lines()[l].susceptance;
        int nf = net.from_index(l), nt = net.to_index(l);
        for (int t = 0; t < T; ++t) {
            std::vector<lp::RowEntry> ent{{theta[nf][t], b}, {theta[nt][t], -b}};
            lp.add_row(ent, lp::RowSense::LessEqual, cap);
            lp.add_row(ent, lp::RowSense::GreaterEqual, -cap);
            // Tiny transport penalty breaks slack-placement ties so residuals
            // surface at the stranded nodes, not at line endpoints en route.
            int g = lp.add_variable("|f|", 0.0, lp::kInf, 1e-6);
            lp.add_row({{theta[nf][t], b}, {theta[nt][t], -b}, {g, -1.0}},
                       lp::RowSense::LessEqual, 0.0);
            lp.add_row({{theta[nf][t], -b}, {theta[nt][t], b}, {g, -1.0}},
                       lp::RowSense::LessEqual, 0.0);
        }
    }
    for (int n = 0; n < net.num_nodes(); ++n) {
        for (int t = 0; t < T; ++t) {
            std::map<int, double> coeff;
            coeff[spos[n][t]] += 1.0;
            coeff[sneg[n][t]] -= 1.0;
            for (int l = 0; l < net.num_lines(); ++l) {
                double b_l = net.lines()[l].susceptance;
                double sign = 0.0;
                if (net.from_index(l) == n) sign = -1.0;
                if (net.to_index(l) == n) sign = 1.0;
                if (sign == 0.0) continue;
                coeff[theta[net.from_index(l)][t]] += sign * b_l;
                coeff[theta[net.to_index(l)][t]] -= sign * b_l;
            }
            std::vector<lp::RowEntry> entries;
            for (auto [var, c] : coeff) entries.push_back({var, c});
            lp.add_row(std::move(entries), lp::RowSense::Equal, -injection[n][t]);
        }
    }
    lp::SolveResult res = lp::solve_lp(lp);
    if (res.status != lp::SolveStatus::Optimal)
        throw std::runtime_error("feasibility projection failed: " + res.message);
    for (int n = 0; n < net.num_nodes(); ++n)
        for (int t = 0; t < T; ++t) {
            double slack = res.primal[spos[n][t]] - res.primal[sneg[n][t]];
            if (std::abs(slack) > kBalanceTol)
                rep.balance_violations.push_back({net.nodes()[n].id, t, slack});
        }
    return rep;
}

}  // namespace gridclear::redispatch
