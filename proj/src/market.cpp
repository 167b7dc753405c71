#include "gridclear/market.hpp"

#include <cmath>
#include <stdexcept>

namespace gridclear::market {

void MarketInstance::validate() const {
    if (horizon < 1) throw std::invalid_argument("horizon must be at least one hour");
    for (const DemandSeries& b : buyers) {
        network.node_index(b.node_id);  // throws on unknown node
        if (static_cast<int>(b.load_mwh.size()) != horizon)
            throw std::invalid_argument("buyer " + b.buyer_id +
                                        " profile length does not match horizon");
        for (double v : b.load_mwh)
            if (v < 0.0 || !std::isfinite(v))
                throw std::invalid_argument("buyer " + b.buyer_id + " has invalid load entry");
    }
    for (const GeneratorOffer& s : sellers) {
        network.node_index(s.node_id);
        if (s.p_min < 0.0) throw std::invalid_argument("seller " + s.seller_id + " has p_min < 0");
        if (s.p_max.empty() ||
            (s.p_max.size() != 1 && static_cast<int>(s.p_max.size()) != horizon))
            throw std::invalid_argument("seller " + s.seller_id + " p_max must be scalar or per-hour");
        if (s.min_uptime < 1 || s.min_uptime > horizon)
            throw std::invalid_argument("seller " + s.seller_id +
                                        " min uptime outside [1, horizon]");
        if (!std::isfinite(s.var_cost) || !std::isfinite(s.fixed_cost))
            throw std::invalid_argument("seller " + s.seller_id + " has non-finite costs");
    }
    if (zones) zones->validate(network);
    if (voll <= 0.0) throw std::invalid_argument("value of lost load must be positive");
}

double MarketInstance::total_demand(int hour) const {
    double d = 0.0;
    for (const DemandSeries& b : buyers) d += b.load_mwh[hour];
    return d;
}

int MarketInstance::seller_index(const std::string& id) const {
    for (int i = 0; i < static_cast<int>(sellers.size()); ++i)
        if (sellers[i].seller_id == id) return i;
    throw std::invalid_argument("unknown seller " + id);
}

std::vector<lp::Row> build_uc_constraints(const GeneratorOffer& offer, int horizon,
                                          const std::vector<int>& y_vars,
                                          const std::vector<int>& u_vars,
                                          const std::vector<int>& phi_vars) {
    if (offer.min_uptime > horizon)
        throw std::invalid_argument("seller " + offer.seller_id +
                                    " min uptime exceeds the horizon");
    std::vector<lp::Row> rows;
    const std::string& id = offer.seller_id;
    for (int t = 0; t < horizon; ++t) {
        rows.push_back({{{y_vars[t], 1.0}, {u_vars[t], -offer.p_min}},
                        lp::RowSense::GreaterEqual,
                        0.0,
                        id + ".min_output." + std::to_string(t)});
        rows.push_back({{{y_vars[t], 1.0}, {u_vars[t], -offer.p_max_at(t)}},
                        lp::RowSense::LessEqual,
                        0.0,
                        id + ".max_output." + std::to_string(t)});
    }
    for (int t = 1; t < horizon; ++t) {
        rows.push_back({{{phi_vars[t], 1.0}, {u_vars[t], -1.0}, {u_vars[t - 1], 1.0}},
                        lp::RowSense::GreaterEqual,
                        0.0,
                        id + ".startup." + std::to_string(t)});
        std::vector<lp::RowEntry> window;
        for (int i = std::max(0, t - offer.min_uptime + 1); i <= t; ++i)
            window.push_back({phi_vars[i], 1.0});
        window.push_back({u_vars[t], -1.0});
        rows.push_back({std::move(window), lp::RowSense::LessEqual, 0.0,
                        id + ".uptime." + std::to_string(t)});
    }
    return rows;
}

std::optional<std::string> check_schedule(const GeneratorOffer& offer, const SellerSchedule& s,
                                          double tol) {
    const int horizon = static_cast<int>(s.dispatch.size());
    if (static_cast<int>(s.commitment.size()) != horizon ||
        static_cast<int>(s.startup.size()) != horizon)
        return offer.seller_id + ": schedule fields differ in length";
    for (int t = 0; t < horizon; ++t) {
        int u = s.commitment[t];
        if (u != 0 && u != 1) return offer.seller_id + ".commitment." + std::to_string(t);
        if (s.startup[t] != 0 && s.startup[t] != 1)
            return offer.seller_id + ".startup." + std::to_string(t);
        if (s.dispatch[t] < offer.p_min * u - tol)
            return offer.seller_id + ".min_output." + std::to_string(t);
        if (s.dispatch[t] > offer.p_max_at(t) * u + tol)
            return offer.seller_id + ".max_output." + std::to_string(t);
    }
    for (int t = 1; t < horizon; ++t) {
        if (s.startup[t] < s.commitment[t] - s.commitment[t - 1])
            return offer.seller_id + ".startup." + std::to_string(t);
        int window = 0;
        for (int i = std::max(0, t - offer.min_uptime + 1); i <= t; ++i) window += s.startup[i];
        if (window > s.commitment[t]) return offer.seller_id + ".uptime." + std::to_string(t);
    }
    return std::nullopt;
}

double cost_of(const GeneratorOffer& offer, const SellerSchedule& schedule) {
    if (auto violated = check_schedule(offer, schedule))
        throw std::invalid_argument("schedule violates " + *violated);
    double c = 0.0;
    for (std::size_t t = 0; t < schedule.dispatch.size(); ++t) {
        c += offer.var_cost * schedule.dispatch[t];
        c += offer.fixed_cost * schedule.commitment[t];
    }
    return c;
}

}  // namespace gridclear::market
