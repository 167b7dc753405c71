#pragma once

#include <string>
#include <vector>

#include "gridclear/clearing.hpp"

namespace gridclear::pricing {

/// One price per (location, hour); granularity follows the outcome that
/// produced it (node ids / zone ids / "national").
struct PriceSurface {
    clearing::ConfigKind kind = clearing::ConfigKind::National;
    std::vector<std::string> locations;
    std::vector<std::vector<double>> prices;  // [location][hour], EUR/MWh
    std::string rule;                         // "ip" | "ch" | "join"

    int location_index(const std::string& loc) const;  // throws on miss
    double at(const std::string& loc, int hour) const;
};

/// Price seen by a participant at node_id under this surface.
double node_price(const market::MarketInstance& instance, const clearing::MarketOutcome& outcome,
                  const PriceSurface& surface, const std::string& node_id, int hour);

struct ParticipantSettlement {
    std::string id;
    bool is_seller = false;
    double revenue = 0.0;  // buyers: negative payment
    double cost = 0.0;
    double utility = 0.0;  // revenue - cost
    double lloc = 0.0;     // fixed-commitment lost opportunity cost
    double gloc = 0.0;     // best-response lost opportunity cost
    double mwp = 0.0;      // max(-utility, 0); sellers only, buyers 0
};

struct Settlement {
    std::string rule;
    std::vector<ParticipantSettlement> participants;  // sellers then buyers
    double total_lloc = 0.0;
    double total_gloc = 0.0;
    double total_mwp = 0.0;
    double network_lloc = 0.0;

    const ParticipantSettlement& of(const std::string& id) const;  // throws on miss
};

/// Duals of the balance rows after fixing commitments at the outcome's values
/// and relaxing integrality.
PriceSurface ip_prices(const market::MarketInstance& instance,
                       const clearing::MarketOutcome& outcome);

/// Duals of the balance rows of the continuous relaxation (u, phi in [0,1])
/// of the full clearing problem.
PriceSurface ch_prices(const market::MarketInstance& instance,
                       const clearing::MarketOutcome& outcome);

/// Prices minimizing sum_s max(LLOC_s, MWP_s, 0) plus the network
/// participant's lost opportunity cost (bounded via LP duality).
PriceSurface join_prices(const market::MarketInstance& instance,
                         const clearing::MarketOutcome& outcome);

/// Utilities, LLOC (closed form under fixed commitment), GLOC (per-seller
/// best-response MILP at gap 0), and MWP at the given prices.
Settlement settle(const market::MarketInstance& instance, const clearing::MarketOutcome& outcome,
                  const PriceSurface& prices);

/// Lost opportunity cost of the network participant: best transport payoff
/// over the configuration's capped flows minus the realized payoff.
double network_lloc(const market::MarketInstance& instance,
                    const clearing::MarketOutcome& outcome, const PriceSurface& prices);

/// sum_s max(LLOC_s, MWP_s, 0) + network LLOC; the quantity Join minimizes.
double join_functional(const market::MarketInstance& instance,
                       const clearing::MarketOutcome& outcome, const PriceSurface& prices);

}  // namespace gridclear::pricing
