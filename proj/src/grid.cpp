#include "gridclear/grid.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <stdexcept>
#include <tuple>

namespace gridclear::grid {

bool ValidationReport::ok() const { return error_count() == 0; }

std::size_t ValidationReport::error_count() const {
    std::size_t n = 0;
    for (const auto& i : issues)
        if (i.severity == ValidationIssue::Severity::Error) ++n;
    return n;
}

ValidationReport validate_network(const std::vector<Node>& nodes, const std::vector<Line>& lines) {
    ValidationReport rep;
    std::set<std::string> ids;
    for (const Node& n : nodes) {
        if (!ids.insert(n.id).second)
            rep.issues.push_back({ValidationIssue::Severity::Error, "duplicate node id " + n.id});
    }
    std::set<std::pair<std::string, std::string>> pairs;
    for (const Line& l : lines) {
        if (ids.count(l.from) == 0)
            rep.issues.push_back(
                {ValidationIssue::Severity::Error, "line references unknown node " + l.from});
        if (ids.count(l.to) == 0)
            rep.issues.push_back(
                {ValidationIssue::Severity::Error, "line references unknown node " + l.to});
        if (l.from == l.to)
            rep.issues.push_back(
                {ValidationIssue::Severity::Error, "line from " + l.from + " to itself"});
        if (l.susceptance <= 0.0)
            rep.issues.push_back({ValidationIssue::Severity::Error,
                                  "nonpositive susceptance on line " + l.from + "-" + l.to});
        if (l.limit_mw <= 0.0)
            rep.issues.push_back({ValidationIssue::Severity::Error,
                                  "nonpositive limit on line " + l.from + "-" + l.to});
        auto key = std::minmax(l.from, l.to);
        if (!pairs.insert({key.first, key.second}).second)
            rep.issues.push_back({ValidationIssue::Severity::Error,
                                  "parallel line " + l.from + "-" + l.to +
                                      " (merge by summing susceptances and limits)"});
    }
    // Connected components via union-find over valid endpoints.
    std::map<std::string, std::string> parent;
    for (const auto& id : ids) parent[id] = id;
    std::function<std::string(const std::string&)> find = [&](const std::string& x) {
        std::string r = x;
        while (parent[r] != r) r = parent[r];
        return r;
    };
    for (const Line& l : lines) {
        if (ids.count(l.from) && ids.count(l.to)) parent[find(l.from)] = find(l.to);
    }
    std::map<std::string, std::vector<std::string>> comps;
    for (const auto& id : ids) comps[find(id)].push_back(id);
    for (auto& [root, members] : comps) {
        std::sort(members.begin(), members.end());
        rep.components.push_back(members);
    }
    std::sort(rep.components.begin(), rep.components.end());
    if (rep.components.size() > 1)
        rep.issues.push_back({ValidationIssue::Severity::Info,
                              std::to_string(rep.components.size()) + " connected components"});
    return rep;
}

Network::Network(std::vector<Node> nodes, std::vector<Line> lines, double security_margin)
    : nodes_(std::move(nodes)), lines_(std::move(lines)), margin_(security_margin) {
    if (margin_ < 0.0 || margin_ >= 1.0)
        throw std::invalid_argument("security margin must lie in [0,1)");
    ValidationReport rep = validate_network(nodes_, lines_);
    if (!rep.ok()) {
        std::string msg = "invalid network:";
        for (const auto& i : rep.issues)
            if (i.severity == ValidationIssue::Severity::Error) msg += " " + i.message + ";";
        throw std::invalid_argument(msg);
    }
    for (int i = 0; i < num_nodes(); ++i) index_[nodes_[i].id] = i;
    for (const Line& l : lines_) {
        line_from_.push_back(index_.at(l.from));
        line_to_.push_back(index_.at(l.to));
    }
}

int Network::node_index(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::invalid_argument("unknown node id " + id);
    return it->second;
}

double Network::effective_limit(int line, std::optional<double> margin_override) const {
    double m = margin_override.value_or(margin_);
    return (1.0 - m) * lines_[line].limit_mw;
}

void ZoneMap::validate(const Network& network) const {
    std::set<std::string> seen;
    for (const Node& n : network.nodes()) {
        auto it = node_zone.find(n.id);
        if (it == node_zone.end())
            throw std::invalid_argument("node " + n.id + " is not mapped to a zone");
        seen.insert(it->second);
    }
    if (static_cast<int>(seen.size()) != zone_count)
        throw std::invalid_argument("zone count " + std::to_string(zone_count) +
                                    " does not match " + std::to_string(seen.size()) +
                                    " distinct zone ids");
}

std::vector<std::string> ZoneMap::zone_ids() const {
    std::set<std::string> z;
    for (const auto& [node, zone] : node_zone) z.insert(zone);
    return {z.begin(), z.end()};
}

const std::string& ZoneMap::zone_of(const std::string& node_id) const {
    auto it = node_zone.find(node_id);
    if (it == node_zone.end()) throw std::invalid_argument("node " + node_id + " has no zone");
    return it->second;
}

std::vector<std::vector<double>> dc_flows(const Network& network,
                                          const std::vector<std::vector<double>>& angles) {
    if (static_cast<int>(angles.size()) != network.num_nodes())
        throw std::invalid_argument("angles missing for some node");
    const std::size_t horizon = angles.empty() ? 0 : angles.front().size();
    for (int n = 0; n < network.num_nodes(); ++n)
        if (angles[n].size() != horizon)
            throw std::invalid_argument("angles missing for node " + network.nodes()[n].id);
    std::vector<std::vector<double>> flows(network.num_lines(), std::vector<double>(horizon, 0.0));
    for (int l = 0; l < network.num_lines(); ++l) {
        int f = network.from_index(l), t = network.to_index(l);
        double b = network.lines()[l].susceptance;
        for (std::size_t h = 0; h < horizon; ++h) flows[l][h] = b * (angles[f][h] - angles[t][h]);
    }
    return flows;
}

std::vector<int> cross_zonal_lines(const Network& network, const ZoneMap& zones) {
    zones.validate(network);
    std::vector<int> out;
    for (int l = 0; l < network.num_lines(); ++l) {
        const Line& line = network.lines()[l];
        if (zones.zone_of(line.from) != zones.zone_of(line.to)) out.push_back(l);
    }
    std::sort(out.begin(), out.end(), [&](int a, int b) {
        const Line& la = network.lines()[a];
        const Line& lb = network.lines()[b];
        return std::tie(la.from, la.to) < std::tie(lb.from, lb.to);
    });
    return out;
}

}  // namespace gridclear::grid
