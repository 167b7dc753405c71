#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gridclear::grid {

struct Node {
    std::string id;
    std::optional<double> lat;  // metadata only
    std::optional<double> lon;
};

struct Line {
    std::string from;
    std::string to;
    double susceptance = 0.0;  // per-unit, > 0
    double limit_mw = 0.0;     // > 0
};

struct ValidationIssue {
    enum class Severity { Error, Info };
    Severity severity = Severity::Error;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    std::vector<std::vector<std::string>> components;  // connected components, sorted
    bool ok() const;
    std::size_t error_count() const;
};

/// Report-only structural checks: duplicate ids, dangling endpoints,
/// nonpositive susceptances/limits, parallel lines, connected components.
ValidationReport validate_network(const std::vector<Node>& nodes, const std::vector<Line>& lines);

/// Immutable transmission network. Construction rejects structurally invalid
/// input (see validate_network); parallel lines must be pre-merged.
class Network {
public:
    Network() = default;  // empty network placeholder
    Network(std::vector<Node> nodes, std::vector<Line> lines, double security_margin = 0.20);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Line>& lines() const { return lines_; }
    double security_margin() const { return margin_; }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    int num_lines() const { return static_cast<int>(lines_.size()); }
    int node_index(const std::string& id) const;  // throws on unknown id
    int from_index(int line) const { return line_from_[line]; }
    int to_index(int line) const { return line_to_[line]; }
    /// (1 - margin) * F; optional override of the margin for a single run.
    double effective_limit(int line, std::optional<double> margin_override = {}) const;

private:
    std::vector<Node> nodes_;
    std::vector<Line> lines_;
    std::map<std::string, int> index_;
    std::vector<int> line_from_, line_to_;
    double margin_ = 0.20;
};

struct ZoneMap {
    int zone_count = 0;
    std::map<std::string, std::string> node_zone;

    /// Throws std::invalid_argument unless every network node is mapped, every
    /// zone is non-empty, and zone_count matches the distinct zone ids.
    void validate(const Network& network) const;
    std::vector<std::string> zone_ids() const;  // sorted
    const std::string& zone_of(const std::string& node_id) const;
};

/// Per-line per-hour flow B_nm * (theta_n - theta_m) from angles[node][hour].
std::vector<std::vector<double>> dc_flows(const Network& network,
                                          const std::vector<std::vector<double>>& angles);

/// Indices of lines whose endpoints lie in different zones, ordered by
/// (from-id, to-id).
std::vector<int> cross_zonal_lines(const Network& network, const ZoneMap& zones);

}  // namespace gridclear::grid
