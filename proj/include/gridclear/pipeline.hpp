#pragma once

#include <string>
#include <vector>

#include "gridclear/ingest.hpp"

namespace gridclear::pipeline {

struct PipelineRequest {
    std::string instance_dir;
    std::string out_dir;
    std::vector<std::string> configurations;  // national | zonal[:<zones.csv>] | nodal
    std::vector<std::string> rules;           // ip | ch | join | euphemia
    int jobs = 1;
};

struct PipelineResult {
    bool all_ok = true;
    std::vector<std::string> errors;  // "config/rule: message" per failed stage
    std::string summary_path;
};

/// Clears every configuration, runs both redispatch variants (zero for
/// nodal), prices and settles under every rule, and writes outcomes.csv,
/// prices.csv, settlement.csv, summary.json into out_dir. A failing stage is
/// recorded and the remaining cells still run. Outputs are deterministic:
/// sorted keys, six-decimal floats.
PipelineResult run_pipeline(const ingest::Config& config, const PipelineRequest& request);

}  // namespace gridclear::pipeline
