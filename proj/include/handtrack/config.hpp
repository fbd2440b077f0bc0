#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "handtrack/cluster.hpp"
#include "handtrack/homogeneity.hpp"
#include "handtrack/synth.hpp"
#include "handtrack/tracker.hpp"

namespace handtrack {

/// Every tunable of the pipeline. A default-constructed config carries the
/// standard parameter set.
struct PipelineConfig {
    MergeParams merge;
    TrackerParams tracker;
    NoiseModel noise;
    Measure measure = Measure::fused;
    MeanWeighting weighting = MeanWeighting::area;
    unsigned workers = 1;
    std::uint64_t seed = 1;

    ClusterOptions cluster_options() const;
    /// Throws InvalidInput when a module would reject its parameters.
    void validate() const;
};

/// Names accepted by set_config_value, in output order.
const std::vector<std::string>& config_keys();

/// Throws InvalidInput for an unknown key or a malformed value.
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const PipelineConfig& config, const std::string& key);

/// "key = value" lines; blank lines and text after '#' are ignored. Throws
/// FormatError naming the line.
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
/// Round-trips through parse_config.
std::string format_config(const PipelineConfig& config);

std::string to_string(Measure m);
std::string to_string(MeanWeighting w);
Measure parse_measure(const std::string& text);

} // namespace handtrack
