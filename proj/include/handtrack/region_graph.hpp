#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "handtrack/frame.hpp"
#include "handtrack/homogeneity.hpp"

namespace handtrack {

class WorkerPool;

using RegionId = std::uint32_t;
inline constexpr RegionId kBackground = 0;

/// Accepted radial distance interval. Pixels outside it are ignored.
struct ClipRange {
    double r_min = 0.0;
    double r_max = std::numeric_limits<double>::infinity();

    static ClipRange unbounded() { return {}; }
    /// Throws InvalidInput unless r_min < r_max.
    static ClipRange bounded(double r_min, double r_max);

    bool is_bounded() const { return r_max != std::numeric_limits<double>::infinity(); }
    bool contains(double d) const { return d > 0.0 && d >= r_min && d <= r_max; }
    bool operator==(const ClipRange&) const = default;
};

/// Snapshot of one cluster.
struct Region {
    RegionId id = kBackground;
    std::uint32_t pixel_count = 0;
    double mean_z = 0.0;
    double mean_d = 0.0;
    double mean_phi = 0.0;
    Point3 centroid;
    std::vector<RegionId> neighbors;  // sorted

    HomogeneityDescriptor descriptor() const { return {mean_z, mean_phi}; }
    bool operator==(const Region&) const = default;
};

/// Per-pixel inputs of the region graph. Pixel i seeds region i + 1.
struct PixelField {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> valid;
    std::vector<double> z;
    std::vector<double> d;
    std::vector<double> phi;
    std::vector<Point3> position;

    PixelField() = default;
    PixelField(std::uint32_t w, std::uint32_t h);
    std::size_t size() const { return valid.size(); }
};

/// Derives z, phi and the camera-space position of every valid, unclipped
/// pixel.
PixelField make_pixel_field(const Frame& frame, const ClipRange& clip, Measure measure);

/// How a merged region's z, d and phi are formed from its two parts.
enum class MeanWeighting {
    area,        // pixel-count-weighted mean
    unweighted,  // plain average of the two region means
};

struct MergeOptions {
    MergeParams params;
    MeanWeighting weighting = MeanWeighting::area;
};

struct RoundTimings {
    double find_mergepartner_ms = 0.0;
    double merge_regions_ms = 0.0;
    double update_values_ms = 0.0;

    RoundTimings& operator+=(const RoundTimings& o) {
        find_mergepartner_ms += o.find_mergepartner_ms;
        merge_regions_ms += o.merge_regions_ms;
        update_values_ms += o.update_values_ms;
        return *this;
    }
};

/// Result of one synchronous merge round. Pairs are (absorbed, survivor),
/// ordered by survivor id.
struct RoundReport {
    std::size_t merged = 0;
    std::vector<std::pair<RegionId, RegionId>> pairs;
    RoundTimings timings;
};

class Segmentation;

/// Region adjacency graph over a pixel grid. Storage is indexed by region id;
/// ids never change, a merged region keeps the larger id of its parts.
class RegionGraph {
public:
    RegionGraph() = default;
    explicit RegionGraph(const PixelField& field);

    std::size_t region_count() const { return alive_.size() - dead_in_alive_; }
    std::size_t initial_region_count() const { return initial_regions_; }
    std::size_t adjacency_count() const;

    bool contains(RegionId id) const;
    /// Surviving region ids in increasing order.
    std::vector<RegionId> regions() const;
    std::span<const RegionId> neighbors(RegionId id) const;
    HomogeneityDescriptor descriptor(RegionId id) const;
    Region region(RegionId id) const;

    /// Label map (surviving id per pixel, 0 for ignored pixels) plus the
    /// region table.
    Segmentation to_segmentation() const;

private:
    friend RoundReport merge_round(RegionGraph&, const MergeOptions&, WorkerPool*);
    friend std::optional<RegionId> best_neighbor(const RegionGraph&, RegionId, const MergeParams&);

    void require(RegionId id) const;
    RegionId select_partner(RegionId id, const MergeParams& p) const;
    RegionId resolve(RegionId id) const;

    std::uint32_t width_ = 0;
    std::uint32_t height_ = 0;
    std::size_t initial_regions_ = 0;
    // Indexed by region id; slot 0 unused.
    std::vector<std::uint32_t> count_;
    std::vector<HomogeneityDescriptor> desc_;  // mean z and phi, packed for the partner search
    std::vector<double> mean_d_;
    std::vector<Point3> centroid_;
    std::vector<std::vector<RegionId>> neighbors_;
    std::vector<RegionId> parent_;  // self while alive, absorber afterwards
    std::vector<RegionId> alive_;  // increasing; may hold absorbed ids until compacted
    std::size_t dead_in_alive_ = 0;
    // Cached partner choice per region. Only regions in dirty_ can have a
    // different choice than last round: survivors and their neighbors.
    std::vector<RegionId> best_;
    std::vector<RegionId> dirty_;
    std::vector<std::uint8_t> dirty_flag_;
    std::vector<RegionId> partner_;  // absorbed partner of this round's survivors
};

/// One region per valid pixel of the field, linked to its 4-neighbors.
RegionGraph init_regions(const PixelField& field);
RegionGraph init_regions(const Frame& frame, const ClipRange& clip, Measure measure = Measure::fused);

/// Admissible neighbor with minimal homogeneity distance; ties go to the
/// larger id. Throws InvalidInput for an unknown region.
std::optional<RegionId> best_neighbor(const RegionGraph& graph, RegionId id, const MergeParams& p);

/// Merges every mutually-best pair. All choices read the graph as it was at
/// the start of the round, so the result does not depend on the pool size.
RoundReport merge_round(RegionGraph& graph, const MergeOptions& options, WorkerPool* pool = nullptr);

} // namespace handtrack
