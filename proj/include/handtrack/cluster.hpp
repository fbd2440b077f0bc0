#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "handtrack/region_graph.hpp"

namespace handtrack {

/// Converged clustering of one frame.
class Segmentation {
public:
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<RegionId> labels;  // row-major, 0 = background/clipped
    std::vector<Region> regions;   // sorted by id

    const Region* find(RegionId id) const;
    std::size_t regions_at_least(std::uint32_t pixels) const;
    bool operator==(const Segmentation&) const = default;
};

struct ClusterOptions {
    MergeParams params;
    Measure measure = Measure::fused;
    MeanWeighting weighting = MeanWeighting::area;
    unsigned workers = 1;

    MergeOptions merge_options() const { return {params, weighting}; }
};

struct ClusterStats {
    std::size_t initial_regions = 0;
    std::size_t rounds = 0;  // rounds that merged at least one pair
    std::size_t merges = 0;
    RoundTimings timings;
};

/// Runs merge rounds until no mutually-best pair is left.
Segmentation cluster(const PixelField& field, const ClusterOptions& options,
                     ClusterStats* stats = nullptr, WorkerPool* pool = nullptr);
Segmentation cluster(const Frame& frame, const ClipRange& clip, const ClusterOptions& options,
                     ClusterStats* stats = nullptr, WorkerPool* pool = nullptr);

/// Merge pairs (absorbed, survivor) of each round, as recorded by the oracle.
using RoundTrace = std::vector<std::vector<std::pair<RegionId, RegionId>>>;

/// Single-threaded reference of the same round semantics: every round
/// recomputes every region's choice over set-based adjacency. Used to check
/// cluster().
Segmentation cluster_oracle(const PixelField& field, const ClusterOptions& options,
                            RoundTrace* trace = nullptr);
Segmentation cluster_oracle(const Frame& frame, const ClipRange& clip,
                            const ClusterOptions& options, RoundTrace* trace = nullptr);

/// Relabels regions 1..K in order of their first pixel (row-major).
std::vector<RegionId> canonical_labels(const Segmentation& seg);
bool same_partition(const Segmentation& a, const Segmentation& b);

/// First 4-adjacent pair of distinct regions that still satisfies the merge
/// criterion, scanning the label grid. Empty on a converged segmentation.
std::optional<std::pair<RegionId, RegionId>> find_mergeable_pair(const Segmentation& seg,
                                                                 const MergeParams& p);

/// Checks the structural invariants (label table consistency, pixel counts,
/// symmetric neighbor sets, 4-connected regions). Returns a description of
/// the first violation, or an empty string.
std::string check_segmentation(const Segmentation& seg);

/// Copy with region ids replaced by canonical_labels numbering.
Segmentation canonicalized(const Segmentation& seg);

/// 16-bit label map of the ids as stored (ids above 65535 are rejected).
void export_label_pgm(const Segmentation& seg, const std::filesystem::path& path);
/// id,pixel_count,mean_z,mean_d,mean_phi,centroid_x,centroid_y,centroid_z
void write_region_csv(const Segmentation& seg, std::ostream& out);
/// Reverse of write_region_csv; neighbor lists stay empty. Throws
/// FormatError naming the line.
std::vector<Region> read_region_csv(std::istream& in);
/// Label map plus region table as written by export_label_pgm and
/// write_region_csv. Throws FormatError if they disagree.
Segmentation load_segmentation(const std::filesystem::path& pgm, const std::filesystem::path& csv);

} // namespace handtrack
