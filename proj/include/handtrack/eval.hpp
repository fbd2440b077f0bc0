#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "handtrack/cluster.hpp"
#include "handtrack/synth.hpp"
#include "handtrack/tracker.hpp"

namespace handtrack {

struct ObjectScore {
    std::uint16_t identity = 0;
    double iou = 0.0;               // best over all regions, in [0, 1]
    RegionId region = kBackground;  // the best-overlapping region, 0 if none
};

struct SegScore {
    std::vector<ObjectScore> objects;  // ground-truth identity order
    std::size_t cluster_count = 0;     // regions with at least size_min pixels

    const ObjectScore* find(std::uint16_t identity) const;
};

/// Throws InvalidInput when the grids differ in size.
SegScore segmentation_iou(const Segmentation& seg, const GroundTruthFrame& gt, std::uint32_t size_min);

struct TrackScore {
    std::size_t id_swaps = 0;
    std::size_t lost_frames = 0;
    std::size_t reacquire_latency = 0;  // worst occlusion episode
    bool init_success = false;
    std::size_t occlusions = 0;
    std::size_t reacquisitions = 0;

    bool operator==(const TrackScore&) const = default;
};

/// Ground-truth hand behind each tracker slot, fixed at the first frame
/// after initialization by the cheaper of the two pairings. Zeros if the
/// tracker never initialized.
std::pair<std::uint16_t, std::uint16_t> slot_identities(const TrackLog& log, const GroundTruth& gt);

/// Throws InvalidInput unless the log has one record per ground-truth frame
/// in order.
TrackScore tracking_metrics(const TrackLog& log, const GroundTruth& gt, std::uint32_t size_min);

/// Frames in which one region holds at least half the visible pixels of each
/// ground-truth hand (both hands showing at least size_min pixels).
std::size_t merged_hand_frames(const std::vector<Segmentation>& segs, const GroundTruth& gt,
                               std::uint32_t size_min);

struct BenchReport {
    unsigned workers = 1;
    std::size_t frames = 0;
    double rounds = 0.0;  // per frame
    // Milliseconds per frame.
    double find_mergepartner_ms = 0.0;
    double merge_regions_ms = 0.0;
    double update_values_ms = 0.0;
    double tracking_ms = 0.0;
    double total_ms = 0.0;
};

/// Clusters one frame with each worker count, `repeats` times. Throws
/// std::runtime_error if the segmentations differ between counts.
std::vector<BenchReport> bench_frame(const Frame& frame, const ClipRange& clip, const ClusterOptions& options,
                                     const std::vector<unsigned>& worker_counts, unsigned repeats = 1);

/// Runs the full pipeline with each worker count. Throws std::runtime_error
/// if logs or segmentations differ between counts.
std::vector<BenchReport> bench_sequence(const std::vector<Frame>& frames, const ClusterOptions& options,
                                        const TrackerParams& tracker, const std::vector<unsigned>& worker_counts);

void write_seg_score(const SegScore& s, std::ostream& out);
void write_track_score(const TrackScore& s, std::ostream& out);
void write_bench_report(const BenchReport& r, std::ostream& out);
void write_bench_csv(const std::vector<BenchReport>& reports, std::ostream& out);

} // namespace handtrack
