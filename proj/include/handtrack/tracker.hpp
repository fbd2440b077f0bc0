#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "handtrack/cluster.hpp"
#include "handtrack/frame.hpp"
#include "handtrack/region_graph.hpp"

namespace handtrack {

/// Depth-order test for a reacquisition candidate against the front hand.
enum class BehindRule {
    farther,  // candidate z greater than the front hand's (the hand is behind it)
    nearer,   // candidate z smaller, the inequality read literally
};

/// Metric of the reacquisition proximity test.
enum class ProximityMetric { xy, xyz };

struct TrackerParams {
    std::uint32_t size_min = 200;
    double t_d = 0.1;
    double t_phi_track = 0.009;
    double r_th = 0.1;
    double d_min = 0.1;
    std::uint32_t init_frames = 30;
    // Frames after the last D=true frame during which a missing hand counts
    // as covered.
    std::uint32_t occlusion_window = 5;
    // Consecutive HandLostSearch frames before going back to Initializing.
    std::uint32_t lost_limit = 30;
    double clip_epsilon = 1e-3;
    BehindRule behind = BehindRule::farther;
    ProximityMetric reacquire_metric = ProximityMetric::xy;

    /// Throws InvalidInput unless every threshold is positive.
    void validate() const;
    bool operator==(const TrackerParams&) const = default;
};

enum class Phase { initializing, tracking, occluded };

enum class EventKind { init_progress, assigned, occlusion_entered, reacquired, hand_lost_search, init_failed };

struct HandState {
    RegionId id = kBackground;
    std::uint32_t pixel_count = 0;
    double phi = 0.0;
    Point3 pos;
    double mean_d = 0.0;
    bool visible = false;

    static HandState from_region(const Region& r);
    bool operator==(const HandState&) const = default;
};

struct TrackerState {
    Phase phase = Phase::initializing;
    std::uint32_t frames_elapsed = 0;  // successful init frames in a row
    HandState hand1, hand2;
    std::optional<HandState> backhand;  // last record of the covered hand
    int back_slot = 0;                  // 1 or 2 while occluded
    ClipRange clip;                     // applied to the next frame
    std::uint32_t frames_since_d = UINT32_MAX;
    std::uint32_t lost_frames = 0;

    HandState& hand(int slot) { return slot == 1 ? hand1 : hand2; }
    const HandState& hand(int slot) const { return slot == 1 ? hand1 : hand2; }
};

/// One record per frame: the event, the state after the step and the clip
/// the frame was clustered with.
struct TrackRecord {
    std::uint32_t frame_index = 0;
    Phase phase = Phase::initializing;
    std::uint32_t frames_elapsed = 0;
    EventKind event = EventKind::init_progress;
    bool d_flag = false;
    ClipRange clip;
    HandState hand1, hand2;
    std::optional<HandState> backhand;
    int back_slot = 0;

    bool operator==(const TrackRecord&) const = default;
};

using TrackLog = std::vector<TrackRecord>;

std::string to_string(Phase phase);
std::string to_string(EventKind kind);
Phase parse_phase(const std::string& text);
EventKind parse_event(const std::string& text);

/// Regions with at least size_min pixels, in id order.
std::vector<const Region*> qualifying_regions(const Segmentation& seg, std::uint32_t size_min);

/// Clip interval around both hands' distances. While occluded the covered
/// hand contributes its stored distance.
ClipRange compute_clip(const TrackerState& state, const TrackerParams& params);

/// Critical-area predicate on the XY centroid distance of both hands.
bool occlusion_check(const HandState& a, const HandState& b, const TrackerParams& params);
bool occlusion_check(const TrackerState& state, const TrackerParams& params);

/// Nearest region matching the hand by phi, or none when no region matches or
/// the nearest match is farther than t_d.
std::optional<RegionId> matching_region(const HandState& hand, const Segmentation& seg,
                                        const TrackerParams& params);
bool missing_hand_check(const HandState& hand, const Segmentation& seg, const TrackerParams& params);

/// Whether a region passes the three reacquisition tests against the front
/// hand and the stored backhand.
bool reacquisition_criteria(const Region& candidate, const HandState& front, const HandState& back,
                            const TrackerParams& params);
/// Best candidate for the covered hand, minimizing the phi deviation. Ties go
/// to the larger id.
std::optional<HandState> reacquire(const TrackerState& state, const Segmentation& seg,
                                   const TrackerParams& params);

/// Assignment of two hands to distinct regions minimizing the summed
/// centroid distance. Ties go to the larger id for hand 1, then hand 2.
std::optional<std::pair<const Region*, const Region*>> assign_pair(
    const HandState& h1, const HandState& h2, const std::vector<const Region*>& c1,
    const std::vector<const Region*>& c2);

EventKind init_step(TrackerState& state, const Segmentation& seg, const TrackerParams& params);
EventKind track_step(TrackerState& state, const Segmentation& seg, const TrackerParams& params,
                     bool* d_flag = nullptr);

class Tracker {
public:
    explicit Tracker(TrackerParams params = {});

    const TrackerParams& params() const { return params_; }
    const TrackerState& state() const { return state_; }
    /// Range to cluster the next frame with; unbounded while initializing.
    ClipRange next_clip() const;
    TrackRecord step(const Segmentation& seg, std::uint32_t frame_index);

private:
    TrackerParams params_;
    TrackerState state_;
};

struct PipelineResult {
    TrackLog log;
    std::vector<Segmentation> segmentations;  // only when requested
    std::vector<ClusterStats> cluster_stats;  // one per frame
    double tracking_ms = 0.0;                 // summed over frames
};

/// Clip, cluster and track every frame in order. Throws InvalidInput on an
/// empty sequence.
PipelineResult run_pipeline(const std::vector<Frame>& frames, const ClusterOptions& cluster_options,
                            const TrackerParams& tracker_params, bool keep_segmentations = false,
                            WorkerPool* pool = nullptr);

/// Line-delimited key=value records.
void write_track_log(const TrackLog& log, std::ostream& out);
std::string format_track_record(const TrackRecord& record);
TrackRecord parse_track_record(const std::string& line);
/// Throws FormatError naming the offending line.
TrackLog read_track_log(std::istream& in);

} // namespace handtrack
