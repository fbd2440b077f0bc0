#include "handtrack/tracker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "handtrack/errors.hpp"
#include "handtrack/worker_pool.hpp"

namespace handtrack {
namespace {

bool phi_matches(double phi_region, const HandState& hand, const TrackerParams& p) {
    return std::abs(phi_region - hand.phi) <= p.t_phi_track;
}

std::uint32_t saturating_inc(std::uint32_t v) { return v == UINT32_MAX ? v : v + 1; }

const Region* nearest(const HandState& hand, const std::vector<const Region*>& regions) {
    const Region* best = nullptr;
    double best_dist = 0.0;
    for (const Region* r : regions) {
        const double dist = distance(hand.pos, r->centroid);
        if (!best || dist < best_dist || (dist == best_dist && r->id > best->id)) {
            best = r;
            best_dist = dist;
        }
    }
    return best;
}

// Regions matching the hand by phi and, when gated, lying within t_d of it.
std::vector<const Region*> hand_candidates(const HandState& hand, const std::vector<const Region*>& q,
                                           const TrackerParams& p, bool gated) {
    std::vector<const Region*> out;
    for (const Region* r : q) {
        if (!phi_matches(r->mean_phi, hand, p)) continue;
        if (gated && distance(hand.pos, r->centroid) > p.t_d) continue;
        out.push_back(r);
    }
    return out;
}

void reset_to_init(TrackerState& state) {
    state = TrackerState{};
}

void count_lost(TrackerState& state, const TrackerParams& p) {
    if (++state.lost_frames >= p.lost_limit) reset_to_init(state);
}

} // namespace

void TrackerParams::validate() const {
    if (size_min == 0 || !(t_d > 0) || !(t_phi_track > 0) || !(r_th > 0) || !(d_min > 0) ||
        init_frames == 0 || lost_limit == 0 || !(clip_epsilon > 0))
        throw InvalidInput("tracker thresholds must be positive");
}

HandState HandState::from_region(const Region& r) {
    return HandState{r.id, r.pixel_count, r.mean_phi, r.centroid, r.mean_d, true};
}

std::string to_string(Phase phase) {
    switch (phase) {
    case Phase::initializing: return "initializing";
    case Phase::tracking: return "tracking";
    case Phase::occluded: return "occluded";
    }
    return "?";
}

std::string to_string(EventKind kind) {
    switch (kind) {
    case EventKind::init_progress: return "init_progress";
    case EventKind::assigned: return "assigned";
    case EventKind::occlusion_entered: return "occlusion_entered";
    case EventKind::reacquired: return "reacquired";
    case EventKind::hand_lost_search: return "hand_lost_search";
    case EventKind::init_failed: return "init_failed";
    }
    return "?";
}

Phase parse_phase(const std::string& text) {
    for (auto p : {Phase::initializing, Phase::tracking, Phase::occluded})
        if (to_string(p) == text) return p;
    throw InvalidInput("unknown phase '" + text + "'");
}

EventKind parse_event(const std::string& text) {
    for (auto k : {EventKind::init_progress, EventKind::assigned, EventKind::occlusion_entered,
                   EventKind::reacquired, EventKind::hand_lost_search, EventKind::init_failed})
        if (to_string(k) == text) return k;
    throw InvalidInput("unknown event '" + text + "'");
}

std::vector<const Region*> qualifying_regions(const Segmentation& seg, std::uint32_t size_min) {
    std::vector<const Region*> out;
    for (const auto& r : seg.regions)
        if (r.pixel_count >= size_min) out.push_back(&r);
    return out;
}

ClipRange compute_clip(const TrackerState& state, const TrackerParams& p) {
    double d1 = state.hand1.mean_d, d2 = state.hand2.mean_d;
    if (state.phase == Phase::occluded && state.backhand) {
        (state.back_slot == 1 ? d1 : d2) = state.backhand->mean_d;
    }
    const double lo = std::max(p.clip_epsilon, std::min(d1, d2) - p.r_th);
    const double hi = std::max(d1, d2) + p.r_th;
    return ClipRange::bounded(lo, hi);
}

bool occlusion_check(const HandState& a, const HandState& b, const TrackerParams& p) {
    return distance_xy(a.pos, b.pos) < p.d_min;
}

bool occlusion_check(const TrackerState& state, const TrackerParams& p) {
    return occlusion_check(state.hand1, state.hand2, p);
}

std::optional<RegionId> matching_region(const HandState& hand, const Segmentation& seg,
                                        const TrackerParams& p) {
    const Region* best = nearest(hand, hand_candidates(hand, qualifying_regions(seg, p.size_min), p, false));
    if (!best || distance(hand.pos, best->centroid) > p.t_d) return std::nullopt;
    return best->id;
}

bool missing_hand_check(const HandState& hand, const Segmentation& seg, const TrackerParams& p) {
    return !matching_region(hand, seg, p).has_value();
}

bool reacquisition_criteria(const Region& c, const HandState& front, const HandState& back,
                            const TrackerParams& p) {
    const bool depth_ok = p.behind == BehindRule::farther ? c.centroid.z > front.pos.z : c.centroid.z < front.pos.z;
    const double gap = p.reacquire_metric == ProximityMetric::xy ? distance_xy(c.centroid, front.pos)
                                                                 : distance(c.centroid, front.pos);
    return depth_ok && gap < p.t_d && std::abs(back.phi - c.mean_phi) < p.t_phi_track;
}

std::optional<HandState> reacquire(const TrackerState& state, const Segmentation& seg,
                                   const TrackerParams& p) {
    if (state.phase != Phase::occluded || !state.backhand)
        throw InvalidInput("reacquire requires the occluded phase with a stored backhand");
    const HandState& front = state.hand(3 - state.back_slot);
    const HandState& back = *state.backhand;
    const Region* best = nullptr;
    double best_dev = 0.0;
    for (const Region* r : qualifying_regions(seg, p.size_min)) {
        if (front.visible && r->id == front.id) continue;
        if (!reacquisition_criteria(*r, front, back, p)) continue;
        const double dev = std::abs(r->mean_phi - back.phi);
        if (!best || dev < best_dev || (dev == best_dev && r->id > best->id)) {
            best = r;
            best_dev = dev;
        }
    }
    if (!best) return std::nullopt;
    return HandState::from_region(*best);
}

std::optional<std::pair<const Region*, const Region*>> assign_pair(
    const HandState& h1, const HandState& h2, const std::vector<const Region*>& c1,
    const std::vector<const Region*>& c2) {
    std::optional<std::pair<const Region*, const Region*>> best;
    double best_total = 0.0;
    for (const Region* a : c1) {
        const double da = distance(h1.pos, a->centroid);
        for (const Region* b : c2) {
            if (a->id == b->id) continue;
            const double total = da + distance(h2.pos, b->centroid);
            bool better = !best || total < best_total;
            if (!better && total == best_total)
                better = a->id > best->first->id || (a->id == best->first->id && b->id > best->second->id);
            if (better) {
                best.emplace(a, b);
                best_total = total;
            }
        }
    }
    return best;
}

EventKind init_step(TrackerState& state, const Segmentation& seg, const TrackerParams& p) {
    if (state.phase != Phase::initializing) throw InvalidInput("init_step outside the initializing phase");
    auto q = qualifying_regions(seg, p.size_min);
    if (q.size() < 2) {
        reset_to_init(state);
        return EventKind::init_failed;
    }
    if (state.frames_elapsed == 0) {
        std::sort(q.begin(), q.end(), [](const Region* a, const Region* b) {
            return a->mean_z != b->mean_z ? a->mean_z < b->mean_z : a->id > b->id;
        });
        state.hand1 = HandState::from_region(*q[0]);
        state.hand2 = HandState::from_region(*q[1]);
    } else {
        const auto pair = assign_pair(state.hand1, state.hand2, q, q);
        state.hand1 = HandState::from_region(*pair->first);
        state.hand2 = HandState::from_region(*pair->second);
    }
    if (++state.frames_elapsed >= p.init_frames) {
        state.phase = Phase::tracking;
        state.clip = compute_clip(state, p);
        state.frames_since_d = UINT32_MAX;
        state.lost_frames = 0;
    }
    return EventKind::init_progress;
}

namespace {

EventKind tracking_step(TrackerState& state, const Segmentation& seg, const TrackerParams& p, bool& d) {
    d = occlusion_check(state, p);
    state.frames_since_d = d ? 0 : saturating_inc(state.frames_since_d);
    const bool armed = state.frames_since_d <= p.occlusion_window;
    const auto q = qualifying_regions(seg, p.size_min);

    if (!armed) {
        std::vector<const Region*> shared;
        for (const Region* r : q)
            if (phi_matches(r->mean_phi, state.hand1, p) || phi_matches(r->mean_phi, state.hand2, p))
                shared.push_back(r);
        const auto pair = assign_pair(state.hand1, state.hand2, shared, shared);
        if (!pair) {
            count_lost(state, p);
            return EventKind::hand_lost_search;
        }
        state.hand1 = HandState::from_region(*pair->first);
        state.hand2 = HandState::from_region(*pair->second);
        state.lost_frames = 0;
        state.clip = compute_clip(state, p);
        return EventKind::assigned;
    }

    const auto c1 = hand_candidates(state.hand1, q, p, true);
    const auto c2 = hand_candidates(state.hand2, q, p, true);
    if (const auto pair = assign_pair(state.hand1, state.hand2, c1, c2)) {
        state.hand1 = HandState::from_region(*pair->first);
        state.hand2 = HandState::from_region(*pair->second);
        state.lost_frames = 0;
        state.clip = compute_clip(state, p);
        return EventKind::assigned;
    }
    if (c1.empty() && c2.empty()) {
        count_lost(state, p);
        return EventKind::hand_lost_search;
    }

    // One hand has no match of its own: it is taken as covered by the other.
    // When both only match the same single region, the farther hand is.
    int back;
    if (c1.empty()) {
        back = 1;
    } else if (c2.empty()) {
        back = 2;
    } else {
        const Region* shared = c1.front();
        back = distance(state.hand1.pos, shared->centroid) > distance(state.hand2.pos, shared->centroid) ? 1 : 2;
    }
    HandState& front = state.hand(3 - back);
    const Region* front_region = nearest(front, back == 1 ? c2 : c1);
    state.backhand = state.hand(back);
    state.back_slot = back;
    state.hand(back).visible = false;
    front = HandState::from_region(*front_region);
    state.phase = Phase::occluded;
    state.lost_frames = 0;
    state.clip = compute_clip(state, p);
    return EventKind::occlusion_entered;
}

EventKind occluded_step(TrackerState& state, const Segmentation& seg, const TrackerParams& p) {
    state.frames_since_d = saturating_inc(state.frames_since_d);
    HandState& front = state.hand(3 - state.back_slot);
    const Region* front_region = nearest(front, hand_candidates(front, qualifying_regions(seg, p.size_min), p, false));
    if (!front_region) {
        count_lost(state, p);
        return EventKind::hand_lost_search;
    }
    front = HandState::from_region(*front_region);
    state.lost_frames = 0;
    if (auto found = reacquire(state, seg, p)) {
        state.hand(state.back_slot) = *found;
        state.backhand.reset();
        state.back_slot = 0;
        state.phase = Phase::tracking;
        state.clip = compute_clip(state, p);
        return EventKind::reacquired;
    }
    state.clip = compute_clip(state, p);
    return EventKind::assigned;
}

} // namespace

EventKind track_step(TrackerState& state, const Segmentation& seg, const TrackerParams& p, bool* d_flag) {
    bool d = false;
    EventKind kind;
    if (state.phase == Phase::tracking) {
        kind = tracking_step(state, seg, p, d);
    } else if (state.phase == Phase::occluded) {
        kind = occluded_step(state, seg, p);
    } else {
        throw InvalidInput("track_step requires the tracking or occluded phase");
    }
    if (d_flag) *d_flag = d;
    return kind;
}

Tracker::Tracker(TrackerParams params) : params_(params) { params_.validate(); }

ClipRange Tracker::next_clip() const {
    return state_.phase == Phase::initializing ? ClipRange::unbounded() : state_.clip;
}

TrackRecord Tracker::step(const Segmentation& seg, std::uint32_t frame_index) {
    TrackRecord rec;
    rec.frame_index = frame_index;
    rec.clip = next_clip();
    if (state_.phase == Phase::initializing) {
        rec.event = init_step(state_, seg, params_);
    } else {
        rec.event = track_step(state_, seg, params_, &rec.d_flag);
    }
    rec.phase = state_.phase;
    rec.frames_elapsed = state_.frames_elapsed;
    rec.hand1 = state_.hand1;
    rec.hand2 = state_.hand2;
    rec.backhand = state_.backhand;
    rec.back_slot = state_.back_slot;
    return rec;
}

PipelineResult run_pipeline(const std::vector<Frame>& frames, const ClusterOptions& options,
                            const TrackerParams& tracker_params, bool keep_segmentations, WorkerPool* pool) {
    if (frames.empty()) throw InvalidInput("cannot track an empty sequence");
    std::unique_ptr<WorkerPool> owned;
    if (!pool && options.workers > 1) {
        owned = std::make_unique<WorkerPool>(options.workers);
        pool = owned.get();
    }
    Tracker tracker(tracker_params);
    PipelineResult out;
    out.log.reserve(frames.size());
    out.cluster_stats.reserve(frames.size());
    for (const auto& frame : frames) {
        ClusterStats stats;
        Segmentation seg = cluster(frame, tracker.next_clip(), options, &stats, pool);
        const auto t = std::chrono::steady_clock::now();
        out.log.push_back(tracker.step(seg, frame.frame_index));
        out.tracking_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
        out.cluster_stats.push_back(stats);
        if (keep_segmentations) out.segmentations.push_back(std::move(seg));
    }
    return out;
}

// ---- log text format ----

namespace {

void append(std::string& out, const char* key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " %s=%.17g", key, v);
    out += buf;
}

void append(std::string& out, const char* key, std::uint64_t v) {
    out += ' ';
    out += key;
    out += '=';
    out += std::to_string(v);
}

void append_hand(std::string& out, const std::string& prefix, const HandState& h) {
    auto k = [&](const char* name) { return prefix + name; };
    append(out, k(".visible").c_str(), std::uint64_t(h.visible));
    append(out, k(".id").c_str(), std::uint64_t(h.id));
    append(out, k(".px").c_str(), std::uint64_t(h.pixel_count));
    append(out, k(".phi").c_str(), h.phi);
    append(out, k(".x").c_str(), h.pos.x);
    append(out, k(".y").c_str(), h.pos.y);
    append(out, k(".z").c_str(), h.pos.z);
    append(out, k(".d").c_str(), h.mean_d);
}

class Fields {
public:
    explicit Fields(const std::string& line) {
        std::istringstream in(line);
        std::string token;
        while (in >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos || eq == 0) throw InvalidInput("malformed token '" + token + "'");
            if (!map_.emplace(token.substr(0, eq), token.substr(eq + 1)).second)
                throw InvalidInput("duplicate key '" + token.substr(0, eq) + "'");
        }
    }

    bool has(const std::string& key) const { return map_.count(key) != 0; }

    const std::string& text(const std::string& key) {
        auto it = map_.find(key);
        if (it == map_.end()) throw InvalidInput("missing key '" + key + "'");
        used_.push_back(key);
        return it->second;
    }

    double number(const std::string& key) {
        const std::string& s = text(key);
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || *end != '\0') throw InvalidInput("bad number for '" + key + "'");
        return v;
    }

    std::uint64_t integer(const std::string& key) {
        const std::string& s = text(key);
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw InvalidInput("bad integer for '" + key + "'");
        return std::stoull(s);
    }

    void require_all_used() const {
        for (const auto& [key, value] : map_)
            if (std::find(used_.begin(), used_.end(), key) == used_.end())
                throw InvalidInput("unknown key '" + key + "'");
    }

private:
    std::map<std::string, std::string> map_;
    std::vector<std::string> used_;
};

HandState parse_hand(Fields& f, const std::string& prefix) {
    HandState h;
    h.visible = f.integer(prefix + ".visible") != 0;
    h.id = static_cast<RegionId>(f.integer(prefix + ".id"));
    h.pixel_count = static_cast<std::uint32_t>(f.integer(prefix + ".px"));
    h.phi = f.number(prefix + ".phi");
    h.pos = {f.number(prefix + ".x"), f.number(prefix + ".y"), f.number(prefix + ".z")};
    h.mean_d = f.number(prefix + ".d");
    return h;
}

} // namespace

std::string format_track_record(const TrackRecord& r) {
    std::string out = "frame=" + std::to_string(r.frame_index);
    out += " phase=" + to_string(r.phase);
    append(out, "init", std::uint64_t(r.frames_elapsed));
    out += " event=" + to_string(r.event);
    append(out, "d", std::uint64_t(r.d_flag));
    append(out, "clip.min", r.clip.r_min);
    append(out, "clip.max", r.clip.r_max);
    append_hand(out, "h1", r.hand1);
    append_hand(out, "h2", r.hand2);
    append(out, "backslot", std::uint64_t(r.back_slot));
    if (r.backhand) append_hand(out, "bh", *r.backhand);
    return out;
}

TrackRecord parse_track_record(const std::string& line) {
    Fields f(line);
    TrackRecord r;
    r.frame_index = static_cast<std::uint32_t>(f.integer("frame"));
    r.phase = parse_phase(f.text("phase"));
    r.frames_elapsed = static_cast<std::uint32_t>(f.integer("init"));
    r.event = parse_event(f.text("event"));
    r.d_flag = f.integer("d") != 0;
    r.clip = {f.number("clip.min"), f.number("clip.max")};
    r.hand1 = parse_hand(f, "h1");
    r.hand2 = parse_hand(f, "h2");
    r.back_slot = static_cast<int>(f.integer("backslot"));
    if (r.back_slot > 2) throw InvalidInput("backslot must be 0, 1 or 2");
    if (f.has("bh.id")) r.backhand = parse_hand(f, "bh");
    f.require_all_used();
    return r;
}

void write_track_log(const TrackLog& log, std::ostream& out) {
    for (const auto& r : log) out << format_track_record(r) << '\n';
}

TrackLog read_track_log(std::istream& in) {
    TrackLog log;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            log.push_back(parse_track_record(line));
        } catch (const InvalidInput& e) {
            throw FormatError(std::string("track log line ") + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        if (log.size() > 1 && log[log.size() - 1].frame_index <= log[log.size() - 2].frame_index)
            throw FormatError("track log frames out of order at line " + std::to_string(line_no), line_no);
    }
    return log;
}

} // namespace handtrack
