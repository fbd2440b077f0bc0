#include "handtrack/eval.hpp"

#include <chrono>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>

#include "handtrack/errors.hpp"
#include "handtrack/worker_pool.hpp"

namespace handtrack {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

constexpr double kInf = std::numeric_limits<double>::infinity();

std::pair<std::uint16_t, std::uint16_t> hand_pair(const GroundTruth& gt) {
    const auto ids = gt.hand_identities();
    if (ids.size() != 2) throw InvalidInput("ground truth must name exactly two hands");
    return {ids[0], ids[1]};
}

std::uint32_t visible_pixels(const GroundTruthFrame& f, std::uint16_t id) {
    const ObjectTruth* o = f.find(id);
    return o ? o->pixel_count : 0;
}

// Distance from a tracked position to a ground-truth hand; infinite when the
// hand shows no pixel.
double gt_distance(const Point3& p, const GroundTruthFrame& f, std::uint16_t id) {
    const ObjectTruth* o = f.find(id);
    if (!o || o->pixel_count == 0) return kInf;
    return distance(p, o->centroid);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

const ObjectScore* SegScore::find(std::uint16_t identity) const {
    for (const auto& o : objects)
        if (o.identity == identity) return &o;
    return nullptr;
}

SegScore segmentation_iou(const Segmentation& seg, const GroundTruthFrame& gt, std::uint32_t size_min) {
    if (seg.width != gt.width || seg.height != gt.height || seg.labels.size() != gt.labels.size())
        throw InvalidInput("segmentation and ground truth differ in size");
    std::map<RegionId, std::size_t> region_size;
    std::map<std::uint16_t, std::size_t> object_size;
    std::map<std::pair<std::uint16_t, RegionId>, std::size_t> overlap;
    for (std::size_t i = 0; i < seg.labels.size(); ++i) {
        const RegionId r = seg.labels[i];
        const std::uint16_t g = gt.labels[i];
        if (r != kBackground) ++region_size[r];
        if (g != 0) ++object_size[g];
        if (r != kBackground && g != 0) ++overlap[{g, r}];
    }
    SegScore score;
    score.cluster_count = seg.regions_at_least(size_min);
    for (const auto& o : gt.objects) {
        ObjectScore s{o.identity, 0.0, kBackground};
        const auto it = object_size.find(o.identity);
        if (it != object_size.end()) {
            for (auto ov = overlap.lower_bound({o.identity, 0}); ov != overlap.end() && ov->first.first == o.identity;
                 ++ov) {
                const double inter = double(ov->second);
                const double uni = double(it->second + region_size[ov->first.second]) - inter;
                const double iou = inter / uni;
                if (iou > s.iou || (iou == s.iou && ov->first.second > s.region)) {
                    s.iou = iou;
                    s.region = ov->first.second;
                }
            }
        }
        score.objects.push_back(s);
    }
    return score;
}

std::pair<std::uint16_t, std::uint16_t> slot_identities(const TrackLog& log, const GroundTruth& gt) {
    const auto [a, b] = hand_pair(gt);
    for (const auto& rec : log) {
        if (rec.phase == Phase::initializing) continue;
        if (rec.frame_index >= gt.frames.size()) throw InvalidInput("log frame outside the ground truth");
        const auto& f = gt.frames[rec.frame_index];
        const double keep = gt_distance(rec.hand1.pos, f, a) + gt_distance(rec.hand2.pos, f, b);
        const double swap = gt_distance(rec.hand1.pos, f, b) + gt_distance(rec.hand2.pos, f, a);
        if (swap < keep) return {b, a};
        return {a, b};
    }
    return {0, 0};
}

TrackScore tracking_metrics(const TrackLog& log, const GroundTruth& gt, std::uint32_t size_min) {
    if (log.size() != gt.frames.size())
        throw InvalidInput("log has " + std::to_string(log.size()) + " records but ground truth has " +
                           std::to_string(gt.frames.size()) + " frames");
    for (std::size_t k = 0; k < log.size(); ++k)
        if (log[k].frame_index != k) throw InvalidInput("log record " + std::to_string(k) + " is out of sequence");
    const auto [gt_a, gt_b] = hand_pair(gt);

    TrackScore score;
    const auto slots = slot_identities(log, gt);
    score.init_success = slots.first != 0;
    if (!score.init_success) return score;
    auto slot_gt = [&](int slot) { return slot == 1 ? slots.first : slots.second; };

    const std::size_t n = log.size();
    for (std::size_t k = 0; k < n; ++k) {
        const auto& rec = log[k];
        const auto& f = gt.frames[k];
        if (rec.event == EventKind::occlusion_entered) ++score.occlusions;
        if (rec.event == EventKind::reacquired) ++score.reacquisitions;

        const bool both_visible = visible_pixels(f, gt_a) >= size_min && visible_pixels(f, gt_b) >= size_min;
        if (both_visible && (rec.phase == Phase::occluded || rec.event == EventKind::hand_lost_search))
            ++score.lost_frames;

        if (rec.phase == Phase::initializing) continue;
        bool swapped = false;
        for (int slot : {1, 2}) {
            const HandState& h = slot == 1 ? rec.hand1 : rec.hand2;
            if (!h.visible) continue;
            const std::uint16_t own = slot_gt(slot);
            const std::uint16_t other = own == gt_a ? gt_b : gt_a;
            if (gt_distance(h.pos, f, other) < gt_distance(h.pos, f, own)) swapped = true;
        }
        if (swapped) ++score.id_swaps;
    }

    // Latency per occlusion episode: from the covered hand showing size_min
    // pixels again to the Reacquired record.
    for (std::size_t k = 0; k < n; ++k) {
        if (log[k].event != EventKind::occlusion_entered) continue;
        const std::uint16_t covered = slot_gt(log[k].back_slot);
        std::size_t end = k + 1;
        while (end < n && log[end].phase == Phase::occluded) ++end;
        const bool reacquired = end < n && log[end].event == EventKind::reacquired;

        std::size_t hidden = k;
        while (hidden < n && visible_pixels(gt.frames[hidden], covered) >= size_min) ++hidden;
        std::size_t back = hidden;
        while (back < n && visible_pixels(gt.frames[back], covered) < size_min) ++back;
        if (hidden == n) {
            back = k;  // never actually hidden
        } else if (back == n) {
            continue;  // never shows again
        }
        std::size_t latency = 0;
        if (reacquired) {
            latency = end > back ? end - back : 0;
        } else {
            latency = n > back ? n - back : 0;
        }
        score.reacquire_latency = std::max(score.reacquire_latency, latency);
    }
    return score;
}

std::size_t merged_hand_frames(const std::vector<Segmentation>& segs, const GroundTruth& gt,
                               std::uint32_t size_min) {
    if (segs.size() != gt.frames.size()) throw InvalidInput("segmentation count differs from ground truth");
    const auto [a, b] = hand_pair(gt);
    std::size_t merged = 0;
    for (std::size_t k = 0; k < segs.size(); ++k) {
        const auto& seg = segs[k];
        const auto& f = gt.frames[k];
        if (seg.labels.size() != f.labels.size()) throw InvalidInput("segmentation and ground truth differ in size");
        std::size_t na = 0, nb = 0;
        std::map<RegionId, std::pair<std::size_t, std::size_t>> hits;
        for (std::size_t i = 0; i < f.labels.size(); ++i) {
            const bool in_a = f.labels[i] == a, in_b = f.labels[i] == b;
            na += in_a;
            nb += in_b;
            if (seg.labels[i] == kBackground || !(in_a || in_b)) continue;
            auto& h = hits[seg.labels[i]];
            h.first += in_a;
            h.second += in_b;
        }
        if (na < size_min || nb < size_min) continue;
        for (const auto& [id, h] : hits) {
            if (2 * h.first >= na && 2 * h.second >= nb) {
                ++merged;
                break;
            }
        }
    }
    return merged;
}

std::vector<BenchReport> bench_frame(const Frame& frame, const ClipRange& clip, const ClusterOptions& options,
                                     const std::vector<unsigned>& worker_counts, unsigned repeats) {
    if (worker_counts.empty()) throw InvalidInput("bench needs at least one worker count");
    if (repeats == 0) throw InvalidInput("bench needs at least one repeat");
    const PixelField field = make_pixel_field(frame, clip, options.measure);
    std::vector<BenchReport> out;
    Segmentation reference;
    for (unsigned w : worker_counts) {
        WorkerPool pool(w);
        ClusterOptions o = options;
        o.workers = w;
        BenchReport r;
        r.workers = w;
        r.frames = 1;
        for (unsigned rep = 0; rep < repeats; ++rep) {
            ClusterStats stats;
            const auto t = Clock::now();
            Segmentation seg = cluster(field, o, &stats, &pool);
            r.total_ms += ms_since(t);
            r.rounds += double(stats.rounds);
            r.find_mergepartner_ms += stats.timings.find_mergepartner_ms;
            r.merge_regions_ms += stats.timings.merge_regions_ms;
            r.update_values_ms += stats.timings.update_values_ms;
            if (out.empty() && rep == 0) {
                reference = std::move(seg);
            } else if (!(seg == reference)) {
                throw std::runtime_error("segmentation differs with " + std::to_string(w) + " workers");
            }
        }
        const double k = repeats;
        r.rounds /= k;
        r.find_mergepartner_ms /= k;
        r.merge_regions_ms /= k;
        r.update_values_ms /= k;
        r.total_ms /= k;
        out.push_back(r);
    }
    return out;
}

std::vector<BenchReport> bench_sequence(const std::vector<Frame>& frames, const ClusterOptions& options,
                                        const TrackerParams& tracker, const std::vector<unsigned>& worker_counts) {
    if (worker_counts.empty()) throw InvalidInput("bench needs at least one worker count");
    std::vector<BenchReport> out;
    PipelineResult reference;
    for (unsigned w : worker_counts) {
        WorkerPool pool(w);
        ClusterOptions o = options;
        o.workers = w;
        const auto t = Clock::now();
        PipelineResult res = run_pipeline(frames, o, tracker, true, &pool);
        const double total = ms_since(t);

        BenchReport r;
        r.workers = w;
        r.frames = frames.size();
        for (const auto& s : res.cluster_stats) {
            r.rounds += double(s.rounds);
            r.find_mergepartner_ms += s.timings.find_mergepartner_ms;
            r.merge_regions_ms += s.timings.merge_regions_ms;
            r.update_values_ms += s.timings.update_values_ms;
        }
        r.tracking_ms = res.tracking_ms;
        r.total_ms = total;
        const double k = double(frames.size());
        r.rounds /= k;
        r.find_mergepartner_ms /= k;
        r.merge_regions_ms /= k;
        r.update_values_ms /= k;
        r.tracking_ms /= k;
        r.total_ms /= k;

        if (out.empty()) {
            reference = std::move(res);
        } else if (!(res.log == reference.log) || !(res.segmentations == reference.segmentations)) {
            throw std::runtime_error("pipeline output differs with " + std::to_string(w) + " workers");
        }
        out.push_back(r);
    }
    return out;
}

void write_seg_score(const SegScore& s, std::ostream& out) {
    out << "cluster_count=" << s.cluster_count << '\n';
    for (const auto& o : s.objects) {
        out << "object." << o.identity << ".iou=" << fmt(o.iou) << '\n';
        out << "object." << o.identity << ".region=" << o.region << '\n';
    }
}

void write_track_score(const TrackScore& s, std::ostream& out) {
    out << "init_success=" << (s.init_success ? 1 : 0) << '\n'
        << "id_swaps=" << s.id_swaps << '\n'
        << "lost_frames=" << s.lost_frames << '\n'
        << "reacquire_latency=" << s.reacquire_latency << '\n'
        << "occlusions=" << s.occlusions << '\n'
        << "reacquisitions=" << s.reacquisitions << '\n';
}

void write_bench_report(const BenchReport& r, std::ostream& out) {
    out << "workers=" << r.workers << '\n'
        << "frames=" << r.frames << '\n'
        << "rounds=" << fmt(r.rounds) << '\n'
        << "find_mergepartner_ms=" << fmt(r.find_mergepartner_ms) << '\n'
        << "merge_regions_ms=" << fmt(r.merge_regions_ms) << '\n'
        << "update_values_ms=" << fmt(r.update_values_ms) << '\n'
        << "tracking_ms=" << fmt(r.tracking_ms) << '\n'
        << "total_ms=" << fmt(r.total_ms) << '\n';
}

void write_bench_csv(const std::vector<BenchReport>& reports, std::ostream& out) {
    out << "workers,frames,rounds,find_mergepartner_ms,merge_regions_ms,update_values_ms,tracking_ms,total_ms\n";
    for (const auto& r : reports)
        out << r.workers << ',' << r.frames << ',' << fmt(r.rounds) << ',' << fmt(r.find_mergepartner_ms) << ','
            << fmt(r.merge_regions_ms) << ',' << fmt(r.update_values_ms) << ',' << fmt(r.tracking_ms) << ','
            << fmt(r.total_ms) << '\n';
}

} // namespace handtrack
