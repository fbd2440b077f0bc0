// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "handtrack/cluster.hpp"
#include "handtrack/config.hpp"
#include "handtrack/eval.hpp"
#include "handtrack/synth.hpp"
#include "handtrack/tracker.hpp"
#include "handtrack/worker_pool.hpp"
#include "support.hpp"

using namespace handtrack;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

double ms_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
}

// Scenario data and pipeline runs are shared by several criteria.
struct Scenarios {
    std::map<std::string, ScenarioData> data;
    std::map<std::string, PipelineResult> runs;

    const ScenarioData& get(const std::string& name) {
        auto it = data.find(name);
        if (it == data.end()) it = data.emplace(name, make_scenario(name, 1)).first;
        return it->second;
    }

    const PipelineResult& run(const std::string& name) {
        auto it = runs.find(name);
        if (it == runs.end())
            it = runs.emplace(name, run_pipeline(get(name).frames, ClusterOptions{}, TrackerParams{}, true)).first;
        return it->second;
    }
};

Scenarios g_scenarios;
std::vector<WorkerPool*> g_pools;
const std::vector<unsigned> kWorkerCounts{1, 2, 4, 8};

// Clusters with every worker count and compares against the oracle. Also
// applies the convergence scan to the result.
bool equivalent(const PixelField& field, const ClusterOptions& base, std::size_t& unconverged) {
    const Segmentation expected = cluster_oracle(field, base);
    if (find_mergeable_pair(expected, base.params)) ++unconverged;
    for (std::size_t i = 0; i < kWorkerCounts.size(); ++i) {
        ClusterOptions o = base;
        o.workers = kWorkerCounts[i];
        const Segmentation got = cluster(field, o, nullptr, kWorkerCounts[i] > 1 ? g_pools[i] : nullptr);
        if (!same_partition(got, expected)) return false;
        if (find_mergeable_pair(got, base.params)) ++unconverged;
        if (!check_segmentation(got).empty()) return false;
    }
    return true;
}

std::size_t g_unconverged = 0;
std::size_t g_frames_scanned = 0;

Outcome criterion_1() {
    std::size_t mismatches = 0, random_frames = 0, scenario_frames = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ClusterOptions o;
        if (seed % 5 == 4) o.weighting = MeanWeighting::unweighted;
        if (!equivalent(make_pixel_field(testing::random_frame(seed), ClipRange::unbounded(), o.measure), o,
                        g_unconverged))
            ++mismatches;
        ++random_frames;
    }
    for (const auto& name : scenario_names()) {
        const auto& data = g_scenarios.get(name);
        for (const auto& frame : data.frames) {
            ClusterOptions o;
            if (!equivalent(make_pixel_field(frame, ClipRange::unbounded(), o.measure), o, g_unconverged))
                ++mismatches;
            ++scenario_frames;
        }
    }
    g_frames_scanned += (random_frames + scenario_frames) * (kWorkerCounts.size() + 1);
    return {mismatches == 0,
            fmt("%zu random 16x16 + %zu unclipped scenario frames, workers {1,2,4,8} vs oracle, %zu mismatches",
                random_frames, scenario_frames, mismatches)};
}

Outcome criterion_2() {
    // Pipeline segmentations (clipped while tracking) on top of the
    // unclipped ones scanned under criterion 1.
    for (const auto& name : scenario_names()) {
        for (const auto& seg : g_scenarios.run(name).segmentations) {
            if (find_mergeable_pair(seg, MergeParams{})) ++g_unconverged;
            ++g_frames_scanned;
        }
    }
    return {g_unconverged == 0,
            fmt("%zu clustered frames scanned, %zu with a mergeable 4-adjacent pair", g_frames_scanned, g_unconverged)};
}

Outcome criterion_3() {
    PixelField field(4, 1);
    const double values[] = {10, 30, 55, 95};
    for (int i = 0; i < 4; ++i) {
        field.valid[i] = 1;
        field.z[i] = 1.0;
        field.d[i] = 1.0;
        field.phi[i] = values[i];
        field.position[i] = {double(i), 0.0, 1.0};
    }
    ClusterOptions o;
    o.params = MergeParams{1e9, 40.0, 1.0, 1.0};

    RegionGraph g = init_regions(field);
    std::vector<std::vector<std::pair<RegionId, RegionId>>> rounds;
    for (int r = 0; r < 10; ++r) {
        auto rep = merge_round(g, o.merge_options());
        if (rep.merged == 0) break;
        rounds.push_back(rep.pairs);
    }
    RoundTrace trace;
    const Segmentation oracle = cluster_oracle(field, o, &trace);
    const Segmentation seg = g.to_segmentation();

    const bool progression = rounds.size() == 2 && rounds[0] == std::vector<std::pair<RegionId, RegionId>>{{1, 2}} &&
                             rounds[1] == std::vector<std::pair<RegionId, RegionId>>{{2, 3}};
    const bool final_state = seg.regions.size() == 2 && seg.labels == std::vector<RegionId>{3, 3, 3, 4} &&
                             seg.find(4) && seg.find(4)->pixel_count == 1;
    const bool oracle_agrees = trace == rounds && oracle.labels == seg.labels;
    return {progression && final_state && oracle_agrees,
            fmt("round 1 merges {1,2} (3 and 4 wait), round 2 merges {1+2,3}, region 4 stays alone: %s; oracle trace "
                "agrees: %s",
                progression && final_state ? "yes" : "no", oracle_agrees ? "yes" : "no")};
}

Outcome criterion_4() {
    const CameraIntrinsics k = default_intrinsics();
    std::vector<std::vector<double>> phis;
    std::size_t single_region = 0;
    for (double z : {0.5, 1.0, 2.0, 4.0}) {
        SceneObject plate;
        plate.name = "plate";
        plate.identity = 1;
        plate.role = ObjectRole::background;
        plate.shape = ShapeKind::rectangle;
        plate.half_width = plate.half_height = 10.0 * z;
        plate.reflectivity = 0.7;
        plate.trajectory = {{0, {0.0, 0.0, z}}};
        const Frame f = render_frame({plate}, k, 0, NoiseModel::none(), 1).frame;
        phis.push_back(phi_map(f, Measure::fused));
        const Segmentation seg = cluster(f, ClipRange::unbounded(), ClusterOptions{});
        if (seg.regions.size() == 1 && seg.regions[0].pixel_count == k.pixel_count()) ++single_region;
    }
    double worst = 0.0;
    for (std::size_t j = 1; j < phis.size(); ++j)
        for (std::size_t i = 0; i < phis[0].size(); ++i) worst = std::max(worst, std::abs(phis[j][i] - phis[0][i]));
    return {worst <= 1e-9 && single_region == 4,
            fmt("max |phi(z) - phi(0.5)| = %.3g over z in {0.5,1,2,4} (limit 1e-9); plates clustered to one region: "
                "%zu/4",
                worst, single_region)};
}

Outcome criterion_5() {
    const auto& data = g_scenarios.get("sleeve");
    const auto hands = data.truth.hand_identities();
    std::vector<std::uint16_t> arms;
    for (const auto& o : data.truth.objects)
        if (o.role == ObjectRole::arm) arms.push_back(o.identity);
    const std::uint32_t size_min = TrackerParams{}.size_min;

    std::size_t good = 0, fused_clusters_min = SIZE_MAX, baseline_clusters_min = SIZE_MAX, baseline_good = 0;
    double worst_iou = 1.0;
    for (std::size_t k = 0; k < data.frames.size(); ++k) {
        for (Measure m : {Measure::fused, Measure::baseline}) {
            ClusterOptions o;
            o.measure = m;
            const Segmentation seg = cluster(data.frames[k], ClipRange::unbounded(), o);
            const SegScore score = segmentation_iou(seg, data.truth.frames[k], size_min);
            bool ok = score.cluster_count >= 4;
            std::vector<RegionId> hand_regions;
            for (auto h : hands) {
                const ObjectScore* s = score.find(h);
                ok = ok && s && s->iou >= 0.9;
                if (s) hand_regions.push_back(s->region);
                if (m == Measure::fused && s) worst_iou = std::min(worst_iou, s->iou);
            }
            for (auto a : arms) {
                const ObjectScore* s = score.find(a);
                if (s && std::find(hand_regions.begin(), hand_regions.end(), s->region) != hand_regions.end())
                    ok = false;
            }
            if (m == Measure::fused) {
                good += ok;
                fused_clusters_min = std::min(fused_clusters_min, score.cluster_count);
            } else {
                baseline_good += ok;
                baseline_clusters_min = std::min(baseline_clusters_min, score.cluster_count);
            }
        }
    }
    const std::size_t n = data.frames.size();
    return {good == n,
            fmt("fused: %zu/%zu frames with >=4 regions above size_min, hands apart from arms, hand IoU >= 0.9 (min "
                "regions %zu, worst hand IoU %.4f); baseline, reported only: %zu/%zu frames (min regions %zu)",
                good, n, fused_clusters_min, worst_iou, baseline_good, n, baseline_clusters_min)};
}

Outcome criterion_6() {
    const auto& data = g_scenarios.get("back-forth");
    const auto& run = g_scenarios.run("back-forth");
    const TrackScore s = tracking_metrics(run.log, data.truth, TrackerParams{}.size_min);

    double max_step = 0.0;
    for (const auto& o : data.scenario.objects) {
        if (o.role != ObjectRole::hand) continue;
        for (int f = 1; f < data.scenario.frame_count; ++f)
            max_step = std::max(max_step, std::abs(o.center_at(f).z - o.center_at(f - 1).z));
    }
    std::size_t assigned = 0;
    for (const auto& r : run.log) assigned += r.event == EventKind::assigned && r.phase == Phase::tracking;
    const bool pass = s.init_success && s.id_swaps == 0 && s.lost_frames == 0 && max_step <= 0.05 &&
                      data.frames.size() == 120 && s.occlusions == 0;
    return {pass, fmt("%zu frames, max per-frame z motion %.3f m, id_swaps=%zu lost_frames=%zu, both hands assigned "
                      "in %zu/%zu tracking frames",
                      data.frames.size(), max_step, s.id_swaps, s.lost_frames, assigned,
                      data.frames.size() - TrackerParams{}.init_frames)};
}

Outcome criterion_7() {
    const auto& data = g_scenarios.get("crossing-safe");
    const auto& run = g_scenarios.run("crossing-safe");
    const TrackerParams p;
    const TrackScore s = tracking_metrics(run.log, data.truth, p.size_min);

    // Order of the first occlusion and reacquisition events.
    std::size_t entered = SIZE_MAX, reacquired = SIZE_MAX;
    for (std::size_t k = 0; k < run.log.size(); ++k) {
        if (run.log[k].event == EventKind::occlusion_entered && entered == SIZE_MAX) entered = k;
        if (run.log[k].event == EventKind::reacquired && reacquired == SIZE_MAX) reacquired = k;
    }
    const bool order = entered != SIZE_MAX && reacquired != SIZE_MAX && entered < reacquired;

    // Re-check every reacquisition from the written log and a dump of the
    // frame's segmentation.
    std::stringstream text;
    write_track_log(run.log, text);
    const TrackLog log = read_track_log(text);
    auto dir = testing::scratch_dir("acceptance_reacquire");
    std::size_t checked = 0, satisfied = 0;
    for (std::size_t k = 1; k < log.size(); ++k) {
        const TrackRecord& rec = log[k];
        if (rec.event != EventKind::reacquired) continue;
        const TrackRecord& prev = log[k - 1];
        ++checked;
        export_label_pgm(run.segmentations[k], dir / "labels.pgm");
        {
            std::ofstream csv(dir / "regions.csv");
            write_region_csv(run.segmentations[k], csv);
        }
        const Segmentation dumped = load_segmentation(dir / "labels.pgm", dir / "regions.csv");
        const HandState& reacq = prev.back_slot == 1 ? rec.hand1 : rec.hand2;
        const HandState& front = prev.back_slot == 1 ? rec.hand2 : rec.hand1;
        const Region* region = dumped.find(reacq.id);
        if (region && prev.backhand && reacquisition_criteria(*region, front, *prev.backhand, p)) ++satisfied;
    }
    std::filesystem::remove_all(dir);
    const bool pass = order && s.reacquire_latency <= 5 && s.id_swaps == 0 && checked > 0 && satisfied == checked;
    return {pass, fmt("OcclusionEntered at frame %zu, Reacquired at frame %zu, reacquire_latency=%zu (limit 5), "
                      "id_swaps=%zu, reacquisition criteria hold on %zu/%zu dumped regions",
                      entered, reacquired, s.reacquire_latency, s.id_swaps, satisfied, checked)};
}

Outcome criterion_8() {
    const auto& data = g_scenarios.get("third-hand");
    const auto& run = g_scenarios.run("third-hand");
    const TrackScore s = tracking_metrics(run.log, data.truth, TrackerParams{}.size_min);

    // Where the distractor sits relative to the hands over the sequence.
    const SceneObject* third = nullptr;
    for (const auto& o : data.scenario.objects)
        if (o.role == ObjectRole::distractor) third = &o;
    int behind = 0, between = 0, in_front = 0;
    for (int f = third->first_frame; f < data.scenario.frame_count; ++f) {
        const double z = third->center_at(f).z;
        if (z > 1.0) ++behind;
        else if (z >= 0.8) ++between;
        else ++in_front;
    }
    return {s.init_success && s.id_swaps == 0,
            fmt("distractor frames behind/between/in front = %d/%d/%d, id_swaps=%zu over %zu frames", behind, between,
                in_front, s.id_swaps, run.log.size())};
}

Outcome criterion_9() {
    const auto& data = g_scenarios.get("crossing-contact");
    const auto& run = g_scenarios.run("crossing-contact");
    const std::uint32_t size_min = TrackerParams{}.size_min;
    const TrackScore s = tracking_metrics(run.log, data.truth, size_min);
    const std::size_t merged = merged_hand_frames(run.segmentations, data.truth, size_min);
    return {merged >= 1 || s.id_swaps >= 1,
            fmt("failure detected: merged-hand frames=%zu, id_swaps=%zu, lost_frames=%zu", merged, s.id_swaps,
                s.lost_frames)};
}

Outcome criterion_10() {
    // Heaviest unclipped scenario frame by initial region count.
    const Frame* heaviest = nullptr;
    std::string where;
    std::size_t most = 0;
    for (const auto& name : scenario_names()) {
        const auto& data = g_scenarios.get(name);
        for (const auto& f : data.frames) {
            const auto n = static_cast<std::size_t>(std::count_if(f.distance.begin(), f.distance.end(),
                                                                  [](double d) { return d > 0; }));
            if (n > most) {
                most = n;
                heaviest = &f;
                where = name + " frame " + std::to_string(f.frame_index);
            }
        }
    }
    ClusterStats stats;
    const auto t = std::chrono::steady_clock::now();
    const Segmentation seg = cluster(*heaviest, ClipRange::unbounded(), ClusterOptions{}, &stats);
    const double ms = ms_since(t);
    const std::size_t bound = std::size_t(204) * 204;
    const bool converged = !find_mergeable_pair(seg, MergeParams{});

    const auto reports =
        bench_sequence(g_scenarios.get("back-forth").frames, ClusterOptions{}, TrackerParams{}, {1, 2});
    const BenchReport& r = reports.front();
    return {stats.rounds <= bound && ms <= 2000.0 && converged,
            fmt("%s (%zu valid px): %zu rounds (bound %zu), %.1f ms single worker (limit 2000); back-forth pipeline "
                "per frame: find %.2f / merge %.2f / update %.2f / tracking %.3f ms, %.0f rounds, outputs identical "
                "for workers {1,2}",
                where.c_str(), most, stats.rounds, bound, ms, r.find_mergepartner_ms, r.merge_regions_ms,
                r.update_values_ms, r.tracking_ms, r.rounds)};
}

Outcome criterion_11() {
    const PipelineConfig fresh;
    std::istringstream empty;
    const PipelineConfig parsed = parse_config(empty);
    auto exact = [](const PipelineConfig& c) {
        return c.merge.t_z == 0.04 && c.merge.t_phi == 0.009 && c.merge.alpha_z == 8.0 / std::numbers::pi &&
               c.merge.alpha_phi == 4.0 / 3.0 && c.tracker.size_min == 200 && c.tracker.t_d == 0.1 &&
               c.tracker.t_phi_track == 0.009 && c.tracker.r_th == 0.1 && c.tracker.d_min == 0.1 &&
               c.tracker.init_frames == 30;
    };
    return {exact(fresh) && exact(parsed),
            fmt("t_z=%g t_phi=%g alpha_z=%.17g alpha_phi=%.17g size_min=%u t_d=%g r_th=%g d_min=%g init_frames=%u",
                fresh.merge.t_z, fresh.merge.t_phi, fresh.merge.alpha_z, fresh.merge.alpha_phi,
                fresh.tracker.size_min, fresh.tracker.t_d, fresh.tracker.r_th, fresh.tracker.d_min,
                fresh.tracker.init_frames)};
}

} // namespace

int main() {
    std::vector<std::unique_ptr<WorkerPool>> pools;
    for (unsigned w : kWorkerCounts) {
        pools.push_back(std::make_unique<WorkerPool>(w));
        g_pools.push_back(pools.back().get());
    }

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"oracle equivalence", criterion_1},     {"convergence", criterion_2},
        {"round semantics", criterion_3},        {"phi invariance", criterion_4},
        {"fused vs baseline measure", criterion_5}, {"back-and-forth tracking", criterion_6},
        {"occlusion protocol", criterion_7},     {"third hand", criterion_8},
        {"contact-crossing failure", criterion_9}, {"performance", criterion_10},
        {"parameter defaults", criterion_11},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] %zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    o.detail.c_str(), ms_since(t) / 1000.0);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
