#include "handtrack/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "handtrack/cluster.hpp"
#include "handtrack/config.hpp"
#include "handtrack/errors.hpp"
#include "handtrack/eval.hpp"
#include "handtrack/sequence_io.hpp"
#include "handtrack/synth.hpp"
#include "handtrack/tracker.hpp"

namespace handtrack {
namespace {

namespace fs = std::filesystem;

// Raised for problems with the input data rather than the command line.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonFlags {
    std::string config;
    std::optional<unsigned> workers;
    std::optional<std::string> measure;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* cmd, bool with_workers = true) {
        cmd->add_option("--config", config, "key = value parameter file")->check(CLI::ExistingFile);
        if (with_workers) cmd->add_option("--workers", workers, "clustering worker threads")->check(CLI::PositiveNumber);
        cmd->add_option("--measure", measure, "homogeneity measure")->check(CLI::IsMember({"fused", "baseline"}));
        cmd->add_option("--seed", seed, "noise seed");
    }

    PipelineConfig resolve() const {
        PipelineConfig c = config.empty() ? PipelineConfig{} : load_config(config);
        if (workers) c.workers = *workers;
        if (measure) c.measure = parse_measure(*measure);
        if (seed) c.seed = *seed;
        c.validate();
        return c;
    }
};

std::string frame_name(const char* stem, std::size_t k, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04zu.%s", stem, k, ext);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
}

void dump_segmentation(const Segmentation& seg, const fs::path& dir, std::size_t k) {
    export_label_pgm(seg, dir / frame_name("labels", k, "pgm"));
    std::ostringstream csv;
    write_region_csv(seg, csv);
    write_text(dir / frame_name("regions", k, "csv"), csv.str());
}

TrackLog read_log_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_track_log(in);
}

int cmd_synth(const std::string& name, const CommonFlags& flags, const fs::path& out_dir, std::ostream& out) {
    const PipelineConfig cfg = flags.resolve();
    const ScenarioData data = make_scenario(name, cfg.seed, cfg.noise);
    fs::create_directories(out_dir);
    store_sequence(data.frames, data.scenario.intrinsics, out_dir / "sequence.ris");
    write_ground_truth(data.truth, out_dir / "truth");
    out << "scenario=" << name << "\nframes=" << data.frames.size() << "\nseed=" << cfg.seed
        << "\nsequence=" << (out_dir / "sequence.ris").string() << "\ntruth=" << (out_dir / "truth").string()
        << '\n';
    return kExitOk;
}

int cmd_segment(const fs::path& seq, std::size_t index, std::optional<double> clip_min,
                std::optional<double> clip_max, const CommonFlags& flags, const fs::path& out_dir,
                std::ostream& out) {
    const PipelineConfig cfg = flags.resolve();
    const auto frames = load_sequence(seq);
    if (index >= frames.size())
        throw DataError("frame " + std::to_string(index) + " out of range (sequence has " +
                        std::to_string(frames.size()) + ")");
    ClipRange clip;
    if (clip_min || clip_max) {
        clip = ClipRange::bounded(clip_min.value_or(0.0), clip_max.value_or(std::numeric_limits<double>::infinity()));
    }
    ClusterStats stats;
    const Segmentation seg = canonicalized(cluster(frames[index], clip, cfg.cluster_options(), &stats));
    fs::create_directories(out_dir);
    export_label_pgm(seg, out_dir / "labels.pgm");
    std::ostringstream csv;
    write_region_csv(seg, csv);
    write_text(out_dir / "regions.csv", csv.str());
    out << "frame=" << index << "\nmeasure=" << to_string(cfg.measure) << "\ninitial_regions=" << stats.initial_regions
        << "\nrounds=" << stats.rounds << "\nregions=" << seg.regions.size()
        << "\nregions_above_size_min=" << seg.regions_at_least(cfg.tracker.size_min) << '\n';
    return kExitOk;
}

int cmd_track(const fs::path& seq, const CommonFlags& flags, const fs::path& log_path, const std::string& dump,
              std::ostream& out) {
    const PipelineConfig cfg = flags.resolve();
    const auto frames = load_sequence(seq);
    if (frames.empty()) throw DataError("sequence has no frames");
    const auto result = run_pipeline(frames, cfg.cluster_options(), cfg.tracker, !dump.empty());
    std::ostringstream text;
    write_track_log(result.log, text);
    write_text(log_path, text.str());
    if (!dump.empty()) {
        fs::create_directories(dump);
        for (std::size_t k = 0; k < result.segmentations.size(); ++k) dump_segmentation(result.segmentations[k], dump, k);
    }
    const bool init = std::any_of(result.log.begin(), result.log.end(),
                                  [](const TrackRecord& r) { return r.phase != Phase::initializing; });
    std::size_t occlusions = 0, reacquired = 0;
    for (const auto& r : result.log) {
        occlusions += r.event == EventKind::occlusion_entered;
        reacquired += r.event == EventKind::reacquired;
    }
    out << "records=" << result.log.size() << "\ninit_success=" << init << "\nocclusions=" << occlusions
        << "\nreacquisitions=" << reacquired << "\nlog=" << log_path.string() << '\n';
    return init ? kExitOk : kExitData;
}

int cmd_eval(const fs::path& log_path, const fs::path& truth_dir, const std::string& dump, const CommonFlags& flags,
             const std::string& out_path, std::ostream& out) {
    const PipelineConfig cfg = flags.resolve();
    const TrackLog log = read_log_file(log_path);
    const GroundTruth gt = read_ground_truth(truth_dir);
    std::ostringstream text;
    write_track_score(tracking_metrics(log, gt, cfg.tracker.size_min), text);
    if (!dump.empty()) {
        std::vector<Segmentation> segs;
        for (std::size_t k = 0; k < gt.frames.size(); ++k)
            segs.push_back(load_segmentation(fs::path(dump) / frame_name("labels", k, "pgm"),
                                             fs::path(dump) / frame_name("regions", k, "csv")));
        text << "merged_hand_frames=" << merged_hand_frames(segs, gt, cfg.tracker.size_min) << '\n';
        for (auto id : gt.hand_identities()) {
            double sum = 0.0, worst = 1.0;
            std::size_t n = 0;
            for (std::size_t k = 0; k < segs.size(); ++k) {
                const ObjectTruth* o = gt.frames[k].find(id);
                if (!o || o->pixel_count < cfg.tracker.size_min) continue;
                const double iou = segmentation_iou(segs[k], gt.frames[k], cfg.tracker.size_min).find(id)->iou;
                sum += iou;
                worst = std::min(worst, iou);
                ++n;
            }
            char buf[128];
            std::snprintf(buf, sizeof buf, "hand.%u.mean_iou=%.6g\nhand.%u.min_iou=%.6g\n", unsigned(id),
                          n ? sum / double(n) : 0.0, unsigned(id), n ? worst : 0.0);
            text << buf;
        }
    }
    out << text.str();
    if (!out_path.empty()) write_text(out_path, text.str());
    return kExitOk;
}

int cmd_bench(const fs::path& seq, std::optional<std::size_t> frame, const std::vector<unsigned>& workers,
              unsigned repeats, const CommonFlags& flags, const std::string& csv_path, std::ostream& out) {
    const PipelineConfig cfg = flags.resolve();
    const auto frames = load_sequence(seq);
    if (frames.empty()) throw DataError("sequence has no frames");
    std::vector<BenchReport> reports;
    if (frame) {
        if (*frame >= frames.size()) throw DataError("frame " + std::to_string(*frame) + " out of range");
        reports = bench_frame(frames[*frame], ClipRange::unbounded(), cfg.cluster_options(), workers, repeats);
    } else {
        reports = bench_sequence(frames, cfg.cluster_options(), cfg.tracker, workers);
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i) out << '\n';
        write_bench_report(reports[i], out);
    }
    if (!csv_path.empty()) {
        std::ostringstream csv;
        write_bench_csv(reports, csv);
        write_text(csv_path, csv.str());
    }
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hand segmentation and tracking on range-intensity sequences", "handtrack"};
    app.require_subcommand(1);

    CommonFlags common;

    auto* synth = app.add_subcommand("synth", "render a scenario sequence with ground truth");
    std::string scenario;
    std::string synth_out;
    synth->add_option("scenario", scenario, "scenario name")->required();
    synth->add_option("--out", synth_out, "output directory")->required();
    common.attach(synth, false);

    auto* segment = app.add_subcommand("segment", "cluster one frame");
    std::string seg_seq, seg_out;
    std::size_t seg_frame = 0;
    std::optional<double> clip_min, clip_max;
    segment->add_option("sequence", seg_seq, "RIS1 sequence file")->required();
    segment->add_option("--frame", seg_frame, "frame index");
    segment->add_option("--clip-min", clip_min, "lower distance bound, meters");
    segment->add_option("--clip-max", clip_max, "upper distance bound, meters");
    segment->add_option("--out", seg_out, "output directory")->required();
    common.attach(segment);

    auto* track = app.add_subcommand("track", "track both hands through a sequence");
    std::string track_seq, track_out, track_dump;
    track->add_option("sequence", track_seq, "RIS1 sequence file")->required();
    track->add_option("--out", track_out, "track log path")->required();
    track->add_option("--dump", track_dump, "directory for per-frame label maps and region tables");
    common.attach(track);

    auto* eval = app.add_subcommand("eval", "score a track log against ground truth");
    std::string eval_log, eval_truth, eval_dump, eval_out;
    eval->add_option("log", eval_log, "track log")->required();
    eval->add_option("--truth", eval_truth, "ground-truth directory")->required();
    eval->add_option("--dump", eval_dump, "segmentation dump written by track --dump");
    eval->add_option("--out", eval_out, "also write the scores here");
    common.attach(eval, false);

    auto* bench = app.add_subcommand("bench", "time the clustering phases");
    std::string bench_seq, bench_out;
    std::optional<std::size_t> bench_frame_index;
    std::vector<unsigned> bench_workers{1};
    unsigned repeats = 1;
    bench->add_option("sequence", bench_seq, "RIS1 sequence file")->required();
    bench->add_option("--frame", bench_frame_index, "bench a single unclipped frame instead of the pipeline");
    bench->add_option("--workers", bench_workers, "comma-separated worker counts")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    bench->add_option("--repeats", repeats, "repetitions per worker count (single frame)")->check(CLI::PositiveNumber);
    bench->add_option("--out", bench_out, "CSV output path");
    common.attach(bench, false);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*synth) return cmd_synth(scenario, common, synth_out, out);
        if (*segment) return cmd_segment(seg_seq, seg_frame, clip_min, clip_max, common, seg_out, out);
        if (*track) return cmd_track(track_seq, common, track_out, track_dump, out);
        if (*eval) return cmd_eval(eval_log, eval_truth, eval_dump, common, eval_out, out);
        if (*bench) return cmd_bench(bench_seq, bench_frame_index, bench_workers, repeats, common, bench_out, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

} // namespace handtrack
