// Reference clustering. Deliberately plain: every round recomputes every
// region's choice from a frozen copy of the statistics, with adjacency kept
// as std::set and labels resolved once at the end.

#include <algorithm>
#include <set>

#include "handtrack/cluster.hpp"

namespace handtrack {
namespace {

struct Stats {
    double count = 0.0;
    double z = 0.0, d = 0.0, phi = 0.0;
    double x = 0.0, y = 0.0, cz = 0.0;
};

Stats combine(const Stats& keep, const Stats& gone, MeanWeighting weighting) {
    Stats out;
    out.count = keep.count + gone.count;
    auto wmean = [&](double a, double b) { return (keep.count * a + gone.count * b) / out.count; };
    if (weighting == MeanWeighting::area) {
        out.z = wmean(keep.z, gone.z);
        out.d = wmean(keep.d, gone.d);
        out.phi = wmean(keep.phi, gone.phi);
    } else {
        out.z = 0.5 * (keep.z + gone.z);
        out.d = 0.5 * (keep.d + gone.d);
        out.phi = 0.5 * (keep.phi + gone.phi);
    }
    out.x = wmean(keep.x, gone.x);
    out.y = wmean(keep.y, gone.y);
    out.cz = wmean(keep.cz, gone.cz);
    return out;
}

} // namespace

Segmentation cluster_oracle(const PixelField& field, const ClusterOptions& options, RoundTrace* trace) {
    options.params.validate();
    const MergeParams& p = options.params;
    const std::size_t n = field.size();
    const std::uint32_t w = field.width;

    std::vector<Stats> stats(n + 1);
    std::vector<std::set<RegionId>> adjacent(n + 1);
    std::vector<RegionId> absorbed_by(n + 1, kBackground);
    std::set<RegionId> alive;
    for (std::size_t i = 0; i < n; ++i) {
        if (!field.valid[i]) continue;
        const auto id = static_cast<RegionId>(i + 1);
        const auto& pos = field.position[i];
        stats[id] = Stats{1.0, field.z[i], field.d[i], field.phi[i], pos.x, pos.y, pos.z};
        alive.insert(id);
        const std::size_t u = i % w;
        if (u + 1 < w && field.valid[i + 1]) {
            adjacent[id].insert(id + 1);
            adjacent[id + 1].insert(id);
        }
        if (i + w < n && field.valid[i + w]) {
            adjacent[id].insert(static_cast<RegionId>(id + w));
            adjacent[id + w].insert(id);
        }
    }
    if (trace) trace->clear();

    std::vector<RegionId> choice(n + 1, kBackground);
    for (;;) {
        for (RegionId r : alive) {
            const HomogeneityDescriptor wr{stats[r].z, stats[r].phi};
            RegionId best = kBackground;
            double best_f = 0.0;
            for (RegionId s : adjacent[r]) {
                const HomogeneityDescriptor ws{stats[s].z, stats[s].phi};
                if (!merge_allowed(wr, ws, p)) continue;
                const double f = homogeneity_distance(wr, ws, p);
                if (best == kBackground || f < best_f || (f == best_f && s > best)) {
                    best = s;
                    best_f = f;
                }
            }
            choice[r] = best;
        }

        std::vector<std::pair<RegionId, RegionId>> pairs;
        for (RegionId r : alive) {
            const RegionId s = choice[r];
            if (s != kBackground && s < r && choice[s] == r) pairs.emplace_back(s, r);
        }
        if (pairs.empty()) break;

        for (auto [s, r] : pairs) {
            stats[r] = combine(stats[r], stats[s], options.weighting);
            absorbed_by[s] = r;
            alive.erase(s);
        }
        // Adjacency is rewritten only after every pair has been applied. Only
        // sets that mention an absorbed region can change.
        std::set<RegionId> affected;
        for (auto [s, r] : pairs) {
            for (RegionId x : adjacent[s]) {
                adjacent[r].insert(x);
                affected.insert(x);
            }
            adjacent[s].clear();
            affected.insert(r);
        }
        for (RegionId r : affected) {
            if (absorbed_by[r] != kBackground) continue;
            std::set<RegionId> renamed;
            for (RegionId x : adjacent[r]) {
                const RegionId y = absorbed_by[x] != kBackground ? absorbed_by[x] : x;
                if (y != r) renamed.insert(y);
            }
            adjacent[r] = std::move(renamed);
        }
        if (trace) trace->push_back(std::move(pairs));
    }

    Segmentation seg;
    seg.width = field.width;
    seg.height = field.height;
    seg.labels.assign(n, kBackground);
    for (std::size_t i = 0; i < n; ++i) {
        if (!field.valid[i]) continue;
        RegionId id = static_cast<RegionId>(i + 1);
        while (absorbed_by[id] != kBackground) id = absorbed_by[id];
        seg.labels[i] = id;
    }
    for (RegionId id : alive) {
        const Stats& s = stats[id];
        Region r;
        r.id = id;
        r.pixel_count = static_cast<std::uint32_t>(s.count);
        r.mean_z = s.z;
        r.mean_d = s.d;
        r.mean_phi = s.phi;
        r.centroid = {s.x, s.y, s.cz};
        r.neighbors.assign(adjacent[id].begin(), adjacent[id].end());
        seg.regions.push_back(std::move(r));
    }
    return seg;
}

Segmentation cluster_oracle(const Frame& frame, const ClipRange& clip, const ClusterOptions& options,
                            RoundTrace* trace) {
    return cluster_oracle(make_pixel_field(frame, clip, options.measure), options, trace);
}

} // namespace handtrack
