#include "handtrack/region_graph.hpp"

#include <algorithm>
#include <chrono>
#include <string>

#include "handtrack/cluster.hpp"
#include "handtrack/errors.hpp"
#include "handtrack/worker_pool.hpp"

namespace handtrack {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void for_range(WorkerPool* pool, std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    if (pool) {
        pool->parallel_for(n, body);
    } else if (n > 0) {
        body(0, n);
    }
}

} // namespace

ClipRange ClipRange::bounded(double r_min, double r_max) {
    if (!(r_min < r_max)) throw InvalidInput("clip range requires r_min < r_max");
    return {r_min, r_max};
}

PixelField::PixelField(std::uint32_t w, std::uint32_t h)
    : width(w), height(h), valid(std::size_t(w) * h, 0), z(valid.size(), 0.0), d(valid.size(), 0.0),
      phi(valid.size(), 0.0), position(valid.size()) {}

PixelField make_pixel_field(const Frame& frame, const ClipRange& clip, Measure measure) {
    frame.validate();
    const auto& k = frame.intrinsics;
    PixelField field(k.width, k.height);
    const auto phis = phi_map(frame, measure);
    for (std::uint32_t v = 0; v < k.height; ++v) {
        for (std::uint32_t u = 0; u < k.width; ++u) {
            const auto i = frame.index_of(u, v);
            const double d = frame.distance[i];
            if (!clip.contains(d)) continue;
            const Point3 p = pixel_to_camera(u, v, d, k);
            field.valid[i] = 1;
            field.z[i] = p.z;
            field.d[i] = d;
            field.phi[i] = phis[i];
            field.position[i] = p;
        }
    }
    return field;
}

RegionGraph::RegionGraph(const PixelField& field) : width_(field.width), height_(field.height) {
    const std::size_t n = field.size();
    if (n != std::size_t(width_) * height_ || field.z.size() != n || field.d.size() != n ||
        field.phi.size() != n || field.position.size() != n)
        throw InvalidInput("pixel field arrays do not match its dimensions");
    if (n + 1 > std::numeric_limits<RegionId>::max()) throw InvalidInput("pixel field too large");

    count_.assign(n + 1, 0);
    desc_.assign(n + 1, HomogeneityDescriptor{});
    mean_d_.assign(n + 1, 0.0);
    centroid_.assign(n + 1, Point3{});
    neighbors_.assign(n + 1, {});
    parent_.assign(n + 1, kBackground);
    best_.assign(n + 1, kBackground);
    partner_.assign(n + 1, kBackground);

    for (std::uint32_t v = 0; v < height_; ++v) {
        for (std::uint32_t u = 0; u < width_; ++u) {
            const std::size_t i = std::size_t(v) * width_ + u;
            if (!field.valid[i]) continue;
            const auto id = static_cast<RegionId>(i + 1);
            count_[id] = 1;
            desc_[id] = {field.z[i], field.phi[i]};
            mean_d_[id] = field.d[i];
            centroid_[id] = field.position[i];
            parent_[id] = id;
            alive_.push_back(id);

            // Increasing id order: up, left, right, down.
            auto& nb = neighbors_[id];
            if (v > 0 && field.valid[i - width_]) nb.push_back(static_cast<RegionId>(i - width_ + 1));
            if (u > 0 && field.valid[i - 1]) nb.push_back(static_cast<RegionId>(i));
            if (u + 1 < width_ && field.valid[i + 1]) nb.push_back(static_cast<RegionId>(i + 2));
            if (v + 1 < height_ && field.valid[i + width_]) nb.push_back(static_cast<RegionId>(i + width_ + 1));
        }
    }
    initial_regions_ = alive_.size();
    dirty_ = alive_;
    dirty_flag_.assign(n + 1, 0);
    for (auto id : dirty_) dirty_flag_[id] = 1;
}

std::vector<RegionId> RegionGraph::regions() const {
    std::vector<RegionId> out;
    out.reserve(region_count());
    for (auto id : alive_)
        if (parent_[id] == id) out.push_back(id);
    return out;
}

std::size_t RegionGraph::adjacency_count() const {
    std::size_t degree_sum = 0;
    for (auto id : alive_)
        if (parent_[id] == id) degree_sum += neighbors_[id].size();
    return degree_sum / 2;
}

bool RegionGraph::contains(RegionId id) const {
    return id != kBackground && id < parent_.size() && parent_[id] == id;
}

void RegionGraph::require(RegionId id) const {
    if (!contains(id)) throw InvalidInput("unknown region id " + std::to_string(id));
}

std::span<const RegionId> RegionGraph::neighbors(RegionId id) const {
    require(id);
    return neighbors_[id];
}

HomogeneityDescriptor RegionGraph::descriptor(RegionId id) const {
    require(id);
    return desc_[id];
}

Region RegionGraph::region(RegionId id) const {
    require(id);
    return Region{id, count_[id], desc_[id].z, mean_d_[id], desc_[id].phi, centroid_[id], neighbors_[id]};
}

RegionId RegionGraph::resolve(RegionId id) const {
    while (parent_[id] != id) id = parent_[id];
    return id;
}

Segmentation RegionGraph::to_segmentation() const {
    Segmentation seg;
    seg.width = width_;
    seg.height = height_;
    seg.labels.assign(std::size_t(width_) * height_, kBackground);

    // Absorbed ids always point at a larger id, so a descending sweep sees
    // every parent resolved before its children.
    std::vector<RegionId> root(parent_.size(), kBackground);
    for (std::size_t id = parent_.size(); id-- > 1;) {
        const RegionId p = parent_[id];
        if (p == kBackground) continue;
        root[id] = (p == id) ? static_cast<RegionId>(id) : root[p];
    }
    for (std::size_t i = 0; i < seg.labels.size(); ++i) seg.labels[i] = root[i + 1];

    seg.regions.reserve(region_count());
    for (auto id : alive_)
        if (parent_[id] == id) seg.regions.push_back(region(id));
    return seg;
}

RegionId RegionGraph::select_partner(RegionId id, const MergeParams& p) const {
    const HomogeneityDescriptor self = desc_[id];
    RegionId best = kBackground;
    double best_f = 0.0;
    for (auto n : neighbors_[id]) {
        const HomogeneityDescriptor& other = desc_[n];
        if (!merge_allowed(self, other, p)) continue;
        const double f = homogeneity_distance(self, other, p);
        if (best == kBackground || f < best_f || (f == best_f && n > best)) {
            best = n;
            best_f = f;
        }
    }
    return best;
}

RegionGraph init_regions(const PixelField& field) { return RegionGraph(field); }

RegionGraph init_regions(const Frame& frame, const ClipRange& clip, Measure measure) {
    return RegionGraph(make_pixel_field(frame, clip, measure));
}

std::optional<RegionId> best_neighbor(const RegionGraph& graph, RegionId id, const MergeParams& p) {
    graph.require(id);
    const RegionId best = graph.select_partner(id, p);
    if (best == kBackground) return std::nullopt;
    return best;
}

RoundReport merge_round(RegionGraph& g, const MergeOptions& options, WorkerPool* pool) {
    RoundReport report;
    const MergeParams& p = options.params;
    const auto& dirty = g.dirty_;

    // Find Mergepartner: read-only over the frozen state.
    auto t = Clock::now();
    for_range(pool, dirty.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) g.best_[dirty[k]] = g.select_partner(dirty[k], p);
    });
    report.timings.find_mergepartner_ms = elapsed_ms(t);

    // Merge Regions. A mutual pair of two clean regions would already have
    // merged last round, so every pair has at least one dirty member.
    t = Clock::now();
    auto& pairs = report.pairs;
    for (auto s : dirty) {
        const RegionId r = g.best_[s];
        if (r == kBackground || g.best_[r] != s) continue;
        if (s > r || !g.dirty_flag_[r]) pairs.emplace_back(std::min(r, s), std::max(r, s));
    }
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.second < b.second; });

    const bool area = options.weighting == MeanWeighting::area;
    for_range(pool, pairs.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const auto [s, r] = pairs[k];
            const double nr = g.count_[r], ns = g.count_[s], total = nr + ns;
            auto& dr = g.desc_[r];
            const auto& ds = g.desc_[s];
            if (area) {
                dr.z = (nr * dr.z + ns * ds.z) / total;
                g.mean_d_[r] = (nr * g.mean_d_[r] + ns * g.mean_d_[s]) / total;
                dr.phi = (nr * dr.phi + ns * ds.phi) / total;
            } else {
                dr.z = 0.5 * (dr.z + ds.z);
                g.mean_d_[r] = 0.5 * (g.mean_d_[r] + g.mean_d_[s]);
                dr.phi = 0.5 * (dr.phi + ds.phi);
            }
            auto& c = g.centroid_[r];
            const auto& cs = g.centroid_[s];
            c = {(nr * c.x + ns * cs.x) / total, (nr * c.y + ns * cs.y) / total, (nr * c.z + ns * cs.z) / total};
            g.count_[r] += g.count_[s];
            g.partner_[r] = s;
            g.parent_[s] = r;
        }
    });
    report.timings.merge_regions_ms = elapsed_ms(t);

    // Update Values: rewrite adjacency through this round's parent links and
    // mark the regions whose choice may change.
    t = Clock::now();
    for (auto id : dirty) g.dirty_flag_[id] = 0;
    std::vector<RegionId> touched;
    for (const auto& [s, r] : pairs) {
        for (auto x : g.neighbors_[s]) {
            if (g.parent_[x] == x && g.partner_[x] == kBackground && !g.dirty_flag_[x]) {
                g.dirty_flag_[x] = 1;
                touched.push_back(x);
            }
        }
    }
    for (auto x : touched) g.dirty_flag_[x] = 0;

    // The survivor keeps the longer list and absorbs the shorter one into it.
    for_range(pool, pairs.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const auto [s, r] = pairs[k];
            auto& into = g.neighbors_[r];
            auto& from = g.neighbors_[s];
            if (into.size() < from.size()) into.swap(from);
            bool sorted = true;
            for (std::size_t j = 0; j < into.size(); ++j) {
                into[j] = g.parent_[into[j]];
                if (j > 0 && into[j] <= into[j - 1]) sorted = false;
            }
            if (!sorted) {
                std::sort(into.begin(), into.end());
                into.erase(std::unique(into.begin(), into.end()), into.end());
            }
            for (auto x : from) {
                x = g.parent_[x];
                auto at = std::lower_bound(into.begin(), into.end(), x);
                if (at == into.end() || *at != x) into.insert(at, x);
            }
            auto self = std::lower_bound(into.begin(), into.end(), r);
            if (self != into.end() && *self == r) into.erase(self);
            std::vector<RegionId>().swap(from);
        }
    });
    for_range(pool, touched.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            auto& nb = g.neighbors_[touched[k]];
            for (auto& x : nb) x = g.parent_[x];
            std::sort(nb.begin(), nb.end());
            nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        }
    });

    std::vector<RegionId> next;
    auto mark = [&](RegionId id) {
        if (!g.dirty_flag_[id]) {
            g.dirty_flag_[id] = 1;
            next.push_back(id);
        }
    };
    for (const auto& [s, r] : pairs) {
        mark(r);
        for (auto x : g.neighbors_[r]) mark(x);
        g.partner_[r] = kBackground;
    }
    g.dirty_ = std::move(next);

    g.dead_in_alive_ += pairs.size();
    if (g.dead_in_alive_ * 4 > g.alive_.size()) {
        std::erase_if(g.alive_, [&](RegionId id) { return g.parent_[id] != id; });
        g.dead_in_alive_ = 0;
    }
    report.timings.update_values_ms = elapsed_ms(t);
    report.merged = pairs.size();
    return report;
}

} // namespace handtrack
