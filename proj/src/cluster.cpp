#include "handtrack/cluster.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "handtrack/errors.hpp"
#include "handtrack/pgm.hpp"
#include "handtrack/worker_pool.hpp"

namespace handtrack {

const Region* Segmentation::find(RegionId id) const {
    auto it = std::lower_bound(regions.begin(), regions.end(), id,
                               [](const Region& r, RegionId v) { return r.id < v; });
    return (it != regions.end() && it->id == id) ? &*it : nullptr;
}

std::size_t Segmentation::regions_at_least(std::uint32_t pixels) const {
    return static_cast<std::size_t>(std::count_if(regions.begin(), regions.end(),
                                                  [&](const Region& r) { return r.pixel_count >= pixels; }));
}

Segmentation cluster(const PixelField& field, const ClusterOptions& options, ClusterStats* stats,
                     WorkerPool* pool) {
    options.params.validate();
    std::optional<WorkerPool> own;
    if (!pool && options.workers > 1) {
        own.emplace(options.workers);
        pool = &*own;
    }

    RegionGraph graph(field);
    ClusterStats local;
    local.initial_regions = graph.initial_region_count();
    const MergeOptions merge = options.merge_options();
    // Every productive round removes at least one region.
    const std::size_t cap = std::max<std::size_t>(local.initial_regions, 1);
    for (;;) {
        const RoundReport round = merge_round(graph, merge, pool);
        local.timings += round.timings;
        if (round.merged == 0) break;
        local.merges += round.merged;
        if (++local.rounds > cap) throw std::logic_error("cluster: round cap exceeded, merge engine did not converge");
    }
    if (stats) *stats = local;
    return graph.to_segmentation();
}

Segmentation cluster(const Frame& frame, const ClipRange& clip, const ClusterOptions& options,
                     ClusterStats* stats, WorkerPool* pool) {
    return cluster(make_pixel_field(frame, clip, options.measure), options, stats, pool);
}

std::vector<RegionId> canonical_labels(const Segmentation& seg) {
    std::unordered_map<RegionId, RegionId> remap;
    remap.reserve(seg.regions.size());
    std::vector<RegionId> out(seg.labels.size(), kBackground);
    RegionId next = 1;
    for (std::size_t i = 0; i < seg.labels.size(); ++i) {
        const RegionId l = seg.labels[i];
        if (l == kBackground) continue;
        auto [it, inserted] = remap.try_emplace(l, next);
        if (inserted) ++next;
        out[i] = it->second;
    }
    return out;
}

bool same_partition(const Segmentation& a, const Segmentation& b) {
    return a.width == b.width && a.height == b.height && canonical_labels(a) == canonical_labels(b);
}

std::optional<std::pair<RegionId, RegionId>> find_mergeable_pair(const Segmentation& seg, const MergeParams& p) {
    auto check = [&](RegionId a, RegionId b) -> bool {
        if (a == kBackground || b == kBackground || a == b) return false;
        const Region* ra = seg.find(a);
        const Region* rb = seg.find(b);
        if (!ra || !rb) throw InvalidInput("label missing from region table");
        return merge_allowed(ra->descriptor(), rb->descriptor(), p);
    };
    for (std::uint32_t v = 0; v < seg.height; ++v) {
        for (std::uint32_t u = 0; u < seg.width; ++u) {
            const std::size_t i = std::size_t(v) * seg.width + u;
            if (u + 1 < seg.width && check(seg.labels[i], seg.labels[i + 1]))
                return std::pair{seg.labels[i], seg.labels[i + 1]};
            if (v + 1 < seg.height && check(seg.labels[i], seg.labels[i + seg.width]))
                return std::pair{seg.labels[i], seg.labels[i + seg.width]};
        }
    }
    return std::nullopt;
}

std::string check_segmentation(const Segmentation& seg) {
    const std::size_t n = std::size_t(seg.width) * seg.height;
    if (seg.labels.size() != n) return "label grid size mismatch";
    for (std::size_t k = 1; k < seg.regions.size(); ++k)
        if (seg.regions[k - 1].id >= seg.regions[k].id) return "region table not sorted by unique id";

    std::unordered_map<RegionId, std::size_t> index;
    for (std::size_t k = 0; k < seg.regions.size(); ++k) index[seg.regions[k].id] = k;

    std::vector<std::uint32_t> freq(seg.regions.size(), 0);
    std::vector<std::size_t> first(seg.regions.size(), n);
    std::vector<std::vector<RegionId>> grid_adj(seg.regions.size());
    for (std::size_t i = 0; i < n; ++i) {
        const RegionId l = seg.labels[i];
        if (l == kBackground) continue;
        auto it = index.find(l);
        if (it == index.end()) return "label " + std::to_string(l) + " not in region table";
        ++freq[it->second];
        first[it->second] = std::min(first[it->second], i);
        const std::uint32_t u = i % seg.width;
        auto link = [&](std::size_t j) {
            const RegionId m = seg.labels[j];
            if (m == kBackground || m == l) return;
            grid_adj[it->second].push_back(m);
            grid_adj[index.at(m)].push_back(l);
        };
        if (u + 1 < seg.width) link(i + 1);
        if (i + seg.width < n) link(i + seg.width);
    }

    for (std::size_t k = 0; k < seg.regions.size(); ++k) {
        const Region& r = seg.regions[k];
        if (r.pixel_count == 0 || freq[k] != r.pixel_count)
            return "region " + std::to_string(r.id) + " pixel_count does not match its label frequency";
        auto& adj = grid_adj[k];
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
        if (adj != r.neighbors) return "region " + std::to_string(r.id) + " neighbor set differs from the label grid";
    }

    // 4-connectivity: flood from the first pixel of every region.
    std::vector<std::uint8_t> seen(n, 0);
    std::deque<std::size_t> queue;
    for (std::size_t k = 0; k < seg.regions.size(); ++k) {
        const RegionId l = seg.regions[k].id;
        std::uint32_t reached = 0;
        queue.assign(1, first[k]);
        seen[first[k]] = 1;
        while (!queue.empty()) {
            const std::size_t i = queue.front();
            queue.pop_front();
            ++reached;
            const std::uint32_t u = i % seg.width;
            auto visit = [&](std::size_t j) {
                if (!seen[j] && seg.labels[j] == l) {
                    seen[j] = 1;
                    queue.push_back(j);
                }
            };
            if (u > 0) visit(i - 1);
            if (u + 1 < seg.width) visit(i + 1);
            if (i >= seg.width) visit(i - seg.width);
            if (i + seg.width < n) visit(i + seg.width);
        }
        if (reached != seg.regions[k].pixel_count) return "region " + std::to_string(l) + " is not 4-connected";
    }
    return {};
}

Segmentation canonicalized(const Segmentation& seg) {
    Segmentation out;
    out.width = seg.width;
    out.height = seg.height;
    out.labels = canonical_labels(seg);
    std::unordered_map<RegionId, RegionId> remap;
    for (std::size_t i = 0; i < seg.labels.size(); ++i)
        if (seg.labels[i] != kBackground) remap.emplace(seg.labels[i], out.labels[i]);
    for (const auto& r : seg.regions) {
        const auto it = remap.find(r.id);
        if (it == remap.end()) throw InvalidInput("region " + std::to_string(r.id) + " owns no pixel");
        Region c = r;
        c.id = it->second;
        for (auto& n : c.neighbors) n = remap.at(n);
        std::sort(c.neighbors.begin(), c.neighbors.end());
        out.regions.push_back(std::move(c));
    }
    std::sort(out.regions.begin(), out.regions.end(), [](const Region& a, const Region& b) { return a.id < b.id; });
    return out;
}

void export_label_pgm(const Segmentation& seg, const std::filesystem::path& path) {
    Image16 img{seg.width, seg.height, std::vector<std::uint16_t>(seg.labels.size())};
    for (std::size_t i = 0; i < seg.labels.size(); ++i) {
        if (seg.labels[i] > 65535) throw InvalidInput("export_label_pgm: region id above 65535");
        img.pixels[i] = static_cast<std::uint16_t>(seg.labels[i]);
    }
    write_pgm16(img, path);
}

void write_region_csv(const Segmentation& seg, std::ostream& out) {
    out << "id,pixel_count,mean_z,mean_d,mean_phi,centroid_x,centroid_y,centroid_z\n";
    char line[256];
    for (const auto& r : seg.regions) {
        std::snprintf(line, sizeof line, "%u,%u,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.id, r.pixel_count,
                      r.mean_z, r.mean_d, r.mean_phi, r.centroid.x, r.centroid.y, r.centroid.z);
        out << line;
    }
}

std::vector<Region> read_region_csv(std::istream& in) {
    std::vector<Region> out;
    std::string line;
    std::uint64_t line_no = 0;
    if (!std::getline(in, line) || line.rfind("id,pixel_count,", 0) != 0)
        throw FormatError("region csv: missing header", 1);
    ++line_no;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        Region r;
        char tail = 0;
        const int got = std::sscanf(line.c_str(), "%u,%u,%lf,%lf,%lf,%lf,%lf,%lf%c", &r.id, &r.pixel_count, &r.mean_z,
                                    &r.mean_d, &r.mean_phi, &r.centroid.x, &r.centroid.y, &r.centroid.z, &tail);
        if (got != 8 && !(got == 9 && tail == '\r')) throw FormatError("region csv: malformed row", line_no);
        if (!out.empty() && r.id <= out.back().id) throw FormatError("region csv: ids not increasing", line_no);
        out.push_back(r);
    }
    return out;
}

Segmentation load_segmentation(const std::filesystem::path& pgm, const std::filesystem::path& csv) {
    const Image16 img = read_pgm16(pgm);
    std::ifstream in(csv);
    if (!in) throw InvalidInput("cannot open " + csv.string());
    Segmentation seg;
    seg.width = img.width;
    seg.height = img.height;
    seg.labels.assign(img.pixels.begin(), img.pixels.end());
    seg.regions = read_region_csv(in);
    std::unordered_map<RegionId, std::uint32_t> counts;
    for (auto l : seg.labels)
        if (l != kBackground) ++counts[l];
    if (counts.size() != seg.regions.size()) throw FormatError("label map and region table disagree", 0);
    for (const auto& r : seg.regions) {
        const auto it = counts.find(r.id);
        if (it == counts.end() || it->second != r.pixel_count)
            throw FormatError("pixel count of region " + std::to_string(r.id) + " disagrees with the label map", 0);
    }
    return seg;
}

} // namespace handtrack
