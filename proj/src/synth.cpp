#include "handtrack/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "handtrack/errors.hpp"
#include "handtrack/pgm.hpp"
#include "handtrack/sequence_io.hpp"

namespace handtrack {

Point3 SceneObject::center_at(int frame) const {
    if (trajectory.empty()) throw InvalidInput("scene object " + name + " has no trajectory");
    if (frame <= trajectory.front().frame) return trajectory.front().center;
    if (frame >= trajectory.back().frame) return trajectory.back().center;
    auto hi = std::upper_bound(trajectory.begin(), trajectory.end(), frame,
                               [](int f, const Keyframe& k) { return f < k.frame; });
    auto lo = hi - 1;
    const double t = double(frame - lo->frame) / double(hi->frame - lo->frame);
    const Point3& a = lo->center;
    const Point3& b = hi->center;
    return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)};
}

bool SceneObject::covers(double x, double y, int frame) const {
    const Point3 c = center_at(frame);
    if (shape == ShapeKind::disc) {
        const double dx = x - c.x, dy = y - c.y;
        return dx * dx + dy * dy <= radius * radius;
    }
    return std::abs(x - c.x) <= half_width && std::abs(y - c.y) <= half_height;
}

const ObjectTruth* GroundTruthFrame::find(std::uint16_t identity) const {
    for (const auto& o : objects)
        if (o.identity == identity) return &o;
    return nullptr;
}

std::vector<std::uint16_t> GroundTruth::hand_identities() const {
    std::vector<std::uint16_t> out;
    for (const auto& o : objects)
        if (o.role == ObjectRole::hand) out.push_back(o.identity);
    return out;
}

RenderedFrame render_frame(const std::vector<SceneObject>& objects, const CameraIntrinsics& k,
                           int frame_index, const NoiseModel& noise, std::uint64_t seed) {
    k.validate();
    RenderedFrame out{Frame(k, static_cast<std::uint32_t>(frame_index)), {}};
    auto& gt = out.truth;
    gt.width = k.width;
    gt.height = k.height;
    gt.labels.assign(k.pixel_count(), 0);

    std::vector<const SceneObject*> active;
    std::vector<Point3> centers;
    for (const auto& o : objects) {
        if (o.identity == 0) throw InvalidInput("scene object identity 0 is reserved");
        if (!(o.reflectivity > 0.0)) throw InvalidInput("scene object reflectivity must be positive");
        if (!o.visible_at(frame_index)) continue;
        active.push_back(&o);
        centers.push_back(o.center_at(frame_index));
        if (!(centers.back().z > 0.0)) throw InvalidInput("scene object " + o.name + " is behind the camera");
    }

    std::map<std::uint16_t, std::size_t> slot;
    std::vector<ObjectTruth> truth(objects.size());
    std::vector<Point3> sums(objects.size());
    for (std::size_t j = 0; j < objects.size(); ++j) {
        truth[j].identity = objects[j].identity;
        slot[objects[j].identity] = j;
    }

    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(frame_index)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (std::uint32_t v = 0; v < k.height; ++v) {
        for (std::uint32_t u = 0; u < k.width; ++u) {
            const double rx = (u - k.cx) / k.fx, ry = (v - k.cy) / k.fy;
            const SceneObject* hit = nullptr;
            double depth = 0.0;
            for (std::size_t j = 0; j < active.size(); ++j) {
                const double z = centers[j].z;
                if (hit && z >= depth) continue;
                if (active[j]->covers(rx * z, ry * z, frame_index)) {
                    hit = active[j];
                    depth = z;
                }
            }
            if (!hit) continue;
            const std::size_t i = out.frame.index_of(u, v);
            const double d = depth * std::sqrt(rx * rx + ry * ry + 1.0);
            double intensity = hit->reflectivity * kIntensityScale / (d * d);
            double measured = d;
            if (noise.depth_sigma > 0.0 || noise.intensity_sigma > 0.0) {
                const double nd = gauss(rng), ni = gauss(rng);
                measured = std::max(1e-6, d + noise.depth_sigma * nd);
                intensity = std::max(0.0, intensity * (1.0 + noise.intensity_sigma * ni));
            }
            out.frame.distance[i] = measured;
            out.frame.intensity[i] = intensity;
            gt.labels[i] = hit->identity;

            const std::size_t j = slot[hit->identity];
            ++truth[j].pixel_count;
            sums[j].x += rx * depth;
            sums[j].y += ry * depth;
            sums[j].z += depth;
            truth[j].mean_d += d;
        }
    }
    for (std::size_t j = 0; j < truth.size(); ++j) {
        if (truth[j].pixel_count == 0) continue;
        const double n = truth[j].pixel_count;
        truth[j].centroid = {sums[j].x / n, sums[j].y / n, sums[j].z / n};
        truth[j].mean_d /= n;
    }
    gt.objects = std::move(truth);
    return out;
}

namespace {

constexpr double kHandRadius = 0.06;

SceneObject hand(const std::string& name, std::uint16_t id, std::vector<Keyframe> path) {
    SceneObject o;
    o.name = name;
    o.identity = id;
    o.role = ObjectRole::hand;
    o.shape = ShapeKind::disc;
    o.radius = kHandRadius;
    o.reflectivity = 1.0;
    o.trajectory = std::move(path);
    return o;
}

// The user's upper body. Everything else is out of sensor range and reads
// as invalid.
SceneObject torso() {
    SceneObject o;
    o.name = "torso";
    o.identity = 9;
    o.role = ObjectRole::background;
    o.shape = ShapeKind::rectangle;
    o.half_width = 0.22;
    o.half_height = 0.3;
    o.reflectivity = 0.5;
    o.trajectory = {{0, {0.0, 0.05, 1.5}}};
    return o;
}

SceneObject arm(const std::string& name, std::uint16_t id, double x, double top, double z, double rho) {
    // Hangs from the hand center to below the bottom image edge.
    SceneObject o;
    o.name = name;
    o.identity = id;
    o.role = ObjectRole::arm;
    o.shape = ShapeKind::rectangle;
    o.half_width = 0.035;
    o.half_height = 0.3;
    o.reflectivity = rho;
    o.trajectory = {{0, {x, top + o.half_height, z}}};
    return o;
}

Scenario crossing(const std::string& name, double back_z) {
    Scenario s{name, default_intrinsics(), {}, 120};
    s.objects.push_back(hand("left", 1, {{30, {-0.12, 0.0, 0.8}}, {110, {0.12, 0.0, 0.8}}}));
    s.objects.push_back(hand("right", 2, {{30, {0.12, 0.0, back_z}}, {110, {-0.12, 0.0, back_z}}}));
    s.objects.push_back(torso());
    return s;
}

Scenario sleeve(const std::string& name, double arm_offset, double arm_rho) {
    Scenario s{name, default_intrinsics(), {}, 60};
    s.objects.push_back(hand("left", 1, {{0, {-0.15, -0.05, 0.8}}}));
    s.objects.push_back(hand("right", 2, {{0, {0.15, -0.05, 0.8}}}));
    s.objects.push_back(arm("left-arm", 3, -0.15, -0.05, 0.8 + arm_offset, arm_rho));
    s.objects.push_back(arm("right-arm", 4, 0.15, -0.05, 0.8 + arm_offset, arm_rho));
    s.objects.push_back(torso());
    return s;
}

} // namespace

std::vector<std::string> scenario_names() {
    return {"static-two-hands", "back-forth", "crossing-safe", "crossing-contact",
            "third-hand",       "sleeve",     "sleeve-leather"};
}

Scenario scenario_definition(const std::string& name) {
    if (name == "static-two-hands") {
        Scenario s{name, default_intrinsics(), {}, 60};
        s.objects.push_back(hand("left", 1, {{0, {-0.15, 0.0, 0.8}}}));
        s.objects.push_back(hand("right", 2, {{0, {0.15, 0.0, 1.0}}}));
        s.objects.push_back(torso());
        return s;
    }
    if (name == "back-forth") {
        // 0.02 m/frame in z after the initialization window.
        Scenario s{name, default_intrinsics(), {}, 120};
        s.objects.push_back(hand("left", 1,
                                 {{30, {-0.15, 0.0, 0.9}},
                                  {45, {-0.15, 0.0, 0.6}},
                                  {75, {-0.15, 0.0, 1.2}},
                                  {105, {-0.15, 0.0, 0.6}},
                                  {119, {-0.15, 0.0, 0.88}}}));
        s.objects.push_back(hand("right", 2,
                                 {{30, {0.15, 0.0, 0.9}},
                                  {45, {0.15, 0.0, 1.2}},
                                  {75, {0.15, 0.0, 0.6}},
                                  {105, {0.15, 0.0, 1.2}},
                                  {119, {0.15, 0.0, 0.92}}}));
        s.objects.push_back(torso());
        return s;
    }
    if (name == "crossing-safe") return crossing(name, 0.95);
    if (name == "crossing-contact") return crossing(name, 0.815);
    if (name == "third-hand") {
        Scenario s{name, default_intrinsics(), {}, 120};
        s.objects.push_back(hand("left", 1, {{0, {-0.15, 0.0, 0.8}}}));
        s.objects.push_back(hand("right", 2, {{0, {0.15, 0.0, 1.0}}}));
        SceneObject third = hand("third", 3,
                                 {{30, {0.0, 0.12, 1.35}},
                                  {49, {0.0, 0.12, 1.35}},
                                  {59, {0.0, 0.12, 0.9}},
                                  {79, {0.0, 0.12, 0.9}},
                                  {89, {0.0, 0.12, 0.6}}});
        third.role = ObjectRole::distractor;
        third.first_frame = 30;
        s.objects.push_back(third);
        s.objects.push_back(torso());
        return s;
    }
    if (name == "sleeve") return sleeve(name, 0.06, 1.0);
    if (name == "sleeve-leather") return sleeve(name, 0.0, 0.3);

    std::string known;
    for (const auto& n : scenario_names()) known += (known.empty() ? "" : ", ") + n;
    throw InvalidInput("unknown scenario '" + name + "' (known: " + known + ")");
}

ScenarioData make_scenario(const std::string& name, std::uint64_t seed, const NoiseModel& noise) {
    ScenarioData data{scenario_definition(name), {}, {}};
    const Scenario& s = data.scenario;
    for (const auto& o : s.objects) data.truth.objects.push_back({o.identity, o.name, o.role});
    data.frames.reserve(s.frame_count);
    data.truth.frames.reserve(s.frame_count);
    for (int f = 0; f < s.frame_count; ++f) {
        auto rendered = render_frame(s.objects, s.intrinsics, f, noise, seed);
        quantize_to_f32(rendered.frame);
        data.frames.push_back(std::move(rendered.frame));
        data.truth.frames.push_back(std::move(rendered.truth));
    }
    return data;
}

std::string to_string(ObjectRole role) {
    switch (role) {
    case ObjectRole::hand: return "hand";
    case ObjectRole::arm: return "arm";
    case ObjectRole::distractor: return "distractor";
    case ObjectRole::background: return "background";
    }
    return "unknown";
}

ObjectRole parse_role(const std::string& text) {
    for (auto r : {ObjectRole::hand, ObjectRole::arm, ObjectRole::distractor, ObjectRole::background})
        if (to_string(r) == text) return r;
    throw InvalidInput("unknown object role '" + text + "'");
}

void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "objects.csv", std::ios::trunc);
    if (!csv) throw InvalidInput("cannot write " + (dir / "objects.csv").string());
    csv << "frame,identity,name,role,pixel_count,centroid_x,centroid_y,centroid_z,mean_d\n";
    char line[512];
    for (std::size_t f = 0; f < truth.frames.size(); ++f) {
        const auto& gf = truth.frames[f];
        char file[32];
        std::snprintf(file, sizeof file, "labels_%04zu.pgm", f);
        write_pgm16(Image16{gf.width, gf.height, gf.labels}, dir / file);
        for (std::size_t j = 0; j < gf.objects.size(); ++j) {
            const auto& o = gf.objects[j];
            const auto& info = truth.objects.at(j);
            std::snprintf(line, sizeof line, "%zu,%u,%s,%s,%u,%.17g,%.17g,%.17g,%.17g\n", f, o.identity,
                          info.name.c_str(), to_string(info.role).c_str(), o.pixel_count, o.centroid.x, o.centroid.y,
                          o.centroid.z, o.mean_d);
            csv << line;
        }
    }
}

GroundTruth read_ground_truth(const std::filesystem::path& dir) {
    std::ifstream csv(dir / "objects.csv");
    if (!csv) throw FormatError("cannot open " + (dir / "objects.csv").string(), 0);
    GroundTruth truth;
    std::string line;
    std::getline(csv, line);
    std::uint64_t lineno = 1;
    std::map<std::size_t, std::vector<ObjectTruth>> rows;
    while (std::getline(csv, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 9) throw FormatError("objects.csv: expected 9 columns", lineno);
        try {
            const std::size_t f = std::stoul(cells[0]);
            ObjectTruth o;
            o.identity = static_cast<std::uint16_t>(std::stoul(cells[1]));
            o.pixel_count = static_cast<std::uint32_t>(std::stoul(cells[4]));
            o.centroid = {std::stod(cells[5]), std::stod(cells[6]), std::stod(cells[7])};
            o.mean_d = std::stod(cells[8]);
            if (f == 0) truth.objects.push_back({o.identity, cells[2], parse_role(cells[3])});
            rows[f].push_back(o);
        } catch (const std::logic_error&) {
            throw FormatError("objects.csv: bad number", lineno);
        }
    }
    for (std::size_t f = 0; f < rows.size(); ++f) {
        auto it = rows.find(f);
        if (it == rows.end()) throw FormatError("objects.csv: missing frame " + std::to_string(f), lineno);
        char file[32];
        std::snprintf(file, sizeof file, "labels_%04zu.pgm", f);
        Image16 img = read_pgm16(dir / file);
        GroundTruthFrame gf{img.width, img.height, std::move(img.pixels), std::move(it->second)};
        truth.frames.push_back(std::move(gf));
    }
    return truth;
}

} // namespace handtrack
