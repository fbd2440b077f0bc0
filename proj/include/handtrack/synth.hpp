#pragma once

#include <climits>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "handtrack/frame.hpp"

namespace handtrack {

enum class ObjectRole { hand, arm, distractor, background };

enum class ShapeKind { disc, rectangle };

struct Keyframe {
    int frame = 0;
    Point3 center;
};

/// Fronto-parallel planar object. Position is linearly interpolated between
/// keyframes and held constant outside them.
struct SceneObject {
    std::string name;
    std::uint16_t identity = 0;  // ground-truth label, nonzero
    ObjectRole role = ObjectRole::hand;
    ShapeKind shape = ShapeKind::disc;
    double radius = 0.0;       // disc, meters
    double half_width = 0.0;   // rectangle, meters
    double half_height = 0.0;  // rectangle, meters
    double reflectivity = 1.0;
    std::vector<Keyframe> trajectory;
    int first_frame = 0;  // visibility window, inclusive
    int last_frame = INT_MAX;

    Point3 center_at(int frame) const;
    bool visible_at(int frame) const { return frame >= first_frame && frame <= last_frame; }
    /// Whether the ray through (u, v) hits this object at its current depth.
    bool covers(double x, double y, int frame) const;
};

struct NoiseModel {
    double depth_sigma = 0.005;     // meters, additive
    double intensity_sigma = 0.01;  // relative

    static NoiseModel none() { return {0.0, 0.0}; }
};

/// Intensity of a surface point: reflectivity * kIntensityScale / d^2, so a
/// unit-reflectivity surface at 1 m reads 1.0.
inline constexpr double kIntensityScale = 1.0;

struct ObjectTruth {
    std::uint16_t identity = 0;
    std::uint32_t pixel_count = 0;  // visible pixels
    Point3 centroid;                // of visible pixels, noise-free
    double mean_d = 0.0;
};

struct GroundTruthFrame {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint16_t> labels;  // nearest object's identity, 0 = empty
    std::vector<ObjectTruth> objects;   // every scene object, by identity order

    const ObjectTruth* find(std::uint16_t identity) const;
};

struct ObjectInfo {
    std::uint16_t identity = 0;
    std::string name;
    ObjectRole role = ObjectRole::hand;
};

struct GroundTruth {
    std::vector<ObjectInfo> objects;
    std::vector<GroundTruthFrame> frames;

    /// Identities of the two tracked hands, in scene order.
    std::vector<std::uint16_t> hand_identities() const;
};

struct RenderedFrame {
    Frame frame;
    GroundTruthFrame truth;
};

/// Ray-casts every object; the nearest hit sets d and I. Noise is drawn from
/// a stream fixed by (seed, frame_index).
RenderedFrame render_frame(const std::vector<SceneObject>& objects, const CameraIntrinsics& k,
                           int frame_index, const NoiseModel& noise, std::uint64_t seed);

struct Scenario {
    std::string name;
    CameraIntrinsics intrinsics;
    std::vector<SceneObject> objects;
    int frame_count = 0;
};

struct ScenarioData {
    Scenario scenario;
    std::vector<Frame> frames;  // quantized to f32
    GroundTruth truth;
};

std::vector<std::string> scenario_names();
/// Throws InvalidInput listing the registry for an unknown name.
Scenario scenario_definition(const std::string& name);
ScenarioData make_scenario(const std::string& name, std::uint64_t seed,
                           const NoiseModel& noise = NoiseModel{});

/// Ground-truth sidecar: labels_NNNN.pgm per frame plus objects.csv
/// (frame,identity,name,role,pixel_count,centroid_x,centroid_y,centroid_z,mean_d).
void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& dir);
GroundTruth read_ground_truth(const std::filesystem::path& dir);

std::string to_string(ObjectRole role);
ObjectRole parse_role(const std::string& text);

} // namespace handtrack
