#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace handtrack {

struct CameraIntrinsics {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    /// Throws InvalidInput unless width, height, fx, fy are positive and the
    /// principal point lies inside the image.
    void validate() const;

    bool operator==(const CameraIntrinsics&) const = default;
};

/// The 204x204 sensor used by every built-in scenario.
CameraIntrinsics default_intrinsics();

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    bool operator==(const Point3&) const = default;
};

inline double distance(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double distance_xy(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

/// One range-intensity capture. Grids are row-major with a top-left origin.
/// A distance of 0 marks an invalid pixel (dropout or clipped).
struct Frame {
    CameraIntrinsics intrinsics;
    std::vector<double> distance;   // radial distance d, meters
    std::vector<double> intensity;  // active intensity I, dimensionless
    std::uint32_t frame_index = 0;

    Frame() = default;
    Frame(const CameraIntrinsics& k, std::uint32_t index);

    std::size_t index_of(std::uint32_t u, std::uint32_t v) const {
        return static_cast<std::size_t>(v) * intrinsics.width + u;
    }
    bool is_valid(std::size_t i) const { return distance[i] > 0.0; }

    /// Throws InvalidInput on grid size mismatch or negative samples.
    void validate() const;

    bool operator==(const Frame&) const = default;
};

inline constexpr double kInvalidDistance = 0.0;

/// Back-projects pixel (u, v) onto its pinhole ray at radial distance d from
/// the optical center. Throws InvalidInput for d <= 0.
Point3 pixel_to_camera(double u, double v, double d, const CameraIntrinsics& k);

/// Axial (optical-axis) depth of the point at radial distance d through (u, v).
double axial_depth(double u, double v, double d, const CameraIntrinsics& k);

} // namespace handtrack
