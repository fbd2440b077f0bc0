#include "handtrack/frame.hpp"

#include <string>

#include "handtrack/errors.hpp"

namespace handtrack {

void CameraIntrinsics::validate() const {
    if (width == 0 || height == 0) throw InvalidInput("intrinsics: image dimensions must be positive");
    if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidInput("intrinsics: focal lengths must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
        throw InvalidInput("intrinsics: principal point outside the image");
}

CameraIntrinsics default_intrinsics() {
    // Roughly 50 degrees horizontal field of view.
    return CameraIntrinsics{204, 204, 220.0, 220.0, 101.5, 101.5};
}

Frame::Frame(const CameraIntrinsics& k, std::uint32_t index)
    : intrinsics(k), distance(k.pixel_count(), kInvalidDistance),
      intensity(k.pixel_count(), 0.0), frame_index(index) {}

void Frame::validate() const {
    intrinsics.validate();
    const auto n = intrinsics.pixel_count();
    if (distance.size() != n || intensity.size() != n)
        throw InvalidInput("frame " + std::to_string(frame_index) + ": grid size does not match intrinsics");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(distance[i] >= 0.0) || !(intensity[i] >= 0.0))
            throw InvalidInput("frame " + std::to_string(frame_index) + ": negative or NaN sample at pixel " +
                               std::to_string(i));
    }
}

Point3 pixel_to_camera(double u, double v, double d, const CameraIntrinsics& k) {
    if (!(d > 0.0)) throw InvalidInput("pixel_to_camera: distance must be positive");
    const double rx = (u - k.cx) / k.fx;
    const double ry = (v - k.cy) / k.fy;
    const double scale = d / std::sqrt(rx * rx + ry * ry + 1.0);
    return {rx * scale, ry * scale, scale};
}

double axial_depth(double u, double v, double d, const CameraIntrinsics& k) {
    return pixel_to_camera(u, v, d, k).z;
}

} // namespace handtrack
