#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "handtrack/frame.hpp"

namespace handtrack {

/// Region descriptor w = (z, phi): mean axial distance and the fused
/// range-intensity measure.
struct HomogeneityDescriptor {
    double z = 0.0;
    double phi = 0.0;
};

/// Thresholds and weights of the clustering criterion.
struct MergeParams {
    double t_z = 0.04;                        // meters
    double t_phi = 0.009;                     // radians
    double alpha_z = 8.0 / std::numbers::pi;  // 1/meters
    double alpha_phi = 4.0 / 3.0;             // 1/radians

    void validate() const;
    bool operator==(const MergeParams&) const = default;
};

enum class Measure {
    fused,     // arctan(d * sqrt(I))
    baseline,  // arctan(d_norm / I_norm), linear distance-intensity model
};

/// arctan(d * sqrt(I)). Constant over a surface whose intensity falls off
/// with 1/d^2. Throws InvalidInput for negative arguments.
double phi(double d, double intensity);

/// arctan(d_norm / I_norm) on pre-normalized inputs; returns pi/2 for
/// I_norm == 0.
double phi_baseline(double d_norm, double intensity_norm);

/// Componentwise threshold test: |dz| <= t_z and |dphi| <= t_phi.
inline bool merge_allowed(const HomogeneityDescriptor& a, const HomogeneityDescriptor& b,
                          const MergeParams& p) {
    return std::abs(a.z - b.z) <= p.t_z && std::abs(a.phi - b.phi) <= p.t_phi;
}

/// Weighted L1 distance alpha_z*|dz| + alpha_phi*|dphi|.
inline double homogeneity_distance(const HomogeneityDescriptor& a, const HomogeneityDescriptor& b,
                                   const MergeParams& p) {
    return p.alpha_z * std::abs(a.z - b.z) + p.alpha_phi * std::abs(a.phi - b.phi);
}

/// Per-pixel phi for a whole frame; invalid pixels get 0. The baseline
/// measure normalizes d and I by their per-frame maxima over valid pixels.
std::vector<double> phi_map(const Frame& frame, Measure measure);

} // namespace handtrack
