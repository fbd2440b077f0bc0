#include "handtrack/homogeneity.hpp"

#include <algorithm>
#include <numbers>

#include "handtrack/errors.hpp"

namespace handtrack {

void MergeParams::validate() const {
    if (!(t_z > 0.0) || !(t_phi > 0.0) || !(alpha_z > 0.0) || !(alpha_phi > 0.0))
        throw InvalidInput("merge parameters must be strictly positive");
}

double phi(double d, double intensity) {
    if (!(d >= 0.0) || !(intensity >= 0.0)) throw InvalidInput("phi: distance and intensity must be non-negative");
    return std::atan(d * std::sqrt(intensity));
}

double phi_baseline(double d_norm, double intensity_norm) {
    if (!(d_norm >= 0.0) || !(intensity_norm >= 0.0))
        throw InvalidInput("phi_baseline: inputs must be non-negative");
    if (intensity_norm == 0.0) return std::numbers::pi / 2.0;
    return std::atan(d_norm / intensity_norm);
}

std::vector<double> phi_map(const Frame& frame, Measure measure) {
    const auto n = frame.distance.size();
    std::vector<double> out(n, 0.0);
    if (measure == Measure::fused) {
        for (std::size_t i = 0; i < n; ++i)
            if (frame.is_valid(i)) out[i] = phi(frame.distance[i], frame.intensity[i]);
        return out;
    }
    double d_max = 0.0, i_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!frame.is_valid(i)) continue;
        d_max = std::max(d_max, frame.distance[i]);
        i_max = std::max(i_max, frame.intensity[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!frame.is_valid(i)) continue;
        const double dn = frame.distance[i] / d_max;
        const double in = i_max > 0.0 ? frame.intensity[i] / i_max : 0.0;
        out[i] = phi_baseline(dn, in);
    }
    return out;
}

} // namespace handtrack
