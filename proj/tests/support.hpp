#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "handtrack/frame.hpp"

namespace handtrack::testing {

inline CameraIntrinsics small_intrinsics(std::uint32_t w = 16, std::uint32_t h = 16) {
    return {w, h, 12.0, 12.0, (w - 1) / 2.0, (h - 1) / 2.0};
}

/// Seeded random frame. The seed also picks one of four textures: noisy
/// plates with holes, a noisy ramp, uniform clutter, and coarse quantized
/// levels that produce exact distance ties.
inline Frame random_frame(std::uint64_t seed, std::uint32_t w = 16, std::uint32_t h = 16) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 17);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Frame f(small_intrinsics(w, h), 0);
    const int mode = static_cast<int>(seed % 4);

    struct Plate {
        std::uint32_t u0, v0, u1, v1;
        double d, rho;
    };
    std::vector<Plate> plates;
    for (int k = 0; k < 4; ++k) {
        const auto a = static_cast<std::uint32_t>(u01(rng) * w), b = static_cast<std::uint32_t>(u01(rng) * w);
        const auto c = static_cast<std::uint32_t>(u01(rng) * h), e = static_cast<std::uint32_t>(u01(rng) * h);
        plates.push_back({std::min(a, b), std::min(c, e), std::max(a, b), std::max(c, e), 0.6 + 0.8 * u01(rng),
                          0.3 + 0.7 * u01(rng)});
    }

    for (std::uint32_t v = 0; v < h; ++v) {
        for (std::uint32_t u = 0; u < w; ++u) {
            const auto i = f.index_of(u, v);
            double d = 1.0, rho = 0.5;
            switch (mode) {
            case 0:
                for (const auto& p : plates)
                    if (u >= p.u0 && u <= p.u1 && v >= p.v0 && v <= p.v1) d = p.d, rho = p.rho;
                d += 0.01 * gauss(rng);
                if (u01(rng) < 0.05) d = 0.0;
                break;
            case 1:
                d = 0.8 + 0.02 * u + 0.01 * v + 0.005 * gauss(rng);
                rho = 0.6 + 0.02 * gauss(rng);
                break;
            case 2:
                d = 1.0 + 0.1 * u01(rng);
                rho = 0.2 + 0.8 * u01(rng);
                break;
            default:
                d = 1.0 + 0.01 * std::floor(4.0 * u01(rng));
                rho = 0.5 + 0.25 * std::floor(2.0 * u01(rng));
                if (u01(rng) < 0.1) d = 0.0;
                break;
            }
            if (d <= 0.0) {
                f.distance[i] = 0.0;
                f.intensity[i] = 0.0;
            } else {
                f.distance[i] = d;
                f.intensity[i] = rho / (d * d);
            }
        }
    }
    return f;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("handtrack_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace handtrack::testing
