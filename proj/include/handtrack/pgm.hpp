#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace handtrack {

struct Image16 {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint16_t> pixels;

    bool operator==(const Image16&) const = default;
};

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
void write_pgm16(const Image16& image, const std::filesystem::path& path);
Image16 read_pgm16(const std::filesystem::path& path);

} // namespace handtrack
