#include "handtrack/pgm.hpp"

#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "handtrack/errors.hpp"

namespace handtrack {

void write_pgm16(const Image16& image, const std::filesystem::path& path) {
    if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height)
        throw InvalidInput("write_pgm16: pixel count does not match dimensions");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << "P5\n" << image.width << ' ' << image.height << "\n65535\n";
    std::vector<unsigned char> bytes;
    bytes.reserve(image.pixels.size() * 2);
    for (auto p : image.pixels) {
        bytes.push_back(static_cast<unsigned char>(p >> 8));
        bytes.push_back(static_cast<unsigned char>(p & 0xff));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Image16 read_pgm16(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string(), 0);
    std::string magic;
    unsigned long w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (!in || magic != "P5" || maxval != 65535 || w == 0 || h == 0)
        throw FormatError("not a 16-bit binary PGM: " + path.string(), 0);
    in.get();  // single whitespace before the raster
    const auto header = static_cast<std::uint64_t>(in.tellg());
    Image16 img{static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(h), {}};
    std::vector<unsigned char> bytes(w * h * 2);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size())
        throw FormatError("truncated PGM raster: " + path.string(), header + static_cast<std::uint64_t>(in.gcount()));
    img.pixels.resize(w * h);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = static_cast<std::uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]);
    return img;
}

} // namespace handtrack
