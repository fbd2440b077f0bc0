#include "handtrack/sequence_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "handtrack/errors.hpp"

namespace handtrack {
namespace {

constexpr char kMagic[4] = {'R', 'I', 'S', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 7;

static_assert(std::endian::native == std::endian::little, "sequence I/O assumes a little-endian host");

class Writer {
public:
    std::vector<unsigned char> bytes;

    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void f32(float v) { raw(&v, sizeof v); }
    void raw(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        bytes.insert(bytes.end(), c, c + n);
    }
};

class Reader {
public:
    explicit Reader(std::span<const unsigned char> b) : bytes_(b) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint32_t u32(const char* what) {
        std::uint32_t v;
        take(&v, sizeof v, what);
        return v;
    }
    float f32(const char* what) {
        float v;
        take(&v, sizeof v, what);
        return v;
    }
    void take(void* out, std::size_t n, const char* what) {
        if (remaining() < n) throw FormatError(std::string("truncated ") + what, pos_);
        std::memcpy(out, bytes_.data() + pos_, n);
        pos_ += n;
    }

private:
    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

void quantize_to_f32(Frame& frame) {
    for (auto& v : frame.distance) v = static_cast<float>(v);
    for (auto& v : frame.intensity) v = static_cast<float>(v);
}

std::vector<unsigned char> encode_sequence(std::span<const Frame> frames, const CameraIntrinsics& k) {
    k.validate();
    Writer w;
    w.bytes.reserve(kHeaderBytes + frames.size() * k.pixel_count() * 8);
    w.raw(kMagic, 4);
    w.u32(k.width);
    w.u32(k.height);
    w.f32(static_cast<float>(k.fx));
    w.f32(static_cast<float>(k.fy));
    w.f32(static_cast<float>(k.cx));
    w.f32(static_cast<float>(k.cy));
    w.u32(static_cast<std::uint32_t>(frames.size()));
    for (const auto& f : frames) {
        if (!(f.intrinsics == k)) throw InvalidInput("store_sequence: frames have mixed intrinsics");
        f.validate();
        for (double v : f.distance) w.f32(static_cast<float>(v));
        for (double v : f.intensity) w.f32(static_cast<float>(v));
    }
    return std::move(w.bytes);
}

std::vector<Frame> decode_sequence(std::span<const unsigned char> bytes) {
    Reader r(bytes);
    char magic[4];
    r.take(magic, 4, "header");
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic, expected RIS1", 0);

    CameraIntrinsics k;
    k.width = r.u32("header");
    k.height = r.u32("header");
    k.fx = r.f32("header");
    k.fy = r.f32("header");
    k.cx = r.f32("header");
    k.cy = r.f32("header");
    const std::size_t dims_offset = 4;
    try {
        k.validate();
    } catch (const InvalidInput& e) {
        throw FormatError(std::string("malformed header: ") + e.what(), dims_offset);
    }
    const std::uint32_t count = r.u32("header");

    const std::size_t n = k.pixel_count();
    std::vector<Frame> frames;
    frames.reserve(count);
    std::vector<float> buf(n);
    for (std::uint32_t i = 0; i < count; ++i) {
        Frame f(k, i);
        for (auto* grid : {&f.distance, &f.intensity}) {
            if (r.remaining() < n * sizeof(float))
                throw FormatError("truncated payload in frame " + std::to_string(i), r.offset());
            r.take(buf.data(), n * sizeof(float), "payload");
            std::copy(buf.begin(), buf.end(), grid->begin());
        }
        frames.push_back(std::move(f));
    }
    if (r.remaining() != 0)
        throw FormatError("trailing bytes after " + std::to_string(count) + " frames", r.offset());
    return frames;
}

std::vector<Frame> load_sequence(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string(), 0);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_sequence(bytes);
}

void store_sequence(std::span<const Frame> frames, const CameraIntrinsics& k,
                    const std::filesystem::path& path) {
    const auto bytes = encode_sequence(frames, k);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("write failed: " + path.string());
}

void store_sequence(std::span<const Frame> frames, const std::filesystem::path& path) {
    if (frames.empty()) throw InvalidInput("store_sequence: empty sequence needs explicit intrinsics");
    store_sequence(frames, frames.front().intrinsics, path);
}

} // namespace handtrack
