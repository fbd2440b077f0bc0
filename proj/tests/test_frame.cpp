#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "handtrack/errors.hpp"
#include "handtrack/frame.hpp"
#include "handtrack/pgm.hpp"
#include "handtrack/sequence_io.hpp"
#include "support.hpp"

using namespace handtrack;
using handtrack::testing::random_frame;
using handtrack::testing::scratch_dir;
using handtrack::testing::small_intrinsics;

TEST_CASE("pixel_to_camera on the optical axis") {
    const CameraIntrinsics k = default_intrinsics();
    const Point3 p = pixel_to_camera(k.cx, k.cy, 1.0, k);
    CHECK(p.x == 0.0);
    CHECK(p.y == 0.0);
    CHECK(p.z == doctest::Approx(1.0));
    CHECK(pixel_to_camera(k.cx, k.cy, 2.5, k).z == doctest::Approx(2.5));
}

TEST_CASE("pixel_to_camera one focal length off axis") {
    const CameraIntrinsics k = default_intrinsics();
    // Ray direction (1, 0, 1) / sqrt(2), scaled by d = sqrt(2).
    const Point3 p = pixel_to_camera(k.cx + k.fx, k.cy, std::sqrt(2.0), k);
    CHECK(p.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.z == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pixel_to_camera keeps radial distance and is monotone in z") {
    const CameraIntrinsics k = default_intrinsics();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, k.width - 1.0), v(0.0, k.height - 1.0), d(0.01, 8.0);
    for (int i = 0; i < 1000; ++i) {
        const double uu = u(rng), vv = v(rng), dd = d(rng);
        const Point3 p = pixel_to_camera(uu, vv, dd, k);
        CHECK(std::abs(p.norm() - dd) <= 1e-9 * dd);
        CHECK(pixel_to_camera(uu, vv, dd * 1.01, k).z > p.z);
        CHECK(axial_depth(uu, vv, dd, k) == doctest::Approx(p.z));
    }
}

TEST_CASE("pixel_to_camera rejects non-positive distance") {
    const CameraIntrinsics k = default_intrinsics();
    CHECK_THROWS_AS(pixel_to_camera(k.cx, k.cy, 0.0, k), InvalidInput);
    CHECK_THROWS_AS(pixel_to_camera(k.cx, k.cy, -1.0, k), InvalidInput);
}

TEST_CASE("intrinsics and frame validation") {
    CHECK_NOTHROW(default_intrinsics().validate());
    CHECK(default_intrinsics().width == 204);
    CHECK(default_intrinsics().height == 204);
    CameraIntrinsics k = small_intrinsics();
    k.fx = 0.0;
    CHECK_THROWS_AS(k.validate(), InvalidInput);
    k = small_intrinsics();
    k.cx = 100.0;
    CHECK_THROWS_AS(k.validate(), InvalidInput);

    Frame f(small_intrinsics(), 0);
    CHECK_NOTHROW(f.validate());
    f.distance[3] = -0.5;
    CHECK_THROWS_AS(f.validate(), InvalidInput);
    f.distance[3] = 1.0;
    f.intensity.pop_back();
    CHECK_THROWS_AS(f.validate(), InvalidInput);
}

namespace {

std::vector<Frame> quantized_frames(std::size_t n) {
    std::vector<Frame> frames;
    for (std::size_t i = 0; i < n; ++i) {
        Frame f = random_frame(i + 100);
        f.frame_index = static_cast<std::uint32_t>(i);
        quantize_to_f32(f);
        frames.push_back(f);
    }
    return frames;
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("sequence round trip") {
    const auto dir = scratch_dir("unit_seq");
    for (std::size_t n : {1u, 3u, 100u}) {
        const auto frames = quantized_frames(n);
        store_sequence(frames, dir / "s.ris");
        const auto back = load_sequence(dir / "s.ris");
        REQUIRE(back.size() == n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(back[i].intrinsics == frames[i].intrinsics);
            CHECK(back[i].distance == frames[i].distance);
            CHECK(back[i].intensity == frames[i].intensity);
            CHECK(back[i].frame_index == i);
        }
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("empty sequence is header only") {
    const CameraIntrinsics k = small_intrinsics();
    const auto bytes = encode_sequence({}, k);
    CHECK(bytes.size() == 4 + 4 * 2 + 4 * 4 + 4);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "RIS1");
    CHECK(decode_sequence(bytes).empty());
    CHECK_THROWS_AS(store_sequence(std::span<const Frame>{}, "unused.ris"), InvalidInput);
}

TEST_CASE("sequence decode errors") {
    const auto frames = quantized_frames(2);
    const auto good = encode_sequence(frames, frames[0].intrinsics);

    SUBCASE("bad magic") {
        auto b = good;
        b[0] = 'X';
        CHECK_THROWS_AS(decode_sequence(b), FormatError);
    }
    SUBCASE("truncated header") {
        std::vector<unsigned char> b(good.begin(), good.begin() + 10);
        CHECK_THROWS_AS(decode_sequence(b), FormatError);
    }
    SUBCASE("truncated payload names the offset of the short frame") {
        std::vector<unsigned char> b(good.begin(), good.end() - 8);
        try {
            decode_sequence(b);
            FAIL("expected a format error");
        } catch (const FormatError& e) {
            const std::size_t header = 32, frame_bytes = 2 * 4 * 16 * 16;
            CHECK(e.offset() >= header + frame_bytes);
            CHECK(std::string(e.what()).find("frame 1") != std::string::npos);
        }
    }
    SUBCASE("trailing bytes") {
        auto b = good;
        b.push_back(0);
        CHECK_THROWS_AS(decode_sequence(b), FormatError);
    }
    SUBCASE("zero dimensions") {
        auto b = good;
        b[4] = b[5] = b[6] = b[7] = 0;
        CHECK_THROWS_AS(decode_sequence(b), FormatError);
    }
}

TEST_CASE("store rejects mixed intrinsics") {
    auto frames = quantized_frames(2);
    frames[1].intrinsics.fx += 1.0;
    CHECK_THROWS_AS(encode_sequence(frames, frames[0].intrinsics), InvalidInput);
}

TEST_CASE("store then load is byte stable") {
    const auto dir = scratch_dir("unit_seq_bytes");
    const auto frames = quantized_frames(4);
    store_sequence(frames, dir / "a.ris");
    store_sequence(load_sequence(dir / "a.ris"), dir / "b.ris");
    CHECK(read_bytes(dir / "a.ris") == read_bytes(dir / "b.ris"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("pgm16 round trip and errors") {
    const auto dir = scratch_dir("unit_pgm");
    Image16 img{3, 2, {0, 1, 255, 256, 65535, 7}};
    write_pgm16(img, dir / "a.pgm");
    CHECK(read_pgm16(dir / "a.pgm") == img);

    {
        std::ofstream out(dir / "bad.pgm", std::ios::binary);
        out << "P2\n3 2\n65535\n";
    }
    CHECK_THROWS(read_pgm16(dir / "bad.pgm"));
    {
        std::ofstream out(dir / "short.pgm", std::ios::binary);
        out << "P5\n3 2\n65535\n" << std::string(5, '\0');
    }
    CHECK_THROWS(read_pgm16(dir / "short.pgm"));
    CHECK_THROWS(read_pgm16(dir / "missing.pgm"));
    std::filesystem::remove_all(dir);
}
