#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "handtrack/frame.hpp"

namespace handtrack {

// Binary sequence format ("RIS1", little-endian):
//   magic[4] u32 width u32 height f32 fx fy cx cy u32 frame_count
//   per frame: f32[w*h] distance, f32[w*h] intensity
// Samples are narrowed to f32 on store.

std::vector<Frame> load_sequence(const std::filesystem::path& path);
std::vector<Frame> decode_sequence(std::span<const unsigned char> bytes);

/// Throws InvalidInput if frames do not share intrinsics. An empty sequence
/// needs explicit intrinsics for the header.
void store_sequence(std::span<const Frame> frames, const std::filesystem::path& path);
void store_sequence(std::span<const Frame> frames, const CameraIntrinsics& k,
                    const std::filesystem::path& path);
std::vector<unsigned char> encode_sequence(std::span<const Frame> frames,
                                           const CameraIntrinsics& k);

/// Rounds every sample to the nearest f32 so the frame survives a
/// store/load cycle bit for bit.
void quantize_to_f32(Frame& frame);

} // namespace handtrack
