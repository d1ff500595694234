#pragma once

#include <cstdint>
#include <filesystem>

#include "lacnet/bitmap.hpp"

namespace lacnet::png {

/// 8-bit images with 1 or 3 channels.
void write_u8(const std::filesystem::path& path, const Image<std::uint8_t>& image);
Image<std::uint8_t> read_u8(const std::filesystem::path& path);

/// 16-bit single-channel images.
void write_u16(const std::filesystem::path& path, const Image<std::uint16_t>& image);
Image<std::uint16_t> read_u16(const std::filesystem::path& path);

/// Masks are stored as {0, 255}; on read any value >= 128 is set.
void write_mask(const std::filesystem::path& path, const Bitmap& mask);
Bitmap read_mask(const std::filesystem::path& path);

}  // namespace lacnet::png
