#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hydra {

// 8-bit interleaved RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3
};

// Throws CorruptImage.
RgbImage decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const RgbImage& image);

// Throws IoFailure.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Box-filtered downscale preserving aspect so the longer side is `max_side`.
RgbImage thumbnail(const RgbImage& image, int max_side);

}  // namespace hydra
