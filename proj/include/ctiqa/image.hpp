// Copyright 2026 The ctiqa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ctiqa {

/// Grayscale raster with row-major intensities normalized to [0, 1].
/// Immutable by convention once constructed; safe to share across threads.
struct ImageBuffer {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;  // size == width * height

  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  double& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
};

/// Decodes an 8- or 16-bit grayscale PNG. Intensities are divided by the
/// format's max value (255 or 65535). Throws DecodeFailure for anything that
/// is not a well-formed 8/16-bit PNG and UnsupportedChannelCount for images
/// with more than one channel.
ImageBuffer decode_png_gray(const std::filesystem::path& path);

/// Decodes from an in-memory PNG byte stream (same contract as above).
ImageBuffer decode_png_gray(const std::uint8_t* data, std::size_t size);

/// Encodes a buffer as a 16-bit grayscale PNG. Intensities are quantized by
/// round(v * 65535) after clamping to [0, 1]. The encoder emits stored
/// (uncompressed) deflate blocks, so output bytes depend only on the pixel
/// values — never on a compression library version. Prompt serialization and
/// golden tests rely on that stability.
std::vector<std::uint8_t> encode_png_gray16(const ImageBuffer& image);

/// 8-bit variant, quantizing by round(v * 255).
std::vector<std::uint8_t> encode_png_gray8(const ImageBuffer& image);

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace ctiqa
