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

#include "ctiqa/image.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>

#include "ctiqa/errors.hpp"

namespace ctiqa {

namespace {

struct MemoryReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (reader->offset + count > reader->size) {
    png_error(png, "read past end of buffer");
  }
  std::memcpy(out, reader->data + reader->offset, count);
  reader->offset += count;
}

void on_png_error(png_structp png, png_const_charp msg) {
  auto* message = static_cast<std::string*>(png_get_error_ptr(png));
  if (message && message->empty()) *message = msg;
  longjmp(png_jmpbuf(png), 1);
}

void on_png_warning(png_structp, png_const_charp) {}

ImageBuffer decode_gray_impl(MemoryReader& reader) {
  if (reader.size < 8 || png_sig_cmp(reader.data, 0, 8) != 0) {
    throw Error(Errc::decode_failure, "not a PNG stream");
  }

  std::string error_message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING,
                                           &error_message, on_png_error,
                                           on_png_warning);
  if (!png) throw Error(Errc::decode_failure, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(Errc::decode_failure, "png_create_info_struct failed");
  }

  // Row storage lives outside the setjmp scope so nothing needs unwinding on
  // a libpng longjmp; locals read after the jump are volatile.
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> row_pointers;
  volatile png_uint_32 v_width = 0, v_height = 0;
  volatile int v_bit_depth = 0, v_color_type = 0, v_channels = 0;
  volatile bool failed = false;

  if (setjmp(png_jmpbuf(png)) == 0) {
    png_set_read_fn(png, &reader, read_from_memory);
    png_read_info(png, info);
    png_uint_32 width = png_get_image_width(png, info);
    png_uint_32 height = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);
    int channels = png_get_channels(png, info);
    v_width = width;
    v_height = height;
    v_bit_depth = bit_depth;
    v_color_type = color_type;
    v_channels = channels;

    if (color_type == PNG_COLOR_TYPE_GRAY && (bit_depth == 8 || bit_depth == 16) &&
        channels == 1 && width > 0 && height > 0) {
      std::size_t row_bytes = png_get_rowbytes(png, info);
      raw.resize(row_bytes * height);
      row_pointers.resize(height);
      for (png_uint_32 y = 0; y < height; ++y) {
        row_pointers[y] = raw.data() + std::size_t(y) * row_bytes;
      }
      png_read_image(png, row_pointers.data());
      png_read_end(png, nullptr);
    }
  } else {
    failed = true;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  const png_uint_32 width = v_width, height = v_height;
  const int bit_depth = v_bit_depth, color_type = v_color_type,
            channels = v_channels;

  if (failed) {
    throw Error(Errc::decode_failure, error_message.empty() ? "corrupt PNG"
                                                            : error_message);
  }
  if (channels > 1 || color_type != PNG_COLOR_TYPE_GRAY) {
    throw Error(Errc::unsupported_channel_count,
                "expected single-channel grayscale, got " +
                    std::to_string(channels) + " channel(s), color type " +
                    std::to_string(color_type));
  }
  if (bit_depth != 8 && bit_depth != 16) {
    throw Error(Errc::decode_failure,
                "unsupported bit depth " + std::to_string(bit_depth) +
                    " (need 8 or 16)");
  }
  if (width == 0 || height == 0) {
    throw Error(Errc::decode_failure, "zero-sized image");
  }

  ImageBuffer out;
  out.width = width;
  out.height = height;
  out.pixels.resize(std::size_t(width) * height);
  if (bit_depth == 8) {
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
      out.pixels[i] = raw[i] / 255.0;
    }
  } else {
    // PNG stores 16-bit samples big-endian.
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
      std::uint16_t v = std::uint16_t(raw[2 * i]) << 8 | raw[2 * i + 1];
      out.pixels[i] = v / 65535.0;
    }
  }
  return out;
}

// --- Minimal deterministic PNG writer ---------------------------------------

std::uint32_t crc32_update(std::uint32_t crc, const std::uint8_t* data, std::size_t len) {
  static std::uint32_t table[256];
  static bool init = false;
  if (!init) {
    for (std::uint32_t n = 0; n < 256; ++n) {
      std::uint32_t c = n;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      table[n] = c;
    }
    init = true;
  }
  crc ^= 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
  put_be32(out, std::uint32_t(payload.size()));
  std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  std::uint32_t crc = crc32_update(0, out.data() + crc_start, out.size() - crc_start);
  put_be32(out, crc);
}

// zlib stream with stored (type 0) deflate blocks: deterministic regardless
// of zlib version, and every inflater accepts it.
std::vector<std::uint8_t> zlib_stored(const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> out;
  out.push_back(0x78);
  out.push_back(0x01);
  std::size_t pos = 0;
  do {
    std::size_t block = std::min<std::size_t>(data.size() - pos, 65535);
    bool final_block = (pos + block == data.size());
    out.push_back(final_block ? 1 : 0);
    out.push_back(std::uint8_t(block & 0xFF));
    out.push_back(std::uint8_t(block >> 8));
    out.push_back(std::uint8_t(~block & 0xFF));
    out.push_back(std::uint8_t((~block >> 8) & 0xFF));
    out.insert(out.end(), data.begin() + pos, data.begin() + pos + block);
    pos += block;
  } while (pos < data.size());

  std::uint32_t s1 = 1, s2 = 0;
  for (std::uint8_t byte : data) {
    s1 = (s1 + byte) % 65521;
    s2 = (s2 + s1) % 65521;
  }
  put_be32(out, (s2 << 16) | s1);
  return out;
}

std::vector<std::uint8_t> encode_gray(const ImageBuffer& image, int bit_depth) {
  if (image.width == 0 || image.height == 0 ||
      image.pixels.size() != image.width * image.height) {
    throw Error(Errc::invalid_value, "cannot encode empty or inconsistent buffer");
  }
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  std::size_t bytes_per_px = bit_depth == 16 ? 2 : 1;

  // Filter type 0 (None) on every row.
  std::vector<std::uint8_t> scanlines;
  scanlines.reserve(image.height * (1 + image.width * bytes_per_px));
  for (std::size_t y = 0; y < image.height; ++y) {
    scanlines.push_back(0);
    for (std::size_t x = 0; x < image.width; ++x) {
      double v = image.at(x, y);
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      auto q = std::uint32_t(std::lround(v * maxv));
      if (bit_depth == 16) {
        scanlines.push_back(std::uint8_t(q >> 8));
        scanlines.push_back(std::uint8_t(q & 0xFF));
      } else {
        scanlines.push_back(std::uint8_t(q));
      }
    }
  }

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, std::uint32_t(image.width));
  put_be32(ihdr, std::uint32_t(image.height));
  ihdr.push_back(std::uint8_t(bit_depth));
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // default filtering
  ihdr.push_back(0);  // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", zlib_stored(scanlines));
  append_chunk(out, "IEND", {});
  return out;
}

}  // namespace

ImageBuffer decode_png_gray(const std::uint8_t* data, std::size_t size) {
  MemoryReader reader{data, size, 0};
  return decode_gray_impl(reader);
}

ImageBuffer decode_png_gray(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    throw Error(Errc::decode_failure, "cannot read " + path.string());
  }
  try {
    return decode_png_gray(bytes.data(), bytes.size());
  } catch (const Error& e) {
    if (e.code() == Errc::unsupported_channel_count) throw;
    throw Error(Errc::decode_failure, path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png_gray16(const ImageBuffer& image) {
  return encode_gray(image, 16);
}

std::vector<std::uint8_t> encode_png_gray8(const ImageBuffer& image) {
  return encode_gray(image, 8);
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_error, "short write to " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw Error(Errc::io_error, "short read from " + path.string());
  return bytes;
}

}  // namespace ctiqa
