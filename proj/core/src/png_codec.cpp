// Copyright 2026 The clutterlab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "png_codec.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <string>

namespace clutterlab::png {
namespace {

constexpr std::size_t kSignatureBytes = 8;

struct ErrorState {
  std::jmp_buf jump;
  char message[256] = {0};
};

void on_error(png_structp png, png_const_charp msg) {
  auto* state = static_cast<ErrorState*>(png_get_error_ptr(png));
  std::strncpy(state->message, msg, sizeof(state->message) - 1);
  std::longjmp(state->jump, 1);
}

void on_warning(png_structp, png_const_charp) {}

struct MemoryReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (reader->size - reader->pos < n) png_error(png, "unexpected end of data");
  std::memcpy(out, reader->data + reader->pos, n);
  reader->pos += n;
}

void write_to_vector(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void flush_noop(png_structp) {}

void check_signature(std::span<const std::uint8_t> bytes,
                     const std::filesystem::path& origin) {
  if (bytes.size() < kSignatureBytes ||
      png_sig_cmp(bytes.data(), 0, kSignatureBytes) != 0) {
    throw IoError(origin, "not a PNG file");
  }
}

// Decodes rows into `rows_out` (bytes per row given by the header). Returns
// false and fills `error` on a libpng failure. All C++ objects touched after
// setjmp are owned by the caller.
bool decode_rows(std::span<const std::uint8_t> bytes, Header& header,
                 std::vector<std::uint8_t>& pixels, bool header_only,
                 std::string& error) {
  ErrorState state;
  MemoryReader reader{bytes.data(), bytes.size(), 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state,
                                           on_error, on_warning);
  if (png == nullptr) {
    error = "out of memory";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    error = "out of memory";
    return false;
  }
  std::vector<png_bytep> row_ptrs;
  if (setjmp(state.jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = state.message;
    return false;
  }
  png_set_read_fn(png, &reader, read_from_memory);
  png_read_info(png, info);
  header.width = static_cast<int>(png_get_image_width(png, info));
  header.height = static_cast<int>(png_get_image_height(png, info));
  header.bit_depth = png_get_bit_depth(png, info);
  header.color_type = png_get_color_type(png, info);
  if (!header_only) {
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    pixels.resize(rowbytes * static_cast<std::size_t>(header.height));
    row_ptrs.resize(static_cast<std::size_t>(header.height));
    for (int y = 0; y < header.height; ++y) {
      row_ptrs[static_cast<std::size_t>(y)] =
          pixels.data() + rowbytes * static_cast<std::size_t>(y);
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode(int width, int height, int bit_depth, int color_type,
            std::span<const std::uint8_t> packed_rows, std::size_t rowbytes,
            std::vector<std::uint8_t>& out, std::string& error) {
  ErrorState state;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state,
                                            on_error, on_warning);
  if (png == nullptr) {
    error = "out of memory";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    error = "out of memory";
    return false;
  }
  std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    row_ptrs[static_cast<std::size_t>(y)] = const_cast<png_bytep>(
        packed_rows.data() + rowbytes * static_cast<std::size_t>(y));
  }
  if (setjmp(state.jump)) {
    png_destroy_write_struct(&png, &info);
    error = state.message;
    return false;
  }
  png_set_write_fn(png, &out, write_to_vector, flush_noop);
  png_set_compression_level(png, 3);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

Header read_header(std::span<const std::uint8_t> bytes,
                   const std::filesystem::path& origin) {
  check_signature(bytes, origin);
  Header header;
  std::vector<std::uint8_t> unused;
  std::string error;
  if (!decode_rows(bytes, header, unused, true, error)) {
    throw IoError(origin, "PNG decode failed: " + error);
  }
  return header;
}

RgbImage decode_rgb8(std::span<const std::uint8_t> bytes,
                     const std::filesystem::path& origin) {
  check_signature(bytes, origin);
  Header header;
  std::vector<std::uint8_t> pixels;
  std::string error;
  if (!decode_rows(bytes, header, pixels, true, error)) {
    throw IoError(origin, "PNG decode failed: " + error);
  }
  if (header.bit_depth != 8) throw BitDepthError(origin, 8, header.bit_depth);
  if (header.color_type != PNG_COLOR_TYPE_RGB) {
    throw IoError(origin, "expected an RGB PNG");
  }
  if (!decode_rows(bytes, header, pixels, false, error)) {
    throw IoError(origin, "PNG decode failed: " + error);
  }
  return RgbImage(header.width, header.height, std::move(pixels));
}

LabelMap decode_gray16(std::span<const std::uint8_t> bytes,
                       const std::filesystem::path& origin) {
  check_signature(bytes, origin);
  Header header;
  std::vector<std::uint8_t> raw;
  std::string error;
  if (!decode_rows(bytes, header, raw, true, error)) {
    throw IoError(origin, "PNG decode failed: " + error);
  }
  if (header.bit_depth != 16) throw BitDepthError(origin, 16, header.bit_depth);
  if (header.color_type != PNG_COLOR_TYPE_GRAY) {
    throw IoError(origin, "expected a grayscale PNG");
  }
  if (!decode_rows(bytes, header, raw, false, error)) {
    throw IoError(origin, "PNG decode failed: " + error);
  }
  // PNG stores 16-bit samples big-endian.
  std::vector<std::uint16_t> ids(raw.size() / 2);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ids[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return LabelMap(header.width, header.height, std::move(ids));
}

std::vector<std::uint8_t> encode_rgb8(const RgbImage& image) {
  std::vector<std::uint8_t> out;
  std::string error;
  if (!encode(image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB,
              image.data(), static_cast<std::size_t>(image.width()) * 3, out,
              error)) {
    throw Error(ErrorKind::kInternal, "PNG encode failed: " + error);
  }
  return out;
}

std::vector<std::uint8_t> encode_gray16(const LabelMap& labels) {
  std::vector<std::uint8_t> packed(labels.data().size() * 2);
  auto ids = labels.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    packed[2 * i] = static_cast<std::uint8_t>(ids[i] >> 8);
    packed[2 * i + 1] = static_cast<std::uint8_t>(ids[i] & 0xff);
  }
  std::vector<std::uint8_t> out;
  std::string error;
  if (!encode(labels.width(), labels.height(), 16, PNG_COLOR_TYPE_GRAY, packed,
              static_cast<std::size_t>(labels.width()) * 2, out, error)) {
    throw Error(ErrorKind::kInternal, "PNG encode failed: " + error);
  }
  return out;
}

}  // namespace clutterlab::png
