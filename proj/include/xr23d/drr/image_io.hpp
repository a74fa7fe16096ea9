/*
 * xr23d: biplanar X-ray to 3D bone reconstruction benchmark toolkit
 *
 * Copyright 2026 The xr23d Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "xr23d/core/error.hpp"
#include "xr23d/drr/projection.hpp"

namespace xr23d::drr {

inline std::uint16_t quantize16(double p) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(p, 0.0, 1.0) * 65535.0));
}

inline std::uint8_t quantize8(double p) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0));
}

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
inline void write_pgm16(const DrrImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "P5\n" << img.cols << ' ' << img.rows << "\n65535\n";
  std::vector<unsigned char> buf(img.pixels.size() * 2);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const std::uint16_t v = quantize16(img.pixels[i]);
    buf[2 * i] = static_cast<unsigned char>(v >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

struct GrayImage16 {
  std::int64_t rows = 0, cols = 0;
  std::vector<std::uint16_t> pixels;
};

inline GrayImage16 read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string magic;
  GrayImage16 img;
  long maxval = 0;
  in >> magic >> img.cols >> img.rows >> maxval;
  if (magic != "P5" || img.cols <= 0 || img.rows <= 0 || maxval != 65535)
    throw FormatError("not a 16-bit binary PGM: " + path.string());
  in.get();
  std::vector<unsigned char> buf(std::size_t(img.rows * img.cols) * 2);
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  if (in.gcount() != std::streamsize(buf.size())) throw FormatError("truncated PGM: " + path.string());
  img.pixels.resize(buf.size() / 2);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
  return img;
}

/// 8-bit grayscale PNG without time or text chunks.
inline void write_png8(const DrrImage& img, const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    std::fclose(fp);
    throw IoError("libpng initialisation failed");
  }
  std::vector<png_byte> row(std::size_t(img.cols));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("PNG encoding failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(img.cols), png_uint_32(img.rows), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::int64_t r = 0; r < img.rows; ++r) {
    for (std::int64_t c = 0; c < img.cols; ++c) row[std::size_t(c)] = quantize8(img.at(r, c));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoError("write failed: " + path.string());
}

inline nlohmann::ordered_json sidecar(const DrrImage& img) {
  nlohmann::ordered_json j;
  j["view"] = to_string(img.spec.view);
  j["lat_angle_deg"] = img.spec.lat_angle_deg;
  j["output_size"] = {img.rows, img.cols};
  j["intensity"] = to_string(img.spec.intensity);
  j["hu_window"] = {img.spec.hu_lo, img.spec.hu_hi};
  j["pixel_spacing_mm"] = {img.row_spacing, img.col_spacing};
  j["geometry"] = "orthographic";
  return j;
}

inline void write_sidecar(const DrrImage& img, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << sidecar(img).dump(2) << '\n';
}

}  // namespace xr23d::drr
