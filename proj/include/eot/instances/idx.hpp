#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "eot/core/errors.hpp"
#include "eot/instances/images.hpp"

namespace eot {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path + "'");
  return bytes;
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                               const char* field) {
  if (bytes.size() < offset + 4)
    throw ParseError(std::string("truncated IDX header while reading ") + field, offset);
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

inline void write_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

inline void check_magic(std::uint32_t magic, std::uint32_t expected) {
  if (magic != expected) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad IDX magic 0x%08X (expected 0x%08X)", magic, expected);
    throw ParseError(buf, 0);
  }
}

}  // namespace detail

/// Parses an in-memory IDX image file. Images must be square.
inline std::vector<GrayImage> parse_idx_images(const std::vector<unsigned char>& bytes) {
  if (bytes.empty()) throw ParseError("empty IDX file", 0);
  detail::check_magic(detail::read_be32(bytes, 0, "magic"), kIdxImageMagic);
  const std::uint32_t count = detail::read_be32(bytes, 4, "count");
  const std::uint32_t rows = detail::read_be32(bytes, 8, "rows");
  const std::uint32_t cols = detail::read_be32(bytes, 12, "cols");
  if (rows != cols) throw ParseError("non-square IDX images are not supported", 8);
  if (rows == 0) throw ParseError("IDX images have zero size", 8);
  const std::size_t pixels = std::size_t{rows} * cols;
  const std::size_t expected = 16 + std::size_t{count} * pixels;
  if (bytes.size() < expected)
    throw ParseError("truncated IDX payload: expected " + std::to_string(expected) + " bytes, got " +
                         std::to_string(bytes.size()),
                     bytes.size());
  std::vector<GrayImage> images;
  images.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vector px(pixels);
    const std::size_t base = 16 + k * pixels;
    for (std::size_t p = 0; p < pixels; ++p) px[p] = static_cast<double>(bytes[base + p]);
    images.emplace_back(rows, std::move(px));
  }
  return images;
}

inline std::vector<GrayImage> load_idx_images(const std::string& path) {
  return parse_idx_images(detail::read_file_bytes(path));
}

inline std::vector<std::uint8_t> parse_idx_labels(const std::vector<unsigned char>& bytes) {
  if (bytes.empty()) throw ParseError("empty IDX file", 0);
  detail::check_magic(detail::read_be32(bytes, 0, "magic"), kIdxLabelMagic);
  const std::uint32_t count = detail::read_be32(bytes, 4, "count");
  if (bytes.size() < 8 + std::size_t{count})
    throw ParseError("truncated IDX label payload", bytes.size());
  return std::vector<std::uint8_t>(bytes.begin() + 8, bytes.begin() + 8 + count);
}

inline std::vector<std::uint8_t> load_idx_labels(const std::string& path) {
  return parse_idx_labels(detail::read_file_bytes(path));
}

/// Serializes images in the IDX image format; pixels are rounded and clamped
/// to [0, 255].
inline std::vector<unsigned char> encode_idx_images(const std::vector<GrayImage>& images) {
  std::vector<unsigned char> out;
  const std::uint32_t side = images.empty() ? 0 : static_cast<std::uint32_t>(images[0].side);
  detail::write_be32(out, kIdxImageMagic);
  detail::write_be32(out, static_cast<std::uint32_t>(images.size()));
  detail::write_be32(out, side);
  detail::write_be32(out, side);
  for (const GrayImage& img : images) {
    if (img.side != side) throw DomainError("IDX images must share one size");
    for (double x : img.intensities) {
      const double clamped = std::min(255.0, std::max(0.0, std::round(x)));
      out.push_back(static_cast<unsigned char>(clamped));
    }
  }
  return out;
}

inline void save_idx_images(const std::string& path, const std::vector<GrayImage>& images) {
  const auto bytes = encode_idx_images(images);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace eot
