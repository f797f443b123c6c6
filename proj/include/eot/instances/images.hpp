#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <utility>

#include "eot/core/errors.hpp"
#include "eot/core/types.hpp"

namespace eot {

/// Square grayscale image, intensities stored row-major.
struct GrayImage {
  std::size_t side = 0;
  Vector intensities;

  GrayImage() = default;
  GrayImage(std::size_t side_, Vector values) : side(side_), intensities(std::move(values)) {
    if (intensities.size() != side * side) throw DomainError("image data does not match side^2");
    for (double x : intensities)
      if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("image intensities must be nonnegative");
  }

  double operator()(std::size_t row, std::size_t col) const { return intensities[row * side + col]; }
  double total() const {
    double s = 0.0;
    for (double x : intensities) s += x;
    return s;
  }
};

/// Generator behind every synthetic image. mt19937_64 is fully specified by
/// the standard, so images are bit-identical across platforms.
inline constexpr const char* kImageRngName = "mt19937_64";

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound).
inline std::size_t below(std::mt19937_64& rng, std::size_t bound) {
  return static_cast<std::size_t>(rng() % bound);
}

}  // namespace detail

/// Side of the foreground square covering roughly `fg_fraction` of the image.
inline std::size_t foreground_side(std::size_t side, double fg_fraction) {
  if (!(fg_fraction > 0.0 && fg_fraction <= 1.0))
    throw DomainError("foreground fraction must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(
      std::llround(static_cast<double>(side) * std::sqrt(fg_fraction)));
  return std::clamp<std::size_t>(k, 1, side);
}

/// Random foreground square on a noisy background. Draw order: square row,
/// square column, then one uniform per pixel in row-major order; background
/// pixels are U[0,1], foreground pixels U[0,50].
inline GrayImage gen_synthetic_image(std::uint64_t seed, std::size_t side, double fg_fraction) {
  if (side < 2) throw DomainError("synthetic images need side >= 2");
  const std::size_t k = foreground_side(side, fg_fraction);
  std::mt19937_64 rng(seed);
  const std::size_t top = detail::below(rng, side - k + 1);
  const std::size_t left = detail::below(rng, side - k + 1);
  Vector pixels(side * side);
  for (std::size_t i = 0; i < side; ++i)
    for (std::size_t j = 0; j < side; ++j) {
      const bool fg = i >= top && i < top + k && j >= left && j < left + k;
      pixels[i * side + j] = (fg ? 50.0 : 1.0) * detail::unit_uniform(rng);
    }
  return GrayImage(side, std::move(pixels));
}

/// Seeds of the two images of a synthetic pair.
inline std::pair<std::uint64_t, std::uint64_t> synthetic_pair_seeds(std::uint64_t seed) {
  // splitmix64 finalizer separates the second stream from the first.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return {seed, z ^ (z >> 31)};
}

/// Row-major flattening divided by the total intensity.
inline Histogram image_to_histogram(const GrayImage& img) {
  if (!(img.total() > 0.0)) throw DomainError("image has zero total intensity");
  return Histogram::normalized(img.intensities);
}

inline constexpr double kMnistZeroFloor = 1e-6;

/// Zero pixels are lifted to 1e-6 before normalizing, so every entry is
/// strictly positive.
inline Histogram mnist_histogram(const GrayImage& img) {
  Vector w = img.intensities;
  for (double& x : w)
    if (x == 0.0) x = kMnistZeroFloor;
  return Histogram::normalized(std::move(w));
}

/// C[(i1,j1),(i2,j2)] = |i1 - i2| + |j1 - j2| on a side x side grid.
inline CostMatrix l1_cost_matrix(std::size_t side) {
  if (side < 1) throw DomainError("l1_cost_matrix requires side >= 1");
  const std::size_t n = side * side;
  Matrix C(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const auto di = static_cast<long>(a / side) - static_cast<long>(b / side);
      const auto dj = static_cast<long>(a % side) - static_cast<long>(b % side);
      C(a, b) = static_cast<double>(std::labs(di) + std::labs(dj));
    }
  return CostMatrix(std::move(C));
}

}  // namespace eot
