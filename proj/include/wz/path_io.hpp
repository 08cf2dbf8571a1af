#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "wz/noise.hpp"

namespace wz::noise {

/// Binary path cache: "WZNB", u16 version, u16 d1, u64 n_fine, f64 T, then
/// d1 * (n_fine + 1) float64 samples, row-major by component, little-endian.
inline constexpr std::uint16_t kPathFormatVersion = 1;

void write_path(std::ostream& out, const MultiPath& path);
MultiPath read_path(std::istream& in);

void save_path(const std::filesystem::path& file, const MultiPath& path);
MultiPath load_path(const std::filesystem::path& file);

}  // namespace wz::noise
