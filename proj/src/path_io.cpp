#include "wz/path_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace wz::noise {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
        throw std::runtime_error("truncated path file");
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

constexpr std::array<char, 4> kMagic{'W', 'Z', 'N', 'B'};

}  // namespace

void write_path(std::ostream& out, const MultiPath& path) {
    out.write(kMagic.data(), kMagic.size());
    put<std::uint16_t>(out, kPathFormatVersion);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(path.d1()));
    put<std::uint64_t>(out, path.grid().steps());
    put<double>(out, path.grid().horizon());
    for (double v : path.samples()) put<double>(out, v);
    if (!out) throw std::runtime_error("failed writing path file");
}

MultiPath read_path(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size())) throw std::runtime_error("truncated path file");
    if (magic != kMagic) throw std::runtime_error("not a path file (bad magic)");
    const auto version = get<std::uint16_t>(in);
    if (version != kPathFormatVersion) {
        throw std::runtime_error("unsupported path file version " + std::to_string(version));
    }
    const auto d1 = get<std::uint16_t>(in);
    const auto n_fine = get<std::uint64_t>(in);
    const auto horizon = get<double>(in);
    const TimeGrid grid(horizon, n_fine);
    std::vector<double> samples(static_cast<std::size_t>(d1) * grid.points());
    for (double& v : samples) v = get<double>(in);
    return MultiPath(grid, d1, std::move(samples), PathKind::wiener);
}

void save_path(const std::filesystem::path& file, const MultiPath& path) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    write_path(out, path);
}

MultiPath load_path(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    return read_path(in);
}

}  // namespace wz::noise
