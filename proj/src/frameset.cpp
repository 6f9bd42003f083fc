#include "airgrid/frameset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace airgrid {

namespace {
constexpr char kMagic[4] = {'A', 'G', 'F', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("frameset: truncated file");
}

template <typename T>
void write_vec(std::ostream& os, const std::vector<T>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
void read_vec(std::istream& is, std::vector<T>& v, std::size_t n) {
    v.resize(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!is) throw std::runtime_error("frameset: truncated file");
}
}  // namespace

void STFrameSet::allocate() {
    const std::size_t n = static_cast<std::size_t>(n_cells()) * static_cast<std::size_t>(n_bins);
    const double nan = std::nan("");
    pm25.assign(n, nan);
    pm10.assign(n, nan);
    speed.assign(n, nan);
    device_count.assign(n, 0);
    observed.assign(n, 0);
    imputed.assign(n, 0);
}

void STFrameSet::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("frameset: cannot open " + path + " for writing");
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod(os, grid.origin_lon);
    write_pod(os, grid.origin_lat);
    write_pod(os, grid.cell_size_m);
    write_pod(os, static_cast<std::int32_t>(grid.n_rows));
    write_pod(os, static_cast<std::int32_t>(grid.n_cols));
    write_pod(os, grid.ref_lat);
    write_pod(os, static_cast<std::int32_t>(tspec.bin_minutes));
    write_pod(os, static_cast<std::int32_t>(tspec.day_start_min));
    write_pod(os, static_cast<std::int32_t>(tspec.day_end_min));
    write_pod(os, static_cast<std::int32_t>(tspec.utc_offset_min));
    write_pod(os, tspec.epoch_day);
    write_pod(os, static_cast<std::int64_t>(n_bins));
    write_vec(os, pm25);
    write_vec(os, pm10);
    write_vec(os, speed);
    write_vec(os, device_count);
    write_vec(os, observed);
    write_vec(os, imputed);
    if (!os) throw std::runtime_error("frameset: write failed for " + path);
}

STFrameSet STFrameSet::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("frameset: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("frameset: bad magic in " + path);
    std::uint32_t version = 0;
    read_pod(is, version);
    if (version != kVersion) throw std::runtime_error("frameset: unsupported version");

    STFrameSet fs;
    std::int32_t i32 = 0;
    std::int64_t i64 = 0;
    read_pod(is, fs.grid.origin_lon);
    read_pod(is, fs.grid.origin_lat);
    read_pod(is, fs.grid.cell_size_m);
    read_pod(is, i32);
    fs.grid.n_rows = i32;
    read_pod(is, i32);
    fs.grid.n_cols = i32;
    read_pod(is, fs.grid.ref_lat);
    read_pod(is, i32);
    fs.tspec.bin_minutes = i32;
    read_pod(is, i32);
    fs.tspec.day_start_min = i32;
    read_pod(is, i32);
    fs.tspec.day_end_min = i32;
    read_pod(is, i32);
    fs.tspec.utc_offset_min = i32;
    read_pod(is, fs.tspec.epoch_day);
    read_pod(is, i64);
    fs.n_bins = static_cast<int>(i64);

    const std::size_t n = static_cast<std::size_t>(fs.n_cells()) * static_cast<std::size_t>(fs.n_bins);
    read_vec(is, fs.pm25, n);
    read_vec(is, fs.pm10, n);
    read_vec(is, fs.speed, n);
    read_vec(is, fs.device_count, n);
    read_vec(is, fs.observed, n);
    read_vec(is, fs.imputed, n);
    return fs;
}

}  // namespace airgrid
