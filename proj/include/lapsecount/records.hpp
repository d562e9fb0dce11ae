#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "lapsecount/errors.hpp"

namespace lapsecount::records {

// Byte-exact little-endian record streams; see FORMATS.md for the layout.

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
    std::ifstream in;
    std::string path;

    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw IoError("cannot read record stream: " + p);
    }

    void bytes(void* dst, std::size_t n) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n))
            throw IoError("truncated record stream: " + path);
    }

    std::uint32_t u32() {
        std::uint8_t b[4];
        bytes(b, 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    double f64() {
        std::uint8_t b[8];
        bytes(b, 8);
        std::uint64_t bits = 0;
        for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
        return std::bit_cast<double>(bits);
    }

    bool at_end() { return in.peek() == std::char_traits<char>::eof(); }
};

}  // namespace detail

constexpr std::uint32_t kVersion = 1;

// ---------------------------------------------------------------------------
// "LCRP": labeled crop pixels for static training.
// ---------------------------------------------------------------------------

struct CropRecord {
    std::uint32_t frame_id = 0;
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    double count = 0.0;
    std::vector<double> pixels;  // window*window intensities in [0,1]
};

struct CropRecordFile {
    std::uint32_t window = 0;
    std::vector<CropRecord> records;
};

inline void write_crop_records(const CropRecordFile& file, const std::string& path) {
    std::string out;
    out.reserve(16 + file.records.size() * (20 + file.window * file.window));
    out += "LCRP";
    detail::put_u32(out, kVersion);
    detail::put_u32(out, file.window);
    detail::put_u32(out, 0);  // reserved
    for (const auto& r : file.records) {
        if (r.pixels.size() != static_cast<std::size_t>(file.window) * file.window)
            throw std::invalid_argument("write_crop_records: pixel count != window^2");
        detail::put_u32(out, r.frame_id);
        detail::put_u32(out, r.x);
        detail::put_u32(out, r.y);
        detail::put_f64(out, r.count);
        for (double p : r.pixels) {
            const double c = p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
            out.push_back(static_cast<char>(std::lround(c * 255.0)));
        }
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write record stream: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write: " + path);
}

inline CropRecordFile read_crop_records(const std::string& path) {
    detail::Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "LCRP", 4) != 0) throw IoError("bad magic in " + path);
    if (r.u32() != kVersion) throw IoError("unsupported LCRP version in " + path);
    CropRecordFile file;
    file.window = r.u32();
    r.u32();  // reserved
    const std::size_t n_px = static_cast<std::size_t>(file.window) * file.window;
    while (!r.at_end()) {
        CropRecord rec;
        rec.frame_id = r.u32();
        rec.x = r.u32();
        rec.y = r.u32();
        rec.count = r.f64();
        std::vector<std::uint8_t> bytes(n_px);
        r.bytes(bytes.data(), n_px);
        rec.pixels.resize(n_px);
        for (std::size_t i = 0; i < n_px; ++i)
            rec.pixels[i] = static_cast<double>(bytes[i]) / 255.0;
        file.records.push_back(std::move(rec));
    }
    return file;
}

// ---------------------------------------------------------------------------
// "LBLK": labeled temporal blocks for recurrent training.
// ---------------------------------------------------------------------------

struct BlockRecord {
    std::uint32_t n_real = 0;
    std::vector<double> rows;  // tw*m, row-major
    double label = 0.0;
};

struct BlockRecordFile {
    std::uint32_t tw = 0;
    std::uint32_t m = 0;
    std::vector<BlockRecord> records;
};

inline void write_block_records(const BlockRecordFile& file, const std::string& path) {
    std::string out;
    out.reserve(16 + file.records.size() * (12 + 8 * file.tw * file.m));
    out += "LBLK";
    detail::put_u32(out, kVersion);
    detail::put_u32(out, file.tw);
    detail::put_u32(out, file.m);
    for (const auto& r : file.records) {
        if (r.rows.size() != static_cast<std::size_t>(file.tw) * file.m)
            throw std::invalid_argument("write_block_records: row count != tw*m");
        detail::put_u32(out, r.n_real);
        for (double v : r.rows) detail::put_f64(out, v);
        detail::put_f64(out, r.label);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write record stream: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write: " + path);
}

inline BlockRecordFile read_block_records(const std::string& path) {
    detail::Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "LBLK", 4) != 0) throw IoError("bad magic in " + path);
    if (r.u32() != kVersion) throw IoError("unsupported LBLK version in " + path);
    BlockRecordFile file;
    file.tw = r.u32();
    file.m = r.u32();
    const std::size_t n = static_cast<std::size_t>(file.tw) * file.m;
    while (!r.at_end()) {
        BlockRecord rec;
        rec.n_real = r.u32();
        rec.rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) rec.rows[i] = r.f64();
        rec.label = r.f64();
        file.records.push_back(std::move(rec));
    }
    return file;
}

}  // namespace lapsecount::records
