#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "slens/common.hpp"
#include "slens/tensor.hpp"

namespace slens::io {

// --- little/big endian scalar I/O on byte buffers ------------------------

inline void put_u16le(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32le(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32le(out, bits);
}

inline void put_u64le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64le(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64le(out, bits);
}

struct ByteReader {
    const std::uint8_t* p;
    std::size_t n;
    std::size_t pos = 0;
    std::string name;

    void need(std::size_t k) const {
        if (pos + k > n) throw DataError(name + ": truncated file");
    }
    std::uint8_t u8() { need(1); return p[pos++]; }
    std::uint16_t u16le() { need(2); std::uint16_t v = p[pos] | (p[pos + 1] << 8); pos += 2; return v; }
    std::uint32_t u32le() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | p[pos + i];
        pos += 4;
        return v;
    }
    std::uint32_t u32be() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | p[pos + i];
        pos += 4;
        return v;
    }
    std::uint64_t u64le() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | p[pos + i];
        pos += 8;
        return v;
    }
    float f32le() { std::uint32_t bits = u32le(); float v; std::memcpy(&v, &bits, 4); return v; }
    double f64le() { std::uint64_t bits = u64le(); double v; std::memcpy(&v, &bits, 8); return v; }
    std::string bytes(std::size_t k) {
        need(k);
        std::string s(reinterpret_cast<const char*>(p + pos), k);
        pos += k;
        return s;
    }
};

// --- whole-file helpers ---------------------------------------------------

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Write via temp file + rename so readers never observe partial output.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

// FNV-1a/64 over file or buffer contents, hex-printed in manifests.
std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

// --- locale-free number formatting (CSV and reports) ----------------------

inline std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string fmt(float v) { return fmt(static_cast<double>(v)); }

// --- PPM (P6, binary, maxval 255) ------------------------------------------

// pixels are row-major RGB triples in [0,1]; values are clamped.
std::string encode_ppm(int h, int w, const std::vector<float>& rgb);

// Image -> RGB buffer (grayscale replicated across channels when c == 1).
std::vector<float> image_to_rgb(const Image& img);

}  // namespace slens::io
