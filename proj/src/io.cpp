#include "slens/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdio>

namespace slens::io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
    if (size > 0) in.read(reinterpret_cast<char*>(buf.data()), size);
    if (!in) throw DataError("read failed: " + path.string());
    return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open for write: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    const auto buf = read_file(path);
    return fnv1a64(buf.data(), buf.size());
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

std::string encode_ppm(int h, int w, const std::vector<float>& rgb) {
    std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.reserve(out.size() + rgb.size());
    for (const float v : rgb) {
        const float clamped = std::clamp(v, 0.0f, 1.0f);
        out.push_back(static_cast<char>(static_cast<int>(clamped * 255.0f + 0.5f)));
    }
    return out;
}

std::vector<float> image_to_rgb(const Image& img) {
    std::vector<float> rgb(static_cast<std::size_t>(img.h) * img.w * 3);
    for (int i = 0; i < img.h; ++i) {
        for (int j = 0; j < img.w; ++j) {
            for (int k = 0; k < 3; ++k) {
                const int src = img.c == 1 ? 0 : std::min(k, img.c - 1);
                rgb[(static_cast<std::size_t>(i) * img.w + j) * 3 + k] = img.at(src, i, j);
            }
        }
    }
    return rgb;
}

}  // namespace slens::io
