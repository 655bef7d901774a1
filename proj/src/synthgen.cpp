#include "slens/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "slens/io.hpp"
#include "slens/parallel.hpp"
#include "slens/rng.hpp"

namespace slens::synth {

namespace {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

using Stroke = std::vector<Vec2>;  // polyline in unit glyph coordinates

Stroke arc(double cx, double cy, double rx, double ry, double a0, double a1, int steps = 24) {
    Stroke s;
    for (int i = 0; i <= steps; ++i) {
        const double a = a0 + (a1 - a0) * i / steps;
        s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    return s;
}

Stroke line(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y1}}; }

// Glyph skeletons, unit square, y pointing down. Loosely digit-shaped; the
// point is class-defining coarse structure, not typographic fidelity.
const std::vector<std::vector<Stroke>>& glyphs() {
    static const std::vector<std::vector<Stroke>> g = [] {
        constexpr double pi = std::numbers::pi;
        std::vector<std::vector<Stroke>> v(10);
        v[0] = {arc(0.50, 0.50, 0.26, 0.34, 0.0, 2.0 * pi)};
        v[1] = {line(0.52, 0.16, 0.52, 0.84), line(0.38, 0.30, 0.52, 0.16)};
        v[2] = {arc(0.50, 0.34, 0.22, 0.18, -pi, 0.0), line(0.72, 0.34, 0.30, 0.84),
                line(0.30, 0.84, 0.74, 0.84)};
        v[3] = {arc(0.46, 0.33, 0.21, 0.17, -0.75 * pi, 0.4 * pi),
                arc(0.46, 0.67, 0.23, 0.18, -0.4 * pi, 0.75 * pi)};
        v[4] = {line(0.62, 0.16, 0.30, 0.58), line(0.30, 0.58, 0.76, 0.58),
                line(0.62, 0.16, 0.62, 0.84)};
        v[5] = {line(0.70, 0.18, 0.36, 0.18), line(0.36, 0.18, 0.34, 0.46),
                arc(0.50, 0.64, 0.22, 0.20, -0.55 * pi, 0.7 * pi)};
        v[6] = {line(0.58, 0.15, 0.38, 0.52), arc(0.50, 0.64, 0.20, 0.19, 0.0, 2.0 * pi)};
        v[7] = {line(0.30, 0.18, 0.72, 0.18), line(0.72, 0.18, 0.44, 0.84)};
        v[8] = {arc(0.50, 0.33, 0.18, 0.15, 0.0, 2.0 * pi),
                arc(0.50, 0.67, 0.22, 0.18, 0.0, 2.0 * pi)};
        v[9] = {arc(0.52, 0.36, 0.20, 0.17, 0.0, 2.0 * pi), line(0.70, 0.42, 0.58, 0.84)};
        return v;
    }();
    return g;
}

struct Affine {
    // x' = a*x + b*y + tx, y' = c*x + d*y + ty (pixel coordinates out)
    double a = 1, b = 0, c = 0, d = 1, tx = 0, ty = 0;
    Vec2 apply(const Vec2& p) const { return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty}; }
};

// Stamp gaussian blobs along the polyline; max-blend keeps crossings clean.
void stamp_stroke(Image& img, const Stroke& s, const Affine& t, double sigma) {
    const int size = img.h;
    const double step = 0.3;
    const double reach = 3.0 * sigma;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        const Vec2 p0 = t.apply(s[k]);
        const Vec2 p1 = t.apply(s[k + 1]);
        const double len = std::hypot(p1.x - p0.x, p1.y - p0.y);
        const int n = std::max(1, static_cast<int>(len / step));
        for (int i = 0; i <= n; ++i) {
            const double u = static_cast<double>(i) / n;
            const double px = p0.x + u * (p1.x - p0.x);
            const double py = p0.y + u * (p1.y - p0.y);
            const int ilo = std::max(0, static_cast<int>(std::floor(py - reach)));
            const int ihi = std::min(size - 1, static_cast<int>(std::ceil(py + reach)));
            const int jlo = std::max(0, static_cast<int>(std::floor(px - reach)));
            const int jhi = std::min(size - 1, static_cast<int>(std::ceil(px + reach)));
            for (int ii = ilo; ii <= ihi; ++ii) {
                for (int jj = jlo; jj <= jhi; ++jj) {
                    const double dx = jj - px;
                    const double dy = ii - py;
                    const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                    float& cell = img.at(0, ii, jj);
                    cell = std::max(cell, static_cast<float>(v));
                }
            }
        }
    }
}

Image render_digit(int cls, int channels, int size, Rng& rng) {
    Image gray(size, size, 1);

    const double angle = rng.uniform(-0.22, 0.22);
    const double scale_x = rng.uniform(0.85, 1.15);
    const double scale_y = rng.uniform(0.85, 1.15);
    const double shear = rng.uniform(-0.15, 0.15);
    const double dx = rng.uniform(-2.5, 2.5);
    const double dy = rng.uniform(-2.5, 2.5);
    const double sigma = rng.uniform(0.9, 1.5);
    const double gain = rng.uniform(0.85, 1.0);

    const double ca = std::cos(angle), sa = std::sin(angle);
    // rotate * shear * scale, about the glyph center, then into pixel space
    Affine t;
    const double m00 = ca * scale_x + (-sa) * (shear * scale_x);
    const double m01 = -sa * scale_y;
    const double m10 = sa * scale_x + ca * (shear * scale_x);
    const double m11 = ca * scale_y;
    const double s = static_cast<double>(size);
    t.a = m00 * s;
    t.b = m01 * s;
    t.c = m10 * s;
    t.d = m11 * s;
    // keep the glyph center at the image center
    t.tx = s / 2.0 - (m00 * 0.5 + m01 * 0.5) * s + dx;
    t.ty = s / 2.0 - (m10 * 0.5 + m11 * 0.5) * s + dy;

    for (const Stroke& stroke : glyphs()[cls]) stamp_stroke(gray, stroke, t, sigma);

    for (float& v : gray.pix) {
        double x = std::min(1.0, 1.45 * v) * gain;
        x += rng.normal() * 0.02;
        v = static_cast<float>(std::clamp(x, 0.0, 1.0));
    }

    if (channels == 1) return gray;
    Image out(size, size, channels);
    for (int c = 0; c < channels; ++c) {
        const double cgain = rng.uniform(0.7, 1.0);
        float* dst = out.channel(c);
        for (std::size_t k = 0; k < gray.pix.size(); ++k)
            dst[k] = static_cast<float>(std::clamp(gray.pix[k] * cgain, 0.0, 1.0));
    }
    return out;
}

}  // namespace

data::Dataset make_digits(std::size_t n, int channels, std::uint64_t seed, int size) {
    if (channels < 1) throw UsageError("make_digits: channels must be >= 1");
    data::Dataset ds;
    ds.num_classes = 10;
    ds.provenance = "original";
    ds.images.resize(n);
    ds.labels.resize(n);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng(derive_seed(seed, "synth-sample", i));
            const int cls = static_cast<int>(rng.below(10));
            ds.labels[i] = static_cast<std::uint16_t>(cls);
            ds.images[i] = render_digit(cls, channels, size, rng);
        }
    });
    return ds;
}

void write_idx(const data::Dataset& ds, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
    if (ds.empty()) throw UsageError("write_idx: empty dataset");
    if (ds.images[0].c != 1) throw UsageError("write_idx: IDX stores single-channel images");
    const int h = ds.images[0].h;
    const int w = ds.images[0].w;

    std::string img;
    auto put_be = [&img](std::uint32_t v) {
        for (int i = 3; i >= 0; --i) img.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    put_be(0x00000803);
    put_be(static_cast<std::uint32_t>(ds.size()));
    put_be(static_cast<std::uint32_t>(h));
    put_be(static_cast<std::uint32_t>(w));
    for (const auto& im : ds.images)
        for (const float v : im.pix)
            img.push_back(static_cast<char>(
                static_cast<int>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f)));

    std::string lbl;
    auto put_be_l = [&lbl](std::uint32_t v) {
        for (int i = 3; i >= 0; --i) lbl.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    put_be_l(0x00000801);
    put_be_l(static_cast<std::uint32_t>(ds.size()));
    for (const auto l : ds.labels) lbl.push_back(static_cast<char>(l & 0xff));

    io::atomic_write(images_path, img);
    io::atomic_write(labels_path, lbl);
}

}  // namespace slens::synth
