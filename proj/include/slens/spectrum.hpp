#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "slens/common.hpp"
#include "slens/tensor.hpp"

namespace slens::spectrum {

// Real-valued H x W working grid (double precision; the transform pipeline
// runs in double end to end, images are converted at the boundary).
struct Grid {
    int h = 0;
    int w = 0;
    std::vector<double> v;

    Grid() = default;
    Grid(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, 0.0) {}

    double& at(int i, int j) { return v[static_cast<std::size_t>(i) * w + j]; }
    double at(int i, int j) const { return v[static_cast<std::size_t>(i) * w + j]; }
};

// Centered 2-D spectrum of one channel: DC sits at (floor(H/2), floor(W/2)).
struct SpectrumGrid {
    int h = 0;
    int w = 0;
    bool centered = true;
    std::vector<std::complex<double>> z;

    SpectrumGrid() = default;
    SpectrumGrid(int h_, int w_)
        : h(h_), w(w_), z(static_cast<std::size_t>(h_) * w_, {0.0, 0.0}) {}

    std::complex<double>& at(int i, int j) { return z[static_cast<std::size_t>(i) * w + j]; }
    const std::complex<double>& at(int i, int j) const {
        return z[static_cast<std::size_t>(i) * w + j];
    }

    int centroid_i() const { return h / 2; }
    int centroid_j() const { return w / 2; }
};

// Membership of spectrum cells in the low-frequency disc of radius r
// (Euclidean distance to the centroid, index units).
struct RadialMask {
    int h = 0;
    int w = 0;
    double r = 0.0;

    RadialMask(int h_, int w_, double r_);

    int centroid_i() const { return h / 2; }
    int centroid_j() const { return w / 2; }

    bool low(int i, int j) const {
        const double di = i - centroid_i();
        const double dj = j - centroid_j();
        return di * di + dj * dj <= r * r;
    }

    std::size_t low_count() const;
};

enum class Rescale { none, minmax };

struct DecomposedPair {
    Image low;
    Image high;
    double r = 0.0;
    Rescale rescale = Rescale::none;
};

// Centered 2-D DFT. Throws DataError naming the first non-finite entry.
SpectrumGrid fft2(const Grid& channel);

// Real part of the inverse transform; the imaginary residue is discarded.
Grid ifft2_real(const SpectrumGrid& spectrum);

// z_l keeps cells within the disc, z_h is the complement; z_l + z_h == z.
std::pair<SpectrumGrid, SpectrumGrid> radial_split(const SpectrumGrid& spectrum, double r);

// Per-channel fft2 -> radial_split -> ifft2_real. With Rescale::minmax each
// output image is mapped affinely onto [0,1] (constant images become zeros).
DecomposedPair decompose(const Image& image, double r, Rescale rescale);

// Rank split: dominant = reconstruction from the k largest singular values
// per channel, trailing = image - dominant.
std::pair<Image, Image> svd_split(const Image& image, int k);

// (sum |z_h|^2) / (sum |z|^2) over the centered spectrum; 0 for a zero matrix.
double hf_energy_ratio(const Grid& matrix, double r);

// Largest centroid-to-corner distance; any r >= this covers the whole grid.
double full_radius(int h, int w);

// In-place min-max rescale of an image onto [0,1]; constants map to zeros.
void rescale_minmax(Image& image);

}  // namespace slens::spectrum
