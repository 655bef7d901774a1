#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace slens {

// H x W x C pixel grid in [0,1], channel-planar storage (c, then row, then col).
struct Image {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<float> pix;

    Image() = default;
    Image(int h_, int w_, int c_) : h(h_), w(w_), c(c_), pix(static_cast<std::size_t>(h_) * w_ * c_, 0.0f) {}

    float& at(int ch, int i, int j) { return pix[(static_cast<std::size_t>(ch) * h + i) * w + j]; }
    float at(int ch, int i, int j) const { return pix[(static_cast<std::size_t>(ch) * h + i) * w + j]; }

    std::size_t size() const { return pix.size(); }

    const float* channel(int ch) const { return pix.data() + static_cast<std::size_t>(ch) * h * w; }
    float* channel(int ch) { return pix.data() + static_cast<std::size_t>(ch) * h * w; }
};

// Mini-batch activation tensor, NCHW, scalar type T (float for training,
// double for gradient verification).
template <typename T>
struct Batch {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;
    std::vector<T> data;

    Batch() = default;
    Batch(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {}

    std::size_t per_sample() const { return static_cast<std::size_t>(c) * h * w; }
    T* sample(int i) { return data.data() + i * per_sample(); }
    const T* sample(int i) const { return data.data() + i * per_sample(); }

    T& at(int ni, int ci, int hi, int wi) {
        return data[((static_cast<std::size_t>(ni) * c + ci) * h + hi) * w + wi];
    }
    T at(int ni, int ci, int hi, int wi) const {
        return data[((static_cast<std::size_t>(ni) * c + ci) * h + hi) * w + wi];
    }
};

}  // namespace slens
