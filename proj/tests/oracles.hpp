#pragma once

// Independent reference implementations used only by tests. Everything here
// deliberately avoids the library's transform/convolution code paths: direct
// O(N^2) sums, straight loops, and a hand-rolled Jacobi eigensolver.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "slens/rng.hpp"
#include "slens/spectrum.hpp"
#include "slens/tensor.hpp"

namespace oracles {

using slens::Image;
using slens::spectrum::Grid;
using slens::spectrum::SpectrumGrid;

// Centered spectrum straight from the definition: the cell at (p, q) is the
// coefficient for frequency (p - c_i, q - c_j), summed over all pixels.
inline SpectrumGrid dft2_centered(const Grid& x) {
    const int h = x.h, w = x.w;
    const int ci = h / 2, cj = w / 2;
    SpectrumGrid out(h, w);
    for (int p = 0; p < h; ++p) {
        for (int q = 0; q < w; ++q) {
            std::complex<double> acc{0.0, 0.0};
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double ang = -2.0 * std::numbers::pi *
                                       (static_cast<double>(p - ci) * i / h +
                                        static_cast<double>(q - cj) * j / w);
                    acc += x.at(i, j) * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            }
            out.at(p, q) = acc;
        }
    }
    return out;
}

inline Grid idft2_real_centered(const SpectrumGrid& z) {
    const int h = z.h, w = z.w;
    const int ci = h / 2, cj = w / 2;
    Grid out(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            std::complex<double> acc{0.0, 0.0};
            for (int p = 0; p < h; ++p) {
                for (int q = 0; q < w; ++q) {
                    const double ang = 2.0 * std::numbers::pi *
                                       (static_cast<double>(p - ci) * i / h +
                                        static_cast<double>(q - cj) * j / w);
                    acc += z.at(p, q) * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            }
            out.at(i, j) = acc.real() / (static_cast<double>(h) * w);
        }
    }
    return out;
}

// Low-pass the centered spectrum by the radial rule and invert, all via the
// direct sums above.
inline Grid lowpass_direct(const Grid& x, double r) {
    SpectrumGrid z = dft2_centered(x);
    const int ci = z.h / 2, cj = z.w / 2;
    for (int p = 0; p < z.h; ++p)
        for (int q = 0; q < z.w; ++q) {
            const double di = p - ci, dj = q - cj;
            if (di * di + dj * dj > r * r) z.at(p, q) = {0.0, 0.0};
        }
    return idft2_real_centered(z);
}

// Straight six-loop convolution (batch, out channel, spatial, kernel).
inline std::vector<float> conv_naive(const std::vector<float>& x, int n, int cin, int h, int w,
                                     const std::vector<float>& weight,
                                     const std::vector<float>& bias, int cout, int kh, int kw,
                                     int stride, int pad, int& oh, int& ow) {
    oh = (h + 2 * pad - kh) / stride + 1;
    ow = (w + 2 * pad - kw) / stride + 1;
    std::vector<float> y(static_cast<std::size_t>(n) * cout * oh * ow, 0.0f);
    for (int s = 0; s < n; ++s)
        for (int oc = 0; oc < cout; ++oc)
            for (int oi = 0; oi < oh; ++oi)
                for (int oj = 0; oj < ow; ++oj) {
                    double acc = bias[oc];
                    for (int ic = 0; ic < cin; ++ic)
                        for (int ki = 0; ki < kh; ++ki)
                            for (int kj = 0; kj < kw; ++kj) {
                                const int ii = oi * stride - pad + ki;
                                const int jj = oj * stride - pad + kj;
                                if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                                const float xv =
                                    x[((static_cast<std::size_t>(s) * cin + ic) * h + ii) * w + jj];
                                const float wv =
                                    weight[((static_cast<std::size_t>(oc) * cin + ic) * kh + ki) *
                                               kw + kj];
                                acc += static_cast<double>(xv) * wv;
                            }
                    y[((static_cast<std::size_t>(s) * cout + oc) * oh + oi) * ow + oj] =
                        static_cast<float>(acc);
                }
    return y;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix (ascending order).
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-18) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = a[i * n + i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

// Singular values squared of an h x w channel via the Gram matrix.
inline std::vector<double> gram_eigenvalues(const Image& img, int ch) {
    const int h = img.h, w = img.w;
    const int n = std::min(h, w);
    std::vector<double> gram(static_cast<std::size_t>(n) * n, 0.0);
    if (w <= h) {
        for (int a = 0; a < w; ++a)
            for (int b = 0; b < w; ++b) {
                double acc = 0.0;
                for (int i = 0; i < h; ++i)
                    acc += static_cast<double>(img.at(ch, i, a)) * img.at(ch, i, b);
                gram[a * n + b] = acc;
            }
    } else {
        for (int a = 0; a < h; ++a)
            for (int b = 0; b < h; ++b) {
                double acc = 0.0;
                for (int j = 0; j < w; ++j)
                    acc += static_cast<double>(img.at(ch, a, j)) * img.at(ch, b, j);
                gram[a * n + b] = acc;
            }
    }
    return symmetric_eigenvalues(std::move(gram), n);
}

inline Grid random_grid(int h, int w, slens::Rng& rng) {
    Grid g(h, w);
    for (auto& v : g.v) v = rng.uniform();
    return g;
}

inline Image random_image(int h, int w, int c, slens::Rng& rng) {
    Image img(h, w, c);
    for (auto& v : img.pix) v = static_cast<float>(rng.uniform());
    return img;
}

}  // namespace oracles
