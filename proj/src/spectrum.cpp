#include "slens/spectrum.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>
#include <unordered_map>

namespace slens::spectrum {

namespace {

// e^{-2*pi*i*k/n} for k in [0, n); exact periodicity via index arithmetic.
const std::vector<std::complex<double>>& twiddles(int n) {
    static std::mutex mu;
    static std::unordered_map<int, std::vector<std::complex<double>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<std::complex<double>> tw(n);
    for (int k = 0; k < n; ++k) {
        const double a = -2.0 * std::numbers::pi * k / n;
        tw[k] = {std::cos(a), std::sin(a)};
    }
    return cache.emplace(n, std::move(tw)).first->second;
}

// Separable DFT in natural (DC-first) layout. sign=-1 forward, +1 inverse.
std::vector<std::complex<double>> dft2(const std::vector<std::complex<double>>& x,
                                       int h, int w, int sign) {
    const auto& twh = twiddles(h);
    const auto& tww = twiddles(w);
    std::vector<std::complex<double>> rows(static_cast<std::size_t>(h) * w);
    for (int i = 0; i < h; ++i) {
        for (int v = 0; v < w; ++v) {
            std::complex<double> acc{0.0, 0.0};
            for (int j = 0; j < w; ++j) {
                auto t = tww[static_cast<std::size_t>(v) * j % w];
                if (sign > 0) t = std::conj(t);
                acc += x[static_cast<std::size_t>(i) * w + j] * t;
            }
            rows[static_cast<std::size_t>(i) * w + v] = acc;
        }
    }
    std::vector<std::complex<double>> out(static_cast<std::size_t>(h) * w);
    for (int v = 0; v < w; ++v) {
        for (int u = 0; u < h; ++u) {
            std::complex<double> acc{0.0, 0.0};
            for (int i = 0; i < h; ++i) {
                auto t = twh[static_cast<std::size_t>(u) * i % h];
                if (sign > 0) t = std::conj(t);
                acc += rows[static_cast<std::size_t>(i) * w + v] * t;
            }
            out[static_cast<std::size_t>(u) * w + v] = acc;
        }
    }
    return out;
}

Grid channel_to_grid(const Image& img, int ch) {
    Grid g(img.h, img.w);
    const float* src = img.channel(ch);
    for (std::size_t k = 0; k < g.v.size(); ++k) g.v[k] = src[k];
    return g;
}

}  // namespace

RadialMask::RadialMask(int h_, int w_, double r_) : h(h_), w(w_), r(r_) {
    if (r_ < 0.0) throw UsageError("radial mask: negative radius " + std::to_string(r_));
}

std::size_t RadialMask::low_count() const {
    std::size_t count = 0;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            if (low(i, j)) ++count;
    return count;
}

SpectrumGrid fft2(const Grid& channel) {
    const int h = channel.h;
    const int w = channel.w;
    if (h < 1 || w < 1) throw UsageError("fft2: empty grid");
    std::vector<std::complex<double>> x(static_cast<std::size_t>(h) * w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double v = channel.at(i, j);
            if (!std::isfinite(v))
                throw DataError("fft2: non-finite value at (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
            x[static_cast<std::size_t>(i) * w + j] = v;
        }
    }
    const auto nat = dft2(x, h, w, -1);
    SpectrumGrid out(h, w);
    const int ci = out.centroid_i();
    const int cj = out.centroid_j();
    for (int p = 0; p < h; ++p) {
        const int u = ((p - ci) % h + h) % h;
        for (int q = 0; q < w; ++q) {
            const int v = ((q - cj) % w + w) % w;
            out.at(p, q) = nat[static_cast<std::size_t>(u) * w + v];
        }
    }
    return out;
}

Grid ifft2_real(const SpectrumGrid& spectrum) {
    const int h = spectrum.h;
    const int w = spectrum.w;
    const int ci = spectrum.centroid_i();
    const int cj = spectrum.centroid_j();
    std::vector<std::complex<double>> nat(static_cast<std::size_t>(h) * w);
    for (int p = 0; p < h; ++p) {
        const int u = ((p - ci) % h + h) % h;
        for (int q = 0; q < w; ++q) {
            const int v = ((q - cj) % w + w) % w;
            const auto& zv = spectrum.at(p, q);
            if (!std::isfinite(zv.real()) || !std::isfinite(zv.imag()))
                throw DataError("ifft2_real: non-finite spectrum entry at (" + std::to_string(p) +
                                "," + std::to_string(q) + ")");
            nat[static_cast<std::size_t>(u) * w + v] = zv;
        }
    }
    const auto xs = dft2(nat, h, w, +1);
    Grid out(h, w);
    const double scale = 1.0 / (static_cast<double>(h) * w);
    for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] = xs[k].real() * scale;
    return out;
}

std::pair<SpectrumGrid, SpectrumGrid> radial_split(const SpectrumGrid& spectrum, double r) {
    const RadialMask mask(spectrum.h, spectrum.w, r);
    SpectrumGrid low(spectrum.h, spectrum.w);
    SpectrumGrid high(spectrum.h, spectrum.w);
    for (int i = 0; i < spectrum.h; ++i) {
        for (int j = 0; j < spectrum.w; ++j) {
            if (mask.low(i, j))
                low.at(i, j) = spectrum.at(i, j);
            else
                high.at(i, j) = spectrum.at(i, j);
        }
    }
    return {std::move(low), std::move(high)};
}

void rescale_minmax(Image& image) {
    if (image.pix.empty()) return;
    float lo = image.pix[0];
    float hi = image.pix[0];
    for (const float v : image.pix) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const float span = hi - lo;
    if (span <= 0.0f) {
        std::fill(image.pix.begin(), image.pix.end(), 0.0f);
        return;
    }
    for (float& v : image.pix) v = (v - lo) / span;
}

DecomposedPair decompose(const Image& image, double r, Rescale rescale) {
    DecomposedPair out;
    out.r = r;
    out.rescale = rescale;
    out.low = Image(image.h, image.w, image.c);
    out.high = Image(image.h, image.w, image.c);
    for (int ch = 0; ch < image.c; ++ch) {
        const auto z = fft2(channel_to_grid(image, ch));
        auto [zl, zh] = radial_split(z, r);
        const Grid xl = ifft2_real(zl);
        const Grid xh = ifft2_real(zh);
        float* lo = out.low.channel(ch);
        float* hi = out.high.channel(ch);
        for (std::size_t k = 0; k < xl.v.size(); ++k) {
            lo[k] = static_cast<float>(xl.v[k]);
            hi[k] = static_cast<float>(xh.v[k]);
        }
    }
    if (rescale == Rescale::minmax) {
        rescale_minmax(out.low);
        rescale_minmax(out.high);
    }
    return out;
}

std::pair<Image, Image> svd_split(const Image& image, int k) {
    const int maxk = std::min(image.h, image.w);
    if (k < 1 || k > maxk)
        throw UsageError("svd_split: rank " + std::to_string(k) + " out of range [1," +
                         std::to_string(maxk) + "]");
    Image dominant(image.h, image.w, image.c);
    Image trailing(image.h, image.w, image.c);
    for (int ch = 0; ch < image.c; ++ch) {
        Eigen::MatrixXd m(image.h, image.w);
        for (int i = 0; i < image.h; ++i)
            for (int j = 0; j < image.w; ++j) m(i, j) = image.at(ch, i, j);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        Eigen::MatrixXd rec = Eigen::MatrixXd::Zero(image.h, image.w);
        for (int t = 0; t < k; ++t)
            rec += sv(t) * svd.matrixU().col(t) * svd.matrixV().col(t).transpose();
        for (int i = 0; i < image.h; ++i) {
            for (int j = 0; j < image.w; ++j) {
                dominant.at(ch, i, j) = static_cast<float>(rec(i, j));
                trailing.at(ch, i, j) = static_cast<float>(m(i, j) - rec(i, j));
            }
        }
    }
    return {std::move(dominant), std::move(trailing)};
}

double hf_energy_ratio(const Grid& matrix, double r) {
    if (r < 0.0) throw UsageError("hf_energy_ratio: negative radius");
    const auto z = fft2(matrix);
    const RadialMask mask(z.h, z.w, r);
    double high = 0.0;
    double total = 0.0;
    for (int i = 0; i < z.h; ++i) {
        for (int j = 0; j < z.w; ++j) {
            const double e = std::norm(z.at(i, j));
            total += e;
            if (!mask.low(i, j)) high += e;
        }
    }
    if (total <= 0.0) return 0.0;
    return high / total;
}

double full_radius(int h, int w) {
    const int ci = h / 2;
    const int cj = w / 2;
    double best = 0.0;
    for (const int i : {0, h - 1}) {
        for (const int j : {0, w - 1}) {
            const double di = i - ci;
            const double dj = j - cj;
            best = std::max(best, std::sqrt(di * di + dj * dj));
        }
    }
    return best;
}

}  // namespace slens::spectrum
