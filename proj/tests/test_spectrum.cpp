#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "slens/spectrum.hpp"

using namespace slens;
using namespace slens::spectrum;

namespace {

double max_abs_diff(const Grid& a, const Grid& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

}  // namespace

TEST_CASE("fft2 of a constant grid is DC only") {
    Grid g(4, 4);
    for (auto& v : g.v) v = 0.37;
    const SpectrumGrid z = fft2(g);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (i == z.centroid_i() && j == z.centroid_j()) {
                CHECK(std::abs(z.at(i, j).real() - 16.0 * 0.37) < 1e-12);
                CHECK(std::abs(z.at(i, j).imag()) < 1e-12);
            } else {
                CHECK(std::abs(z.at(i, j)) < 1e-12);
            }
        }
}

TEST_CASE("fft2 of an impulse has flat magnitude") {
    Grid g(8, 8);
    g.at(0, 0) = 1.0;
    const SpectrumGrid z = fft2(g);
    for (const auto& v : z.z) CHECK(std::abs(std::abs(v) - 1.0) < 1e-12);
}

TEST_CASE("fft2 matches the direct DFT sum on a 6x7 grid") {
    Rng rng(5);
    const Grid g = oracles::random_grid(6, 7, rng);
    const SpectrumGrid z = fft2(g);
    const SpectrumGrid want = oracles::dft2_centered(g);
    for (std::size_t i = 0; i < z.z.size(); ++i) CHECK(std::abs(z.z[i] - want.z[i]) < 1e-9);
}

TEST_CASE("fft2 rejects non-finite input naming the index") {
    Grid g(3, 3);
    g.at(1, 2) = std::nan("");
    CHECK_THROWS_WITH_AS(fft2(g), "fft2: non-finite value at (1,2)", DataError);
}

TEST_CASE("ifft2_real round trips") {
    Rng rng(9);
    for (const auto [h, w] : {std::pair{5, 5}, {4, 6}, {7, 3}, {1, 8}}) {
        const Grid g = oracles::random_grid(h, w, rng);
        const Grid back = ifft2_real(fft2(g));
        CHECK(max_abs_diff(g, back) < 1e-6);
    }
}

TEST_CASE("zero spectrum inverts to zero") {
    const SpectrumGrid z(5, 4);
    const Grid g = ifft2_real(z);
    for (const double v : g.v) CHECK(v == 0.0);
}

TEST_CASE("truncated inverse matches the direct truncated sum") {
    Rng rng(13);
    const Grid g = oracles::random_grid(5, 5, rng);
    auto [zl, zh] = radial_split(fft2(g), 2.0);
    const Grid got = ifft2_real(zl);
    const Grid want = oracles::lowpass_direct(g, 2.0);
    CHECK(max_abs_diff(got, want) < 1e-9);
}

TEST_CASE("radial_split covers everything at full radius and only DC at zero") {
    Rng rng(17);
    const Grid g = oracles::random_grid(6, 6, rng);
    const SpectrumGrid z = fft2(g);

    auto [zl_full, zh_full] = radial_split(z, full_radius(6, 6));
    for (std::size_t i = 0; i < z.z.size(); ++i) {
        CHECK(zl_full.z[i] == z.z[i]);
        CHECK(std::abs(zh_full.z[i]) == 0.0);
    }

    auto [zl0, zh0] = radial_split(z, 0.0);
    double mean = 0.0;
    for (const double v : g.v) mean += v;
    mean /= static_cast<double>(g.v.size());
    const Grid xl = ifft2_real(zl0);
    for (const double v : xl.v) CHECK(std::abs(v - mean) < 1e-9);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            if (i != z.centroid_i() || j != z.centroid_j()) CHECK(std::abs(zl0.at(i, j)) == 0.0);
}

TEST_CASE("radial_split rejects negative radius") {
    const SpectrumGrid z(4, 4);
    CHECK_THROWS_AS(radial_split(z, -1.0), UsageError);
}

TEST_CASE("28x28 mask cardinality at r=4 matches enumeration") {
    const RadialMask mask(28, 28, 4.0);
    std::size_t want = 0;
    for (int i = 0; i < 28; ++i)
        for (int j = 0; j < 28; ++j) {
            const double di = i - 14, dj = j - 14;
            if (std::sqrt(di * di + dj * dj) <= 4.0) ++want;
        }
    CHECK(mask.low_count() == want);
    CHECK(want == 49);  // enumerated by hand: 7x7 diamond-ish disc
}

TEST_CASE("mask low sets grow with radius") {
    for (double r1 = 0.0; r1 <= 6.0; r1 += 1.5) {
        const RadialMask a(9, 12, r1);
        const RadialMask b(9, 12, r1 + 1.5);
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 12; ++j)
                if (a.low(i, j)) CHECK(b.low(i, j));
    }
}

TEST_CASE("decompose with whole-grid radius returns the image and nothing") {
    Rng rng(23);
    const Image img = oracles::random_image(8, 8, 3, rng);
    const DecomposedPair pair = decompose(img, full_radius(8, 8), Rescale::none);
    for (std::size_t k = 0; k < img.pix.size(); ++k) {
        CHECK(std::abs(pair.low.pix[k] - img.pix[k]) < 1e-6);
        CHECK(std::abs(pair.high.pix[k]) < 1e-6);
    }
}

TEST_CASE("decompose low+high reconstructs the image") {
    Rng rng(29);
    const Image img = oracles::random_image(8, 8, 3, rng);
    const DecomposedPair pair = decompose(img, 3.0, Rescale::none);
    for (std::size_t k = 0; k < img.pix.size(); ++k)
        CHECK(std::abs(pair.low.pix[k] + pair.high.pix[k] - img.pix[k]) < 1e-6);
}

TEST_CASE("decompose minmax rescale hits exactly 0 and 1") {
    Rng rng(31);
    const Image img = oracles::random_image(28, 28, 1, rng);
    const DecomposedPair pair = decompose(img, 4.0, Rescale::minmax);
    for (const Image* part : {&pair.low, &pair.high}) {
        float lo = 2.0f, hi = -2.0f;
        for (const float v : part->pix) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(lo == 0.0f);
        CHECK(hi == 1.0f);
    }
}

TEST_CASE("svd_split at full rank reproduces the image") {
    Rng rng(37);
    const Image img = oracles::random_image(6, 9, 1, rng);
    auto [dom, trail] = svd_split(img, 6);
    for (std::size_t k = 0; k < img.pix.size(); ++k) {
        CHECK(std::abs(dom.pix[k] - img.pix[k]) < 1e-6);
        CHECK(std::abs(trail.pix[k]) < 1e-6);
    }
}

TEST_CASE("svd_split of a rank-1 image has no trailing part at k=1") {
    Image img(5, 7, 1);
    Rng rng(41);
    std::vector<double> u(5), v(7);
    for (auto& x : u) x = rng.uniform();
    for (auto& x : v) x = rng.uniform();
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 7; ++j) img.at(0, i, j) = static_cast<float>(u[i] * v[j]);
    auto [dom, trail] = svd_split(img, 1);
    for (const float t : trail.pix) CHECK(std::abs(t) < 1e-6);
}

TEST_CASE("svd_split trailing norm matches the Gram eigenvalue oracle") {
    Rng rng(43);
    const Image img = oracles::random_image(6, 6, 1, rng);
    const int k = 2;
    auto [dom, trail] = svd_split(img, k);
    double frob = 0.0;
    for (const float t : trail.pix) frob += static_cast<double>(t) * t;
    frob = std::sqrt(frob);
    const auto ev = oracles::gram_eigenvalues(img, 0);  // ascending sigma^2
    double want = 0.0;
    for (std::size_t i = 0; i + k < ev.size(); ++i) want += std::max(0.0, ev[i]);
    want = std::sqrt(want);
    CHECK(std::abs(frob - want) < 1e-6);
}

TEST_CASE("svd_split rejects out-of-range ranks") {
    const Image img(4, 4, 1);
    CHECK_THROWS_AS(svd_split(img, 0), UsageError);
    CHECK_THROWS_AS(svd_split(img, 5), UsageError);
}

TEST_CASE("svd trailing norm is non-increasing in k") {
    Rng rng(47);
    const Image img = oracles::random_image(7, 7, 1, rng);
    double prev = 1e9;
    for (int k = 1; k <= 7; ++k) {
        auto [dom, trail] = svd_split(img, k);
        double frob = 0.0;
        for (const float t : trail.pix) frob += static_cast<double>(t) * t;
        frob = std::sqrt(frob);
        CHECK(frob <= prev + 1e-9);
        prev = frob;
    }
}

TEST_CASE("hf_energy_ratio of constants and full radius is zero") {
    Grid g(5, 5);
    for (auto& v : g.v) v = 1.25;
    CHECK(hf_energy_ratio(g, 0.0) == 0.0);
    CHECK(hf_energy_ratio(g, 3.0) == 0.0);

    Rng rng(53);
    const Grid r = oracles::random_grid(6, 5, rng);
    CHECK(hf_energy_ratio(r, full_radius(6, 5)) == 0.0);

    const Grid zero(4, 4);
    CHECK(hf_energy_ratio(zero, 1.0) == 0.0);
}

TEST_CASE("hf_energy_ratio matches a direct energy partition") {
    Rng rng(59);
    Grid g(3, 3);
    for (auto& v : g.v) v = rng.uniform(-1.0, 1.0);
    const auto z = oracles::dft2_centered(g);
    double high = 0.0, total = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double e = std::norm(z.at(i, j));
            total += e;
            const double di = i - 1, dj = j - 1;
            if (di * di + dj * dj > 1.0) high += e;
        }
    CHECK(std::abs(hf_energy_ratio(g, 1.0) - high / total) < 1e-9);
}

TEST_CASE("Parseval partition holds for the radial split") {
    Rng rng(61);
    const Grid g = oracles::random_grid(8, 8, rng);
    const SpectrumGrid z = fft2(g);
    auto [zl, zh] = radial_split(z, 2.5);
    double el = 0.0, eh = 0.0, ez = 0.0;
    for (std::size_t i = 0; i < z.z.size(); ++i) {
        el += std::norm(zl.z[i]);
        eh += std::norm(zh.z[i]);
        ez += std::norm(z.z[i]);
    }
    CHECK(std::abs(el + eh - ez) <= 1e-6 * ez);
}

TEST_CASE("fft2 agrees with the DFT oracle on every grid size up to 8x8") {
    Rng rng(67);
    for (int h = 1; h <= 8; ++h) {
        for (int w = 1; w <= 8; ++w) {
            const Grid g = oracles::random_grid(h, w, rng);
            const SpectrumGrid got = fft2(g);
            const SpectrumGrid want = oracles::dft2_centered(g);
            for (std::size_t i = 0; i < got.z.size(); ++i)
                CHECK(std::abs(got.z[i] - want.z[i]) < 1e-9);
        }
    }
}
