#pragma once

#include <cstdint>
#include <vector>

#include "slens/network.hpp"
#include "slens/spectrum.hpp"

namespace slens::adv {

struct AttackSpec {
    enum class Kind { fgsm, pgd };
    Kind kind = Kind::pgd;
    double eps = 8.0 / 255.0;
    double step = 0.0;       // pgd; 0 resolves to eps/4
    int iters = 10;          // pgd
    bool random_start = true;  // pgd
    std::uint64_t seed = 0;

    double resolved_step() const { return step > 0.0 ? step : eps / 4.0; }
    void validate() const;
};

struct SmoothingSpec {
    double rho = 0.0;  // eight fixed neighbors, duplicate-edge boundary
};

// Single-step sign attack: x' = clip_[0,1](x + eps * sign(dL/dx)).
Batch<float> fgsm(nn::Network& net, const Batch<float>& images,
                      const std::vector<std::uint16_t>& labels, double eps);

// Iterated signed steps with projection into the eps-ball and the pixel box.
Batch<float> pgd(nn::Network& net, const Batch<float>& images,
                     const std::vector<std::uint16_t>& labels, const AttackSpec& spec);

// Accuracy on attacked inputs (an upper bound of the true worst case).
double robust_accuracy(nn::Network& net, const data::Dataset& ds, const AttackSpec& spec);

// Mixes each first-layer kernel weight with rho times its eight spatial
// neighbors (read from the original kernel; edges duplicate boundary values).
// Returns a new network; everything past the first layer is untouched.
nn::Network smooth_kernels(const nn::Network& net, double rho);

// Sum of squared horizontally/vertically adjacent differences, normalized by
// pair count and by the (population) variance of the slice; 0 if constant.
double kernel_smoothness(const float* kernel, int h, int w);

// Mean smoothness over all first-layer kernel slices.
double mean_first_layer_smoothness(const nn::Network& net);

struct KernelSpectrumReport {
    std::vector<double> ratios;  // per (out_ch, in_ch) slice, out-major order
    double mean_ratio = 0.0;
    Image tile;    // rows = in channels, cols = out channels, 1px gaps
    int rows = 0;
    int cols = 0;
};

// High-frequency energy ratio of every first-layer kernel (zero-padded to
// pad_size x pad_size before the transform) plus a tiled visualization.
KernelSpectrumReport kernel_spectrum_report(const nn::Network& net, double r, int pad_size = 16);

}  // namespace slens::adv
