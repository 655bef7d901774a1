#include "slens/adversarial.hpp"

#include <algorithm>
#include <cmath>

#include "slens/rng.hpp"

namespace slens::adv {

namespace {

float sign_of(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

// Attack gradients are taken in eval mode (batchnorm running stats, dropout
// off) so attacks are pure functions of (net, batch, seed).
Batch<float> input_grad(nn::Network& net, const Batch<float>& x,
                            const std::vector<std::uint16_t>& labels) {
    const nn::Mode saved = net.mode();
    net.set_mode(nn::Mode::eval);
    Batch<float> g;
    net.input_gradient(x, labels, g);
    net.set_mode(saved);
    return g;
}

}  // namespace

void AttackSpec::validate() const {
    if (eps < 0.0 || eps > 1.0) throw UsageError("attack: eps must be in [0,1]");
    if (kind == Kind::pgd) {
        if (iters < 1) throw UsageError("attack: pgd needs at least one iteration");
        if (resolved_step() <= 0.0) throw UsageError("attack: pgd step must be positive");
    }
}

Batch<float> fgsm(nn::Network& net, const Batch<float>& images,
                      const std::vector<std::uint16_t>& labels, double eps) {
    if (eps < 0.0 || eps > 1.0) throw UsageError("fgsm: eps must be in [0,1]");
    if (eps == 0.0) return images;
    const Batch<float> g = input_grad(net, images, labels);
    Batch<float> out = images;
    const float e = static_cast<float>(eps);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = std::clamp(images.data[i] + e * sign_of(g.data[i]), 0.0f, 1.0f);
    return out;
}

Batch<float> pgd(nn::Network& net, const Batch<float>& images,
                     const std::vector<std::uint16_t>& labels, const AttackSpec& spec) {
    spec.validate();
    if (spec.eps == 0.0) return images;
    const float e = static_cast<float>(spec.eps);
    const float step = static_cast<float>(spec.resolved_step());
    Batch<float> x = images;
    if (spec.random_start) {
        Rng rng(derive_seed(spec.seed, "pgd-start"));
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const float d = static_cast<float>(rng.uniform(-spec.eps, spec.eps));
            x.data[i] = std::clamp(images.data[i] + d, 0.0f, 1.0f);
        }
    }
    for (int it = 0; it < spec.iters; ++it) {
        const Batch<float> g = input_grad(net, x, labels);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            float v = x.data[i] + step * sign_of(g.data[i]);
            v = std::clamp(v, images.data[i] - e, images.data[i] + e);
            x.data[i] = std::clamp(v, 0.0f, 1.0f);
        }
    }
    return x;
}

double robust_accuracy(nn::Network& net, const data::Dataset& ds, const AttackSpec& spec) {
    if (ds.empty()) throw UsageError("robust_accuracy: empty dataset");
    spec.validate();
    const nn::Mode saved = net.mode();
    net.set_mode(nn::Mode::eval);
    constexpr std::size_t kBatch = 128;
    std::size_t correct = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < ds.size(); start += kBatch) {
        const std::size_t end = std::min(ds.size(), start + kBatch);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        const Batch<float> x = nn::to_batch(ds, idx);
        const auto labels = nn::gather_labels(ds, idx);
        AttackSpec batch_spec = spec;
        batch_spec.seed = derive_seed(spec.seed, "attack-batch", start);
        const Batch<float> xadv = spec.kind == AttackSpec::Kind::fgsm
                                          ? fgsm(net, x, labels, spec.eps)
                                          : pgd(net, x, labels, batch_spec);
        const Batch<float> logits = net.forward(xadv);
        for (int s = 0; s < logits.n; ++s)
            if (nn::argmax_class(logits.sample(s), logits.c) == labels[s]) ++correct;
    }
    net.set_mode(saved);
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

nn::Network smooth_kernels(const nn::Network& net, double rho) {
    if (rho < 0.0) throw UsageError("smooth_kernels: rho must be nonnegative");
    nn::Network out = net;
    if (out.layer_count() == 0 || out.layer(0).kind() != "conv2d")
        throw UsageError("smooth_kernels: first layer is not convolutional");
    auto& conv = static_cast<nn::Conv2d<float>&>(out.layer(0));
    const int kh = conv.kernel_h();
    const int kw = conv.kernel_w();
    const int slice = kh * kw;
    const int n_slices = conv.out_channels() * conv.in_channels();
    std::vector<float>& w = conv.weights();
    std::vector<float> orig = w;
    for (int s = 0; s < n_slices; ++s) {
        const float* src = orig.data() + static_cast<std::size_t>(s) * slice;
        float* dst = w.data() + static_cast<std::size_t>(s) * slice;
        for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) {
                double acc = 0.0;
                for (int di = -1; di <= 1; ++di) {
                    for (int dj = -1; dj <= 1; ++dj) {
                        if (di == 0 && dj == 0) continue;
                        const int ni = std::clamp(i + di, 0, kh - 1);
                        const int nj = std::clamp(j + dj, 0, kw - 1);
                        acc += src[ni * kw + nj];
                    }
                }
                dst[i * kw + j] = static_cast<float>(src[i * kw + j] + rho * acc);
            }
        }
    }
    return out;
}

double kernel_smoothness(const float* kernel, int h, int w) {
    const int n = h * w;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        sum += kernel[i];
        sumsq += static_cast<double>(kernel[i]) * kernel[i];
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    if (var <= 0.0) return 0.0;
    double ssd = 0.0;
    int pairs = 0;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j + 1 < w; ++j, ++pairs) {
            const double d = kernel[i * w + j] - kernel[i * w + j + 1];
            ssd += d * d;
        }
    }
    for (int i = 0; i + 1 < h; ++i) {
        for (int j = 0; j < w; ++j, ++pairs) {
            const double d = kernel[i * w + j] - kernel[(i + 1) * w + j];
            ssd += d * d;
        }
    }
    if (pairs == 0) return 0.0;
    return ssd / pairs / var;
}

double mean_first_layer_smoothness(const nn::Network& net) {
    if (net.layer_count() == 0 || net.layer(0).kind() != "conv2d")
        throw UsageError("kernel smoothness: first layer is not convolutional");
    const auto& conv = static_cast<const nn::Conv2d<float>&>(net.layer(0));
    const int slice = conv.kernel_h() * conv.kernel_w();
    const int n_slices = conv.out_channels() * conv.in_channels();
    double acc = 0.0;
    for (int s = 0; s < n_slices; ++s)
        acc += kernel_smoothness(conv.weights().data() + static_cast<std::size_t>(s) * slice,
                                 conv.kernel_h(), conv.kernel_w());
    return acc / n_slices;
}

KernelSpectrumReport kernel_spectrum_report(const nn::Network& net, double r, int pad_size) {
    if (net.layer_count() == 0 || net.layer(0).kind() != "conv2d")
        throw UsageError("kernel spectrum: first layer is not convolutional");
    const auto& conv = static_cast<const nn::Conv2d<float>&>(net.layer(0));
    const int kh = conv.kernel_h();
    const int kw = conv.kernel_w();
    const int slice = kh * kw;
    const int out_ch = conv.out_channels();
    const int in_ch = conv.in_channels();

    KernelSpectrumReport rep;
    rep.rows = in_ch;
    rep.cols = out_ch;
    double total = 0.0;
    for (int oc = 0; oc < out_ch; ++oc) {
        for (int ic = 0; ic < in_ch; ++ic) {
            const float* src = conv.weights().data() +
                               (static_cast<std::size_t>(oc) * in_ch + ic) * slice;
            spectrum::Grid padded(pad_size, pad_size);
            for (int i = 0; i < kh; ++i)
                for (int j = 0; j < kw; ++j) padded.at(i, j) = src[i * kw + j];
            const double ratio = spectrum::hf_energy_ratio(padded, r);
            rep.ratios.push_back(ratio);
            total += ratio;
        }
    }
    rep.mean_ratio = rep.ratios.empty() ? 0.0 : total / static_cast<double>(rep.ratios.size());

    // Tile layout: one cell per (in_ch row, out_ch col), 1px gaps, each slice
    // min-max normalized on its own.
    constexpr int gap = 1;
    const int th = in_ch * kh + (in_ch - 1) * gap;
    const int tw = out_ch * kw + (out_ch - 1) * gap;
    rep.tile = Image(th, tw, 1);
    std::fill(rep.tile.pix.begin(), rep.tile.pix.end(), 1.0f);
    for (int oc = 0; oc < out_ch; ++oc) {
        for (int ic = 0; ic < in_ch; ++ic) {
            const float* src = conv.weights().data() +
                               (static_cast<std::size_t>(oc) * in_ch + ic) * slice;
            float lo = src[0], hi = src[0];
            for (int k = 0; k < slice; ++k) {
                lo = std::min(lo, src[k]);
                hi = std::max(hi, src[k]);
            }
            const float span = hi - lo;
            for (int i = 0; i < kh; ++i) {
                for (int j = 0; j < kw; ++j) {
                    const float v = span > 0.0f ? (src[i * kw + j] - lo) / span : 0.5f;
                    rep.tile.at(0, ic * (kh + gap) + i, oc * (kw + gap) + j) = v;
                }
            }
        }
    }
    return rep;
}

}  // namespace slens::adv
