#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "slens/common.hpp"
#include "slens/rng.hpp"
#include "slens/tensor.hpp"

namespace slens::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Mat<T>>;

struct Shape {
    int c = 0;
    int h = 0;
    int w = 0;
    std::size_t count() const { return static_cast<std::size_t>(c) * h * w; }
    bool operator==(const Shape&) const = default;
};

enum class Mode { train, eval };

// Flattened view of one parameter (or state) tensor plus its gradient.
template <typename T>
struct TensorRef {
    std::vector<T>* value = nullptr;
    std::vector<T>* grad = nullptr;
    std::string name;
};

// ---------------------------------------------------------------------------
// Layers. Each caches what its backward needs during forward; backward is
// valid after any forward (train or eval, the mode is cached).
// ---------------------------------------------------------------------------

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    // Shape inference + parameter allocation; rng seeds Xavier weights.
    virtual Shape init(Shape in, Rng& rng) = 0;
    virtual void forward(const Batch<T>& x, Batch<T>& y, Mode mode) = 0;
    // dx is resized to x's shape. Parameter gradients accumulate (+=).
    virtual void backward(const Batch<T>& x, const Batch<T>& dy, Batch<T>& dx,
                          bool want_param_grads) = 0;
    virtual std::unique_ptr<Layer<T>> clone() const = 0;
    virtual void collect_params(std::vector<TensorRef<T>>& out) {}
    virtual void collect_state(std::vector<TensorRef<T>>& out) {}
    virtual void begin_step(std::uint64_t) {}
    // Piecewise-linear branch taken by the last forward (relu signs, pool
    // argmax). The finite-difference checker compares signatures of the two
    // perturbed evaluations and skips coordinates that cross a kink.
    virtual void append_kink_signature(std::vector<std::uint32_t>&) const {}
};

template <typename T>
T xavier_bound(std::size_t fan_in, std::size_t fan_out) {
    return static_cast<T>(std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)));
}

template <typename T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(int out_ch, int kh, int kw, int stride = 1, int pad = 0)
        : out_ch_(out_ch), kh_(kh), kw_(kw), stride_(stride), pad_(pad) {}

    std::string kind() const override { return "conv2d"; }

    Shape init(Shape in, Rng& rng) override {
        in_ = in;
        oh_ = (in.h + 2 * pad_ - kh_) / stride_ + 1;
        ow_ = (in.w + 2 * pad_ - kw_) / stride_ + 1;
        if (kh_ < 1 || kw_ < 1 || stride_ < 1 || pad_ < 0 || oh_ < 1 || ow_ < 1)
            throw UsageError("conv2d: invalid geometry for input " + std::to_string(in.h) + "x" +
                             std::to_string(in.w));
        const std::size_t fan_in = static_cast<std::size_t>(in.c) * kh_ * kw_;
        const std::size_t fan_out = static_cast<std::size_t>(out_ch_) * kh_ * kw_;
        weight_.assign(static_cast<std::size_t>(out_ch_) * fan_in, T(0));
        bias_.assign(out_ch_, T(0));
        const T a = xavier_bound<T>(fan_in, fan_out);
        for (auto& v : weight_) v = static_cast<T>(rng.uniform(-a, a));
        dweight_.assign(weight_.size(), T(0));
        dbias_.assign(bias_.size(), T(0));
        return {out_ch_, oh_, ow_};
    }

    void forward(const Batch<T>& x, Batch<T>& y, Mode) override {
        const int n = x.n;
        const std::size_t krows = static_cast<std::size_t>(in_.c) * kh_ * kw_;
        const std::size_t ocells = static_cast<std::size_t>(oh_) * ow_;
        y = Batch<T>(n, out_ch_, oh_, ow_);
        cols_.assign(static_cast<std::size_t>(n) * krows * ocells, T(0));
        ConstMatMap<T> w(weight_.data(), out_ch_, static_cast<Eigen::Index>(krows));
        for (int s = 0; s < n; ++s) {
            T* col = cols_.data() + static_cast<std::size_t>(s) * krows * ocells;
            im2col(x.sample(s), col);
            MatMap<T> out(y.sample(s), out_ch_, static_cast<Eigen::Index>(ocells));
            ConstMatMap<T> cm(col, static_cast<Eigen::Index>(krows),
                              static_cast<Eigen::Index>(ocells));
            out.noalias() = w * cm;
            for (int c = 0; c < out_ch_; ++c) out.row(c).array() += bias_[c];
        }
    }

    void backward(const Batch<T>& x, const Batch<T>& dy, Batch<T>& dx,
                  bool want_param_grads) override {
        const int n = x.n;
        const std::size_t krows = static_cast<std::size_t>(in_.c) * kh_ * kw_;
        const std::size_t ocells = static_cast<std::size_t>(oh_) * ow_;
        dx = Batch<T>(n, in_.c, in_.h, in_.w);
        ConstMatMap<T> w(weight_.data(), out_ch_, static_cast<Eigen::Index>(krows));
        MatMap<T> dw(dweight_.data(), out_ch_, static_cast<Eigen::Index>(krows));
        std::vector<T> dcol(krows * ocells);
        for (int s = 0; s < n; ++s) {
            ConstMatMap<T> g(dy.sample(s), out_ch_, static_cast<Eigen::Index>(ocells));
            const T* col = cols_.data() + static_cast<std::size_t>(s) * krows * ocells;
            ConstMatMap<T> cm(col, static_cast<Eigen::Index>(krows),
                              static_cast<Eigen::Index>(ocells));
            if (want_param_grads) {
                dw.noalias() += g * cm.transpose();
                for (int c = 0; c < out_ch_; ++c) dbias_[c] += g.row(c).sum();
            }
            MatMap<T> dcm(dcol.data(), static_cast<Eigen::Index>(krows),
                          static_cast<Eigen::Index>(ocells));
            dcm.noalias() = w.transpose() * g;
            col2im(dcol.data(), dx.sample(s));
        }
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }

    void collect_params(std::vector<TensorRef<T>>& out) override {
        out.push_back({&weight_, &dweight_, "conv.weight"});
        out.push_back({&bias_, &dbias_, "conv.bias"});
    }

    int out_channels() const { return out_ch_; }
    int kernel_h() const { return kh_; }
    int kernel_w() const { return kw_; }
    int in_channels() const { return in_.c; }
    std::vector<T>& weights() { return weight_; }
    const std::vector<T>& weights() const { return weight_; }

private:
    void im2col(const T* src, T* col) const {
        const std::size_t ocells = static_cast<std::size_t>(oh_) * ow_;
        std::size_t row = 0;
        for (int c = 0; c < in_.c; ++c) {
            const T* plane = src + static_cast<std::size_t>(c) * in_.h * in_.w;
            for (int ki = 0; ki < kh_; ++ki) {
                for (int kj = 0; kj < kw_; ++kj, ++row) {
                    T* dst = col + row * ocells;
                    for (int oi = 0; oi < oh_; ++oi) {
                        const int ii = oi * stride_ - pad_ + ki;
                        for (int oj = 0; oj < ow_; ++oj) {
                            const int jj = oj * stride_ - pad_ + kj;
                            dst[oi * ow_ + oj] =
                                (ii >= 0 && ii < in_.h && jj >= 0 && jj < in_.w)
                                    ? plane[ii * in_.w + jj]
                                    : T(0);
                        }
                    }
                }
            }
        }
    }

    void col2im(const T* dcol, T* dst) const {
        const std::size_t ocells = static_cast<std::size_t>(oh_) * ow_;
        std::size_t row = 0;
        for (int c = 0; c < in_.c; ++c) {
            T* plane = dst + static_cast<std::size_t>(c) * in_.h * in_.w;
            for (int ki = 0; ki < kh_; ++ki) {
                for (int kj = 0; kj < kw_; ++kj, ++row) {
                    const T* src = dcol + row * ocells;
                    for (int oi = 0; oi < oh_; ++oi) {
                        const int ii = oi * stride_ - pad_ + ki;
                        if (ii < 0 || ii >= in_.h) continue;
                        for (int oj = 0; oj < ow_; ++oj) {
                            const int jj = oj * stride_ - pad_ + kj;
                            if (jj >= 0 && jj < in_.w) plane[ii * in_.w + jj] += src[oi * ow_ + oj];
                        }
                    }
                }
            }
        }
    }

    int out_ch_, kh_, kw_, stride_, pad_;
    Shape in_{};
    int oh_ = 0, ow_ = 0;
    std::vector<T> weight_, bias_, dweight_, dbias_;
    std::vector<T> cols_;
};

template <typename T>
class Dense final : public Layer<T> {
public:
    explicit Dense(int out) : out_(out) {}

    std::string kind() const override { return "dense"; }

    Shape init(Shape in, Rng& rng) override {
        in_count_ = in.count();
        if (in_count_ == 0) throw UsageError("dense: empty input shape");
        weight_.assign(static_cast<std::size_t>(out_) * in_count_, T(0));
        bias_.assign(out_, T(0));
        const T a = xavier_bound<T>(in_count_, out_);
        for (auto& v : weight_) v = static_cast<T>(rng.uniform(-a, a));
        dweight_.assign(weight_.size(), T(0));
        dbias_.assign(bias_.size(), T(0));
        return {out_, 1, 1};
    }

    void forward(const Batch<T>& x, Batch<T>& y, Mode) override {
        y = Batch<T>(x.n, out_, 1, 1);
        ConstMatMap<T> xm(x.data.data(), x.n, static_cast<Eigen::Index>(in_count_));
        ConstMatMap<T> w(weight_.data(), out_, static_cast<Eigen::Index>(in_count_));
        MatMap<T> ym(y.data.data(), x.n, out_);
        ym.noalias() = xm * w.transpose();
        for (int c = 0; c < out_; ++c) ym.col(c).array() += bias_[c];
    }

    void backward(const Batch<T>& x, const Batch<T>& dy, Batch<T>& dx,
                  bool want_param_grads) override {
        dx = Batch<T>(x.n, x.c, x.h, x.w);
        ConstMatMap<T> xm(x.data.data(), x.n, static_cast<Eigen::Index>(in_count_));
        ConstMatMap<T> g(dy.data.data(), x.n, out_);
        ConstMatMap<T> w(weight_.data(), out_, static_cast<Eigen::Index>(in_count_));
        if (want_param_grads) {
            MatMap<T> dw(dweight_.data(), out_, static_cast<Eigen::Index>(in_count_));
            dw.noalias() += g.transpose() * xm;
            for (int c = 0; c < out_; ++c) dbias_[c] += g.col(c).sum();
        }
        MatMap<T> dxm(dx.data.data(), x.n, static_cast<Eigen::Index>(in_count_));
        dxm.noalias() = g * w;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }

    void collect_params(std::vector<TensorRef<T>>& out) override {
        out.push_back({&weight_, &dweight_, "dense.weight"});
        out.push_back({&bias_, &dbias_, "dense.bias"});
    }

    std::vector<T>& weights() { return weight_; }
    std::vector<T>& biases() { return bias_; }

private:
    int out_;
    std::size_t in_count_ = 0;
    std::vector<T> weight_, bias_, dweight_, dbias_;
};

template <typename T>
class Relu final : public Layer<T> {
public:
    std::string kind() const override { return "relu"; }

    Shape init(Shape in, Rng&) override { return in; }

    void forward(const Batch<T>& x, Batch<T>& y, Mode) override {
        y = Batch<T>(x.n, x.c, x.h, x.w);
        signs_.assign(x.data.size(), 0);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            if (x.data[i] > T(0)) {
                y.data[i] = x.data[i];
                signs_[i] = 1;
            }
        }
    }

    void backward(const Batch<T>& x, const Batch<T>& dy, Batch<T>& dx, bool) override {
        dx = Batch<T>(x.n, x.c, x.h, x.w);
        for (std::size_t i = 0; i < x.data.size(); ++i)
            dx.data[i] = x.data[i] > T(0) ? dy.data[i] : T(0);
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Relu>(*this); }

    void append_kink_signature(std::vector<std::uint32_t>& out) const override {
        std::uint32_t acc = 0;
        for (std::size_t i = 0; i < signs_.size(); ++i) {
            acc = (acc << 1) | signs_[i];
            if (i % 32 == 31 || i + 1 == signs_.size()) {
                out.push_back(acc);
                acc = 0;
            }
        }
    }

private:
    std::vector<std::uint8_t> signs_;
};

template <typename T>
class MaxPool2 final : public Layer<T> {
public:
    std::string kind() const override { return "maxpool"; }

    Shape init(Shape in, Rng&) override {
        in_ = in;
        oh_ = in.h / 2;
        ow_ = in.w / 2;
        if (oh_ < 1 || ow_ < 1) throw UsageError("maxpool: input too small");
        return {in.c, oh_, ow_};
    }

    void forward(const Batch<T>& x, Batch<T>& y, Mode) override {
        y = Batch<T>(x.n, in_.c, oh_, ow_);
        argmax_.assign(y.data.size(), 0);
        for (int s = 0; s < x.n; ++s) {
            for (int c = 0; c < in_.c; ++c) {
                for (int oi = 0; oi < oh_; ++oi) {
                    for (int oj = 0; oj < ow_; ++oj) {
                        T best = -std::numeric_limits<T>::infinity();
                        std::uint32_t best_idx = 0;
                        for (int di = 0; di < 2; ++di) {
                            for (int dj = 0; dj < 2; ++dj) {
                                const int ii = oi * 2 + di;
                                const int jj = oj * 2 + dj;
                                const std::size_t idx =
                                    ((static_cast<std::size_t>(s) * in_.c + c) * in_.h + ii) *
                                        in_.w + jj;
                                if (x.data[idx] > best) {
                                    best = x.data[idx];
                                    best_idx = static_cast<std::uint32_t>(idx);
                                }
                            }
                        }
                        const std::size_t out_idx =
                            ((static_cast<std::size_t>(s) * in_.c + c) * oh_ + oi) * ow_ + oj;
                        y.data[out_idx] = best;
                        argmax_[out_idx] = best_idx;
                    }
                }
            }
        }
    }

    void backward(const Batch<T>& x, const Batch<T>& dy, Batch<T>& dx, bool) override {
        dx = Batch<T>(x.n, x.c, x.h, x.w);
        for (std::size_t k = 0; k < dy.data.size(); ++k) dx.data[argmax_[k]] += dy.data[k];
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool2>(*this); }

    void append_kink_signature(std::vector<std::uint32_t>& out) const override {
        out.insert(out.end(), argmax_.begin(), argmax_.end());
    }

private:
    Shape in_{};
    int oh_ = 0, ow_ = 0;
    std::vector<std::uint32_t> argmax_;
};

template <typename T>
class Flatten final : public Layer<T> {
public:
    std::string kind() const override { return "flatten"; }

    Shape init(Shape in, Rng&) override {
        in_ = in;
        return {static_cast<int>(in.count()), 1, 1};
    }

    void forward(const Batch<T>& x, Batch<T>& y, Mode) override {
        y = Batch<T>(x.n, static_cast<int>(in_.count()), 1, 1);
        y.data = x.data;
    }

    void backward(const Batch<T>& x, const Batch<T>& dy, Batch<T>& dx, bool) override {
        dx = Batch<T>(x.n, in_.c, in_.h, in_.w);
        dx.data = dy.data;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Flatten>(*this); }

private:
    Shape in_{};
};

// Spatial batch normalization (per channel over N*H*W); stats accumulate in
// double. gamma=1, beta=0 at init; running stats use momentum 0.9.
template <typename T>
class BatchNorm final : public Layer<T> {
public:
    static constexpr double kEps = 1e-6;
    static constexpr double kMomentum = 0.9;

    std::string kind() const override { return "batchnorm"; }

    Shape init(Shape in, Rng&) override {
        in_ = in;
        gamma_.assign(in.c, T(1));
        beta_.assign(in.c, T(0));
        dgamma_.assign(in.c, T(0));
        dbeta_.assign(in.c, T(0));
        running_mean_.assign(in.c, T(0));
        running_var_.assign(in.c, T(1));
        return in;
    }

    void forward(const Batch<T>& x, Batch<T>& y, Mode mode) override {
        y = Batch<T>(x.n, x.c, x.h, x.w);
        const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
        const std::size_t m = static_cast<std::size_t>(x.n) * plane;
        last_mode_ = mode;
        mean_.assign(in_.c, 0.0);
        inv_std_.assign(in_.c, 0.0);
        xhat_.assign(x.data.size(), T(0));
        for (int c = 0; c < in_.c; ++c) {
            double mu, var;
            if (mode == Mode::train) {
                double sum = 0.0, sumsq = 0.0;
                for (int s = 0; s < x.n; ++s) {
                    const T* p = x.sample(s) + c * plane;
                    for (std::size_t k = 0; k < plane; ++k) {
                        sum += static_cast<double>(p[k]);
                        sumsq += static_cast<double>(p[k]) * p[k];
                    }
                }
                mu = sum / static_cast<double>(m);
                var = std::max(0.0, sumsq / static_cast<double>(m) - mu * mu);
                running_mean_[c] = static_cast<T>(kMomentum * running_mean_[c] +
                                                  (1.0 - kMomentum) * mu);
                running_var_[c] =
                    static_cast<T>(kMomentum * running_var_[c] + (1.0 - kMomentum) * var);
            } else {
                mu = static_cast<double>(running_mean_[c]);
                var = static_cast<double>(running_var_[c]);
            }
            const double inv = 1.0 / std::sqrt(var + kEps);
            mean_[c] = mu;
            inv_std_[c] = inv;
            for (int s = 0; s < x.n; ++s) {
                const T* p = x.sample(s) + c * plane;
                T* xh = xhat_.data() + (static_cast<std::size_t>(s) * in_.c + c) * plane;
                T* q = y.sample(s) + c * plane;
                for (std::size_t k = 0; k < plane; ++k) {
                    xh[k] = static_cast<T>((static_cast<double>(p[k]) - mu) * inv);
                    q[k] = gamma_[c] * xh[k] + beta_[c];
                }
            }
        }
    }

    void backward(const Batch<T>& x, const Batch<T>& dy, Batch<T>& dx,
                  bool want_param_grads) override {
        dx = Batch<T>(x.n, x.c, x.h, x.w);
        const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
        const double m = static_cast<double>(x.n) * plane;
        for (int c = 0; c < in_.c; ++c) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int s = 0; s < x.n; ++s) {
                const T* g = dy.sample(s) + c * plane;
                const T* xh = xhat_.data() + (static_cast<std::size_t>(s) * in_.c + c) * plane;
                for (std::size_t k = 0; k < plane; ++k) {
                    sum_dy += static_cast<double>(g[k]);
                    sum_dy_xhat += static_cast<double>(g[k]) * xh[k];
                }
            }
            if (want_param_grads) {
                dgamma_[c] += static_cast<T>(sum_dy_xhat);
                dbeta_[c] += static_cast<T>(sum_dy);
            }
            const double gamma = static_cast<double>(gamma_[c]);
            const double inv = inv_std_[c];
            for (int s = 0; s < x.n; ++s) {
                const T* g = dy.sample(s) + c * plane;
                const T* xh = xhat_.data() + (static_cast<std::size_t>(s) * in_.c + c) * plane;
                T* d = dx.sample(s) + c * plane;
                if (last_mode_ == Mode::train) {
                    for (std::size_t k = 0; k < plane; ++k)
                        d[k] = static_cast<T>(gamma * inv *
                                              (static_cast<double>(g[k]) - sum_dy / m -
                                               static_cast<double>(xh[k]) * sum_dy_xhat / m));
                } else {
                    for (std::size_t k = 0; k < plane; ++k)
                        d[k] = static_cast<T>(gamma * inv * static_cast<double>(g[k]));
                }
            }
        }
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchNorm>(*this); }

    void collect_params(std::vector<TensorRef<T>>& out) override {
        out.push_back({&gamma_, &dgamma_, "bn.gamma"});
        out.push_back({&beta_, &dbeta_, "bn.beta"});
    }

    void collect_state(std::vector<TensorRef<T>>& out) override {
        out.push_back({&running_mean_, nullptr, "bn.running_mean"});
        out.push_back({&running_var_, nullptr, "bn.running_var"});
    }

private:
    Shape in_{};
    Mode last_mode_ = Mode::train;
    std::vector<T> gamma_, beta_, dgamma_, dbeta_;
    std::vector<T> running_mean_, running_var_;
    std::vector<double> mean_, inv_std_;
    std::vector<T> xhat_;
};

// Inverted dropout: train mode zeroes activations with probability p and
// scales survivors by 1/(1-p); eval mode is the identity.
template <typename T>
class Dropout final : public Layer<T> {
public:
    explicit Dropout(double p) : p_(p) {
        if (p < 0.0 || p >= 1.0) throw UsageError("dropout: p must be in [0,1)");
    }

    std::string kind() const override { return "dropout"; }

    Shape init(Shape in, Rng&) override { return in; }

    void forward(const Batch<T>& x, Batch<T>& y, Mode mode) override {
        y = Batch<T>(x.n, x.c, x.h, x.w);
        last_train_ = mode == Mode::train && p_ > 0.0;
        if (!last_train_) {
            y.data = x.data;
            return;
        }
        mask_.assign(x.data.size(), 0);
        Rng rng(step_seed_);
        const T scale = static_cast<T>(1.0 / (1.0 - p_));
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            if (rng.uniform() >= p_) {
                mask_[i] = 1;
                y.data[i] = x.data[i] * scale;
            }
        }
    }

    void backward(const Batch<T>& x, const Batch<T>& dy, Batch<T>& dx, bool) override {
        dx = Batch<T>(x.n, x.c, x.h, x.w);
        if (!last_train_) {
            dx.data = dy.data;
            return;
        }
        const T scale = static_cast<T>(1.0 / (1.0 - p_));
        for (std::size_t i = 0; i < dy.data.size(); ++i)
            dx.data[i] = mask_[i] ? dy.data[i] * scale : T(0);
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dropout>(*this); }

    void begin_step(std::uint64_t seed) override { step_seed_ = seed; }

    double p() const { return p_; }

private:
    double p_;
    bool last_train_ = false;
    std::uint64_t step_seed_ = 0;
    std::vector<std::uint8_t> mask_;
};

// conv3x3 -> bn -> relu -> conv3x3 -> bn, plus identity skip, final relu.
// Channel count is preserved so the skip needs no projection.
template <typename T>
class ResidualBlock final : public Layer<T> {
public:
    ResidualBlock() = default;

    ResidualBlock(const ResidualBlock& other)
        : in_(other.in_),
          conv1_(other.conv1_), bn1_(other.bn1_), relu1_(other.relu1_),
          conv2_(other.conv2_), bn2_(other.bn2_) {}

    std::string kind() const override { return "resblock"; }

    Shape init(Shape in, Rng& rng) override {
        in_ = in;
        conv1_ = Conv2d<T>(in.c, 3, 3, 1, 1);
        conv2_ = Conv2d<T>(in.c, 3, 3, 1, 1);
        Shape s = conv1_.init(in, rng);
        s = bn1_.init(s, rng);
        s = relu1_.init(s, rng);
        s = conv2_.init(s, rng);
        s = bn2_.init(s, rng);
        if (!(s == in)) throw UsageError("resblock: shape not preserved");
        return in;
    }

    void forward(const Batch<T>& x, Batch<T>& y, Mode mode) override {
        conv1_.forward(x, t1_, mode);
        bn1_.forward(t1_, t2_, mode);
        relu1_.forward(t2_, t3_, mode);
        conv2_.forward(t3_, t4_, mode);
        bn2_.forward(t4_, t5_, mode);
        y = Batch<T>(x.n, x.c, x.h, x.w);
        signs_.assign(y.data.size(), 0);
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            const T pre = t5_.data[i] + x.data[i];
            if (pre > T(0)) {
                y.data[i] = pre;
                signs_[i] = 1;
            }
        }
    }

    void backward(const Batch<T>& x, const Batch<T>& dy, Batch<T>& dx,
                  bool want_param_grads) override {
        Batch<T> ds(x.n, x.c, x.h, x.w);
        for (std::size_t i = 0; i < dy.data.size(); ++i) {
            const T pre = t5_.data[i] + x.data[i];
            ds.data[i] = pre > T(0) ? dy.data[i] : T(0);
        }
        Batch<T> d4, d3, d2, d1;
        bn2_.backward(t4_, ds, d4, want_param_grads);
        conv2_.backward(t3_, d4, d3, want_param_grads);
        relu1_.backward(t2_, d3, d2, want_param_grads);
        bn1_.backward(t1_, d2, d1, want_param_grads);
        conv1_.backward(x, d1, dx, want_param_grads);
        for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += ds.data[i];
    }

    std::unique_ptr<Layer<T>> clone() const override {
        return std::make_unique<ResidualBlock>(*this);
    }

    void collect_params(std::vector<TensorRef<T>>& out) override {
        conv1_.collect_params(out);
        bn1_.collect_params(out);
        conv2_.collect_params(out);
        bn2_.collect_params(out);
    }

    void collect_state(std::vector<TensorRef<T>>& out) override {
        bn1_.collect_state(out);
        bn2_.collect_state(out);
    }

    void append_kink_signature(std::vector<std::uint32_t>& out) const override {
        relu1_.append_kink_signature(out);
        std::uint32_t acc = 0;
        for (std::size_t i = 0; i < signs_.size(); ++i) {
            acc = (acc << 1) | signs_[i];
            if (i % 32 == 31 || i + 1 == signs_.size()) {
                out.push_back(acc);
                acc = 0;
            }
        }
    }

private:
    Shape in_{};
    Conv2d<T> conv1_{1, 3, 3, 1, 1};
    BatchNorm<T> bn1_;
    Relu<T> relu1_;
    Conv2d<T> conv2_{1, 3, 3, 1, 1};
    BatchNorm<T> bn2_;
    Batch<T> t1_, t2_, t3_, t4_, t5_;
    std::vector<std::uint8_t> signs_;
};

}  // namespace slens::nn
