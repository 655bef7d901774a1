#pragma once

#include <algorithm>
#include <optional>
#include <span>

#include "slens/dataset.hpp"
#include "slens/nn.hpp"

namespace slens::nn {

// Canonical architecture description; round-trips through a string so
// checkpoints are self-describing.
struct ArchConfig {
    std::string name = "lenet-small";  // lenet-small | mini-resnet
    int in_c = 1;
    int in_h = 28;
    int in_w = 28;
    int num_classes = 10;
    bool batchnorm = false;   // lenet-small only; mini-resnet always has BN
    double dropout = 0.0;     // dropout on the fully-connected stage

    std::string to_string() const;
    static ArchConfig parse(const std::string& s);
};

template <typename T>
class Net {
public:
    Net() = default;
    explicit Net(Shape input) : input_(input) {}

    Net(const Net& other) : input_(other.input_), output_(other.output_),
                            mode_(other.mode_), arch_(other.arch_) {
        layers_.reserve(other.layers_.size());
        for (const auto& l : other.layers_) layers_.push_back(l->clone());
    }
    Net& operator=(const Net& other) {
        if (this == &other) return *this;
        Net tmp(other);
        *this = std::move(tmp);
        return *this;
    }
    Net(Net&&) noexcept = default;
    Net& operator=(Net&&) noexcept = default;

    void add(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }

    // Shape inference + Xavier init; throws naming the first bad layer.
    void finalize(std::uint64_t seed) {
        Shape s = input_;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            Rng rng(derive_seed(seed, "init", i));
            try {
                s = layers_[i]->init(s, rng);
            } catch (const UsageError& e) {
                throw UsageError("layer " + std::to_string(i) + " (" + layers_[i]->kind() +
                                 "): " + e.what());
            }
        }
        output_ = s;
    }

    void set_mode(Mode m) { mode_ = m; }
    Mode mode() const { return mode_; }
    Shape input_shape() const { return input_; }
    Shape output_shape() const { return output_; }
    std::size_t layer_count() const { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return *layers_[i]; }
    const Layer<T>& layer(std::size_t i) const { return *layers_[i]; }

    const std::optional<ArchConfig>& arch() const { return arch_; }
    void set_arch(const ArchConfig& a) { arch_ = a; }

    // Reseeds dropout masks; identical step seeds give identical masks.
    void begin_step(std::uint64_t step_seed) {
        for (std::size_t i = 0; i < layers_.size(); ++i)
            layers_[i]->begin_step(derive_seed(step_seed, "dropout-layer", i));
    }

    Batch<T> forward(const Batch<T>& input) {
        if (input.c != input_.c || input.h != input_.h || input.w != input_.w)
            throw UsageError("forward: input shape mismatch");
        acts_.resize(layers_.size() + 1);
        acts_[0] = input;
        for (std::size_t i = 0; i < layers_.size(); ++i)
            layers_[i]->forward(acts_[i], acts_[i + 1], mode_);
        return acts_.back();
    }

    // Mean softmax cross-entropy against integer labels. Fills parameter
    // gradients (zeroed first); returns the loss.
    double loss_and_grad(const Batch<T>& input, const std::vector<std::uint16_t>& labels) {
        return loss_common(input, labels, nullptr, true, nullptr);
    }

    // Soft-target variant (rows of `targets` are probability vectors).
    double loss_and_grad_soft(const Batch<T>& input, const Mat<T>& targets) {
        return loss_common(input, {}, &targets, true, nullptr);
    }

    // Loss + gradient w.r.t. the input only (attack path; parameter
    // gradients untouched).
    double input_gradient(const Batch<T>& input, const std::vector<std::uint16_t>& labels,
                          Batch<T>& dinput) {
        return loss_common(input, labels, nullptr, false, &dinput);
    }

    // Forward-only loss (used by the finite-difference checker).
    double loss_only(const Batch<T>& input, const std::vector<std::uint16_t>& labels) {
        const Batch<T> logits = forward(input);
        return softmax_loss(logits, labels, nullptr, nullptr);
    }

    std::vector<TensorRef<T>> params() {
        std::vector<TensorRef<T>> out;
        for (auto& l : layers_) l->collect_params(out);
        return out;
    }

    std::vector<TensorRef<T>> state() {
        std::vector<TensorRef<T>> out;
        for (auto& l : layers_) l->collect_state(out);
        return out;
    }

    void zero_grads() {
        for (auto ref : params()) std::fill(ref.grad->begin(), ref.grad->end(), T(0));
    }

    // Branch pattern (relu signs, pool argmax) of the last forward pass.
    std::vector<std::uint32_t> kink_signature() const {
        std::vector<std::uint32_t> sig;
        for (const auto& l : layers_) l->append_kink_signature(sig);
        return sig;
    }

    // Same architecture and parameters at a different scalar precision.
    template <typename U>
    Net<U> cast() const;

private:
    template <typename>
    friend class Net;

    double softmax_loss(const Batch<T>& logits, const std::vector<std::uint16_t>& labels,
                        const Mat<T>* soft, Batch<T>* dlogits) const {
        const int n = logits.n;
        const int k = logits.c;
        if (!soft && static_cast<int>(labels.size()) != n)
            throw UsageError("loss: labels/batch size mismatch");
        if (dlogits) *dlogits = Batch<T>(n, k, 1, 1);
        double total = 0.0;
        for (int s = 0; s < n; ++s) {
            const T* z = logits.sample(s);
            double zmax = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) zmax = std::max(zmax, static_cast<double>(z[c]));
            double lse = 0.0;
            for (int c = 0; c < k; ++c) lse += std::exp(static_cast<double>(z[c]) - zmax);
            lse = zmax + std::log(lse);
            double sample_loss = 0.0;
            for (int c = 0; c < k; ++c) {
                const double t = soft ? static_cast<double>((*soft)(s, c))
                                      : (labels[s] == c ? 1.0 : 0.0);
                if (t != 0.0) sample_loss += t * (lse - static_cast<double>(z[c]));
                if (dlogits) {
                    const double p = std::exp(static_cast<double>(z[c]) - lse);
                    dlogits->sample(s)[c] = static_cast<T>((p - t) / n);
                }
            }
            total += sample_loss;
        }
        return total / n;
    }

    double loss_common(const Batch<T>& input, const std::vector<std::uint16_t>& labels,
                       const Mat<T>* soft, bool want_param_grads, Batch<T>* dinput) {
        const Batch<T> logits = forward(input);
        Batch<T> d;
        const double loss = softmax_loss(logits, labels, soft, &d);
        if (want_param_grads) zero_grads();
        for (std::size_t i = layers_.size(); i-- > 0;) {
            Batch<T> dprev;
            layers_[i]->backward(acts_[i], d, dprev, want_param_grads);
            d = std::move(dprev);
        }
        if (dinput) *dinput = std::move(d);
        return loss;
    }

    Shape input_{};
    Shape output_{};
    Mode mode_ = Mode::train;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::vector<Batch<T>> acts_;
    std::optional<ArchConfig> arch_;
};

using Network = Net<float>;

// ---------------------------------------------------------------------------
// Architecture construction
// ---------------------------------------------------------------------------

template <typename T>
Net<T> build_network(const ArchConfig& arch, std::uint64_t seed) {
    Net<T> net(Shape{arch.in_c, arch.in_h, arch.in_w});
    if (arch.name == "lenet-small") {
        net.add(std::make_unique<Conv2d<T>>(16, 5, 5));
        if (arch.batchnorm) net.add(std::make_unique<BatchNorm<T>>());
        net.add(std::make_unique<Relu<T>>());
        net.add(std::make_unique<MaxPool2<T>>());
        net.add(std::make_unique<Conv2d<T>>(32, 5, 5));
        if (arch.batchnorm) net.add(std::make_unique<BatchNorm<T>>());
        net.add(std::make_unique<Relu<T>>());
        net.add(std::make_unique<MaxPool2<T>>());
        net.add(std::make_unique<Flatten<T>>());
        net.add(std::make_unique<Dense<T>>(256));
        net.add(std::make_unique<Relu<T>>());
        if (arch.dropout > 0.0) net.add(std::make_unique<Dropout<T>>(arch.dropout));
        net.add(std::make_unique<Dense<T>>(arch.num_classes));
    } else if (arch.name == "mini-resnet") {
        const int widths[3] = {8, 16, 32};
        for (int stage = 0; stage < 3; ++stage) {
            net.add(std::make_unique<Conv2d<T>>(widths[stage], 3, 3, 1, 1));
            net.add(std::make_unique<BatchNorm<T>>());
            net.add(std::make_unique<Relu<T>>());
            net.add(std::make_unique<ResidualBlock<T>>());
            if (stage < 2) net.add(std::make_unique<MaxPool2<T>>());
        }
        net.add(std::make_unique<Flatten<T>>());
        if (arch.dropout > 0.0) net.add(std::make_unique<Dropout<T>>(arch.dropout));
        net.add(std::make_unique<Dense<T>>(arch.num_classes));
    } else {
        throw UsageError("unknown architecture: " + arch.name);
    }
    net.finalize(seed);
    net.set_arch(arch);
    return net;
}

inline Network init_network(const ArchConfig& arch, std::uint64_t seed) {
    return build_network<float>(arch, seed);
}

template <typename T>
template <typename U>
Net<U> Net<T>::cast() const {
    if (!arch_) throw UsageError("cast: network has no architecture description");
    Net<U> out = build_network<U>(*arch_, 0);
    Net<T>& self = const_cast<Net<T>&>(*this);
    auto src_p = self.params();
    auto dst_p = out.params();
    for (std::size_t i = 0; i < src_p.size(); ++i)
        for (std::size_t k = 0; k < src_p[i].value->size(); ++k)
            (*dst_p[i].value)[k] = static_cast<U>((*src_p[i].value)[k]);
    auto src_s = self.state();
    auto dst_s = out.state();
    for (std::size_t i = 0; i < src_s.size(); ++i)
        for (std::size_t k = 0; k < src_s[i].value->size(); ++k)
            (*dst_s[i].value)[k] = static_cast<U>((*src_s[i].value)[k]);
    return out;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

struct OptimSpec {
    enum class Kind { sgd, adam };
    Kind kind = Kind::adam;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
struct OptimState {
    OptimSpec spec;
    std::uint64_t step_count = 0;
    std::vector<std::vector<T>> m1, m2;

    explicit OptimState(OptimSpec s = {}) : spec(s) {}

    void step(Net<T>& net) {
        auto refs = net.params();
        if (spec.kind == OptimSpec::Kind::adam && m1.empty()) {
            for (const auto& r : refs) {
                m1.emplace_back(r.value->size(), T(0));
                m2.emplace_back(r.value->size(), T(0));
            }
        }
        ++step_count;
        if (spec.kind == OptimSpec::Kind::sgd) {
            for (auto& r : refs)
                for (std::size_t k = 0; k < r.value->size(); ++k)
                    (*r.value)[k] -= static_cast<T>(spec.lr) * (*r.grad)[k];
            return;
        }
        const double bc1 = 1.0 - std::pow(spec.beta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(spec.beta2, static_cast<double>(step_count));
        for (std::size_t i = 0; i < refs.size(); ++i) {
            auto& v = *refs[i].value;
            auto& g = *refs[i].grad;
            for (std::size_t k = 0; k < v.size(); ++k) {
                const double gk = static_cast<double>(g[k]);
                const double mk = spec.beta1 * m1[i][k] + (1.0 - spec.beta1) * gk;
                const double vk = spec.beta2 * m2[i][k] + (1.0 - spec.beta2) * gk * gk;
                m1[i][k] = static_cast<T>(mk);
                m2[i][k] = static_cast<T>(vk);
                v[k] -= static_cast<T>(spec.lr * (mk / bc1) / (std::sqrt(vk / bc2) + spec.eps));
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Evaluation helpers
// ---------------------------------------------------------------------------

Batch<float> to_batch(const data::Dataset& ds, std::span<const std::size_t> indices);
std::vector<std::uint16_t> gather_labels(const data::Dataset& ds,
                                         std::span<const std::size_t> indices);

// argmax with lowest-index tie break
template <typename T>
int argmax_class(const T* logits, int k) {
    int best = 0;
    for (int c = 1; c < k; ++c)
        if (logits[c] > logits[best]) best = c;
    return best;
}

// Fraction of correctly classified samples; runs in eval mode and restores
// the previous mode. Optionally dumps per-sample logits.
double accuracy(Network& net, const data::Dataset& ds,
                std::vector<std::vector<float>>* logits_dump = nullptr);

// Max relative error between analytic gradients and central differences on a
// double-precision copy of the net. Coordinates whose +h/-h evaluations take
// different piecewise-linear branches (a relu sign or pool argmax flips) are
// excluded. `sample_cap` > 0 checks a seeded random coordinate subset.
struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
};

GradCheckResult gradient_check(const Network& net, const Batch<float>& input,
                               const std::vector<std::uint16_t>& labels, double h = 1e-3,
                               std::size_t sample_cap = 0, std::uint64_t seed = 0);

GradCheckResult gradient_check_f64(Net<double>& net, const Batch<double>& input,
                                   const std::vector<std::uint16_t>& labels, double h = 1e-3,
                                   std::size_t sample_cap = 0, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Checkpoints ("SPLN"): arch string, params as f32 LE in layer order, then
// batchnorm running stats, then (optionally) optimizer state.
// ---------------------------------------------------------------------------

std::string encode_checkpoint(Network& net, const OptimState<float>* opt = nullptr);
Network decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& name,
                          OptimState<float>* opt_out = nullptr);
void save_checkpoint(Network& net, const std::filesystem::path& path,
                     const OptimState<float>* opt = nullptr);
Network load_checkpoint(const std::filesystem::path& path,
                        OptimState<float>* opt_out = nullptr);

}  // namespace slens::nn
