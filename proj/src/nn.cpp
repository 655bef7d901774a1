#include "slens/network.hpp"

#include <sstream>

#include "slens/io.hpp"

namespace slens::nn {

namespace {

constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string ArchConfig::to_string() const {
    std::ostringstream os;
    os << "v1;arch=" << name << ";in=" << in_c << "x" << in_h << "x" << in_w
       << ";k=" << num_classes << ";bn=" << (batchnorm ? 1 : 0) << ";dropout=" << io::fmt(dropout);
    return os.str();
}

ArchConfig ArchConfig::parse(const std::string& s) {
    ArchConfig cfg;
    const auto fields = split(s, ';');
    if (fields.empty() || fields[0] != "v1") throw DataError("arch string: unknown version: " + s);
    for (std::size_t i = 1; i < fields.size(); ++i) {
        const auto kv = split(fields[i], '=');
        if (kv.size() != 2) throw DataError("arch string: bad field '" + fields[i] + "'");
        if (kv[0] == "arch") {
            cfg.name = kv[1];
        } else if (kv[0] == "in") {
            const auto dims = split(kv[1], 'x');
            if (dims.size() != 3) throw DataError("arch string: bad input shape " + kv[1]);
            cfg.in_c = std::stoi(dims[0]);
            cfg.in_h = std::stoi(dims[1]);
            cfg.in_w = std::stoi(dims[2]);
        } else if (kv[0] == "k") {
            cfg.num_classes = std::stoi(kv[1]);
        } else if (kv[0] == "bn") {
            cfg.batchnorm = kv[1] == "1";
        } else if (kv[0] == "dropout") {
            cfg.dropout = std::stod(kv[1]);
        } else {
            throw DataError("arch string: unknown field '" + kv[0] + "'");
        }
    }
    return cfg;
}

Batch<float> to_batch(const data::Dataset& ds, std::span<const std::size_t> indices) {
    if (indices.empty()) throw UsageError("to_batch: empty index list");
    const Image& first = ds.images[indices[0]];
    Batch<float> b(static_cast<int>(indices.size()), first.c, first.h, first.w);
    for (std::size_t s = 0; s < indices.size(); ++s) {
        const Image& img = ds.images[indices[s]];
        std::copy(img.pix.begin(), img.pix.end(), b.sample(static_cast<int>(s)));
    }
    return b;
}

std::vector<std::uint16_t> gather_labels(const data::Dataset& ds,
                                         std::span<const std::size_t> indices) {
    std::vector<std::uint16_t> out(indices.size());
    for (std::size_t s = 0; s < indices.size(); ++s) out[s] = ds.labels[indices[s]];
    return out;
}

double accuracy(Network& net, const data::Dataset& ds,
                std::vector<std::vector<float>>* logits_dump) {
    if (ds.empty()) throw UsageError("accuracy: empty dataset");
    const Mode saved = net.mode();
    net.set_mode(Mode::eval);
    constexpr std::size_t kEvalBatch = 256;
    std::size_t correct = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < ds.size(); start += kEvalBatch) {
        const std::size_t end = std::min(ds.size(), start + kEvalBatch);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        const Batch<float> logits = net.forward(to_batch(ds, idx));
        for (int s = 0; s < logits.n; ++s) {
            const int pred = argmax_class(logits.sample(s), logits.c);
            if (pred == ds.labels[start + s]) ++correct;
            if (logits_dump)
                logits_dump->emplace_back(logits.sample(s), logits.sample(s) + logits.c);
        }
    }
    net.set_mode(saved);
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

GradCheckResult gradient_check_f64(Net<double>& net, const Batch<double>& input,
                                   const std::vector<std::uint16_t>& labels, double h,
                                   std::size_t sample_cap, std::uint64_t seed) {
    net.set_mode(Mode::train);
    net.begin_step(seed + 1);
    net.loss_and_grad(input, labels);

    auto refs = net.params();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(refs.size());
    for (const auto& r : refs) analytic.push_back(*r.grad);

    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t i = 0; i < refs.size(); ++i)
        for (std::size_t k = 0; k < refs[i].value->size(); ++k) coords.emplace_back(i, k);
    if (sample_cap > 0 && coords.size() > sample_cap) {
        Rng rng(derive_seed(seed, "gradcheck"));
        const auto perm = rng.permutation(coords.size());
        std::vector<std::pair<std::size_t, std::size_t>> picked;
        picked.reserve(sample_cap);
        for (std::size_t i = 0; i < sample_cap; ++i) picked.push_back(coords[perm[i]]);
        coords = std::move(picked);
    }

    GradCheckResult res;
    for (const auto& [ti, k] : coords) {
        double& v = (*refs[ti].value)[k];
        const double old = v;
        v = old + h;
        net.begin_step(seed + 1);
        const double lp = net.loss_only(input, labels);
        const auto sig_p = net.kink_signature();
        v = old - h;
        net.begin_step(seed + 1);
        const double lm = net.loss_only(input, labels);
        const auto sig_m = net.kink_signature();
        v = old;
        if (sig_p != sig_m) {
            ++res.skipped;
            continue;
        }
        const double numeric = (lp - lm) / (2.0 * h);
        const double a = analytic[ti][k];
        const double scale = std::max(std::abs(a), std::abs(numeric));
        ++res.checked;
        if (scale < 1e-10) continue;
        res.max_rel_error = std::max(res.max_rel_error, std::abs(a - numeric) / scale);
    }
    return res;
}

GradCheckResult gradient_check(const Network& net, const Batch<float>& input,
                               const std::vector<std::uint16_t>& labels, double h,
                               std::size_t sample_cap, std::uint64_t seed) {
    Net<double> dnet = net.cast<double>();
    Batch<double> dinput(input.n, input.c, input.h, input.w);
    for (std::size_t i = 0; i < input.data.size(); ++i)
        dinput.data[i] = static_cast<double>(input.data[i]);
    return gradient_check_f64(dnet, dinput, labels, h, sample_cap, seed);
}

std::string encode_checkpoint(Network& net, const OptimState<float>* opt) {
    if (!net.arch()) throw UsageError("checkpoint: network has no architecture description");
    std::string out = "SPLN";
    io::put_u16le(out, kCheckpointVersion);
    const std::string arch = net.arch()->to_string();
    io::put_u32le(out, static_cast<std::uint32_t>(arch.size()));
    out += arch;
    auto write_tensors = [&out](const std::vector<TensorRef<float>>& refs) {
        io::put_u32le(out, static_cast<std::uint32_t>(refs.size()));
        for (const auto& r : refs) {
            io::put_u32le(out, static_cast<std::uint32_t>(r.value->size()));
            for (const float v : *r.value) io::put_f32le(out, v);
        }
    };
    write_tensors(net.params());
    out.push_back(1);  // running stats always included
    write_tensors(net.state());
    out.push_back(opt ? 1 : 0);
    if (opt) {
        out.push_back(opt->spec.kind == OptimSpec::Kind::adam ? 1 : 0);
        io::put_f64le(out, opt->spec.lr);
        io::put_f64le(out, opt->spec.beta1);
        io::put_f64le(out, opt->spec.beta2);
        io::put_f64le(out, opt->spec.eps);
        io::put_u64le(out, opt->step_count);
        auto write_moments = [&out](const std::vector<std::vector<float>>& ms) {
            io::put_u32le(out, static_cast<std::uint32_t>(ms.size()));
            for (const auto& m : ms) {
                io::put_u32le(out, static_cast<std::uint32_t>(m.size()));
                for (const float v : m) io::put_f32le(out, v);
            }
        };
        write_moments(opt->m1);
        write_moments(opt->m2);
    }
    return out;
}

Network decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& name,
                          OptimState<float>* opt_out) {
    io::ByteReader r{bytes.data(), bytes.size(), 0, name};
    if (r.bytes(4) != "SPLN") throw DataError(name + ": bad checkpoint magic");
    const std::uint16_t version = r.u16le();
    if (version != kCheckpointVersion)
        throw DataError(name + ": unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t arch_len = r.u32le();
    const ArchConfig arch = ArchConfig::parse(r.bytes(arch_len));
    Network net = init_network(arch, 0);
    auto read_tensors = [&r, &name](const std::vector<TensorRef<float>>& refs,
                                    const char* what) {
        const std::uint32_t n = r.u32le();
        if (n != refs.size())
            throw DataError(name + ": checkpoint/arch mismatch (" + what + " tensor count)");
        for (const auto& ref : refs) {
            const std::uint32_t len = r.u32le();
            if (len != ref.value->size())
                throw DataError(name + ": checkpoint/arch mismatch (" + ref.name + " size)");
            for (auto& v : *ref.value) v = r.f32le();
        }
    };
    read_tensors(net.params(), "param");
    if (r.u8()) read_tensors(net.state(), "state");
    if (r.u8()) {
        OptimState<float> opt;
        opt.spec.kind = r.u8() ? OptimSpec::Kind::adam : OptimSpec::Kind::sgd;
        opt.spec.lr = r.f64le();
        opt.spec.beta1 = r.f64le();
        opt.spec.beta2 = r.f64le();
        opt.spec.eps = r.f64le();
        opt.step_count = r.u64le();
        auto read_moments = [&r](std::vector<std::vector<float>>& ms) {
            ms.resize(r.u32le());
            for (auto& m : ms) {
                m.resize(r.u32le());
                for (auto& v : m) v = r.f32le();
            }
        };
        read_moments(opt.m1);
        read_moments(opt.m2);
        if (opt_out) *opt_out = std::move(opt);
    }
    return net;
}

void save_checkpoint(Network& net, const std::filesystem::path& path,
                     const OptimState<float>* opt) {
    io::atomic_write(path, encode_checkpoint(net, opt));
}

Network load_checkpoint(const std::filesystem::path& path, OptimState<float>* opt_out) {
    return decode_checkpoint(io::read_file(path), path.string(), opt_out);
}

}  // namespace slens::nn
