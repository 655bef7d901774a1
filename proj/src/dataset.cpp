#include "slens/dataset.hpp"

#include <algorithm>
#include <cstring>

#include "slens/io.hpp"
#include "slens/parallel.hpp"
#include "slens/rng.hpp"

namespace slens::data {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::uint16_t kSplzVersion = 1;

void check_labels(const Dataset& ds, const std::string& name) {
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        if (ds.labels[i] >= ds.num_classes)
            throw DataError(name + ": label " + std::to_string(ds.labels[i]) + " at record " +
                            std::to_string(i) + " out of range (K=" +
                            std::to_string(ds.num_classes) + ")");
    }
}

Dataset transform_common(const Dataset& ds, const std::string& provenance,
                         const std::function<std::pair<Image, Image>(const Image&)>& split,
                         Part part, spectrum::Rescale rescale) {
    Dataset out;
    out.labels = ds.labels;
    out.num_classes = ds.num_classes;
    out.provenance = provenance;
    out.images.resize(ds.images.size());
    parallel_for(ds.images.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            auto [low, high] = split(ds.images[i]);
            Image img = part == Part::low ? std::move(low) : std::move(high);
            if (rescale == spectrum::Rescale::minmax) spectrum::rescale_minmax(img);
            out.images[i] = std::move(img);
        }
    });
    return out;
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, int num_classes) {
    const auto ibuf = io::read_file(images_path);
    const auto lbuf = io::read_file(labels_path);
    io::ByteReader ir{ibuf.data(), ibuf.size(), 0, images_path.string()};
    io::ByteReader lr{lbuf.data(), lbuf.size(), 0, labels_path.string()};

    const std::uint32_t imagic = ir.u32be();
    if (imagic != kIdxImagesMagic)
        throw DataError(images_path.string() + ": bad IDX image magic " + io::hex64(imagic));
    const std::uint32_t lmagic = lr.u32be();
    if (lmagic != kIdxLabelsMagic)
        throw DataError(labels_path.string() + ": bad IDX label magic " + io::hex64(lmagic));

    const std::uint32_t n_images = ir.u32be();
    const std::uint32_t h = ir.u32be();
    const std::uint32_t w = ir.u32be();
    const std::uint32_t n_labels = lr.u32be();
    if (n_images != n_labels)
        throw DataError("IDX count mismatch: " + std::to_string(n_images) + " images vs " +
                        std::to_string(n_labels) + " labels");
    if (ibuf.size() != 16 + static_cast<std::size_t>(n_images) * h * w)
        throw DataError(images_path.string() + ": truncated file");
    if (lbuf.size() != 8 + static_cast<std::size_t>(n_labels))
        throw DataError(labels_path.string() + ": truncated file");

    Dataset ds;
    ds.num_classes = num_classes;
    ds.images.reserve(n_images);
    ds.labels.reserve(n_images);
    for (std::uint32_t k = 0; k < n_images; ++k) {
        Image img(static_cast<int>(h), static_cast<int>(w), 1);
        for (std::size_t p = 0; p < img.pix.size(); ++p)
            img.pix[p] = static_cast<float>(ir.u8()) / 255.0f;
        ds.images.push_back(std::move(img));
        ds.labels.push_back(lr.u8());
    }
    check_labels(ds, images_path.string());
    return ds;
}

Dataset load_cifar(const std::vector<std::filesystem::path>& batch_files, int num_classes) {
    constexpr std::size_t kRecord = 1 + 3 * 32 * 32;
    Dataset ds;
    ds.num_classes = num_classes;
    for (const auto& path : batch_files) {
        const auto buf = io::read_file(path);
        if (buf.size() % kRecord != 0)
            throw DataError(path.string() + ": size " + std::to_string(buf.size()) +
                            " is not a multiple of " + std::to_string(kRecord));
        const std::size_t n = buf.size() / kRecord;
        for (std::size_t rec = 0; rec < n; ++rec) {
            const std::uint8_t* p = buf.data() + rec * kRecord;
            ds.labels.push_back(p[0]);
            Image img(32, 32, 3);
            // channel-major in the file, same planar layout as Image
            for (std::size_t k = 0; k < 3 * 32 * 32; ++k)
                img.pix[k] = static_cast<float>(p[1 + k]) / 255.0f;
            ds.images.push_back(std::move(img));
        }
        check_labels(ds, path.string());
    }
    return ds;
}

std::vector<std::size_t> shuffle_permutation(std::size_t n, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "label-shuffle"));
    return rng.permutation(n);
}

Dataset shuffle_labels(const Dataset& ds, std::uint64_t seed) {
    if (ds.empty()) throw UsageError("shuffle_labels: empty dataset");
    Dataset out = ds;
    const auto perm = shuffle_permutation(ds.size(), seed);
    for (std::size_t i = 0; i < perm.size(); ++i) out.labels[i] = ds.labels[perm[i]];
    out.provenance = "shuffled(seed=" + std::to_string(seed) + ")";
    return out;
}

Dataset transform_dataset(const Dataset& ds, double r, Part part, spectrum::Rescale rescale) {
    const std::string tag = part == Part::low ? "lfc" : "hfc";
    const std::string mode = rescale == spectrum::Rescale::minmax ? "minmax" : "none";
    const std::string prov = tag + "(r=" + io::fmt(r) + ",rescale=" + mode + ")";
    return transform_common(
        ds, prov,
        [&](const Image& img) {
            auto pair = spectrum::decompose(img, r, spectrum::Rescale::none);
            return std::make_pair(std::move(pair.low), std::move(pair.high));
        },
        part, rescale);
}

Dataset transform_dataset_svd(const Dataset& ds, int k, Part part, spectrum::Rescale rescale) {
    const std::string tag = part == Part::low ? "svd_dom" : "svd_trail";
    const std::string mode = rescale == spectrum::Rescale::minmax ? "minmax" : "none";
    const std::string prov = tag + "(k=" + std::to_string(k) + ",rescale=" + mode + ")";
    return transform_common(
        ds, prov, [&](const Image& img) { return spectrum::svd_split(img, k); }, part, rescale);
}

Dataset take(const Dataset& ds, std::size_t n) {
    if (n == 0 || n >= ds.size()) return ds;
    Dataset out;
    out.num_classes = ds.num_classes;
    out.provenance = ds.provenance;
    out.images.assign(ds.images.begin(), ds.images.begin() + n);
    out.labels.assign(ds.labels.begin(), ds.labels.begin() + n);
    return out;
}

std::vector<std::vector<std::size_t>> batches(const Dataset& ds, const BatchPlan& plan,
                                              std::uint64_t epoch) {
    if (plan.batch_size < 1) throw UsageError("batches: batch size must be >= 1");
    std::vector<std::size_t> order(ds.size());
    if (plan.shuffle) {
        Rng rng(derive_seed(plan.seed, "batch-order", epoch));
        order = rng.permutation(ds.size());
    } else {
        std::iota(order.begin(), order.end(), std::size_t{0});
    }
    std::vector<std::vector<std::size_t>> out;
    const std::size_t b = static_cast<std::size_t>(plan.batch_size);
    for (std::size_t start = 0; start < order.size(); start += b) {
        const std::size_t end = std::min(order.size(), start + b);
        out.emplace_back(order.begin() + start, order.begin() + end);
    }
    return out;
}

std::string encode_splz(const Dataset& ds) {
    std::string out = "SPLZ";
    io::put_u16le(out, kSplzVersion);
    const int h = ds.empty() ? 0 : ds.images[0].h;
    const int w = ds.empty() ? 0 : ds.images[0].w;
    const int c = ds.empty() ? 0 : ds.images[0].c;
    io::put_u32le(out, static_cast<std::uint32_t>(h));
    io::put_u32le(out, static_cast<std::uint32_t>(w));
    io::put_u32le(out, static_cast<std::uint32_t>(c));
    io::put_u32le(out, static_cast<std::uint32_t>(ds.num_classes));
    io::put_u32le(out, static_cast<std::uint32_t>(ds.size()));
    io::put_u32le(out, static_cast<std::uint32_t>(ds.provenance.size()));
    out += ds.provenance;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        io::put_u16le(out, ds.labels[i]);
        for (const float v : ds.images[i].pix) io::put_f32le(out, v);
    }
    return out;
}

Dataset decode_splz(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    io::ByteReader r{bytes.data(), bytes.size(), 0, name};
    if (r.bytes(4) != "SPLZ") throw DataError(name + ": bad SPLZ magic");
    const std::uint16_t version = r.u16le();
    if (version != kSplzVersion)
        throw DataError(name + ": unsupported SPLZ version " + std::to_string(version));
    const std::uint32_t h = r.u32le();
    const std::uint32_t w = r.u32le();
    const std::uint32_t c = r.u32le();
    const std::uint32_t k = r.u32le();
    const std::uint32_t n = r.u32le();
    const std::uint32_t prov_len = r.u32le();
    Dataset ds;
    ds.provenance = r.bytes(prov_len);
    ds.num_classes = static_cast<int>(k);
    ds.images.reserve(n);
    ds.labels.reserve(n);
    for (std::uint32_t rec = 0; rec < n; ++rec) {
        ds.labels.push_back(r.u16le());
        Image img(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
        for (float& v : img.pix) v = r.f32le();
        ds.images.push_back(std::move(img));
    }
    check_labels(ds, name);
    return ds;
}

void save_splz(const Dataset& ds, const std::filesystem::path& path) {
    io::atomic_write(path, encode_splz(ds));
}

Dataset load_splz(const std::filesystem::path& path) {
    return decode_splz(io::read_file(path), path.string());
}

}  // namespace slens::data
