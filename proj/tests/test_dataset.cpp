#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>

#include "oracles.hpp"
#include "slens/dataset.hpp"
#include "slens/io.hpp"
#include "slens/synthgen.hpp"

using namespace slens;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "slens_test_data";
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string be32(std::uint32_t v) {
    std::string s;
    for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    return s;
}

// n images of 2x3 with pixel value = image index * 10 + linear pixel index
std::pair<fs::path, fs::path> make_idx_fixture(int n, int label_count = -1) {
    std::string img = be32(0x803) + be32(n) + be32(2) + be32(3);
    for (int k = 0; k < n; ++k)
        for (int p = 0; p < 6; ++p) img.push_back(static_cast<char>(k * 10 + p));
    const int nl = label_count < 0 ? n : label_count;
    std::string lbl = be32(0x801) + be32(nl);
    for (int k = 0; k < nl; ++k) lbl.push_back(static_cast<char>(k % 10));
    const fs::path ip = temp_dir() / ("imgs" + std::to_string(n) + "_" + std::to_string(nl));
    const fs::path lp = temp_dir() / ("lbls" + std::to_string(n) + "_" + std::to_string(nl));
    write_bytes(ip, img);
    write_bytes(lp, lbl);
    return {ip, lp};
}

}  // namespace

TEST_CASE("IDX loader reads a synthetic fixture exactly") {
    auto [ip, lp] = make_idx_fixture(4);
    const data::Dataset ds = data::load_idx(ip, lp);
    REQUIRE(ds.size() == 4);
    CHECK(ds.images[0].h == 2);
    CHECK(ds.images[0].w == 3);
    CHECK(ds.images[0].c == 1);
    CHECK(ds.images[0].at(0, 0, 0) == 0.0f / 255.0f);
    CHECK(ds.images[2].at(0, 0, 0) == 20.0f / 255.0f);
    CHECK(ds.images[3].at(0, 1, 2) == 35.0f / 255.0f);
    CHECK(ds.labels[3] == 3);
}

TEST_CASE("IDX loader rejects count mismatch, bad magic and truncation") {
    auto [ip, lp] = make_idx_fixture(4, 3);
    CHECK_THROWS_WITH_AS(data::load_idx(ip, lp),
                         "IDX count mismatch: 4 images vs 3 labels", DataError);

    const fs::path bad = temp_dir() / "badmagic";
    write_bytes(bad, be32(0x1234) + be32(1) + be32(2) + be32(3));
    auto [ip2, lp2] = make_idx_fixture(1);
    CHECK_THROWS_AS(data::load_idx(bad, lp2), DataError);

    const fs::path trunc = temp_dir() / "truncated";
    write_bytes(trunc, be32(0x803) + be32(4) + be32(2) + be32(3) + std::string(5, 'x'));
    auto [ip3, lp3] = make_idx_fixture(4);
    CHECK_THROWS_AS(data::load_idx(trunc, lp3), DataError);
}

TEST_CASE("CIFAR loader decodes records and validates") {
    std::string rec0(3073, '\0');
    rec0[0] = 5;
    rec0[1] = 100;                 // R plane, pixel (0,0)
    rec0[1 + 1024] = 50;           // G plane
    rec0[1 + 2048 + 1023] = 200;   // B plane, last pixel
    std::string rec1(3073, '\0');
    rec1[0] = 9;
    const fs::path p = temp_dir() / "cifar_ok";
    write_bytes(p, rec0 + rec1);
    const data::Dataset ds = data::load_cifar({p});
    REQUIRE(ds.size() == 2);
    CHECK(ds.labels[0] == 5);
    CHECK(ds.labels[1] == 9);
    CHECK(ds.images[0].at(0, 0, 0) == 100.0f / 255.0f);
    CHECK(ds.images[0].at(1, 0, 0) == 50.0f / 255.0f);
    CHECK(ds.images[0].at(2, 31, 31) == 200.0f / 255.0f);

    const fs::path badlen = temp_dir() / "cifar_badlen";
    write_bytes(badlen, std::string(3072, '\0'));
    CHECK_THROWS_AS(data::load_cifar({badlen}), DataError);

    std::string rec17(3073, '\0');
    rec17[0] = 17;
    const fs::path badlbl = temp_dir() / "cifar_badlbl";
    write_bytes(badlbl, rec17);
    CHECK_THROWS_WITH_AS(data::load_cifar({badlbl}),
                         (badlbl.string() + ": label 17 at record 0 out of range (K=10)").c_str(),
                         DataError);
}

TEST_CASE("shuffle_labels is deterministic and preserves the histogram") {
    data::Dataset ds = synth::make_digits(200, 1, 77, 12);
    const data::Dataset a = data::shuffle_labels(ds, 5);
    const data::Dataset b = data::shuffle_labels(ds, 5);
    CHECK(a.labels == b.labels);
    CHECK(a.provenance == "shuffled(seed=5)");

    std::map<int, int> before, after;
    for (const auto l : ds.labels) ++before[l];
    for (const auto l : a.labels) ++after[l];
    CHECK(before == after);

    // images untouched
    CHECK(a.images[3].pix == ds.images[3].pix);

    // applying the inverse permutation restores the original labels
    const auto perm = data::shuffle_permutation(ds.size(), 5);
    std::vector<std::uint16_t> restored(ds.size());
    for (std::size_t i = 0; i < perm.size(); ++i) restored[perm[i]] = a.labels[i];
    CHECK(restored == ds.labels);
}

TEST_CASE("shuffle fixed-point rate matches the class collision rate") {
    // 10000 1x1 images, balanced labels: sum p_k^2 = 0.1
    data::Dataset ds;
    ds.num_classes = 10;
    for (int i = 0; i < 10000; ++i) {
        ds.images.emplace_back(1, 1, 1);
        ds.labels.push_back(static_cast<std::uint16_t>(i % 10));
    }
    double fixed = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const data::Dataset sh = data::shuffle_labels(ds, seed);
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (sh.labels[i] == ds.labels[i]) fixed += 1.0;
    }
    fixed /= 10.0 * ds.size();
    CHECK(std::abs(fixed - 0.1) < 0.02);
}

TEST_CASE("transform_dataset with whole-grid radius is identity (low) / zero (high)") {
    const data::Dataset ds = synth::make_digits(6, 1, 3, 12);
    const double r = spectrum::full_radius(12, 12);
    const data::Dataset low =
        data::transform_dataset(ds, r, data::Part::low, spectrum::Rescale::none);
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t k = 0; k < ds.images[i].pix.size(); ++k)
            CHECK(std::abs(low.images[i].pix[k] - ds.images[i].pix[k]) < 1e-6);

    const data::Dataset high =
        data::transform_dataset(ds, r, data::Part::high, spectrum::Rescale::minmax);
    for (const auto& img : high.images)
        for (const float v : img.pix) CHECK(v == 0.0f);
    CHECK(low.labels == ds.labels);
    CHECK(low.provenance == "lfc(r=" + io::fmt(r) + ",rescale=none)");
}

TEST_CASE("transform_dataset matches the direct DFT mask oracle") {
    const data::Dataset ds = synth::make_digits(10, 1, 99, 16);
    const data::Dataset low =
        data::transform_dataset(ds, 4.0, data::Part::low, spectrum::Rescale::none);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        spectrum::Grid g(16, 16);
        for (std::size_t k = 0; k < g.v.size(); ++k) g.v[k] = ds.images[i].pix[k];
        const spectrum::Grid want = oracles::lowpass_direct(g, 4.0);
        for (std::size_t k = 0; k < g.v.size(); ++k)
            CHECK(std::abs(low.images[i].pix[k] - want.v[k]) < 1e-5);
    }
}

TEST_CASE("low plus high transforms reconstruct the original") {
    const data::Dataset ds = synth::make_digits(5, 1, 7, 12);
    const auto low = data::transform_dataset(ds, 3.0, data::Part::low, spectrum::Rescale::none);
    const auto high = data::transform_dataset(ds, 3.0, data::Part::high, spectrum::Rescale::none);
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t k = 0; k < ds.images[i].pix.size(); ++k)
            CHECK(std::abs(low.images[i].pix[k] + high.images[i].pix[k] -
                           ds.images[i].pix[k]) < 1e-6);
}

TEST_CASE("batches partition the dataset deterministically") {
    const data::Dataset ds = synth::make_digits(10, 1, 1, 12);
    const data::BatchPlan plan{3, 42, true};
    const auto b1 = data::batches(ds, plan, 1);
    const auto b2 = data::batches(ds, plan, 1);
    REQUIRE(b1.size() == 4);
    CHECK(b1[0].size() == 3);
    CHECK(b1[1].size() == 3);
    CHECK(b1[2].size() == 3);
    CHECK(b1[3].size() == 1);
    CHECK(b1 == b2);
    CHECK(b1 != data::batches(ds, plan, 2));

    std::set<std::size_t> seen;
    for (const auto& batch : b1) seen.insert(batch.begin(), batch.end());
    CHECK(seen.size() == 10);

    CHECK_THROWS_AS(data::batches(ds, data::BatchPlan{0, 0, false}, 0), UsageError);
}

TEST_CASE("SPLZ round trip is bit exact") {
    data::Dataset ds = synth::make_digits(7, 3, 21, 10);
    ds = data::transform_dataset(ds, 2.0, data::Part::high, spectrum::Rescale::none);
    const std::string bytes = data::encode_splz(ds);
    const data::Dataset back = data::decode_splz(
        std::vector<std::uint8_t>(bytes.begin(), bytes.end()), "mem");
    CHECK(back.provenance == ds.provenance);
    CHECK(back.num_classes == ds.num_classes);
    CHECK(back.labels == ds.labels);
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(back.images[i].pix == ds.images[i].pix);
    CHECK(data::encode_splz(back) == bytes);

    const fs::path p = temp_dir() / "roundtrip.splz";
    data::save_splz(ds, p);
    const data::Dataset loaded = data::load_splz(p);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(loaded.images[i].pix == ds.images[i].pix);
}

TEST_CASE("SPLZ rejects bad magic") {
    const std::vector<std::uint8_t> junk{'N', 'O', 'P', 'E', 0, 0};
    CHECK_THROWS_AS(data::decode_splz(junk, "junk"), DataError);
}

TEST_CASE("take caps deterministically") {
    const data::Dataset ds = synth::make_digits(20, 1, 4, 12);
    const data::Dataset capped = data::take(ds, 8);
    REQUIRE(capped.size() == 8);
    CHECK(capped.images[5].pix == ds.images[5].pix);
    CHECK(data::take(ds, 0).size() == 20);
    CHECK(data::take(ds, 100).size() == 20);
}

TEST_CASE("synthetic digits are valid IDX on disk") {
    const data::Dataset ds = synth::make_digits(12, 1, 8, 28);
    const fs::path ip = temp_dir() / "synth_imgs.idx";
    const fs::path lp = temp_dir() / "synth_lbls.idx";
    synth::write_idx(ds, ip, lp);
    const data::Dataset back = data::load_idx(ip, lp);
    REQUIRE(back.size() == 12);
    CHECK(back.labels == ds.labels);
    // byte quantization only
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t k = 0; k < ds.images[i].pix.size(); ++k)
            CHECK(std::abs(back.images[i].pix[k] - ds.images[i].pix[k]) < 0.5f / 255.0f + 1e-6f);
}

// Structural check against the published MNIST files when a copy is around
// (point SLENS_MNIST_DIR at train-images-idx3-ubyte etc. to enable).
TEST_CASE("official MNIST headers parse when available") {
    const char* dir = std::getenv("SLENS_MNIST_DIR");
    if (!dir) return;
    const data::Dataset ds = data::load_idx(fs::path(dir) / "train-images-idx3-ubyte",
                                            fs::path(dir) / "train-labels-idx1-ubyte");
    CHECK(ds.size() == 60000);
    CHECK(ds.images[0].h == 28);
    CHECK(ds.images[0].w == 28);
    CHECK(ds.images[0].c == 1);
}
