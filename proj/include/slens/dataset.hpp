#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "slens/spectrum.hpp"
#include "slens/tensor.hpp"

namespace slens::data {

struct Dataset {
    std::vector<Image> images;
    std::vector<std::uint16_t> labels;
    int num_classes = 0;
    std::string provenance = "original";

    std::size_t size() const { return images.size(); }
    bool empty() const { return images.empty(); }
};

struct BatchPlan {
    int batch_size = 100;
    std::uint64_t seed = 0;
    bool shuffle = true;
};

enum class Part { low, high };

// IDX (MNIST/FashionMNIST) pair of files: big-endian headers, ubyte payload.
// Magic 0x00000803 for images, 0x00000801 for labels. Pixels become v/255.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, int num_classes = 10);

// CIFAR-10 binary batches: records of 1 label byte + 3072 channel-major bytes.
Dataset load_cifar(const std::vector<std::filesystem::path>& batch_files, int num_classes = 10);

// Uniform random permutation of the label multiset; images untouched.
Dataset shuffle_labels(const Dataset& ds, std::uint64_t seed);

// The permutation shuffle_labels applies for a given size and seed
// (exposed so callers can invert it).
std::vector<std::size_t> shuffle_permutation(std::size_t n, std::uint64_t seed);

// Replace every image by its LFC or HFC at radius r.
Dataset transform_dataset(const Dataset& ds, double r, Part part, spectrum::Rescale rescale);

// Rank-k split of every image (dominant or trailing component).
Dataset transform_dataset_svd(const Dataset& ds, int k, Part part, spectrum::Rescale rescale);

// First-n subset (deterministic desk-scale cap); n == 0 keeps everything.
Dataset take(const Dataset& ds, std::size_t n);

// Deterministic epoch batching: identical (plan, epoch) always yields the
// same index order; the batches partition the dataset exactly.
std::vector<std::vector<std::size_t>> batches(const Dataset& ds, const BatchPlan& plan,
                                              std::uint64_t epoch);

// SPLZ container (magic "SPLZ"): version u16, then H, W, C, K, N as u32,
// provenance (u32 length + bytes), then N x (label u16 + H*W*C f32 LE).
std::string encode_splz(const Dataset& ds);
Dataset decode_splz(const std::vector<std::uint8_t>& bytes, const std::string& name);
void save_splz(const Dataset& ds, const std::filesystem::path& path);
Dataset load_splz(const std::filesystem::path& path);

}  // namespace slens::data
