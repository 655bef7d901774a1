#pragma once

#include <cstdint>
#include <filesystem>

#include "slens/dataset.hpp"

namespace slens::synth {

// Procedural 10-class stroke-digit dataset (28x28 by default): fixed glyph
// skeletons per class, randomized affine jitter, stroke thickness, and pixel
// noise. Fully deterministic given the seed; sample i depends only on
// (seed, i). Stands in for handwritten-digit data when no files are around.
data::Dataset make_digits(std::size_t n, int channels, std::uint64_t seed, int size = 28);

// Emit a dataset as an IDX image/label file pair (grayscale; multi-channel
// datasets are rejected since IDX carries a single plane per image).
void write_idx(const data::Dataset& ds, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

}  // namespace slens::synth
