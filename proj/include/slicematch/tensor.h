#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace slicematch {

// Guard for norm/denominator divisions.
inline constexpr double kNormEpsilon = 1e-12;

/// Dense height x width x channels grid of 32-bit floats, row-major with the
/// channel values of one cell stored contiguously. Houses ground feature maps
/// (H x W x C), aerial feature maps (L x L x C) and spatial masks (C = 1).
struct FeatureMap {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    static FeatureMap zeros(int height, int width, int channels);

    std::size_t index(int i, int j, int c) const {
        return (static_cast<std::size_t>(i) * width + j) * channels + c;
    }
    float at(int i, int j, int c) const { return data[index(i, j, c)]; }
    float& at(int i, int j, int c) { return data[index(i, j, c)]; }

    /// The C contiguous channel values of cell (i, j).
    std::span<const float> cell(int i, int j) const {
        return {data.data() + index(i, j, 0), static_cast<std::size_t>(channels)};
    }
    std::span<float> cell(int i, int j) {
        return {data.data() + index(i, j, 0), static_cast<std::size_t>(channels)};
    }

    std::size_t size() const { return data.size(); }
    bool all_finite() const;
};

/// Validating constructor: checks dimensions, payload length and finiteness.
FeatureMap make_feature_map(int height, int width, int channels, std::vector<float> data);

/// Either the zero vector or unit-norm; one aggregated azimuth slice.
using SliceDescriptor = std::vector<float>;

/// Concatenation of n_slices unit-norm (or zero) slice descriptors,
/// slice-major, length n_slices * channels.
struct GlobalDescriptor {
    int n_slices = 0;
    int channels = 0;
    std::vector<float> values;

    std::span<const float> slot(int n) const {
        return {values.data() + static_cast<std::size_t>(n) * channels,
                static_cast<std::size_t>(channels)};
    }
    std::span<float> slot(int n) {
        return {values.data() + static_cast<std::size_t>(n) * channels,
                static_cast<std::size_t>(channels)};
    }
};

GlobalDescriptor make_global_descriptor(int n_slices, int channels);

/// v / max(||v||, 1e-12); the zero vector maps to itself.
/// Throws std::invalid_argument("non-finite input") on NaN/Inf entries.
std::vector<float> l2_normalize(std::span<const float> v);

/// Cosine similarity with a 1e-12 denominator guard, clamped to [-1, 1].
/// Accumulates in double. Throws on length mismatch.
double cosine_similarity(std::span<const float> a, std::span<const float> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Bilinear interpolation along the width axis only, align-corners-false:
/// output column j samples source coordinate (j + 0.5) * W / W' - 0.5,
/// clamped to [0, W - 1]. Height and channels are unchanged.
FeatureMap resize_width_bilinear(const FeatureMap& m, int new_width);

}  // namespace slicematch
