#include "slicematch/tensor.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slicematch {

FeatureMap FeatureMap::zeros(int height, int width, int channels) {
    if (height < 1 || width < 1 || channels < 1) {
        throw std::invalid_argument("FeatureMap dimensions must be positive");
    }
    FeatureMap m;
    m.height = height;
    m.width = width;
    m.channels = channels;
    m.data.assign(static_cast<std::size_t>(height) * width * channels, 0.0f);
    return m;
}

bool FeatureMap::all_finite() const {
    return std::all_of(data.begin(), data.end(),
                       [](float v) { return std::isfinite(v); });
}

FeatureMap make_feature_map(int height, int width, int channels, std::vector<float> data) {
    if (height < 1 || width < 1 || channels < 1) {
        throw std::invalid_argument("FeatureMap dimensions must be positive");
    }
    const std::size_t expected = static_cast<std::size_t>(height) * width * channels;
    if (data.size() != expected) {
        throw std::invalid_argument("FeatureMap payload length does not match dimensions");
    }
    FeatureMap m;
    m.height = height;
    m.width = width;
    m.channels = channels;
    m.data = std::move(data);
    if (!m.all_finite()) {
        throw std::invalid_argument("non-finite input");
    }
    return m;
}

GlobalDescriptor make_global_descriptor(int n_slices, int channels) {
    if (n_slices < 1 || channels < 1) {
        throw std::invalid_argument("GlobalDescriptor dimensions must be positive");
    }
    GlobalDescriptor d;
    d.n_slices = n_slices;
    d.channels = channels;
    d.values.assign(static_cast<std::size_t>(n_slices) * channels, 0.0f);
    return d;
}

std::vector<float> l2_normalize(std::span<const float> v) {
    double sq = 0.0;
    for (float x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("non-finite input");
        }
        sq += static_cast<double>(x) * x;
    }
    const double norm = std::max(std::sqrt(sq), kNormEpsilon);
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = static_cast<float>(v[i] / norm);
    }
    return out;
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("cosine_similarity: length mismatch");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    const double denom = std::max(std::sqrt(na) * std::sqrt(nb), kNormEpsilon);
    return std::clamp(dot / denom, -1.0, 1.0);
}

}  // namespace

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    return cosine_impl(a, b);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    return cosine_impl(a, b);
}

FeatureMap resize_width_bilinear(const FeatureMap& m, int new_width) {
    if (new_width < 1) {
        throw std::invalid_argument("resize_width_bilinear: new_width must be >= 1");
    }
    if (new_width == m.width) {
        return m;
    }
    FeatureMap out = FeatureMap::zeros(m.height, new_width, m.channels);
    const double scale = static_cast<double>(m.width) / new_width;
    for (int j = 0; j < new_width; ++j) {
        double src = (j + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(m.width - 1));
        const int j0 = static_cast<int>(src);
        const int j1 = std::min(j0 + 1, m.width - 1);
        const double t = src - j0;
        for (int i = 0; i < m.height; ++i) {
            for (int c = 0; c < m.channels; ++c) {
                const double v = (1.0 - t) * m.at(i, j0, c) + t * m.at(i, j1, c);
                out.at(i, j, c) = static_cast<float>(v);
            }
        }
    }
    return out;
}

}  // namespace slicematch
