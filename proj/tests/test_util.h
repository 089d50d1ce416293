#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "slicematch/tensor.h"

namespace slicematch::testutil {

// Unique scratch file path under the system temp directory.
inline std::string temp_path(const std::string& name) {
    static std::mt19937_64 rng(std::random_device{}());
    const auto dir = std::filesystem::temp_directory_path() / "slicematch_tests";
    std::filesystem::create_directories(dir);
    return (dir / (std::to_string(rng()) + "_" + name)).string();
}

inline FeatureMap random_map(int h, int w, int c, std::uint32_t seed, float scale = 1.0f) {
    std::mt19937 rng(seed);
    std::normal_distribution<float> dist(0.0f, scale);
    FeatureMap m = FeatureMap::zeros(h, w, c);
    for (auto& v : m.data) v = dist(rng);
    return m;
}

inline std::vector<float> random_vector(std::size_t n, std::uint32_t seed, float scale = 1.0f) {
    std::mt19937 rng(seed);
    std::normal_distribution<float> dist(0.0f, scale);
    std::vector<float> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

}  // namespace slicematch::testutil
