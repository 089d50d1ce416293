#pragma once

#include <string>
#include <vector>

#include "slicematch/geometry.h"
#include "slicematch/tensor.h"

namespace slicematch {

/// Per-candidate cosine similarities c^k with the argmax pose.
struct ScoreMap {
    PoseSet poses;
    std::vector<float> scores;  // each in [-1, 1]
    int best_index = -1;        // smallest index attaining the maximum
};

ScoreMap score_poses(const GlobalDescriptor& d_g, const std::vector<GlobalDescriptor>& descriptors,
                     const PoseSet& poses);

/// The candidate pose with the highest similarity; throws on an empty map.
Pose predict(const ScoreMap& score_map);

/// Per-location maximum over the orientation scores, n_v rows by n_u
/// columns; requires a grid-shaped pose set.
struct Heatmap {
    int n_u = 0;
    int n_v = 0;
    std::vector<float> values;  // row-major, values[iv * n_u + iu]

    float at(int iv, int iu) const { return values[static_cast<std::size_t>(iv) * n_u + iu]; }
};

Heatmap location_heatmap(const ScoreMap& score_map);

/// 8-bit grayscale image, row-major, pixel values in [0, 255].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Affine [min, max] -> [0, 255] mapping; a constant heatmap becomes
/// uniform gray 128.
GrayImage heatmap_to_image(const Heatmap& heatmap);

/// Binary PGM (P5), maxval 255.
void write_pgm(const std::string& path, const GrayImage& image);
GrayImage read_pgm(const std::string& path);

}  // namespace slicematch
