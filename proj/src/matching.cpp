#include "slicematch/matching.h"

#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace slicematch {

ScoreMap score_poses(const GlobalDescriptor& d_g, const std::vector<GlobalDescriptor>& descriptors,
                     const PoseSet& poses) {
    if (descriptors.size() != poses.size()) {
        throw std::invalid_argument("score_poses: descriptor count != pose count");
    }
    ScoreMap map;
    map.poses = poses;
    map.scores.resize(descriptors.size());
    for (std::size_t k = 0; k < descriptors.size(); ++k) {
        if (descriptors[k].values.size() != d_g.values.size()) {
            throw std::invalid_argument("score_poses: descriptor length mismatch");
        }
        map.scores[k] = static_cast<float>(cosine_similarity(d_g.values, descriptors[k].values));
        if (map.best_index < 0 || map.scores[k] > map.scores[static_cast<std::size_t>(map.best_index)]) {
            map.best_index = static_cast<int>(k);
        }
    }
    return map;
}

Pose predict(const ScoreMap& score_map) {
    if (score_map.scores.empty() || score_map.best_index < 0) {
        throw std::invalid_argument("predict: empty score map");
    }
    return score_map.poses.poses[static_cast<std::size_t>(score_map.best_index)];
}

Heatmap location_heatmap(const ScoreMap& score_map) {
    if (!score_map.poses.grid) {
        throw std::invalid_argument("location_heatmap: pose set is not grid-shaped");
    }
    const GridShape grid = *score_map.poses.grid;
    const std::size_t expected =
        static_cast<std::size_t>(grid.n_u) * grid.n_v * grid.n_theta;
    if (score_map.scores.size() != expected) {
        throw std::invalid_argument("location_heatmap: score count != grid size");
    }
    Heatmap heat;
    heat.n_u = grid.n_u;
    heat.n_v = grid.n_v;
    heat.values.resize(static_cast<std::size_t>(grid.n_u) * grid.n_v);
    std::size_t k = 0;
    for (int iv = 0; iv < grid.n_v; ++iv) {
        for (int iu = 0; iu < grid.n_u; ++iu) {
            float best = score_map.scores[k++];
            for (int t = 1; t < grid.n_theta; ++t) {
                best = std::max(best, score_map.scores[k++]);
            }
            heat.values[static_cast<std::size_t>(iv) * grid.n_u + iu] = best;
        }
    }
    return heat;
}

GrayImage heatmap_to_image(const Heatmap& heatmap) {
    if (heatmap.values.empty()) {
        throw std::invalid_argument("heatmap_to_image: empty heatmap");
    }
    float lo = heatmap.values[0];
    float hi = heatmap.values[0];
    for (float v : heatmap.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    GrayImage image;
    image.width = heatmap.n_u;
    image.height = heatmap.n_v;
    image.pixels.resize(heatmap.values.size());
    const double range = static_cast<double>(hi) - lo;
    for (std::size_t i = 0; i < heatmap.values.size(); ++i) {
        image.pixels[i] = range < 1e-12
                              ? 128.0f
                              : static_cast<float>(std::lround(255.0 * (heatmap.values[i] - lo) / range));
    }
    return image;
}

void write_pgm(const std::string& path, const GrayImage& image) {
    if (image.width < 1 || image.height < 1 ||
        image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
        throw std::invalid_argument("write_pgm: malformed image");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("write_pgm: cannot open " + path);
    }
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> bytes(image.pixels.size());
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        const double v = std::clamp(static_cast<double>(image.pixels[i]), 0.0, 255.0);
        bytes[i] = static_cast<unsigned char>(std::lround(v));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("write_pgm: write failed: " + path);
    }
}

namespace {

// Next whitespace-delimited token, skipping '#' comment lines.
std::string next_pgm_token(std::istream& in) {
    std::string token;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!token.empty()) return token;
            continue;
        }
        token.push_back(static_cast<char>(ch));
    }
    return token;
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("read_pgm: cannot open " + path);
    }
    if (next_pgm_token(in) != "P5") {
        throw std::runtime_error("read_pgm: not a binary PGM (P5): " + path);
    }
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(next_pgm_token(in));
        height = std::stoi(next_pgm_token(in));
        maxval = std::stoi(next_pgm_token(in));
    } catch (const std::exception&) {
        throw std::runtime_error("read_pgm: malformed header in " + path);
    }
    if (width < 1 || height < 1 || maxval < 1 || maxval > 255) {
        throw std::runtime_error("read_pgm: unsupported header in " + path);
    }
    GrayImage image;
    image.width = width;
    image.height = height;
    const std::size_t count = static_cast<std::size_t>(width) * height;
    std::vector<unsigned char> bytes(count);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count) {
        throw std::runtime_error("read_pgm: truncated pixel data in " + path);
    }
    image.pixels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        image.pixels[i] = static_cast<float>(bytes[i]);
    }
    return image;
}

}  // namespace slicematch
