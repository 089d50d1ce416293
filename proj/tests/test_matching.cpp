#include <algorithm>
#include <cstdio>
#include <fstream>
#include <vector>

#include <doctest.h>

#include "slicematch/matching.h"
#include "slicematch/tensor.h"
#include "test_util.h"

using namespace slicematch;
using testutil::random_vector;
using testutil::temp_path;

namespace {

GlobalDescriptor descriptor_of(int n, int c, std::uint32_t seed) {
    GlobalDescriptor d = make_global_descriptor(n, c);
    const auto raw = random_vector(d.values.size(), seed);
    for (int slot = 0; slot < n; ++slot) {
        std::vector<float> v(raw.begin() + slot * c, raw.begin() + (slot + 1) * c);
        const auto nv = l2_normalize(v);
        std::copy(nv.begin(), nv.end(), d.slot(slot).begin());
    }
    return d;
}

}  // namespace

TEST_SUITE("matching") {

TEST_CASE("score_poses self-match and tie-break") {
    const GlobalDescriptor d_g = descriptor_of(2, 3, 1);
    std::vector<GlobalDescriptor> cands{descriptor_of(2, 3, 2), d_g, descriptor_of(2, 3, 3)};
    PoseSet poses;
    poses.poses = {Pose{0.1, 0.1, 0.0}, Pose{0.5, 0.5, 90.0}, Pose{0.9, 0.9, 180.0}};

    const ScoreMap sm = score_poses(d_g, cands, poses);
    CHECK(sm.best_index == 1);
    CHECK(sm.scores[1] == doctest::Approx(1.0).epsilon(1e-6));
    for (float s : sm.scores) {
        CHECK(s >= -1.0f);
        CHECK(s <= 1.0f);
    }

    // All-equal descriptors tie-break to index 0.
    std::vector<GlobalDescriptor> equal{d_g, d_g, d_g};
    CHECK(score_poses(d_g, equal, poses).best_index == 0);
}

TEST_CASE("score_poses componentwise oracle and errors") {
    const GlobalDescriptor d_g = descriptor_of(2, 4, 11);
    std::vector<GlobalDescriptor> cands{descriptor_of(2, 4, 12), descriptor_of(2, 4, 13),
                                        descriptor_of(2, 4, 14)};
    PoseSet poses;
    poses.poses = {Pose{0.2, 0.2, 0.0}, Pose{0.4, 0.4, 0.0}, Pose{0.6, 0.6, 0.0}};
    const ScoreMap sm = score_poses(d_g, cands, poses);
    for (int k = 0; k < 3; ++k) {
        CHECK(sm.scores[static_cast<std::size_t>(k)] ==
              doctest::Approx(cosine_similarity(d_g.values, cands[static_cast<std::size_t>(k)].values))
                  .epsilon(1e-6));
    }

    PoseSet short_poses;
    short_poses.poses = {Pose{0.2, 0.2, 0.0}};
    CHECK_THROWS(score_poses(d_g, cands, short_poses));
    std::vector<GlobalDescriptor> wrong{descriptor_of(3, 4, 15), descriptor_of(2, 4, 16),
                                        descriptor_of(2, 4, 17)};
    CHECK_THROWS(score_poses(d_g, wrong, poses));
}

TEST_CASE("predict returns the argmax pose") {
    const GlobalDescriptor d_g = descriptor_of(1, 4, 21);
    PoseSet one;
    one.poses = {Pose{0.3, 0.8, 45.0}};
    const ScoreMap sm = score_poses(d_g, {descriptor_of(1, 4, 22)}, one);
    const Pose p = predict(sm);
    CHECK(p.u == doctest::Approx(0.3));
    CHECK(p.theta_deg == doctest::Approx(45.0));

    CHECK_THROWS(predict(ScoreMap{}));
}

TEST_CASE("argmax is invariant to positive scaling of d_g") {
    GlobalDescriptor d_g = descriptor_of(2, 5, 31);
    std::vector<GlobalDescriptor> cands;
    for (std::uint32_t s = 0; s < 6; ++s) cands.push_back(descriptor_of(2, 5, 40 + s));
    PoseSet poses;
    for (int k = 0; k < 6; ++k) poses.poses.push_back(Pose{0.1 * (k + 1), 0.5, 0.0});

    const int before = score_poses(d_g, cands, poses).best_index;
    for (auto& x : d_g.values) x *= 12.5f;
    CHECK(score_poses(d_g, cands, poses).best_index == before);
}

TEST_CASE("location_heatmap maxes over orientations") {
    PoseSet grid = generate_pose_grid(3, 2, 2);
    ScoreMap sm;
    sm.poses = grid;
    sm.scores.resize(12);
    // Scores k = iv*6 + iu*2 + t; per-location max must win.
    for (int iv = 0; iv < 2; ++iv) {
        for (int iu = 0; iu < 3; ++iu) {
            sm.scores[static_cast<std::size_t>(iv) * 6 + iu * 2 + 0] =
                0.1f * static_cast<float>(iv * 3 + iu);
            sm.scores[static_cast<std::size_t>(iv) * 6 + iu * 2 + 1] =
                0.1f * static_cast<float>(iv * 3 + iu) - 0.05f;
        }
    }
    sm.best_index = 10;

    const Heatmap hm = location_heatmap(sm);
    CHECK(hm.n_u == 3);
    CHECK(hm.n_v == 2);
    for (int iv = 0; iv < 2; ++iv) {
        for (int iu = 0; iu < 3; ++iu) {
            CHECK(hm.at(iv, iu) == doctest::Approx(0.1f * (iv * 3 + iu)));
        }
    }

    // Heatmap max equals the best score.
    const float max_cell = *std::max_element(hm.values.begin(), hm.values.end());
    const float max_score = *std::max_element(sm.scores.begin(), sm.scores.end());
    CHECK(max_cell == doctest::Approx(max_score).epsilon(1e-6));

    // Non-grid pose sets are rejected.
    ScoreMap no_grid;
    no_grid.poses.poses = {Pose{0.5, 0.5, 0.0}};
    no_grid.scores = {0.5f};
    no_grid.best_index = 0;
    CHECK_THROWS(location_heatmap(no_grid));
}

TEST_CASE("n_theta=1 heatmap is the reshaped score vector") {
    PoseSet grid = generate_pose_grid(4, 2, 1);
    ScoreMap sm;
    sm.poses = grid;
    sm.scores = {0.0f, 0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f, 0.7f};
    sm.best_index = 7;
    const Heatmap hm = location_heatmap(sm);
    for (int i = 0; i < 8; ++i) {
        CHECK(hm.values[static_cast<std::size_t>(i)] == sm.scores[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("heatmap_to_image maps affinely with the constant convention") {
    Heatmap hm;
    hm.n_u = 2;
    hm.n_v = 1;
    hm.values = {-1.0f, 3.0f};
    const GrayImage img = heatmap_to_image(hm);
    CHECK(img.width == 2);
    CHECK(img.height == 1);
    CHECK(img.at(0, 0) == 0.0f);
    CHECK(img.at(0, 1) == 255.0f);

    Heatmap flat;
    flat.n_u = 3;
    flat.n_v = 2;
    flat.values.assign(6, 0.42f);
    const GrayImage gray = heatmap_to_image(flat);
    for (float p : gray.pixels) CHECK(p == 128.0f);
}

TEST_CASE("pgm round-trip and malformed input") {
    GrayImage img;
    img.width = 5;
    img.height = 3;
    img.pixels.resize(15);
    for (int i = 0; i < 15; ++i) {
        img.pixels[static_cast<std::size_t>(i)] = static_cast<float>(i * 17 % 256);
    }
    const std::string path = temp_path("heatmap.pgm");
    write_pgm(path, img);
    const GrayImage back = read_pgm(path);
    CHECK(back.width == 5);
    CHECK(back.height == 3);
    for (int i = 0; i < 15; ++i) {
        CHECK(back.pixels[static_cast<std::size_t>(i)] == img.pixels[static_cast<std::size_t>(i)]);
    }

    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << "P6\n5 3\n255\n";
    }
    CHECK_THROWS(read_pgm(path));
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << "P5\n5 3\n255\nxx";  // truncated pixel payload
    }
    CHECK_THROWS(read_pgm(path));
    CHECK_THROWS(read_pgm(temp_path("missing.pgm")));
    std::remove(path.c_str());
}

}  // TEST_SUITE
