#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <doctest.h>

#include "slicematch/learning.h"

using namespace slicematch;

namespace {

std::vector<double> random_doubles(std::size_t n, std::uint32_t seed, double scale = 1.0) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

TrainConfig tiny_train_config() {
    TrainConfig cfg;
    cfg.c_raw = 4;
    cfg.c = 4;
    cfg.hidden = 4;
    cfg.world_size = 16;
    cfg.height = 2;
    cfg.width = 8;
    cfg.aerial_size = 4;
    cfg.camera = CameraModel{360.0, 4, 0.4};
    cfg.grid_n_u = 2;
    cfg.grid_n_v = 2;
    cfg.grid_n_theta = 2;
    cfg.supersample = 4;
    cfg.steps = 2;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_SUITE("learning") {

TEST_CASE("alpha=K recovers the plain contrastive loss") {
    for (std::uint32_t seed : {1u, 2u, 3u}) {
        const auto c = random_doubles(16, seed);
        const double c_gt = 0.4;
        LossConfig cfg;
        cfg.alpha = 16.0;
        cfg.tau = 0.07;
        cfg.k = 16;
        const double loss = info_nce_alpha(c_gt, c, cfg);
        double sum = 0.0;
        for (double ck : c) sum += std::exp((ck - c_gt) / cfg.tau);
        CHECK(loss == doctest::Approx(std::log1p(sum)).epsilon(1e-12));
    }
}

TEST_CASE("identical similarities give log(1+alpha)") {
    for (double alpha : {0.5, 4.0, 16.0}) {
        LossConfig cfg;
        cfg.alpha = alpha;
        cfg.tau = 0.1;
        cfg.k = 7;
        const std::vector<double> c(7, 0.33);
        const double loss = info_nce_alpha(0.33, c, cfg);
        CHECK(std::abs(loss - std::log1p(alpha)) <= 1e-10);
    }
}

TEST_CASE("saturated similarities reach the analytic tail") {
    LossConfig cfg;
    cfg.alpha = 4.0;
    cfg.tau = 0.1;
    cfg.k = 4;
    const std::vector<double> c(4, -1.0);
    const double loss = info_nce_alpha(1.0, c, cfg);
    CHECK(loss == doctest::Approx(std::log1p(4.0 * std::exp(-20.0))).epsilon(1e-6));
    CHECK(loss > 0.0);
}

TEST_CASE("loss is permutation invariant and monotone") {
    auto c = random_doubles(9, 5);
    LossConfig cfg;
    cfg.alpha = 4.0;
    cfg.tau = 0.1;
    cfg.k = 9;
    const double base = info_nce_alpha(0.2, c, cfg);

    std::mt19937 rng(6);
    std::shuffle(c.begin(), c.end(), rng);
    CHECK(std::abs(info_nce_alpha(0.2, c, cfg) - base) <= 1e-12);

    CHECK(info_nce_alpha(0.2 + 0.05, c, cfg) < base);
    auto bumped = c;
    bumped[3] += 0.05;
    CHECK(info_nce_alpha(0.2, bumped, cfg) > base);
}

TEST_CASE("loss config validation") {
    LossConfig cfg;
    cfg.k = 0;
    CHECK_THROWS(info_nce_alpha(0.0, {}, cfg));
    cfg.k = 2;
    CHECK_THROWS(info_nce_alpha(0.0, std::vector<double>{0.1}, cfg));
    cfg.k = 1;
    cfg.alpha = 0.0;
    CHECK_THROWS(info_nce_alpha(0.0, std::vector<double>{0.1}, cfg));
    cfg.alpha = 4.0;
    cfg.tau = 0.0;
    CHECK_THROWS(info_nce_alpha(0.0, std::vector<double>{0.1}, cfg));
}

TEST_CASE("descriptor gradients vanish at saturation") {
    const int D = 8;
    const auto base = random_doubles(D, 11);
    std::vector<double> d_g(base);
    std::vector<double> d_gt(base);  // cosine 1 with d_g
    std::vector<std::vector<double>> d_a(3);
    for (auto& d : d_a) {
        d = base;
        for (auto& x : d) x = -x;  // cosine -1
    }
    LossConfig cfg;
    cfg.alpha = 4.0;
    cfg.tau = 0.1;
    cfg.k = 3;
    const LossGradients g = loss_grad_descriptors(d_g, d_gt, d_a, cfg);
    for (double x : g.grad_d_g) CHECK(std::abs(x) <= 1e-6);
    for (double x : g.grad_d_a_gt) CHECK(std::abs(x) <= 1e-6);
    for (const auto& gk : g.grad_d_a) {
        for (double x : gk) CHECK(std::abs(x) <= 1e-6);
    }
}

TEST_CASE("descriptor gradients match finite differences") {
    const int C = 4, N = 2, K = 3;
    const int D = C * N;
    LossConfig cfg;
    cfg.alpha = 4.0;
    cfg.tau = 0.15;
    cfg.k = K;

    const auto d_g0 = random_doubles(D, 21);
    const auto d_gt0 = random_doubles(D, 22);
    std::vector<std::vector<double>> d_a0;
    for (int k = 0; k < K; ++k) d_a0.push_back(random_doubles(D, 23 + static_cast<std::uint32_t>(k)));

    const LossGradients g = loss_grad_descriptors(d_g0, d_gt0, d_a0, cfg);

    // Flatten everything into one parameter vector for the fd oracle.
    std::vector<double> params;
    params.insert(params.end(), d_g0.begin(), d_g0.end());
    params.insert(params.end(), d_gt0.begin(), d_gt0.end());
    for (const auto& d : d_a0) params.insert(params.end(), d.begin(), d.end());

    const auto f = [&](const std::vector<double>& p) {
        const std::vector<double> dg(p.begin(), p.begin() + D);
        const std::vector<double> dgt(p.begin() + D, p.begin() + 2 * D);
        std::vector<double> c(K);
        const double c_gt = cosine_similarity(std::span<const double>(dg),
                                              std::span<const double>(dgt));
        for (int k = 0; k < K; ++k) {
            const std::vector<double> da(p.begin() + (2 + k) * D, p.begin() + (3 + k) * D);
            c[static_cast<std::size_t>(k)] =
                cosine_similarity(std::span<const double>(dg), std::span<const double>(da));
        }
        return info_nce_alpha(c_gt, c, cfg);
    };
    const std::vector<double> fd = finite_diff_grad(f, params, 1e-4);

    std::vector<double> analytic;
    analytic.insert(analytic.end(), g.grad_d_g.begin(), g.grad_d_g.end());
    analytic.insert(analytic.end(), g.grad_d_a_gt.begin(), g.grad_d_a_gt.end());
    for (const auto& gk : g.grad_d_a) analytic.insert(analytic.end(), gk.begin(), gk.end());

    double max_fd = 0.0, max_err = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
        max_fd = std::max(max_fd, std::abs(fd[i]));
        max_err = std::max(max_err, std::abs(fd[i] - analytic[i]));
    }
    CHECK(max_err / std::max(max_fd, 1e-12) < 1e-4);
}

TEST_CASE("gradient w.r.t. d_g is tangent to d_g") {
    const int D = 8;
    const auto d_g = random_doubles(D, 31);
    const auto d_gt = random_doubles(D, 32);
    std::vector<std::vector<double>> d_a{random_doubles(D, 33), random_doubles(D, 34)};
    LossConfig cfg;
    cfg.alpha = 2.0;
    cfg.tau = 0.2;
    cfg.k = 2;
    const LossGradients g = loss_grad_descriptors(d_g, d_gt, d_a, cfg);
    double dot = 0.0, norm_g = 0.0, norm_d = 0.0;
    for (int i = 0; i < D; ++i) {
        dot += g.grad_d_g[static_cast<std::size_t>(i)] * d_g[static_cast<std::size_t>(i)];
        norm_g += g.grad_d_g[static_cast<std::size_t>(i)] * g.grad_d_g[static_cast<std::size_t>(i)];
        norm_d += d_g[static_cast<std::size_t>(i)] * d_g[static_cast<std::size_t>(i)];
    }
    CHECK(std::abs(dot) <= 1e-6 * std::max(1.0, std::sqrt(norm_g * norm_d)));
}

TEST_CASE("zero descriptors contribute zero similarity and zero gradient") {
    const int D = 6;
    const auto d_g = random_doubles(D, 41);
    const auto d_gt = random_doubles(D, 42);
    std::vector<std::vector<double>> d_a{random_doubles(D, 43), std::vector<double>(D, 0.0)};
    LossConfig cfg;
    cfg.alpha = 4.0;
    cfg.tau = 0.1;
    cfg.k = 2;
    const LossGradients g = loss_grad_descriptors(d_g, d_gt, d_a, cfg);
    CHECK(g.c[1] == 0.0);
    for (double x : g.grad_d_a[1]) CHECK(x == 0.0);
}

TEST_CASE("finite_diff_grad on closed-form functions") {
    const auto p = random_doubles(9, 51);
    const auto sq = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return s;
    };
    const auto g = finite_diff_grad(sq, p, 1e-4);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(g[i] == doctest::Approx(2.0 * p[i]).epsilon(1e-6));
    }

    const auto constant = [](const std::vector<double>&) { return 3.5; };
    for (double x : finite_diff_grad(constant, p, 1e-4)) CHECK(x == 0.0);

    const auto bad = [](const std::vector<double>& v) {
        return v[0] > 0.0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    };
    CHECK_THROWS(finite_diff_grad(bad, std::vector<double>{1.0, 2.0}, 1e-4));

    const auto serial = finite_diff_grad(sq, p, 1e-4, 1);
    const auto parallel = finite_diff_grad(sq, p, 1e-4, 4);
    CHECK(serial == parallel);
}

TEST_CASE("toy encoder identity and linearity") {
    FeatureMap m = FeatureMap::zeros(2, 3, 3);
    std::mt19937 rng(61);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (auto& v : m.data) v = dist(rng);

    const ToyEncoder id = ToyEncoder::identity(3);
    CHECK(id.apply(m).data == m.data);

    ToyEncoder enc;
    enc.in_channels = 2;
    enc.out_channels = 2;
    enc.weight = {1.0f, 2.0f, -1.0f, 0.5f};
    enc.bias = {0.25f, -0.5f};
    FeatureMap x = FeatureMap::zeros(1, 1, 2);
    x.at(0, 0, 0) = 3.0f;
    x.at(0, 0, 1) = -2.0f;
    const FeatureMap y = enc.apply(x);
    CHECK(y.at(0, 0, 0) == doctest::Approx(1.0 * 3.0 + 2.0 * -2.0 + 0.25));
    CHECK(y.at(0, 0, 1) == doctest::Approx(-1.0 * 3.0 + 0.5 * -2.0 - 0.5));

    CHECK_THROWS(enc.apply(m));  // channel mismatch

    const ToyEncoder a = ToyEncoder::random_init(3, 4, 99, 0.5f);
    const ToyEncoder b = ToyEncoder::random_init(3, 4, 99, 0.5f);
    CHECK(a.weight == b.weight);
    CHECK(a.bias == b.bias);
    CHECK(a.parameter_count() == 3 * 4 + 4);
}

TEST_CASE("synthetic world determinism and sampling") {
    const SyntheticWorld w1 = make_synthetic_world(16, 3, 1234);
    const SyntheticWorld w2 = make_synthetic_world(16, 3, 1234);
    CHECK(w1.field == w2.field);
    const SyntheticWorld w3 = make_synthetic_world(16, 3, 1235);
    CHECK(w1.field != w3.field);

    // Sampling at a cell center returns the stored value.
    std::vector<double> out(3);
    w1.sample((5 + 0.5) / 16.0, (9 + 0.5) / 16.0, out);
    for (int c = 0; c < 3; ++c) {
        CHECK(out[static_cast<std::size_t>(c)] ==
              doctest::Approx(w1.field[(9 * 16 + 5) * 3 + static_cast<std::size_t>(c)])
                  .epsilon(1e-6));
    }
}

TEST_CASE("synthetic pair determinism and constant worlds") {
    const SyntheticWorld world = make_synthetic_world(16, 3, 77);
    const CameraModel cam{360.0, 4, 0.4};
    const Pose pose{0.5, 0.5, 30.0};
    const auto [g1, a1] = generate_synthetic_pair(world, pose, cam, 2, 8, 4);
    const auto [g2, a2] = generate_synthetic_pair(world, pose, cam, 2, 8, 4);
    CHECK(g1.data == g2.data);
    CHECK(a1.data == a2.data);

    SyntheticWorld flat = world;
    std::fill(flat.field.begin(), flat.field.end(), 3.25f);
    const auto [gc, ac] = generate_synthetic_pair(flat, pose, cam, 2, 8, 4);
    for (float v : ac.data) CHECK(v == doctest::Approx(3.25f));
    for (float v : gc.data) CHECK(v == doctest::Approx(3.25f));
}

TEST_CASE("rotating a panorama shifts ground columns cyclically") {
    const SyntheticWorld world = make_synthetic_world(32, 2, 88);
    const CameraModel cam{360.0, 4, 0.45};
    const int W = 16;
    const auto [g0, a0] = generate_synthetic_pair(world, Pose{0.5, 0.5, 0.0}, cam, 2, W, 4);
    const auto [g90, a90] = generate_synthetic_pair(world, Pose{0.5, 0.5, 90.0}, cam, 2, W, 4);
    CHECK(a0.data == a90.data);
    const int shift = W / 4;
    for (int i = 0; i < 2; ++i) {
        for (int w = 0; w < W; ++w) {
            for (int c = 0; c < 2; ++c) {
                CHECK(g90.at(i, w, c) == g0.at(i, (w + shift) % W, c));
            }
        }
    }
}

TEST_CASE("noise is seeded by world and pose") {
    SyntheticWorld world = make_synthetic_world(16, 2, 99, 0.1);
    const CameraModel cam{360.0, 4, 0.4};
    const auto [g1, a1] = generate_synthetic_pair(world, Pose{0.5, 0.5, 0.0}, cam, 2, 8, 4);
    const auto [g2, a2] = generate_synthetic_pair(world, Pose{0.5, 0.5, 0.0}, cam, 2, 8, 4);
    CHECK(g1.data == g2.data);
    CHECK(a1.data == a2.data);
    const auto [g3, a3] = generate_synthetic_pair(world, Pose{0.25, 0.5, 0.0}, cam, 2, 8, 4);
    CHECK(g1.data != g3.data);
}

TEST_CASE("flatten and unflatten round-trip the toy parameters") {
    TrainConfig cfg;
    cfg.c_raw = 8;
    cfg.c = 8;
    cfg.hidden = 8;
    const ToyParams params = init_toy_params(cfg);
    const std::vector<double> flat = flatten_params(params);
    CHECK(flat.size() == 314);
    const ToyParams back = unflatten_params(params, flat);
    CHECK(flatten_params(back) == flat);
    CHECK(back.ground_encoder.weight == params.ground_encoder.weight);
    CHECK(back.aerial_mlp.w1 == params.aerial_mlp.w1);
    CHECK_THROWS(unflatten_params(params, std::vector<double>(10, 0.0)));
}

TEST_CASE("forward_pipeline produces a finite scored forward pass") {
    const TrainConfig cfg = tiny_train_config();
    const SyntheticWorld world = make_synthetic_world(cfg.world_size, cfg.c_raw, 5);
    const Pose gt{0.25, 0.75, 180.0};
    const auto [ground, aerial] = generate_synthetic_pair(world, gt, cfg.camera, cfg.height,
                                                          cfg.width, cfg.aerial_size);
    const PoseSet grid = generate_pose_grid(cfg.grid_n_u, cfg.grid_n_v, cfg.grid_n_theta);
    const MaskSet grid_masks =
        precompute_masks(cfg.camera, grid, cfg.aerial_size, cfg.supersample);
    PoseSet gt_set;
    gt_set.poses = {gt};
    const MaskSet gt_masks =
        precompute_masks(cfg.camera, gt_set, cfg.aerial_size, cfg.supersample);

    const ToyParams params = identity_toy_params(cfg.c_raw, cfg.c_raw);
    LossConfig loss_cfg;
    loss_cfg.alpha = 4.0;
    loss_cfg.tau = 0.1;
    const ForwardResult r =
        forward_pipeline(params, ground, aerial, grid, grid_masks, gt_masks, loss_cfg);
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss > 0.0);
    CHECK(r.c.size() == grid.size());
    CHECK(r.best_index >= 0);
    CHECK(r.best_index < static_cast<int>(grid.size()));
    CHECK(r.d_gt.n_slices == cfg.camera.n_slices);
    CHECK(std::abs(r.c_gt) <= 1.0);
}

TEST_CASE("train_toy with zero steps returns the initial parameters") {
    TrainConfig cfg = tiny_train_config();
    cfg.steps = 0;
    const TrainResult r = train_toy(cfg);
    CHECK(r.loss_curve.empty());
    CHECK(flatten_params(r.params) == flatten_params(r.initial_params));
}

TEST_CASE("train_toy is deterministic given the seed") {
    const TrainConfig cfg = tiny_train_config();
    const TrainResult a = train_toy(cfg);
    const TrainResult b = train_toy(cfg);
    CHECK(a.loss_curve == b.loss_curve);
    CHECK(flatten_params(a.params) == flatten_params(b.params));
    REQUIRE(a.loss_curve.size() == 2);
    for (double l : a.loss_curve) CHECK(std::isfinite(l));

    TrainConfig other = cfg;
    other.seed = 8;
    const TrainResult c = train_toy(other);
    CHECK(a.loss_curve != c.loss_curve);
}

TEST_CASE("train_toy validates its configuration") {
    TrainConfig cfg = tiny_train_config();
    cfg.steps = -1;
    CHECK_THROWS(train_toy(cfg));
    cfg = tiny_train_config();
    cfg.c_raw = 0;
    CHECK_THROWS(train_toy(cfg));
    cfg = tiny_train_config();
    cfg.lr = 0.0;
    CHECK_THROWS(train_toy(cfg));
}

TEST_CASE("identity pipeline retrieves on-grid poses") {
    TrainConfig cfg;
    cfg.camera = CameraModel{360.0, 4, 0.4};
    const ToyParams params = identity_toy_params(cfg.c_raw, cfg.c);
    const double acc = toy_top1_accuracy(params, cfg, 10, 2024);
    CHECK(acc >= 0.9);
}

TEST_CASE("mix_seed is deterministic and order-sensitive") {
    CHECK(mix_seed(1, 2) == mix_seed(1, 2));
    CHECK(mix_seed(1, 2) != mix_seed(2, 1));
    CHECK(mix_seed(0, 0) == mix_seed(0, 0));
}

}  // TEST_SUITE
