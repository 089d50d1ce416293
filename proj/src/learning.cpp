#include "slicematch/learning.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "slicematch/matching.h"

namespace slicematch {

namespace {

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a * 0x9e3779b97f4a7c15ull + b + 0x7f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t hash_double(double v) { return std::bit_cast<std::uint64_t>(v); }

}  // namespace

std::uint32_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint32_t>(mix64(a, b));
}

double info_nce_alpha(double c_gt, std::span<const double> c, const LossConfig& cfg) {
    if (!(cfg.alpha > 0.0)) {
        throw std::invalid_argument("info_nce_alpha: alpha must be positive");
    }
    if (!(cfg.tau > 0.0)) {
        throw std::invalid_argument("info_nce_alpha: tau must be positive");
    }
    if (c.empty()) {
        throw std::invalid_argument("info_nce_alpha: empty contrast set");
    }
    if (cfg.k != static_cast<int>(c.size())) {
        throw std::invalid_argument("info_nce_alpha: cfg.k != contrast count");
    }
    const double inv_tau = 1.0 / cfg.tau;
    const double a = c_gt * inv_tau;
    double m = a;
    for (double v : c) m = std::max(m, v * inv_tau);
    double sum = 0.0;
    for (double v : c) sum += std::exp(v * inv_tau - m);
    const double denom = (cfg.alpha / static_cast<double>(c.size())) * sum + std::exp(a - m);
    return std::log(denom) + m - a;
}

namespace {

// d cos(a, b) / da = b / (|a||b|) - cos * a / |a|^2, accumulated with the
// given coefficient; no contribution when either vector is (near) zero.
void add_cosine_gradient(std::span<const double> a, std::span<const double> b, double coeff,
                         std::vector<double>& grad_a, std::vector<double>& grad_b) {
    double na = 0.0, nb = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a[i] * a[i];
        nb += b[i] * b[i];
        dot += a[i] * b[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na * nb < kNormEpsilon) return;
    const double inv = 1.0 / (na * nb);
    const double cos_ab = dot * inv;
    const double ia2 = 1.0 / (na * na);
    const double ib2 = 1.0 / (nb * nb);
    for (std::size_t i = 0; i < a.size(); ++i) {
        grad_a[i] += coeff * (b[i] * inv - cos_ab * a[i] * ia2);
        grad_b[i] += coeff * (a[i] * inv - cos_ab * b[i] * ib2);
    }
}

}  // namespace

LossGradients loss_grad_descriptors(std::span<const double> d_g, std::span<const double> d_a_gt,
                                    const std::vector<std::vector<double>>& d_a_list,
                                    const LossConfig& cfg) {
    const std::size_t dim = d_g.size();
    if (d_a_gt.size() != dim) {
        throw std::invalid_argument("loss_grad_descriptors: GT descriptor length mismatch");
    }
    for (const auto& d : d_a_list) {
        if (d.size() != dim) {
            throw std::invalid_argument("loss_grad_descriptors: descriptor length mismatch");
        }
    }

    LossGradients out;
    out.c_gt = cosine_similarity(d_g, d_a_gt);
    out.c.resize(d_a_list.size());
    for (std::size_t k = 0; k < d_a_list.size(); ++k) {
        out.c[k] = cosine_similarity(d_g, std::span<const double>(d_a_list[k]));
    }
    out.loss = info_nce_alpha(out.c_gt, out.c, cfg);

    // Softmax-like weights of the stabilized denominator.
    const double inv_tau = 1.0 / cfg.tau;
    const double a = out.c_gt * inv_tau;
    double m = a;
    for (double v : out.c) m = std::max(m, v * inv_tau);
    double sum = 0.0;
    for (double v : out.c) sum += std::exp(v * inv_tau - m);
    const double denom = (cfg.alpha / static_cast<double>(out.c.size())) * sum + std::exp(a - m);
    const double w_gt = std::exp(a - m) / denom;

    out.grad_d_g.assign(dim, 0.0);
    out.grad_d_a_gt.assign(dim, 0.0);
    out.grad_d_a.assign(d_a_list.size(), std::vector<double>(dim, 0.0));

    add_cosine_gradient(d_g, d_a_gt, inv_tau * (w_gt - 1.0), out.grad_d_g, out.grad_d_a_gt);
    for (std::size_t k = 0; k < d_a_list.size(); ++k) {
        const double w_k = (cfg.alpha / static_cast<double>(out.c.size())) *
                           std::exp(out.c[k] * inv_tau - m) / denom;
        add_cosine_gradient(d_g, std::span<const double>(d_a_list[k]), inv_tau * w_k,
                            out.grad_d_g, out.grad_d_a[k]);
    }
    return out;
}

std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& params, double eps,
                                     int n_workers) {
    if (!(eps > 0.0)) {
        throw std::invalid_argument("finite_diff_grad: eps must be positive");
    }
    std::vector<double> grad(params.size(), 0.0);

    auto eval_range = [&](std::vector<double>& local, std::size_t i) {
        const double saved = local[i];
        local[i] = saved + eps;
        const double fp = f(local);
        local[i] = saved - eps;
        const double fm = f(local);
        local[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::runtime_error("finite_diff_grad: non-finite evaluation");
        }
        grad[i] = (fp - fm) / (2.0 * eps);
    };

    if (n_workers <= 1 || params.size() < 2) {
        std::vector<double> local = params;
        for (std::size_t i = 0; i < params.size(); ++i) eval_range(local, i);
        return grad;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&] {
        std::vector<double> local = params;
        for (std::size_t i = next.fetch_add(1); i < params.size(); i = next.fetch_add(1)) {
            if (failed.load()) return;
            try {
                eval_range(local, i);
            } catch (...) {
                failed.store(true);
                return;
            }
        }
    };
    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(n_workers), params.size());
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t w = 0; w < n_threads; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failed.load()) {
        throw std::runtime_error("finite_diff_grad: non-finite evaluation");
    }
    return grad;
}

FeatureMap ToyEncoder::apply(const FeatureMap& input) const {
    if (input.channels != in_channels) {
        throw std::invalid_argument("toy encoder: channel mismatch");
    }
    FeatureMap out = FeatureMap::zeros(input.height, input.width, out_channels);
    const std::size_t cells = static_cast<std::size_t>(input.height) * input.width;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const float* x = input.data.data() + cell * static_cast<std::size_t>(in_channels);
        float* y = out.data.data() + cell * static_cast<std::size_t>(out_channels);
        for (int o = 0; o < out_channels; ++o) {
            double acc = bias[static_cast<std::size_t>(o)];
            const float* row = weight.data() + static_cast<std::size_t>(o) * in_channels;
            for (int i = 0; i < in_channels; ++i) {
                acc += static_cast<double>(row[i]) * x[i];
            }
            y[o] = static_cast<float>(acc);
        }
    }
    return out;
}

ToyEncoder ToyEncoder::identity(int channels) {
    if (channels < 1) throw std::invalid_argument("toy encoder: channels must be >= 1");
    ToyEncoder enc;
    enc.in_channels = channels;
    enc.out_channels = channels;
    enc.weight.assign(static_cast<std::size_t>(channels) * channels, 0.0f);
    enc.bias.assign(static_cast<std::size_t>(channels), 0.0f);
    for (int c = 0; c < channels; ++c) {
        enc.weight[static_cast<std::size_t>(c) * channels + c] = 1.0f;
    }
    return enc;
}

ToyEncoder ToyEncoder::random_init(int in_channels, int out_channels, std::uint32_t seed,
                                   float scale) {
    if (in_channels < 1 || out_channels < 1) {
        throw std::invalid_argument("toy encoder: channels must be >= 1");
    }
    ToyEncoder enc;
    enc.in_channels = in_channels;
    enc.out_channels = out_channels;
    enc.weight.assign(static_cast<std::size_t>(in_channels) * out_channels, 0.0f);
    enc.bias.assign(static_cast<std::size_t>(out_channels), 0.0f);
    if (scale > 0.0f) {
        std::mt19937 rng(seed);
        std::normal_distribution<float> dist(0.0f, scale);
        for (auto& w : enc.weight) w = dist(rng);
        for (auto& b : enc.bias) b = dist(rng);
    }
    return enc;
}

std::size_t ToyEncoder::parameter_count() const { return weight.size() + bias.size(); }

void SyntheticWorld::sample(double x, double y, std::span<double> out) const {
    const double px = std::clamp(x * size - 0.5, 0.0, static_cast<double>(size - 1));
    const double py = std::clamp(y * size - 0.5, 0.0, static_cast<double>(size - 1));
    const int x0 = static_cast<int>(px);
    const int y0 = static_cast<int>(py);
    const int x1 = std::min(x0 + 1, size - 1);
    const int y1 = std::min(y0 + 1, size - 1);
    const double fx = px - x0;
    const double fy = py - y0;
    const std::size_t C = static_cast<std::size_t>(channels);
    const float* p00 = field.data() + (static_cast<std::size_t>(y0) * size + x0) * C;
    const float* p01 = field.data() + (static_cast<std::size_t>(y0) * size + x1) * C;
    const float* p10 = field.data() + (static_cast<std::size_t>(y1) * size + x0) * C;
    const float* p11 = field.data() + (static_cast<std::size_t>(y1) * size + x1) * C;
    for (std::size_t c = 0; c < C; ++c) {
        const double top = (1.0 - fx) * p00[c] + fx * p01[c];
        const double bottom = (1.0 - fx) * p10[c] + fx * p11[c];
        out[c] = (1.0 - fy) * top + fy * bottom;
    }
}

SyntheticWorld make_synthetic_world(int size, int channels, std::uint32_t seed,
                                    double noise_sigma, double aerial_extent_m) {
    if (size < 2 || channels < 1) {
        throw std::invalid_argument("make_synthetic_world: size >= 2 and channels >= 1 required");
    }
    if (noise_sigma < 0.0 || !(aerial_extent_m > 0.0)) {
        throw std::invalid_argument("make_synthetic_world: bad noise or extent");
    }
    SyntheticWorld world;
    world.size = size;
    world.channels = channels;
    world.aerial_extent_m = aerial_extent_m;
    world.noise_sigma = noise_sigma;
    world.seed = seed;
    world.field.resize(static_cast<std::size_t>(size) * size * channels);

    // Each channel is a small mixture of plane-wave cosines: smooth,
    // band-limited, deterministic.
    constexpr int kComponents = 4;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> freq_dist(0.5, 3.0);
    std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> amp_dist(0.5, 1.0);
    for (int c = 0; c < channels; ++c) {
        double fx[kComponents], fy[kComponents], phase[kComponents], amp[kComponents];
        for (int r = 0; r < kComponents; ++r) {
            const double f = freq_dist(rng);
            const double ang = angle_dist(rng);
            fx[r] = f * std::cos(ang);
            fy[r] = f * std::sin(ang);
            phase[r] = angle_dist(rng);
            amp[r] = amp_dist(rng);
        }
        for (int i = 0; i < size; ++i) {
            const double y = (i + 0.5) / size;
            for (int j = 0; j < size; ++j) {
                const double x = (j + 0.5) / size;
                double val = 0.0;
                for (int r = 0; r < kComponents; ++r) {
                    val += amp[r] * std::cos(2.0 * kPi * (fx[r] * x + fy[r] * y) + phase[r]);
                }
                world.field[(static_cast<std::size_t>(i) * size + j) * channels + c] =
                    static_cast<float>(val);
            }
        }
    }
    return world;
}

std::pair<FeatureMap, FeatureMap> generate_synthetic_pair(const SyntheticWorld& world,
                                                          const Pose& gt_pose,
                                                          const CameraModel& camera, int H, int W,
                                                          int L) {
    validate_camera(camera);
    if (H < 1 || W < 1 || L < 1) {
        throw std::invalid_argument("generate_synthetic_pair: H, W, L must be >= 1");
    }
    if (!(gt_pose.u >= 0.0 && gt_pose.u <= 1.0 && gt_pose.v >= 0.0 && gt_pose.v <= 1.0)) {
        throw std::invalid_argument("generate_synthetic_pair: pose outside the unit square");
    }
    const int C = world.channels;
    std::vector<double> buf(static_cast<std::size_t>(C));

    FeatureMap aerial = FeatureMap::zeros(L, L, C);
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            world.sample((j + 0.5) / L, (i + 0.5) / L, buf);
            auto cell = aerial.cell(i, j);
            for (int c = 0; c < C; ++c) cell[static_cast<std::size_t>(c)] = static_cast<float>(buf[c]);
        }
    }

    FeatureMap ground = FeatureMap::zeros(H, W, C);
    const double left_edge = gt_pose.theta_deg - 0.5 * camera.fov_deg;
    std::vector<double> acc(static_cast<std::size_t>(C));
    constexpr double kRayStep = 0.05;
    for (int w = 0; w < W; ++w) {
        const double phi = (left_edge + (w + 0.5) * camera.fov_deg / W) * (kPi / 180.0);
        const double dir_u = std::sin(phi);
        const double dir_v = -std::cos(phi);
        std::fill(acc.begin(), acc.end(), 0.0);
        int count = 0;
        for (int step = 1;; ++step) {
            const double r = step * kRayStep;
            if (r > camera.max_range) break;
            const double px = gt_pose.u + r * dir_u;
            const double py = gt_pose.v + r * dir_v;
            if (px < 0.0 || px > 1.0 || py < 0.0 || py > 1.0) break;
            world.sample(px, py, buf);
            for (int c = 0; c < C; ++c) acc[static_cast<std::size_t>(c)] += buf[c];
            ++count;
        }
        for (int c = 0; c < C; ++c) {
            const float value =
                count > 0 ? static_cast<float>(acc[static_cast<std::size_t>(c)] / count) : 0.0f;
            for (int i = 0; i < H; ++i) ground.at(i, w, c) = value;
        }
    }

    if (world.noise_sigma > 0.0) {
        std::uint64_t h = world.seed;
        h = mix64(h, hash_double(gt_pose.u));
        h = mix64(h, hash_double(gt_pose.v));
        h = mix64(h, hash_double(gt_pose.theta_deg));
        h = mix64(h, (static_cast<std::uint64_t>(H) << 42) ^ (static_cast<std::uint64_t>(W) << 21) ^
                         static_cast<std::uint64_t>(L));
        std::mt19937 g_rng(mix_seed(h, 1));
        std::mt19937 a_rng(mix_seed(h, 2));
        std::normal_distribution<float> dist(0.0f, static_cast<float>(world.noise_sigma));
        for (auto& v : ground.data) v += dist(g_rng);
        for (auto& v : aerial.data) v += dist(a_rng);
    }
    return {std::move(ground), std::move(aerial)};
}

namespace {

void append_floats(std::vector<double>& out, const std::vector<float>& values) {
    for (float v : values) out.push_back(v);
}

std::size_t take_floats(std::vector<float>& dst, std::span<const double> src, std::size_t offset) {
    for (auto& v : dst) v = static_cast<float>(src[offset++]);
    return offset;
}

}  // namespace

std::vector<double> flatten_params(const ToyParams& params) {
    std::vector<double> out;
    out.reserve(params.ground_encoder.parameter_count() + params.aerial_encoder.parameter_count() +
                params.ground_mlp.parameter_count() + params.aerial_mlp.parameter_count());
    append_floats(out, params.ground_encoder.weight);
    append_floats(out, params.ground_encoder.bias);
    append_floats(out, params.aerial_encoder.weight);
    append_floats(out, params.aerial_encoder.bias);
    append_floats(out, params.ground_mlp.w1);
    append_floats(out, params.ground_mlp.b1);
    append_floats(out, params.ground_mlp.w2);
    out.push_back(params.ground_mlp.b2);
    append_floats(out, params.aerial_mlp.w1);
    append_floats(out, params.aerial_mlp.b1);
    append_floats(out, params.aerial_mlp.w2);
    out.push_back(params.aerial_mlp.b2);
    return out;
}

ToyParams unflatten_params(const ToyParams& shape, std::span<const double> values) {
    ToyParams out = shape;
    std::size_t offset = 0;
    offset = take_floats(out.ground_encoder.weight, values, offset);
    offset = take_floats(out.ground_encoder.bias, values, offset);
    offset = take_floats(out.aerial_encoder.weight, values, offset);
    offset = take_floats(out.aerial_encoder.bias, values, offset);
    offset = take_floats(out.ground_mlp.w1, values, offset);
    offset = take_floats(out.ground_mlp.b1, values, offset);
    offset = take_floats(out.ground_mlp.w2, values, offset);
    out.ground_mlp.b2 = static_cast<float>(values[offset++]);
    offset = take_floats(out.aerial_mlp.w1, values, offset);
    offset = take_floats(out.aerial_mlp.b1, values, offset);
    offset = take_floats(out.aerial_mlp.w2, values, offset);
    out.aerial_mlp.b2 = static_cast<float>(values[offset++]);
    if (offset != values.size()) {
        throw std::invalid_argument("unflatten_params: value count does not match shape");
    }
    return out;
}

ForwardResult forward_pipeline(const ToyParams& params, const FeatureMap& ground_raw,
                               const FeatureMap& aerial_raw, const PoseSet& grid,
                               const MaskSet& grid_masks, const MaskSet& gt_masks,
                               const LossConfig& loss_cfg) {
    const FeatureMap z_g = params.ground_encoder.apply(ground_raw);
    const FeatureMap z_a = params.aerial_encoder.apply(aerial_raw);
    const GroundAttentionResult ga = ground_self_attention(z_g, params.ground_mlp);
    const GroundSliceSet slices = slice_ground(ga.reweighted, grid_masks.n_slices());

    const auto similarity = cross_view_similarity(slices, z_a);
    const CrossViewMaps maps = cross_view_attention(z_a, similarity, params.aerial_mlp);
    const AggregateResult candidates = aggregate_from_maps(maps, grid, grid_masks);

    ForwardResult result;
    result.d_ground = ground_global(slices);
    result.d_gt = assemble_global(maps, gt_masks, 0);
    result.c_gt = cosine_similarity(result.d_ground.values, result.d_gt.values);
    result.c.resize(candidates.descriptors.size());
    int best = -1;
    for (std::size_t k = 0; k < candidates.descriptors.size(); ++k) {
        result.c[k] =
            cosine_similarity(result.d_ground.values, candidates.descriptors[k].values);
        if (best < 0 || result.c[k] > result.c[static_cast<std::size_t>(best)]) {
            best = static_cast<int>(k);
        }
    }
    result.best_index = best;
    LossConfig cfg = loss_cfg;
    cfg.k = static_cast<int>(result.c.size());
    result.loss = info_nce_alpha(result.c_gt, result.c, cfg);
    return result;
}

ToyParams init_toy_params(const TrainConfig& cfg) {
    const int hidden = cfg.hidden > 0 ? cfg.hidden : cfg.c;
    const float scale = static_cast<float>(cfg.init_scale);
    ToyParams params;
    params.ground_encoder = ToyEncoder::random_init(cfg.c_raw, cfg.c, mix_seed(cfg.seed, 101), scale);
    params.aerial_encoder = ToyEncoder::random_init(cfg.c_raw, cfg.c, mix_seed(cfg.seed, 102), scale);
    params.ground_mlp = AttentionMlp::random_init(cfg.c, hidden, mix_seed(cfg.seed, 103), scale);
    params.aerial_mlp = AttentionMlp::random_init(cfg.c + 1, hidden, mix_seed(cfg.seed, 104), scale);
    return params;
}

ToyParams identity_toy_params(int channels, int hidden) {
    if (hidden < 1) hidden = channels;
    ToyParams params;
    params.ground_encoder = ToyEncoder::identity(channels);
    params.aerial_encoder = ToyEncoder::identity(channels);
    params.ground_mlp = AttentionMlp::zeros(channels, hidden);
    params.aerial_mlp = AttentionMlp::zeros(channels + 1, hidden);
    return params;
}

namespace {

void validate_train_config(const TrainConfig& cfg) {
    validate_camera(cfg.camera);
    if (cfg.c_raw < 1 || cfg.c < 1 || cfg.world_size < 2 || cfg.height < 1 || cfg.width < 1 ||
        cfg.aerial_size < 1 || cfg.grid_n_u < 1 || cfg.grid_n_v < 1 || cfg.grid_n_theta < 1 ||
        cfg.supersample < 1 || cfg.steps < 0) {
        throw std::invalid_argument("train config: bad dimensions");
    }
    if (!(cfg.lr > 0.0) || !(cfg.fd_eps > 0.0) || !(cfg.alpha > 0.0) || !(cfg.tau > 0.0) ||
        cfg.noise_sigma < 0.0) {
        throw std::invalid_argument("train config: bad hyperparameters");
    }
}

}  // namespace

TrainResult train_toy(const TrainConfig& cfg) {
    validate_train_config(cfg);
    const PoseSet grid = generate_pose_grid(cfg.grid_n_u, cfg.grid_n_v, cfg.grid_n_theta);
    const MaskSet grid_masks =
        precompute_masks(cfg.camera, grid, cfg.aerial_size, cfg.supersample, cfg.n_workers);
    const LossConfig loss_cfg{cfg.alpha, cfg.tau, static_cast<int>(grid.size())};

    TrainResult result;
    result.initial_params = init_toy_params(cfg);
    const ToyParams& shape = result.initial_params;
    std::vector<double> p = flatten_params(shape);
    std::vector<double> adam_m(p.size(), 0.0), adam_v(p.size(), 0.0);
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;

    std::mt19937 rng(mix_seed(cfg.seed, 1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int step = 0; step < cfg.steps; ++step) {
        const SyntheticWorld world =
            make_synthetic_world(cfg.world_size, cfg.c_raw,
                                 mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(step)),
                                 cfg.noise_sigma);
        const Pose gt{unit(rng), unit(rng), unit(rng) * 360.0};
        const auto [ground_raw, aerial_raw] =
            generate_synthetic_pair(world, gt, cfg.camera, cfg.height, cfg.width, cfg.aerial_size);
        PoseSet gt_set;
        gt_set.poses = {gt};
        const MaskSet gt_masks =
            precompute_masks(cfg.camera, gt_set, cfg.aerial_size, cfg.supersample);

        auto f = [&](const std::vector<double>& q) {
            const ToyParams tp = unflatten_params(shape, q);
            return forward_pipeline(tp, ground_raw, aerial_raw, grid, grid_masks, gt_masks,
                                    loss_cfg)
                .loss;
        };

        const double loss = f(p);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("train_toy: diverged (non-finite loss) at step " +
                                     std::to_string(step));
        }
        result.loss_curve.push_back(loss);

        std::vector<double> grad;
        try {
            grad = finite_diff_grad(f, p, cfg.fd_eps, cfg.n_workers);
        } catch (const std::runtime_error&) {
            throw std::runtime_error("train_toy: diverged (non-finite loss) at step " +
                                     std::to_string(step));
        }

        const double bc1 = 1.0 - std::pow(kBeta1, step + 1);
        const double bc2 = 1.0 - std::pow(kBeta2, step + 1);
        for (std::size_t i = 0; i < p.size(); ++i) {
            adam_m[i] = kBeta1 * adam_m[i] + (1.0 - kBeta1) * grad[i];
            adam_v[i] = kBeta2 * adam_v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
            const double m_hat = adam_m[i] / bc1;
            const double v_hat = adam_v[i] / bc2;
            p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
        }
    }
    result.params = unflatten_params(shape, p);
    return result;
}

double toy_top1_accuracy(const ToyParams& params, const TrainConfig& cfg, int trials,
                         std::uint32_t seed) {
    validate_train_config(cfg);
    if (trials < 1) {
        throw std::invalid_argument("toy_top1_accuracy: trials must be >= 1");
    }
    const PoseSet grid = generate_pose_grid(cfg.grid_n_u, cfg.grid_n_v, cfg.grid_n_theta);
    const MaskSet grid_masks =
        precompute_masks(cfg.camera, grid, cfg.aerial_size, cfg.supersample, cfg.n_workers);

    std::mt19937 rng(mix_seed(seed, 7));
    std::uniform_int_distribution<int> pick_u(0, cfg.grid_n_u - 1);
    std::uniform_int_distribution<int> pick_v(0, cfg.grid_n_v - 1);
    std::uniform_int_distribution<int> pick_t(0, cfg.grid_n_theta - 1);

    int hits = 0;
    for (int trial = 0; trial < trials; ++trial) {
        const SyntheticWorld world = make_synthetic_world(
            cfg.world_size, cfg.c_raw, mix_seed(seed, 5000 + static_cast<std::uint64_t>(trial)),
            cfg.noise_sigma);
        const int iv = pick_v(rng);
        const int iu = pick_u(rng);
        const int it = pick_t(rng);
        const std::size_t gt_index =
            (static_cast<std::size_t>(iv) * cfg.grid_n_u + iu) * cfg.grid_n_theta + it;
        const Pose gt = grid.poses[gt_index];
        const auto [ground_raw, aerial_raw] =
            generate_synthetic_pair(world, gt, cfg.camera, cfg.height, cfg.width, cfg.aerial_size);

        const FeatureMap z_g = params.ground_encoder.apply(ground_raw);
        const FeatureMap z_a = params.aerial_encoder.apply(aerial_raw);
        const GroundAttentionResult ga = ground_self_attention(z_g, params.ground_mlp);
        const GroundSliceSet slices = slice_ground(ga.reweighted, grid_masks.n_slices());
        const AggregateResult agg = aggregate_all(z_a, slices, grid, grid_masks, params.aerial_mlp,
                                                  AggregateOptions{PoolingStrategy::kAuto, 1});
        const ScoreMap scores = score_poses(ground_global(slices), agg.descriptors, grid);
        if (scores.best_index == static_cast<int>(gt_index)) ++hits;
    }
    return static_cast<double>(hits) / trials;
}

}  // namespace slicematch
