#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "slicematch/aggregation.h"
#include "slicematch/geometry.h"
#include "slicematch/tensor.h"

namespace slicematch {

/// L = -log( exp(c_gt/tau) / ((alpha/K) sum_k exp(c_k/tau) + exp(c_gt/tau)) ).
/// alpha = K recovers the unweighted contrastive form.
struct LossConfig {
    double alpha = 4.0;
    double tau = 0.1;
    int k = 0;  // number of contrast poses
};

/// Log-sum-exp stabilized; always positive for alpha > 0.
double info_nce_alpha(double c_gt, std::span<const double> c, const LossConfig& cfg);

struct LossGradients {
    double loss = 0.0;
    double c_gt = 0.0;
    std::vector<double> c;
    std::vector<double> grad_d_g;
    std::vector<double> grad_d_a_gt;
    std::vector<std::vector<double>> grad_d_a;
};

/// Closed-form chain rule through the cosine similarities; an all-zero
/// descriptor contributes similarity 0 and receives zero gradient.
LossGradients loss_grad_descriptors(std::span<const double> d_g, std::span<const double> d_a_gt,
                                    const std::vector<std::vector<double>>& d_a_list,
                                    const LossConfig& cfg);

/// Central differences (f(p+eps*e_i) - f(p-eps*e_i)) / (2 eps) per
/// coordinate; throws on a non-finite evaluation. n_workers > 1 evaluates
/// coordinates concurrently (f must be pure).
std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& params, double eps,
                                     int n_workers = 1);

/// Per-location linear map (1x1 convolution), the desk-scale stand-in for a
/// learned backbone.
struct ToyEncoder {
    int in_channels = 0;
    int out_channels = 0;
    std::vector<float> weight;  // out_channels x in_channels, row-major
    std::vector<float> bias;    // out_channels

    FeatureMap apply(const FeatureMap& input) const;
    static ToyEncoder identity(int channels);
    static ToyEncoder random_init(int in_channels, int out_channels, std::uint32_t seed,
                                  float scale);
    std::size_t parameter_count() const;
};

/// Smooth seeded random feature field over the unit square; ground truth
/// for both views of a synthetic scene.
struct SyntheticWorld {
    int size = 0;
    int channels = 0;
    double aerial_extent_m = 100.0;
    double noise_sigma = 0.0;
    std::uint32_t seed = 0;
    std::vector<float> field;  // size x size x channels, row-major

    /// Bilinear sample at normalized (x, y), align-corners-false, clamped.
    void sample(double x, double y, std::span<double> out) const;
};

SyntheticWorld make_synthetic_world(int size, int channels, std::uint32_t seed,
                                    double noise_sigma = 0.0, double aerial_extent_m = 100.0);

/// (ground H x W x C, aerial L x L x C). The aerial map resamples the field
/// to L x L; ground column w averages field samples along the ray from
/// gt_pose at the column's azimuth, radii 0.05, 0.10, ... until max_range
/// or the unit-square boundary, replicated over the H rows. Additive
/// Gaussian noise (world.noise_sigma) is seeded by (world seed, pose).
std::pair<FeatureMap, FeatureMap> generate_synthetic_pair(const SyntheticWorld& world,
                                                          const Pose& gt_pose,
                                                          const CameraModel& camera, int H, int W,
                                                          int L);

struct ToyParams {
    ToyEncoder ground_encoder;
    ToyEncoder aerial_encoder;
    AttentionMlp ground_mlp;  // input dim C
    AttentionMlp aerial_mlp;  // input dim C + 1
};

std::vector<double> flatten_params(const ToyParams& params);
/// Rebuilds params with shape's dimensions and the given values; length
/// must match flatten_params(shape).size().
ToyParams unflatten_params(const ToyParams& shape, std::span<const double> values);

struct ForwardResult {
    double loss = 0.0;
    double c_gt = 0.0;
    std::vector<double> c;
    int best_index = -1;
    GlobalDescriptor d_ground;
    GlobalDescriptor d_gt;
};

/// Full pipeline: encode both views, ground self-attention + slicing,
/// cross-view attention, candidate aggregation over the grid, the GT
/// descriptor as a separate singleton aggregate, then the contrastive loss
/// over the K grid candidates.
ForwardResult forward_pipeline(const ToyParams& params, const FeatureMap& ground_raw,
                               const FeatureMap& aerial_raw, const PoseSet& grid,
                               const MaskSet& grid_masks, const MaskSet& gt_masks,
                               const LossConfig& loss_cfg);

struct TrainConfig {
    int c_raw = 8;       // world / raw feature channels
    int c = 8;           // encoded channels
    int hidden = 0;      // attention hidden dim; 0 means c
    int world_size = 32; // world field grid
    int height = 4;      // ground H
    int width = 16;      // ground W
    int aerial_size = 8; // aerial L
    CameraModel camera{360.0, 4, 0.4};
    int grid_n_u = 3;
    int grid_n_v = 3;
    int grid_n_theta = 4;
    int supersample = 8;
    int steps = 200;
    double lr = 1e-2;
    double fd_eps = 1e-3;
    double alpha = 4.0;
    double tau = 0.1;
    double noise_sigma = 0.0;
    double init_scale = 0.3;
    std::uint32_t seed = 0;
    int n_workers = 1;
};

struct TrainResult {
    ToyParams params;
    ToyParams initial_params;
    std::vector<double> loss_curve;  // one entry per step, pre-update
};

/// Seeded random initialization for the toy parameter set.
ToyParams init_toy_params(const TrainConfig& cfg);
/// Identity encoders and all-zero attention (uniform 0.5 masks): the purely
/// geometric pipeline.
ToyParams identity_toy_params(int channels, int hidden);

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) on finite-difference gradients
/// over the full toy parameter vector; each step samples a fresh world and
/// GT pose. Deterministic given cfg.seed. Throws with the step index if the
/// loss turns non-finite.
TrainResult train_toy(const TrainConfig& cfg);

/// Fraction of seeded trials whose argmax candidate is exactly the on-grid
/// GT pose.
double toy_top1_accuracy(const ToyParams& params, const TrainConfig& cfg, int trials,
                         std::uint32_t seed);

/// Deterministic seed derivation for sub-streams (worlds, noise, init).
std::uint32_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace slicematch
