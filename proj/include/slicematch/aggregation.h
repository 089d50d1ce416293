#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slicematch/geometry.h"
#include "slicematch/tensor.h"

namespace slicematch {

/// Two 1x1 convolutions with a ReLU between and a sigmoid on top, applied
/// independently per spatial location: sigmoid(w2 . relu(w1 x + b1) + b2).
struct AttentionMlp {
    int in_dim = 0;
    int hidden_dim = 0;
    std::vector<float> w1;  // hidden_dim x in_dim, row-major by hidden unit
    std::vector<float> b1;  // hidden_dim
    std::vector<float> w2;  // hidden_dim
    float b2 = 0.0f;

    static AttentionMlp zeros(int in_dim, int hidden_dim);
    static AttentionMlp random_init(int in_dim, int hidden_dim, std::uint32_t seed, float scale);

    /// Output lies strictly inside (0, 1).
    double evaluate(std::span<const float> input) const;
    /// Same, with the input being feat concatenated with one extra channel.
    double evaluate_extra(std::span<const float> feat, float extra) const;

    std::size_t parameter_count() const;
};

/// The N per-slice ground descriptors (unit-norm or zero).
struct GroundSliceSet {
    int channels = 0;
    std::vector<SliceDescriptor> descriptors;

    int n_slices() const { return static_cast<int>(descriptors.size()); }
};

struct GroundAttentionResult {
    std::vector<float> mask;  // H x W, each value in (0, 1)
    FeatureMap reweighted;    // mask broadcast-multiplied over channels
};

GroundAttentionResult ground_self_attention(const FeatureMap& z_g, const AttentionMlp& mlp);

/// Splits the (reweighted) ground map into N equal vertical slices, resizing
/// the width to the smallest multiple of N >= W first when needed; each
/// descriptor is the per-slice mean feature, L2-normalized.
GroundSliceSet slice_ground(const FeatureMap& z_g_reweighted, int n_slices);

/// S^n[i,j] = cosine(ground slice n, aerial cell (i,j)); N maps of H*W
/// values, independent of the number of candidate poses.
std::vector<std::vector<float>> cross_view_similarity(const GroundSliceSet& slices,
                                                      const FeatureMap& z_a);

/// Similarity, attention and reweighted aerial maps for all N slices.
struct CrossViewMaps {
    std::vector<std::vector<float>> similarity;  // N x (H*W), values in [-1, 1]
    std::vector<std::vector<float>> attention;   // N x (H*W), values in (0, 1)
    std::vector<FeatureMap> reweighted;          // N maps, attention * z_a
    long long attention_evals = 0;               // N * H * W MLP evaluations
};

/// Attention input at each cell is the C aerial features with S^n appended
/// as channel C+1; mlp.in_dim must equal C + 1.
CrossViewMaps cross_view_attention(const FeatureMap& z_a,
                                   const std::vector<std::vector<float>>& similarity,
                                   const AttentionMlp& mlp);

/// Mask-weighted mean over cells, then L2-normalize; a mask with total
/// weight below 1e-9 yields the zero descriptor.
SliceDescriptor pool_slice(const FeatureMap& z, std::span<const float> mask_weights);
SliceDescriptor pool_slice(const FeatureMap& z, const SliceMask& mask);

/// Slot n = pool_slice(reweighted[n], mask(pose, n)): the identity
/// slice-to-attention pairing used for base orientations.
GlobalDescriptor assemble_global(const CrossViewMaps& maps, const MaskSet& masks,
                                 std::size_t pose_index);

/// The ground global descriptor: slice-major concatenation of the N ground
/// slice descriptors.
GlobalDescriptor ground_global(const GroundSliceSet& slices);

enum class PoolingStrategy {
    kAuto,             // permutation fast path for panoramic cameras, else direct
    kForcePermutation, // error for non-panoramic cameras
    kForceDirect,      // pool every slot explicitly (same pairing, no reuse)
};

struct AggregateOptions {
    PoolingStrategy strategy = PoolingStrategy::kAuto;
    int n_workers = 1;
};

struct AggregateResult {
    std::vector<GlobalDescriptor> descriptors;  // one per pose, PoseSet order
    long long attention_evals = 0;
    long long pools_executed = 0;
};

/// Descriptors for every candidate pose. Panoramic poses are grouped by
/// (location, theta mod slice span); the group's minimum-theta member is the
/// base and is pooled with the identity pairing, and a member rotated m
/// spans above the base takes slot n from base slot ((n-1+m) mod N)+1.
/// That permutation is the definition of a rotated pose's descriptor; the
/// direct strategy pools every slot explicitly under the same pairing.
/// Attention runs once for all K poses (counter == N * H * W).
AggregateResult aggregate_all(const FeatureMap& z_a, const GroundSliceSet& slices,
                              const PoseSet& poses, const MaskSet& masks,
                              const AttentionMlp& mlp, const AggregateOptions& options = {});

/// Same pooling stage on precomputed cross-view maps (attention_evals = 0).
AggregateResult aggregate_from_maps(const CrossViewMaps& maps, const PoseSet& poses,
                                    const MaskSet& masks, const AggregateOptions& options = {});

}  // namespace slicematch
