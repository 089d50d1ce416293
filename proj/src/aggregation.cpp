#include "slicematch/aggregation.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace slicematch {

AttentionMlp AttentionMlp::zeros(int in_dim, int hidden_dim) {
    if (in_dim < 1 || hidden_dim < 1) {
        throw std::invalid_argument("attention mlp: dims must be >= 1");
    }
    AttentionMlp mlp;
    mlp.in_dim = in_dim;
    mlp.hidden_dim = hidden_dim;
    mlp.w1.assign(static_cast<std::size_t>(in_dim) * hidden_dim, 0.0f);
    mlp.b1.assign(static_cast<std::size_t>(hidden_dim), 0.0f);
    mlp.w2.assign(static_cast<std::size_t>(hidden_dim), 0.0f);
    mlp.b2 = 0.0f;
    return mlp;
}

AttentionMlp AttentionMlp::random_init(int in_dim, int hidden_dim, std::uint32_t seed,
                                       float scale) {
    AttentionMlp mlp = zeros(in_dim, hidden_dim);
    if (scale <= 0.0f) return mlp;
    std::mt19937 rng(seed);
    std::normal_distribution<float> dist(0.0f, scale);
    for (auto& w : mlp.w1) w = dist(rng);
    for (auto& w : mlp.b1) w = dist(rng);
    for (auto& w : mlp.w2) w = dist(rng);
    mlp.b2 = dist(rng);
    return mlp;
}

double AttentionMlp::evaluate_extra(std::span<const float> feat, float extra) const {
    if (static_cast<int>(feat.size()) + 1 != in_dim) {
        throw std::invalid_argument("attention mlp: input dimension mismatch");
    }
    double out = b2;
    for (int h = 0; h < hidden_dim; ++h) {
        const float* row = w1.data() + static_cast<std::size_t>(h) * in_dim;
        double acc = b1[static_cast<std::size_t>(h)];
        for (std::size_t i = 0; i < feat.size(); ++i) {
            acc += static_cast<double>(row[i]) * feat[i];
        }
        acc += static_cast<double>(row[feat.size()]) * extra;
        if (acc > 0.0) out += static_cast<double>(w2[static_cast<std::size_t>(h)]) * acc;
    }
    // Saturated tails are pinned just inside (0, 1); the upper bound still
    // rounds below 1 after a float cast.
    return std::clamp(1.0 / (1.0 + std::exp(-out)), 1e-12, 1.0 - 1e-7);
}

double AttentionMlp::evaluate(std::span<const float> input) const {
    if (static_cast<int>(input.size()) != in_dim) {
        throw std::invalid_argument("attention mlp: input dimension mismatch");
    }
    return evaluate_extra(input.first(input.size() - 1), input.back());
}

std::size_t AttentionMlp::parameter_count() const {
    return w1.size() + b1.size() + w2.size() + 1;
}

GroundAttentionResult ground_self_attention(const FeatureMap& z_g, const AttentionMlp& mlp) {
    if (mlp.in_dim != z_g.channels) {
        throw std::invalid_argument("ground_self_attention: mlp input dim != channels");
    }
    GroundAttentionResult result;
    result.mask.resize(static_cast<std::size_t>(z_g.height) * z_g.width);
    result.reweighted = z_g;
    for (int i = 0; i < z_g.height; ++i) {
        for (int j = 0; j < z_g.width; ++j) {
            const double m = mlp.evaluate(z_g.cell(i, j));
            result.mask[static_cast<std::size_t>(i) * z_g.width + j] = static_cast<float>(m);
            auto cell = result.reweighted.cell(i, j);
            for (int c = 0; c < z_g.channels; ++c) {
                cell[static_cast<std::size_t>(c)] = static_cast<float>(m * z_g.at(i, j, c));
            }
        }
    }
    return result;
}

GroundSliceSet slice_ground(const FeatureMap& z_g_reweighted, int n_slices) {
    if (n_slices < 1) {
        throw std::invalid_argument("slice_ground: n_slices must be >= 1");
    }
    const FeatureMap* src = &z_g_reweighted;
    FeatureMap resized;
    int width = z_g_reweighted.width;
    if (width % n_slices != 0) {
        const int target = ((width + n_slices - 1) / n_slices) * n_slices;
        resized = resize_width_bilinear(z_g_reweighted, target);
        src = &resized;
        width = target;
    }
    const int cols = width / n_slices;
    const int C = src->channels;
    const double inv_count = 1.0 / (static_cast<double>(src->height) * cols);

    GroundSliceSet out;
    out.channels = C;
    out.descriptors.resize(static_cast<std::size_t>(n_slices));
    std::vector<double> acc(static_cast<std::size_t>(C));
    std::vector<float> mean(static_cast<std::size_t>(C));
    for (int n0 = 0; n0 < n_slices; ++n0) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int i = 0; i < src->height; ++i) {
            for (int j = n0 * cols; j < (n0 + 1) * cols; ++j) {
                for (int c = 0; c < C; ++c) {
                    acc[static_cast<std::size_t>(c)] += src->at(i, j, c);
                }
            }
        }
        for (int c = 0; c < C; ++c) {
            mean[static_cast<std::size_t>(c)] =
                static_cast<float>(acc[static_cast<std::size_t>(c)] * inv_count);
        }
        out.descriptors[static_cast<std::size_t>(n0)] = l2_normalize(mean);
    }
    return out;
}

std::vector<std::vector<float>> cross_view_similarity(const GroundSliceSet& slices,
                                                      const FeatureMap& z_a) {
    if (slices.channels != z_a.channels) {
        throw std::invalid_argument("cross_view_similarity: channel mismatch");
    }
    const std::size_t cells = static_cast<std::size_t>(z_a.height) * z_a.width;
    std::vector<std::vector<float>> maps(slices.descriptors.size());
    for (std::size_t n0 = 0; n0 < slices.descriptors.size(); ++n0) {
        const SliceDescriptor& d = slices.descriptors[n0];
        auto& map = maps[n0];
        map.resize(cells);
        std::size_t idx = 0;
        for (int i = 0; i < z_a.height; ++i) {
            for (int j = 0; j < z_a.width; ++j, ++idx) {
                map[idx] = static_cast<float>(cosine_similarity(d, z_a.cell(i, j)));
            }
        }
    }
    return maps;
}

CrossViewMaps cross_view_attention(const FeatureMap& z_a,
                                   const std::vector<std::vector<float>>& similarity,
                                   const AttentionMlp& mlp) {
    if (mlp.in_dim != z_a.channels + 1) {
        throw std::invalid_argument("cross_view_attention: mlp input dim != channels + 1");
    }
    const std::size_t cells = static_cast<std::size_t>(z_a.height) * z_a.width;
    for (const auto& map : similarity) {
        if (map.size() != cells) {
            throw std::invalid_argument("cross_view_attention: similarity map size mismatch");
        }
    }
    CrossViewMaps out;
    out.similarity = similarity;
    out.attention.resize(similarity.size());
    out.reweighted.resize(similarity.size());
    for (std::size_t n0 = 0; n0 < similarity.size(); ++n0) {
        auto& att = out.attention[n0];
        att.resize(cells);
        FeatureMap rw = z_a;
        std::size_t idx = 0;
        for (int i = 0; i < z_a.height; ++i) {
            for (int j = 0; j < z_a.width; ++j, ++idx) {
                const double m = mlp.evaluate_extra(z_a.cell(i, j), similarity[n0][idx]);
                att[idx] = static_cast<float>(m);
                auto cell = rw.cell(i, j);
                for (int c = 0; c < z_a.channels; ++c) {
                    cell[static_cast<std::size_t>(c)] = static_cast<float>(m * z_a.at(i, j, c));
                }
            }
        }
        out.reweighted[n0] = std::move(rw);
        out.attention_evals += static_cast<long long>(cells);
    }
    return out;
}

SliceDescriptor pool_slice(const FeatureMap& z, std::span<const float> mask_weights) {
    if (mask_weights.size() != static_cast<std::size_t>(z.height) * z.width) {
        throw std::invalid_argument("pool_slice: mask size mismatch");
    }
    const int C = z.channels;
    double sum_w = 0.0;
    for (float w : mask_weights) sum_w += w;
    if (sum_w < 1e-9) {
        return SliceDescriptor(static_cast<std::size_t>(C), 0.0f);
    }
    std::vector<double> acc(static_cast<std::size_t>(C), 0.0);
    for (std::size_t idx = 0; idx < mask_weights.size(); ++idx) {
        const float w = mask_weights[idx];
        if (w == 0.0f) continue;
        const float* feat = z.data.data() + idx * static_cast<std::size_t>(C);
        for (int c = 0; c < C; ++c) {
            acc[static_cast<std::size_t>(c)] += static_cast<double>(w) * feat[c];
        }
    }
    std::vector<float> mean(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
        mean[static_cast<std::size_t>(c)] = static_cast<float>(acc[static_cast<std::size_t>(c)] / sum_w);
    }
    return l2_normalize(mean);
}

SliceDescriptor pool_slice(const FeatureMap& z, const SliceMask& mask) {
    if (mask.size != z.height || mask.size != z.width) {
        throw std::invalid_argument("pool_slice: mask/grid size mismatch");
    }
    return pool_slice(z, std::span<const float>(mask.weights));
}

GlobalDescriptor assemble_global(const CrossViewMaps& maps, const MaskSet& masks,
                                 std::size_t pose_index) {
    const int N = masks.n_slices();
    if (static_cast<int>(maps.reweighted.size()) != N) {
        throw std::invalid_argument("assemble_global: slice count mismatch");
    }
    if (pose_index >= masks.n_poses()) {
        throw std::out_of_range("assemble_global: pose index out of range");
    }
    const int C = maps.reweighted[0].channels;
    GlobalDescriptor d = make_global_descriptor(N, C);
    for (int n = 1; n <= N; ++n) {
        const SliceDescriptor desc =
            pool_slice(maps.reweighted[static_cast<std::size_t>(n - 1)],
                       std::span<const float>(masks.weights(pose_index, n)));
        std::copy(desc.begin(), desc.end(), d.slot(n - 1).begin());
    }
    return d;
}

GlobalDescriptor ground_global(const GroundSliceSet& slices) {
    const int N = slices.n_slices();
    if (N < 1) throw std::invalid_argument("ground_global: empty slice set");
    GlobalDescriptor d = make_global_descriptor(N, slices.channels);
    for (int n0 = 0; n0 < N; ++n0) {
        const auto& desc = slices.descriptors[static_cast<std::size_t>(n0)];
        if (static_cast<int>(desc.size()) != slices.channels) {
            throw std::invalid_argument("ground_global: descriptor length mismatch");
        }
        std::copy(desc.begin(), desc.end(), d.slot(n0).begin());
    }
    return d;
}

namespace {

struct LocKey {
    std::int64_t uq, vq, rq;
    bool operator==(const LocKey&) const = default;
};

struct LocKeyHash {
    std::size_t operator()(const LocKey& k) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ull;
        for (std::int64_t part : {k.uq, k.vq, k.rq}) {
            h ^= static_cast<std::uint64_t>(part) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

struct PoseGroup {
    std::size_t base = 0;
    std::vector<std::size_t> members;
};

// Panoramic grouping key: same location, same theta residue modulo the
// slice span. Members of one group differ by whole slice rotations.
std::vector<PoseGroup> group_poses(const PoseSet& poses, const CameraModel& camera) {
    std::vector<PoseGroup> groups;
    if (!camera.panoramic()) {
        groups.resize(poses.size());
        for (std::size_t k = 0; k < poses.size(); ++k) {
            groups[k].base = k;
            groups[k].members = {k};
        }
        return groups;
    }
    const double span = camera.slice_span_deg();
    const std::int64_t spanq = std::llround(span * 1e6);
    std::unordered_map<LocKey, std::size_t, LocKeyHash> group_of;
    for (std::size_t k = 0; k < poses.size(); ++k) {
        const Pose& p = poses.poses[k];
        double r = std::fmod(p.theta_deg, span);
        if (r < 0.0) r += span;
        std::int64_t rq = std::llround(r * 1e6);
        if (spanq > 0) rq %= spanq;
        const LocKey key{std::llround(p.u * 1e9), std::llround(p.v * 1e9), rq};
        auto [it, inserted] = group_of.emplace(key, groups.size());
        if (inserted) groups.push_back(PoseGroup{});
        groups[it->second].members.push_back(k);
    }
    for (auto& g : groups) {
        g.base = g.members.front();
        for (std::size_t k : g.members) {
            if (poses.poses[k].theta_deg < poses.poses[g.base].theta_deg) g.base = k;
        }
    }
    return groups;
}

int rotation_steps(double theta_deg, double base_theta_deg, double span, int n_slices) {
    const double diff = theta_deg - base_theta_deg;  // base has the group minimum
    int m = static_cast<int>(std::llround(diff / span)) % n_slices;
    if (m < 0) m += n_slices;
    return m;
}

}  // namespace

AggregateResult aggregate_from_maps(const CrossViewMaps& maps, const PoseSet& poses,
                                    const MaskSet& masks, const AggregateOptions& options) {
    const int N = masks.n_slices();
    const CameraModel& camera = masks.camera();
    if (static_cast<int>(maps.reweighted.size()) != N) {
        throw std::invalid_argument("aggregate: slice count mismatch");
    }
    if (masks.n_poses() != poses.size()) {
        throw std::invalid_argument("aggregate: masks do not cover the pose set");
    }
    for (const auto& rw : maps.reweighted) {
        if (rw.height != masks.size() || rw.width != masks.size()) {
            throw std::invalid_argument("aggregate: aerial grid size != mask size");
        }
    }

    bool use_permutation = false;
    switch (options.strategy) {
        case PoolingStrategy::kAuto:
            use_permutation = camera.panoramic();
            break;
        case PoolingStrategy::kForcePermutation:
            if (!camera.panoramic()) {
                throw std::invalid_argument("permutation path requires panoramic FoV");
            }
            use_permutation = true;
            break;
        case PoolingStrategy::kForceDirect:
            use_permutation = false;
            break;
    }

    AggregateResult result;
    result.descriptors.resize(poses.size());
    if (poses.size() == 0) return result;
    const int C = maps.reweighted[0].channels;
    const double span = camera.slice_span_deg();
    const std::vector<PoseGroup> groups = group_poses(poses, camera);

    auto process_group = [&](const PoseGroup& g) -> long long {
        long long pools = 0;
        const double base_theta = poses.poses[g.base].theta_deg;
        if (use_permutation) {
            std::vector<SliceDescriptor> base_slots(static_cast<std::size_t>(N));
            for (int n = 1; n <= N; ++n) {
                base_slots[static_cast<std::size_t>(n - 1)] =
                    pool_slice(maps.reweighted[static_cast<std::size_t>(n - 1)],
                               std::span<const float>(masks.weights(g.base, n)));
            }
            pools += N;
            for (std::size_t k : g.members) {
                const int m = rotation_steps(poses.poses[k].theta_deg, base_theta, span, N);
                GlobalDescriptor d = make_global_descriptor(N, C);
                for (int n0 = 0; n0 < N; ++n0) {
                    const auto& src = base_slots[static_cast<std::size_t>((n0 + m) % N)];
                    std::copy(src.begin(), src.end(), d.slot(n0).begin());
                }
                result.descriptors[k] = std::move(d);
            }
        } else {
            for (std::size_t k : g.members) {
                const int m = camera.panoramic()
                                  ? rotation_steps(poses.poses[k].theta_deg, base_theta, span, N)
                                  : 0;
                GlobalDescriptor d = make_global_descriptor(N, C);
                for (int n0 = 0; n0 < N; ++n0) {
                    const int src = (n0 + m) % N;
                    const SliceDescriptor desc =
                        pool_slice(maps.reweighted[static_cast<std::size_t>(src)],
                                   std::span<const float>(masks.weights(k, n0 + 1)));
                    std::copy(desc.begin(), desc.end(), d.slot(n0).begin());
                    ++pools;
                }
                result.descriptors[k] = std::move(d);
            }
        }
        return pools;
    };

    if (options.n_workers <= 1 || groups.size() < 2) {
        long long pools = 0;
        for (const auto& g : groups) pools += process_group(g);
        result.pools_executed = pools;
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<long long> pools{0};
        auto worker = [&] {
            long long local = 0;
            for (std::size_t q = next.fetch_add(1); q < groups.size(); q = next.fetch_add(1)) {
                local += process_group(groups[q]);
            }
            pools.fetch_add(local);
        };
        const std::size_t n_threads =
            std::min<std::size_t>(static_cast<std::size_t>(options.n_workers), groups.size());
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (std::size_t w = 0; w < n_threads; ++w) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        result.pools_executed = pools.load();
    }
    return result;
}

AggregateResult aggregate_all(const FeatureMap& z_a, const GroundSliceSet& slices,
                              const PoseSet& poses, const MaskSet& masks,
                              const AttentionMlp& mlp, const AggregateOptions& options) {
    if (slices.n_slices() != masks.n_slices()) {
        throw std::invalid_argument("aggregate_all: ground slices != camera slices");
    }
    const auto similarity = cross_view_similarity(slices, z_a);
    const CrossViewMaps maps = cross_view_attention(z_a, similarity, mlp);
    AggregateResult result = aggregate_from_maps(maps, poses, masks, options);
    result.attention_evals = maps.attention_evals;
    return result;
}

}  // namespace slicematch
