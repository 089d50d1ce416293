#include "slicematch/geometry.h"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace slicematch {

double wrap_degrees(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    // fmod is exact, but the += above can round up to 360 for tiny negatives.
    if (r >= 360.0) r = 0.0;
    return r;
}

Pose make_pose(double u, double v, double theta_deg) {
    if (!(u >= 0.0 && u <= 1.0) || !(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("make_pose: u, v must lie in [0, 1]");
    }
    if (!std::isfinite(theta_deg)) {
        throw std::invalid_argument("make_pose: non-finite heading");
    }
    return Pose{u, v, wrap_degrees(theta_deg)};
}

void validate_camera(const CameraModel& camera) {
    if (!(camera.fov_deg > 0.0) || camera.fov_deg > 360.0) {
        throw std::invalid_argument("camera: fov_deg must lie in (0, 360]");
    }
    if (camera.n_slices < 1) {
        throw std::invalid_argument("camera: n_slices must be >= 1");
    }
    if (!(camera.max_range > 0.0)) {
        throw std::invalid_argument("camera: max_range must be positive");
    }
}

PoseSet generate_pose_grid(int n_u, int n_v, int n_theta,
                           const std::optional<OrientationPrior>& prior) {
    if (n_u < 1 || n_v < 1 || n_theta < 1) {
        throw std::invalid_argument("generate_pose_grid: all counts must be >= 1");
    }
    std::vector<double> thetas(n_theta);
    if (prior) {
        if (n_theta == 1) {
            thetas[0] = wrap_degrees(prior->center_deg);
        } else {
            const double start = prior->center_deg - prior->half_width_deg;
            const double step = 2.0 * prior->half_width_deg / (n_theta - 1);
            for (int t = 0; t < n_theta; ++t) {
                thetas[t] = wrap_degrees(start + t * step);
            }
        }
    } else {
        for (int t = 0; t < n_theta; ++t) {
            thetas[t] = t * 360.0 / n_theta;
        }
    }

    PoseSet set;
    set.grid = GridShape{n_u, n_v, n_theta};
    set.prior = prior;
    set.poses.reserve(static_cast<std::size_t>(n_u) * n_v * n_theta);
    for (int iv = 0; iv < n_v; ++iv) {
        const double v = (iv + 0.5) / n_v;
        for (int iu = 0; iu < n_u; ++iu) {
            const double u = (iu + 0.5) / n_u;
            for (int t = 0; t < n_theta; ++t) {
                set.poses.push_back(Pose{u, v, thetas[t]});
            }
        }
    }
    return set;
}

AzimuthInterval slice_azimuth_interval(const CameraModel& camera, const Pose& pose, int n) {
    validate_camera(camera);
    if (n < 1 || n > camera.n_slices) {
        throw std::invalid_argument("slice_azimuth_interval: slice index out of range");
    }
    const double span = camera.slice_span_deg();
    const double a0 = pose.theta_deg - 0.5 * camera.fov_deg + (n - 1) * span;
    return AzimuthInterval{wrap_degrees(a0), wrap_degrees(a0 + span)};
}

SliceMask rasterize_slice_mask(const CameraModel& camera, const Pose& pose, int n, int L,
                               int supersample) {
    validate_camera(camera);
    if (n < 1 || n > camera.n_slices) {
        throw std::invalid_argument("rasterize_slice_mask: slice index out of range");
    }
    if (L < 1 || supersample < 1) {
        throw std::invalid_argument("rasterize_slice_mask: L and supersample must be >= 1");
    }

    const int N = camera.n_slices;
    const int s = supersample;
    const double span = camera.slice_span_deg();
    const double left_edge = pose.theta_deg - 0.5 * camera.fov_deg;
    const bool bounded = std::isfinite(camera.max_range);
    const double range_sq = bounded ? camera.max_range * camera.max_range : 0.0;
    const bool limited_fov = camera.fov_deg < 360.0;
    const double inv_samples = 1.0 / (static_cast<double>(s) * s);

    SliceMask mask;
    mask.size = L;
    mask.slice_index = n;
    mask.interval = slice_azimuth_interval(camera, pose, n);
    mask.weights.assign(static_cast<std::size_t>(L) * L, 0.0f);

    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            int count = 0;
            for (int a = 0; a < s; ++a) {
                const double py = (i + (a + 0.5) / s) / L;
                const double dy = py - pose.v;
                for (int b = 0; b < s; ++b) {
                    const double px = (j + (b + 0.5) / s) / L;
                    const double dx = px - pose.u;
                    if (bounded && dx * dx + dy * dy > range_sq) continue;
                    const double phi = std::atan2(dx, -dy) * (180.0 / kPi);
                    const double t = wrap_degrees(phi - left_edge);
                    if (limited_fov && t >= camera.fov_deg) continue;
                    int idx = static_cast<int>(t / span);
                    // t/span < N in exact arithmetic; clamp the rounding edge.
                    if (idx >= N) idx = N - 1;
                    if (idx == n - 1) ++count;
                }
            }
            mask.weights[static_cast<std::size_t>(i) * L + j] =
                static_cast<float>(count * inv_samples);
        }
    }
    return mask;
}

namespace {

struct MaskKey {
    std::int64_t uq, vq, a0q, a1q;
    bool operator==(const MaskKey&) const = default;
};

struct MaskKeyHash {
    std::size_t operator()(const MaskKey& k) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ull;
        for (std::int64_t part : {k.uq, k.vq, k.a0q, k.a1q}) {
            h ^= static_cast<std::uint64_t>(part) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

// Locations quantized at 1e-9, angles at 1e-6 deg: far below any grid
// spacing, far above double rounding noise on grid-generated poses.
MaskKey make_mask_key(const Pose& pose, const AzimuthInterval& interval) {
    return MaskKey{std::llround(pose.u * 1e9), std::llround(pose.v * 1e9),
                   std::llround(interval.a0_deg * 1e6), std::llround(interval.a1_deg * 1e6)};
}

}  // namespace

std::size_t MaskSet::flat(std::size_t pose_index, int slice_index) const {
    if (pose_index >= n_poses_ || slice_index < 1 || slice_index > camera_.n_slices) {
        throw std::out_of_range("MaskSet: pose or slice index out of range");
    }
    return pose_index * camera_.n_slices + (slice_index - 1);
}

const std::vector<float>& MaskSet::weights(std::size_t pose_index, int slice_index) const {
    return *storages_[static_cast<std::size_t>(slot_of_mask_[flat(pose_index, slice_index)])];
}

MaskSet::Storage MaskSet::storage(std::size_t pose_index, int slice_index) const {
    return storages_[static_cast<std::size_t>(slot_of_mask_[flat(pose_index, slice_index)])];
}

AzimuthInterval MaskSet::interval(std::size_t pose_index, int slice_index) const {
    return intervals_[flat(pose_index, slice_index)];
}

int MaskSet::slot(std::size_t pose_index, int slice_index) const {
    return slot_of_mask_[flat(pose_index, slice_index)];
}

const std::vector<float>& MaskSet::slot_weights(int slot) const {
    if (slot < 0 || static_cast<std::size_t>(slot) >= storages_.size()) {
        throw std::out_of_range("MaskSet: slot out of range");
    }
    return *storages_[static_cast<std::size_t>(slot)];
}

MaskSet precompute_masks(const CameraModel& camera, const PoseSet& poses, int L, int supersample,
                         int n_workers) {
    validate_camera(camera);
    if (L < 1 || supersample < 1) {
        throw std::invalid_argument("precompute_masks: L and supersample must be >= 1");
    }
    if (n_workers < 1) n_workers = 1;

    const int N = camera.n_slices;
    const std::size_t K = poses.size();

    MaskSet set;
    set.camera_ = camera;
    set.size_ = L;
    set.supersample_ = supersample;
    set.n_poses_ = K;
    set.slot_of_mask_.resize(K * N);
    set.intervals_.resize(K * N);

    // First pass: dedup keys, pick one exemplar (pose, slice) per distinct
    // mask in first-occurrence order so results never depend on n_workers.
    std::unordered_map<MaskKey, int, MaskKeyHash> slot_of_key;
    std::vector<std::pair<std::size_t, int>> exemplars;
    for (std::size_t k = 0; k < K; ++k) {
        for (int n = 1; n <= N; ++n) {
            const AzimuthInterval interval = slice_azimuth_interval(camera, poses.poses[k], n);
            const std::size_t flat = k * N + (n - 1);
            set.intervals_[flat] = interval;
            const MaskKey key = make_mask_key(poses.poses[k], interval);
            auto [it, inserted] = slot_of_key.emplace(key, static_cast<int>(exemplars.size()));
            if (inserted) {
                exemplars.emplace_back(k, n);
            }
            set.slot_of_mask_[flat] = it->second;
        }
    }

    // Second pass: rasterize each distinct mask once.
    set.storages_.resize(exemplars.size());
    auto rasterize_slot = [&](std::size_t q) {
        const auto [k, n] = exemplars[q];
        SliceMask mask = rasterize_slice_mask(camera, poses.poses[k], n, L, supersample);
        set.storages_[q] = std::make_shared<const std::vector<float>>(std::move(mask.weights));
    };
    if (n_workers == 1 || exemplars.size() < 2) {
        for (std::size_t q = 0; q < exemplars.size(); ++q) rasterize_slot(q);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t q = next.fetch_add(1); q < exemplars.size(); q = next.fetch_add(1)) {
                rasterize_slot(q);
            }
        };
        std::vector<std::thread> threads;
        const int n_threads = static_cast<int>(
            std::min<std::size_t>(static_cast<std::size_t>(n_workers), exemplars.size()));
        threads.reserve(static_cast<std::size_t>(n_threads));
        for (int w = 0; w < n_threads; ++w) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    return set;
}

std::vector<int> rotation_permutation(int n_slices, int m) {
    if (n_slices < 1) {
        throw std::invalid_argument("rotation_permutation: n_slices must be >= 1");
    }
    if (m < 0 || m >= n_slices) {
        throw std::invalid_argument("rotation_permutation: rotation steps out of range");
    }
    std::vector<int> perm(static_cast<std::size_t>(n_slices));
    for (int n0 = 0; n0 < n_slices; ++n0) {
        perm[static_cast<std::size_t>(n0)] = (n0 + m) % n_slices + 1;
    }
    return perm;
}

}  // namespace slicematch
