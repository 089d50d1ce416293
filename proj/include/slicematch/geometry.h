#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace slicematch {

inline constexpr double kPi = 3.14159265358979323846;

/// Reduce an angle in degrees to [0, 360).
double wrap_degrees(double deg);

/// 3-DoF pose: normalized aerial coordinates (u right/East, v down/South)
/// and heading theta in degrees clockwise from North.
struct Pose {
    double u = 0.0;
    double v = 0.0;
    double theta_deg = 0.0;
};

/// Canonicalizes theta to [0, 360) and validates u, v in [0, 1].
Pose make_pose(double u, double v, double theta_deg);

struct CameraModel {
    double fov_deg = 360.0;
    int n_slices = 1;
    // Frustum radius in normalized aerial units; infinity = clipped only by
    // the unit square.
    double max_range = std::numeric_limits<double>::infinity();

    bool panoramic() const { return fov_deg == 360.0; }
    double slice_span_deg() const { return fov_deg / n_slices; }
};

void validate_camera(const CameraModel& camera);

struct OrientationPrior {
    double center_deg = 0.0;
    double half_width_deg = 0.0;
};

struct GridShape {
    int n_u = 0;
    int n_v = 0;
    int n_theta = 0;
};

/// Ordered candidate poses; v-major, then u, then theta when grid-generated.
struct PoseSet {
    std::vector<Pose> poses;
    std::optional<GridShape> grid;
    std::optional<OrientationPrior> prior;

    std::size_t size() const { return poses.size(); }
};

/// Locations at the centers of an n_u x n_v uniform partition of [0,1]^2.
/// Without a prior, orientations are k * 360 / n_theta; with a prior they
/// span [center - half_width, center + half_width] inclusive (n_theta = 1
/// degenerates to the center).
PoseSet generate_pose_grid(int n_u, int n_v, int n_theta,
                           const std::optional<OrientationPrior>& prior = std::nullopt);

/// Absolute azimuth interval [a0, a1) of one slice, both endpoints reduced
/// mod 360 (a1 may wrap below a0).
struct AzimuthInterval {
    double a0_deg = 0.0;
    double a1_deg = 0.0;
};

/// Slice n (1-based) covers heading-relative azimuths
/// [-fov/2 + (n-1) * fov/N, -fov/2 + n * fov/N); slice 1 is the leftmost
/// vertical strip of the ground image.
AzimuthInterval slice_azimuth_interval(const CameraModel& camera, const Pose& pose, int n);

/// Fractional-coverage weights of one pose's slice sector over the L x L
/// aerial grid.
struct SliceMask {
    int size = 0;
    std::vector<float> weights;  // row-major, weights[i * size + j] in [0, 1]
    int pose_index = -1;
    int slice_index = 0;  // 1-based
    AzimuthInterval interval;
};

/// Stratified-supersampling rasterization: cell (i, j) covers
/// [j/L,(j+1)/L] x [i/L,(i+1)/L] and its weight is the fraction of the
/// s x s subsample centers ((j+(b+0.5)/s)/L, (i+(a+0.5)/s)/L) inside the
/// sector. Azimuth phi points along (sin phi, -cos phi) in (u, v).
/// All slices of one pose classify each subsample point into exactly one
/// slice, so panoramic masks sum to 1 per cell.
SliceMask rasterize_slice_mask(const CameraModel& camera, const Pose& pose, int n, int L,
                               int supersample);

/// Precomputed masks for every (pose, slice), deduplicated on
/// (u, v, azimuth interval): aliased entries share bit-identical storage,
/// so a panoramic grid with M orientation offsets rasterizes only M * N
/// distinct masks per location.
class MaskSet {
public:
    using Storage = std::shared_ptr<const std::vector<float>>;

    int size() const { return size_; }
    int supersample() const { return supersample_; }
    int n_slices() const { return camera_.n_slices; }
    std::size_t n_poses() const { return n_poses_; }
    const CameraModel& camera() const { return camera_; }

    /// slice_index is 1-based.
    const std::vector<float>& weights(std::size_t pose_index, int slice_index) const;
    Storage storage(std::size_t pose_index, int slice_index) const;
    AzimuthInterval interval(std::size_t pose_index, int slice_index) const;

    /// Index of the deduplicated storage behind (pose, slice).
    int slot(std::size_t pose_index, int slice_index) const;
    const std::vector<float>& slot_weights(int slot) const;
    std::size_t distinct_rasterizations() const { return storages_.size(); }

private:
    friend MaskSet precompute_masks(const CameraModel&, const PoseSet&, int, int, int);

    std::size_t flat(std::size_t pose_index, int slice_index) const;

    CameraModel camera_;
    int size_ = 0;
    int supersample_ = 0;
    std::size_t n_poses_ = 0;
    std::vector<Storage> storages_;          // one per distinct rasterization
    std::vector<int> slot_of_mask_;          // n_poses * N entries
    std::vector<AzimuthInterval> intervals_; // n_poses * N entries
};

/// Rasterizes each distinct (u, v, interval) once; n_workers > 1 splits the
/// distinct rasterizations across threads (result independent of worker
/// count).
MaskSet precompute_masks(const CameraModel& camera, const PoseSet& poses, int L, int supersample,
                         int n_workers = 1);

/// Cyclic slot permutation for a rotation of m slice-spans: element n-1
/// holds pi(n) = ((n - 1 + m) mod N) + 1, so slot n of the rotated
/// descriptor takes slice pi(n) of the base descriptor.
std::vector<int> rotation_permutation(int n_slices, int m);

}  // namespace slicematch
